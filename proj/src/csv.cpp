#include "ecd/csv.hpp"

#include <charconv>
#include <ostream>

namespace ecd {

std::string format_double(double x)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void write_csv_row(std::ostream& os, const std::vector<double>& row)
{
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i)
            os << ',';
        os << format_double(row[i]);
    }
    os << "\r\n";
}

void write_csv_header(std::ostream& os, const std::vector<std::string>& names)
{
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i)
            os << ',';
        os << names[i];
    }
    os << "\r\n";
}

} // namespace ecd
