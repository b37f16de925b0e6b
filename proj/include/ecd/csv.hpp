#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ecd {

// Shortest representation that round-trips to the same double.
std::string format_double(double x);

void write_csv_row(std::ostream& os, const std::vector<double>& row);
void write_csv_header(std::ostream& os, const std::vector<std::string>& names);

} // namespace ecd
