#include "ecd/grid.hpp"

#include <cmath>
#include <limits>

#include "ecd/errors.hpp"
#include "ecd/numerics.hpp"

namespace ecd {

EventGrid::EventGrid(const FourVector& origin, const std::array<double, 4>& spacing,
                     const std::array<int, 4>& extent)
    : origin_(origin), spacing_(spacing), extent_(extent)
{
    for (int a = 0; a < 4; ++a) {
        if (!(spacing_[a] > 0.0))
            throw DomainError("EventGrid: spacings must be positive");
        if (extent_[a] < 1)
            throw DomainError("EventGrid: extents must be positive");
    }
}

std::size_t EventGrid::size() const
{
    return std::size_t(extent_[0]) * extent_[1] * extent_[2] * extent_[3];
}

std::size_t EventGrid::slice_size() const { return std::size_t(extent_[1]) * extent_[2] * extent_[3]; }

std::size_t EventGrid::index(const std::array<int, 4>& i) const
{
    return ((std::size_t(i[0]) * extent_[1] + i[1]) * extent_[2] + i[2]) * extent_[3] + i[3];
}

std::array<int, 4> EventGrid::multi_index(std::size_t flat) const
{
    std::array<int, 4> i;
    for (int a = 3; a >= 0; --a) {
        i[a] = static_cast<int>(flat % extent_[a]);
        flat /= extent_[a];
    }
    return i;
}

FourVector EventGrid::point(const std::array<int, 4>& i) const
{
    FourVector x;
    for (int a = 0; a < 4; ++a)
        x[a] = origin_[a] + i[a] * spacing_[a];
    return x;
}

bool EventGrid::is_interior(const std::array<int, 4>& i) const
{
    for (int a = 0; a < 4; ++a)
        if (i[a] <= 0 || i[a] >= extent_[a] - 1)
            return false;
    return true;
}

EventGrid EventGrid::shifted(const FourVector& delta) const
{
    return EventGrid(origin_ + delta, spacing_, extent_);
}

double TensorField::asymmetry() const
{
    double worst = 0.0;
    for (const auto& T : values)
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b)
                worst = std::max(worst, std::abs(T[a][b] - T[b][a]));
    return worst;
}

CurrentField sample_current(const EventGrid& grid, const std::string& label,
                            const std::function<FourVector(const FourVector&)>& f)
{
    CurrentField j(grid, label);
    parallel_for(grid.size(), [&](std::size_t k) { j.values[k] = f(grid.point(k)); });
    return j;
}

DivergenceResult grid_divergence(const CurrentField& j)
{
    const EventGrid& g = j.grid;
    for (int a = 0; a < 4; ++a)
        if (g.extent()[a] < 3)
            throw DomainError("grid_divergence: every extent must be >= 3");
    DivergenceResult out;
    out.divergence = ScalarField(g, "div(" + j.label + ")", std::numeric_limits<double>::quiet_NaN());
    out.interior.assign(g.size(), 0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const auto i = g.multi_index(k);
        if (!g.is_interior(i))
            continue;
        // terms combined in a fixed order
        double div = 0.0;
        for (int a = 0; a < 4; ++a) {
            auto ip = i, im = i;
            ++ip[a];
            --im[a];
            div += (j.at(ip)[a] - j.at(im)[a]) / (2.0 * g.spacing()[a]);
        }
        out.divergence.values[k] = div;
        out.interior[k] = 1;
        out.max_interior = std::max(out.max_interior, std::abs(div));
    }
    return out;
}

namespace {
void check_slice(const EventGrid& g, int n)
{
    if (n < 0 || n >= g.extent()[0])
        throw DomainError("grid_charge: time slice out of range");
}
} // namespace

double grid_charge(const CurrentField& j, int time_slice)
{
    const EventGrid& g = j.grid;
    check_slice(g, time_slice);
    ExactSum acc;
    const std::size_t base = g.index({time_slice, 0, 0, 0});
    for (std::size_t k = 0; k < g.slice_size(); ++k)
        acc.add(j.values[base + k][0] * g.cell_volume());
    return acc.value();
}

double grid_charge(const ScalarField& rho, int time_slice)
{
    const EventGrid& g = rho.grid;
    check_slice(g, time_slice);
    ExactSum acc;
    const std::size_t base = g.index({time_slice, 0, 0, 0});
    for (std::size_t k = 0; k < g.slice_size(); ++k)
        acc.add(rho.values[base + k] * g.cell_volume());
    return acc.value();
}

double grid_boundary_flux(const CurrentField& j, int time_slice)
{
    const EventGrid& g = j.grid;
    check_slice(g, time_slice);
    const auto& e = g.extent();
    const auto& h = g.spacing();
    ExactSum acc;
    for (int ix = 0; ix < e[1]; ++ix)
        for (int iy = 0; iy < e[2]; ++iy)
            for (int iz = 0; iz < e[3]; ++iz) {
                const std::array<int, 4> i{time_slice, ix, iy, iz};
                const int idx[3] = {ix, iy, iz};
                for (int a = 1; a < 4; ++a) {
                    const double area = g.cell_volume() / h[a];
                    if (idx[a - 1] == e[a] - 1)
                        acc.add(j.at(i)[a] * area);
                    if (idx[a - 1] == 0)
                        acc.add(-j.at(i)[a] * area);
                }
            }
    return acc.value();
}

} // namespace ecd
