#pragma once

#include <array>
#include <functional>
#include <cstddef>
#include <string>
#include <vector>

#include "ecd/minkowski.hpp"

namespace ecd {

// Regular lattice of events. Axis 0 is time; index order is (t, x, y, z)
// with z fastest.
class EventGrid
{
  public:
    EventGrid() = default;
    EventGrid(const FourVector& origin, const std::array<double, 4>& spacing,
              const std::array<int, 4>& extent);

    const FourVector& origin() const { return origin_; }
    const std::array<double, 4>& spacing() const { return spacing_; }
    const std::array<int, 4>& extent() const { return extent_; }

    std::size_t size() const;
    std::size_t slice_size() const;
    std::size_t index(const std::array<int, 4>& i) const;
    std::array<int, 4> multi_index(std::size_t flat) const;
    FourVector point(const std::array<int, 4>& i) const;
    FourVector point(std::size_t flat) const { return point(multi_index(flat)); }
    double slice_time(int n) const { return origin_[0] + n * spacing_[0]; }
    double cell_volume() const { return spacing_[1] * spacing_[2] * spacing_[3]; }
    bool is_interior(const std::array<int, 4>& i) const;

    // Same lattice, translated by a whole number of cells.
    EventGrid shifted(const FourVector& delta) const;

  private:
    FourVector origin_;
    std::array<double, 4> spacing_{1, 1, 1, 1};
    std::array<int, 4> extent_{1, 1, 1, 1};
};

template<class T>
struct GridField
{
    EventGrid grid;
    std::vector<T> values;
    std::string label;

    GridField() = default;
    GridField(EventGrid g, std::string l, T init = T{})
        : grid(std::move(g)), values(grid.size(), init), label(std::move(l))
    {
    }
    T& at(const std::array<int, 4>& i) { return values[grid.index(i)]; }
    const T& at(const std::array<int, 4>& i) const { return values[grid.index(i)]; }
};

using ScalarField = GridField<double>;
using CurrentField = GridField<FourVector>;

struct TensorField : GridField<Matrix4>
{
    bool symmetric = false;
    TensorField() = default;
    TensorField(EventGrid g, std::string l, bool sym) : GridField<Matrix4>(std::move(g), std::move(l)), symmetric(sym) {}
    // max |T^{mu nu} - T^{nu mu}| over the grid
    double asymmetry() const;
};

// Evaluates f at every grid point, in parallel.
CurrentField sample_current(const EventGrid& grid, const std::string& label,
                            const std::function<FourVector(const FourVector&)>& f);

struct DivergenceResult
{
    ScalarField divergence;          // NaN on the boundary layer
    std::vector<unsigned char> interior;
    double max_interior = 0.0;
};

// Second-order central-difference four-divergence. Needs extent >= 3 on every axis.
DivergenceResult grid_divergence(const CurrentField& j);

// Midpoint sum of j^0 over slice n times the cell volume (exact accumulation).
double grid_charge(const CurrentField& j, int time_slice);
double grid_charge(const ScalarField& rho, int time_slice);

// Sum of the outward spatial flux j^i n_i over the boundary faces of slice n,
// integrated with the same midpoint weights as grid_charge.
double grid_boundary_flux(const CurrentField& j, int time_slice);

} // namespace ecd
