#pragma once

// Shared fixtures for the currents tests and the acceptance run.

#include <cmath>
#include <numbers>
#include <vector>

#include "ecd/ecd_currents.hpp"

namespace ecd::testing {

inline Trajectory straight_line(const FourVector& x0, const FourVector& u, double s0, double s1, int n = 200,
                                double q = 1.0)
{
    std::vector<TrajectorySample> p;
    for (int k = 0; k <= n; ++k) {
        const double s = k == n ? s1 : s0 + (s1 - s0) * k / n;
        p.push_back({s, x0 + s * u, u});
    }
    return Trajectory(p, q);
}

// sum_j a_j exp(i (k_j.x - w k_j^2 s / 2)); an exact free solution for w = 1 (hbar = 1)
struct PlaneWaves
{
    std::vector<FourVector> k{{1.2, 0.3, -0.2, 0.1}, {0.7, -0.5, 0.4, 0.2}, {0.3, 0.9, 0.1, -0.6}};
    std::vector<Complex> a{{1.0, 0.0}, {0.5, 0.3}, {-0.2, 0.7}};
    double w = 1.0;

    Complex operator()(const FourVector& x, double s) const
    {
        Complex v = 0.0;
        for (std::size_t j = 0; j < k.size(); ++j)
            v += a[j] * std::polar(1.0, minkowski_dot(k[j], x) - 0.5 * w * minkowski_square(k[j]) * s);
        return v;
    }
};

// A q = 1, hbar = 1 source whose worldline runs far outside any test grid.
inline PairSource plane_wave_source(const PlaneWaves& pw)
{
    PairSource src;
    src.phi = pw;
    src.trajectory = straight_line({0, 50, 0, 0}, {1, 0, 0, 0}, -100, 100, 20);
    src.q = 1.0;
    src.hbar = 1.0;
    src.calibration = calibrate(0.1);
    return src;
}

// Largest |j^0 - j_div^0| over one oscillation period past a (units of sqrt(eps), eps = 1),
// sampled on a line grid and passed through subtract_divergent.
inline double post_subtraction_envelope(double a, int samples = 32)
{
    const FourVector u{1, 0, 0, 0};
    const Complex C = 1.0;
    const EpsilonCalibration cal = calibrate(1.0);
    const double period = 2 * std::numbers::pi / a;
    const EventGrid grid({0, a, 0, 0}, {1, period / samples, 1, 1}, {1, samples, 1, 1});
    CurrentField j(grid, "j0");
    for (std::size_t k = 0; k < grid.size(); ++k)
        j.values[k] = {free_charge_j0(grid.point(k)[1], u, C, cal), 0, 0, 0};
    const Trajectory line = straight_line({0, 0, 0, 0}, u, -2 * a - 10, 2 * a + 10, 40);
    const RegularizedCurrent r = subtract_divergent(j, line, divergent_coefficient(1.0, C, cal), cal);
    double m = 0.0;
    for (const auto& v : r.finite.values)
        m = std::max(m, std::abs(v[0]));
    return m;
}

} // namespace ecd::testing
