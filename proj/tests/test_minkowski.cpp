#include "doctest.h"

#include <cmath>
#include <random>

#include "ecd/errors.hpp"
#include "ecd/grid.hpp"
#include "ecd/minkowski.hpp"
#include "ecd/numerics.hpp"

using namespace ecd;

namespace {
FourVector random_vector(std::mt19937_64& rng, double scale = 1.0)
{
    std::uniform_real_distribution<double> d(-scale, scale);
    return {d(rng), d(rng), d(rng), d(rng)};
}
} // namespace

TEST_CASE("minkowski dot on unit vectors")
{
    CHECK(minkowski_dot({1, 0, 0, 0}, {1, 0, 0, 0}) == 1.0);
    CHECK(minkowski_dot({0, 1, 0, 0}, {0, 1, 0, 0}) == -1.0);
    CHECK(minkowski_dot({1, 1, 0, 0}, {1, 1, 0, 0}) == 0.0);
}

TEST_CASE("minkowski dot is symmetric and bilinear")
{
    std::mt19937_64 rng(7);
    for (int k = 0; k < 100; ++k) {
        const FourVector u = random_vector(rng), v = random_vector(rng), w = random_vector(rng);
        CHECK(minkowski_dot(u, v) == minkowski_dot(v, u));
        CHECK(std::abs(minkowski_dot(2.5 * u + w, v) - (2.5 * minkowski_dot(u, v) + minkowski_dot(w, v))) < 1e-13);
    }
}

TEST_CASE("lorentz boost")
{
    const FourVector rest{1, 0, 0, 0};
    CHECK(lorentz_boost(rest, {0, 0, 0}) == rest);

    const FourVector b = lorentz_boost(rest, {0.6, 0, 0});
    // gamma = 1/sqrt(1 - 0.36) = 1.25, gamma*beta = 0.75
    CHECK(b[0] == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(b[1] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(b[2] == 0.0);
    CHECK(b[3] == 0.0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-0.5, 0.5);
    for (int k = 0; k < 200; ++k) {
        const FourVector u = random_vector(rng), v = random_vector(rng);
        const std::array<double, 3> beta{d(rng), d(rng), d(rng)};
        const double lhs = minkowski_dot(lorentz_boost(u, beta), lorentz_boost(v, beta));
        CHECK(std::abs(lhs - minkowski_dot(u, v)) < 1e-12);
    }

    CHECK_THROWS_AS(lorentz_boost(rest, {1.0, 0, 0}), DomainError);
    CHECK_THROWS_AS(lorentz_boost(rest, {0.8, 0.7, 0}), DomainError);
}

TEST_CASE("antisymmetric tensor from fields")
{
    const AntisymTensor F = AntisymTensor::from_fields({1, 2, 3}, {4, 5, 6});
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            CHECK(F(a, b) == -F(b, a));
    CHECK(F(0, 3) == -3.0);
    CHECK(F(3, 0) == 3.0);
    CHECK(F(1, 2) == -6.0);
    const auto E = F.electric();
    const auto B = F.magnetic();
    CHECK(E[0] == 1.0);
    CHECK(E[2] == 3.0);
    CHECK(B[0] == 4.0);
    CHECK(B[1] == 5.0);
    CHECK(B[2] == 6.0);
    // F^2 = 2(B^2 - E^2)
    CHECK(F.invariant_FF() == doctest::Approx(2.0 * (77.0 - 14.0)));
}

TEST_CASE("scale field")
{
    auto f = [](const FourVector& x) { return std::sin(x[0]) + x[1] * x[2] - x[3]; };
    std::mt19937_64 rng(3);
    const auto id = scale_field(f, ScaleMap(1.0, -3.0));
    for (int k = 0; k < 20; ++k) {
        const FourVector x = random_vector(rng, 3.0);
        CHECK(id(x) == f(x));
    }

    auto inv = [](const FourVector& x) { return 1.0 / x.spatial_norm(); };
    const auto fixed = scale_field(inv, ScaleMap(2.0, -1.0));
    for (int k = 0; k < 20; ++k) {
        const FourVector x = random_vector(rng, 3.0);
        CHECK(std::abs(fixed(x) - inv(x)) <= 1e-15 * inv(x));
    }

    const ScaleMap m1(1.7, -3.0), m2(0.4, -3.0);
    const auto twice = scale_field(scale_field(f, m2), m1);
    const auto once = scale_field(f, m1.compose(m2));
    for (int k = 0; k < 20; ++k) {
        const FourVector x = random_vector(rng, 3.0);
        CHECK(std::abs(twice(x) - once(x)) < 1e-12 * (1.0 + std::abs(once(x))));
    }
    CHECK_THROWS_AS(ScaleMap(0.0, 1.0), DomainError);
}

TEST_CASE("grid divergence on affine fields")
{
    const EventGrid g({0.1, -1, -1, -1}, {0.3, 0.5, 0.25, 0.4}, {4, 5, 6, 5});

    const CurrentField c = sample_current(g, "const", [](const FourVector&) { return FourVector{1.5, -2, 3, 0.5}; });
    const auto dc = grid_divergence(c);
    CHECK(dc.max_interior == 0.0);

    const CurrentField lin = sample_current(g, "x", [](const FourVector& x) { return x; });
    const auto dl = grid_divergence(lin);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (dl.interior[k])
            CHECK(dl.divergence.values[k] == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(std::isnan(dl.divergence.values[0]));

    const CurrentField free = sample_current(g, "x1", [](const FourVector& x) { return FourVector{x[1], 0, 0, 0}; });
    CHECK(grid_divergence(free).max_interior == 0.0);

    const EventGrid thin({0, 0, 0, 0}, {1, 1, 1, 1}, {2, 5, 5, 5});
    CHECK_THROWS_AS(grid_divergence(CurrentField(thin, "z")), DomainError);
}

TEST_CASE("grid charge")
{
    const EventGrid g({0, 0, 0, 0}, {1, 0.5, 0.5, 0.25}, {3, 2, 2, 4});
    const CurrentField one = sample_current(g, "one", [](const FourVector&) { return FourVector{1, 0, 0, 0}; });
    CHECK(grid_charge(one, 1) == 1.0);
    CHECK_THROWS_AS(grid_charge(one, 3), DomainError);
    CHECK_THROWS_AS(grid_charge(one, -1), DomainError);
}

TEST_CASE("conserved current keeps its charge within the divergence bound")
{
    // j = (rho, rho v) for a smooth profile moving with velocity v: exactly conserved
    const double v = 0.3;
    auto rho = [v](const FourVector& x) {
        const double dx = x[1] - v * x[0];
        return std::exp(-(dx * dx + x[2] * x[2] + x[3] * x[3]) / 0.5);
    };
    const EventGrid g({0, -4, -4, -4}, {0.2, 0.2, 0.2, 0.2}, {5, 41, 41, 41});
    const CurrentField j = sample_current(g, "blob", [&](const FourVector& x) {
        const double r = rho(x);
        return FourVector{r, r * v, 0, 0};
    });
    const auto div = grid_divergence(j);
    const double q1 = grid_charge(j, 1), q3 = grid_charge(j, 3);
    const double slab = g.cell_volume() * g.slice_size() * 2 * g.spacing()[0];
    CHECK(std::abs(q3 - q1) <= div.max_interior * slab);
    CHECK(std::abs(q3 - q1) < 1e-6);
}

TEST_CASE("exact summation is order independent")
{
    std::vector<double> xs{1e100, 1.0, -1e100, 1e-20, 3.0, -2.5e-16};
    const double s1 = exact_sum(xs);
    std::reverse(xs.begin(), xs.end());
    CHECK(exact_sum(xs) == s1);
    CHECK(s1 == 4.0 - 2.5e-16 + 1e-20);
    std::vector<double> ys{0.1, 0.2, 0.3};
    CHECK(exact_sum(ys) == 0.6);
    std::vector<double> neg{-0.1, -0.2, -0.3};
    CHECK(exact_sum(neg) == -exact_sum(ys));
}

TEST_CASE("adaptive Gauss-Kronrod")
{
    QuadOptions opt;
    opt.rel_tol = 1e-13;
    auto f = [](double x) { return std::complex<double>(std::cos(x), std::sin(3 * x)); };
    const auto r = integrate_gk(f, 0.0, 10.0, {}, opt);
    CHECK(r.converged);
    CHECK(r.value.real() == doctest::Approx(std::sin(10.0)).epsilon(1e-12));
    CHECK(r.value.imag() == doctest::Approx((1 - std::cos(30.0)) / 3).epsilon(1e-12));

    // mirrored integrand gives the exactly negated value
    auto g = [](double x) { return std::complex<double>(std::exp(-x * x) * (1 + x), std::sin(5 * x) * x * x); };
    auto gm = [&](double x) { return -std::conj(g(-x)); };
    const auto a = integrate_gk(g, -0.3, 4.0, {0.5, 1.7}, opt);
    const auto b = integrate_gk(gm, -4.0, 0.3, {-0.5, -1.7}, opt);
    CHECK(a.value.real() == -b.value.real());
    CHECK(a.value.imag() == b.value.imag());

    const auto gl = gauss_legendre(8);
    double sum = 0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i)
        sum += gl.weights[i] * std::pow(gl.nodes[i], 14);
    CHECK(sum == doctest::Approx(2.0 / 15.0).epsilon(1e-14));
}

TEST_CASE("log-log fit")
{
    std::vector<double> x, y;
    for (double r : logspace(1, 10, 9)) {
        x.push_back(r);
        y.push_back(3.0 * std::pow(r, -1.5));
    }
    const auto fit = loglog_fit(x, y);
    CHECK(fit.slope == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(fit.x_min == 1.0);
    CHECK(fit.x_max == doctest::Approx(10.0));
}
