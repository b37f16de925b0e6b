#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "ecd/ecd_core.hpp"
#include "ecd/errors.hpp"

using namespace ecd;
using std::numbers::pi;

TEST_CASE("calibration")
{
    CHECK(calibrate(1e-3).N == doctest::Approx(-50.6606).epsilon(1e-6));
    CHECK(calibrate(1.0 / (2 * pi * pi)).N == doctest::Approx(-1.0).epsilon(1e-15));
    for (double e : {1e-1, 1e-2, 3.7e-4})
        CHECK(calibrate(e).N * e == doctest::Approx(-1.0 / (2 * pi * pi)).epsilon(1e-15));
    for (double l : {0.5, 2.0, 10.0})
        CHECK(calibrate(l * l * 1e-2).N / calibrate(1e-2).N == doctest::Approx(1.0 / (l * l)).epsilon(1e-14));
    CHECK_THROWS_AS(calibrate(0.0), DomainError);
    CHECK_THROWS_AS(calibrate(-1.0), DomainError);
    const auto c = calibrate(0.1);
    CHECK(c.window(0.2) == 1.0);
    CHECK(c.window(-0.2) == -1.0);
    CHECK(c.window(0.05) == 0.0);
}

TEST_CASE("free closed form")
{
    const FourVector u{1.25, 0.75, 0, 0};
    const double eps = 1e-2;
    const Complex C(0.3, -0.4);
    for (double s : {0.0, 1.3, -2.0}) {
        const Complex v = free_phi_closed_form(s * u, s, u, C, eps);
        CHECK(std::abs(v - C * std::polar(1.0, 0.5 * s)) < 1e-15);
    }
    // int dz sinc(z/eps)/eps = pi
    for (double e : {1.0, 0.1}) {
        QuadOptions opt;
        opt.rel_tol = 1e-12;
        opt.max_panels = 400000;
        const double L = 2000.0 * e;
        const double I = integrate_real([e](double z) { return z == 0 ? 1.0 / e : std::sin(z / e) / z; }, -L, L, opt);
        // analytic tail beyond +-L: 2 int_L^inf sin(z/e)/z dz ~ 2 cos(L/e) e / L
        CHECK(std::abs(I + 2 * std::cos(L / e) * e / L - pi) < 1e-5);
    }
    // phase gradient at xi = 0 is i u_mu phi with O(h^2) error
    const double s = 0.7;
    WaveFn phi = [&](const FourVector& x, double t) { return free_phi_closed_form(x, t, u, C, eps); };
    const double e1 = orthogonality_error(phi, s * u, s, 2e-2, u.lowered());
    const double e2 = orthogonality_error(phi, s * u, s, 1e-2, u.lowered());
    CHECK(e1 / e2 > 3.5);
}

TEST_CASE("phi_eval of the free pair")
{
    const FourVector u{1, 0, 0, 0};
    const double eps = 1e-3;
    const EcdPair pair = free_pair(u, 1.0, eps, -1, 3, 1e4);
    for (double s : {0.0, 0.4, 2.5}) {
        const PhiResult r = phi_eval(pair, pair.trajectory.at(s).gamma, s);
        const Complex a = pair.ansatz(s);
        CHECK(std::abs(r.value - a) / std::abs(a) < 1e-6);
        // exact value with the truncation at s_max
        CHECK(std::abs(r.value - a * (1.0 - eps / pair.s_max)) / std::abs(a) < 1e-9);
        CHECK(r.tail_bound / std::abs(a) == doctest::Approx(eps / pair.s_max).epsilon(1e-12));
    }

    // off the trajectory: sinc closed form
    const FourVector u2{1.25, 0.75, 0, 0};
    for (double e : {1e-1, 1e-2, 1e-3}) {
        const EcdPair p = free_pair(u2, 1.0, e, -1, 3, 1e3);
        const double s = 1.1;
        for (const FourVector xi : {FourVector{0, 0.05, 0.02, 0}, FourVector{0.1, 0, 0, 0.2}, FourVector{0.3, 0.1, 0.1, 0}}) {
            const FourVector x = s * u2 + xi;
            const Complex got = phi_eval(p, x, s).value;
            const Complex closed = free_phi_closed_form(x, s, u2, p.ansatz(0.0), e);
            CHECK(std::abs(std::abs(got) - std::abs(closed)) <= 1e-3 * std::abs(p.ansatz(0.0)));
            // with the truncated tail included the agreement is at quadrature level
            const double z = minkowski_square(xi) / (2 * p.s_max);
            const double tail = (z == 0 ? 1.0 : std::sin(z) / z) * e / p.s_max;
            const Complex corr = closed - p.ansatz(0.0) * std::polar(1.0, minkowski_dot(u2, xi) + 0.5 * minkowski_square(u2) * s) * tail;
            CHECK(std::abs(got - corr) < 1e-8 * std::abs(p.ansatz(0.0)));
        }
    }

    // linearity in the ansatz
    EcdPair scaled = free_pair(u2, 1.0, 1e-2, -1, 3, 1e3);
    const Complex c(0.3, 1.7);
    const BoundaryAnsatz base = scaled.ansatz;
    scaled.ansatz.value = [base, c](double s) { return c * base(s); };
    const EcdPair plain = free_pair(u2, 1.0, 1e-2, -1, 3, 1e3);
    const FourVector x = 1.1 * u2 + FourVector{0.05, 0.1, 0, 0};
    const Complex a = phi_eval(plain, x, 1.1).value, b = phi_eval(scaled, x, 1.1).value;
    CHECK(std::abs(b - c * a) < 1e-14 * std::abs(c * a));

    EcdPair tight = free_pair(u2, 1.0, 1e-3, -1, 3, 1e3);
    tight.quad.max_panels = 2;
    CHECK_THROWS_AS(phi_eval(tight, 1.1 * u2 + FourVector{0.3, 0.2, 0, 0}, 1.1), AccuracyError);
}

TEST_CASE("consistency residual")
{
    const FourVector u{1.25, 0.75, 0, 0};
    const std::vector<double> eps{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
    std::vector<double> res;
    for (double e : eps) {
        const EcdPair p = free_pair(u, 1.0, e, 0, 2, 10.0);
        const ConsistencyReport r = consistency_residual(p, {0.0, 0.7, 2.0});
        // the residual is exactly the truncated tail
        CHECK(std::abs(r.residual - r.tail_bound) < 1e-9);
        res.push_back(r.residual);
    }
    const LogLogFit fit = loglog_fit(eps, res);
    CHECK(fit.slope >= 0.8);
    CHECK(fit.slope <= 1.2);
    for (std::size_t k = 1; k < res.size(); ++k)
        CHECK(res[k] / res[k - 1] == doctest::Approx(eps[k] / eps[k - 1]).epsilon(1e-6));

    // wrong N
    EcdPair wrong = free_pair(u, 1.0, 1e-2, 0, 2, 10.0);
    wrong.calibration.N *= 2.0;
    CHECK(consistency_residual(wrong, {0.5}).residual > 0.4);

    // scale covariance
    const EcdPair p = free_pair(u, 1.0, 1e-2, 0, 2, 10.0);
    const double r0 = consistency_residual(p, {0.7}).residual;
    for (double l : {0.5, 2.0}) {
        const EcdPair q = scale_transform_pair(p, l);
        CHECK(q.calibration.epsilon == doctest::Approx(l * l * 1e-2).epsilon(1e-15));
        CHECK(q.calibration.N == doctest::Approx(p.calibration.N / (l * l)).epsilon(1e-14));
        const ConsistencyReport rq = consistency_residual(q, {0.7 * l * l});
        CHECK(std::abs(rq.residual - r0) <= 2.0 * std::max(p.quad.rel_tol, rq.quad_error));
    }
}

TEST_CASE("scale transform")
{
    const FourVector u{1.25, 0.75, 0, 0};
    const EcdPair p = free_pair(u, 1.0, 1e-2, 0, 2, 10.0);
    const EcdPair same = scale_transform_pair(p, 1.0);
    CHECK(same.calibration.N == p.calibration.N);
    CHECK(same.ansatz(0.3) == p.ansatz(0.3));
    CHECK(same.trajectory.at(0.3).gamma == p.trajectory.at(0.3).gamma);

    // the free propagator is covariant: lambda^-4 G(x/l, x'/l; s/l^2) = G(x, x'; s)
    const FourVector x{0.4, 0.3, -0.2, 0.1}, xp{-0.1, 0.25, -0.1, 0.6};
    for (double l : {0.5, 2.0, 4.0}) {
        const Complex a = free_propagator((1.0 / l) * x, (1.0 / l) * xp, 0.7 / (l * l)) / std::pow(l, 4);
        CHECK(std::abs(a - free_propagator(x, xp, 0.7)) < 1e-15 * std::abs(a));
    }

    // transformed phi equals lambda^-2 phi(x/lambda, s/lambda^2)
    const double l = 2.0;
    const EcdPair q = scale_transform_pair(p, l);
    const FourVector y = 0.8 * u + FourVector{0.05, 0.1, 0, 0};
    const Complex a = phi_eval(q, l * y, l * l * 0.8).value;
    const Complex b = phi_eval(p, y, 0.8).value / (l * l);
    CHECK(std::abs(a - b) < 1e-9 * std::abs(b));
}

TEST_CASE("surfing residual")
{
    const FourVector u{1.25, 0.75, 0, 0};
    const double eps = 1e-2;
    const EcdPair pair = free_pair(u, 1.0, eps, 0, 2, 1e3);
    WaveFn phi = [&](const FourVector& x, double s) { return phi_eval(pair, x, s).value; };
    const double s = 0.9;
    const FourVector g = s * u;
    const double scale = std::norm(phi(g, s));
    const double o1 = orthogonality_error(phi, g, s, 4e-2, u.lowered());
    const double o2 = orthogonality_error(phi, g, s, 2e-2, u.lowered());
    CHECK(o1 / o2 >= 3.5);
    const FourVector r = surfing_residual(phi, g, s, 2e-2);
    for (int mu = 0; mu < 4; ++mu)
        CHECK(std::abs(r[mu]) <= o2 * scale);

    // Gaussian toy |phi|^2 maximal on the trajectory
    WaveFn toy = [&](const FourVector& x, double t) {
        const FourVector xi = x - t * u;
        return std::polar(std::exp(-(xi[1] * xi[1] + 2 * xi[2] * xi[2] + xi[3] * xi[3] + 0.5 * xi[0] * xi[0])), 0.3 * t);
    };
    const FourVector rt = surfing_residual(toy, g, s, 1e-2);
    for (int mu = 0; mu < 4; ++mu)
        CHECK(std::abs(rt[mu]) < 1e-15);

    // perturbed trajectory point: not a solution
    const FourVector off = g + FourVector{0, 0.15, 0, 0};
    const FourVector rp = surfing_residual(phi, off, s, 2e-2);
    CHECK(std::abs(rp[1]) > 0.1 * std::norm(phi(off, s)) / 0.15 * 0.1);
}

namespace {

// rho = exp(-(x - c)^T M (x - c)), c(s) = u s + a sin(w s) e1
struct Toy
{
    Eigen::Matrix4d M;
    FourVector u{1.2, 0.3, -0.1, 0.2};
    double a = 0.3, w = 2.0;
    FourVector c(double s) const { return s * u + FourVector{0, a * std::sin(w * s), 0, 0}; }
    DensityFn rho() const
    {
        return [this](const FourVector& x, double s) {
            const FourVector d = x - c(s);
            Eigen::Vector4d v(d[0], d[1], d[2], d[3]);
            return std::exp(-v.dot(M * v));
        };
    }
};

} // namespace

TEST_CASE("guiding equation")
{
    Toy t;
    t.M << 2.0, 0.3, 0.1, 0.0, 0.3, 1.5, -0.2, 0.1, 0.1, -0.2, 1.0, 0.05, 0.0, 0.1, 0.05, 0.8;
    const DensityFn rho = t.rho();
    GuidingOptions opt;
    opt.h = 1e-2;
    opt.h_s = 1e-2;

    auto err = [&](double ds) {
        const auto run = guiding_run(rho, t.c(0.0), 0.0, 2.0, ds, opt);
        REQUIRE(!run.back().violent);
        CHECK(run.back().s == doctest::Approx(2.0));
        return (run.back().gamma - t.c(2.0)).euclidean_norm();
    };
    // ds large enough that the RK4 error dominates the stencil floor (~1e-7)
    const double e1 = err(0.4), e2 = err(0.2);
    CHECK(e1 < 1e-3);
    CHECK(e1 / e2 >= 8.0);

    // velocity oracle: gamma_dot = c'(s)
    const GuidingVelocity gv = guiding_velocity(rho, t.c(0.4), 0.4, opt);
    const FourVector cdot = t.u + FourVector{0, t.a * t.w * std::cos(t.w * 0.4), 0, 0};
    CHECK((gv.velocity - cdot).euclidean_norm() < 1e-6);
    CHECK(gv.condition >= 1.0);

    // s-independent density: f = 0
    const DensityFn still = [&](const FourVector& x, double) { return rho(x, 0.0); };
    CHECK(guiding_velocity(still, t.c(0.0), 0.3, opt).velocity.euclidean_norm() < 1e-12);

    // quartic flatness of the exact free solution is reported, not integrated
    const FourVector u{1.25, 0.75, 0, 0};
    const Complex C(1.0, 0.0);
    const DensityFn free_rho = density_of([&](const FourVector& x, double s) { return free_phi_closed_form(x, s, u, C, 1e-2); });
    const auto run = guiding_run(free_rho, 0.5 * u, 0.5, 1.0, 0.1, opt);
    CHECK(run.size() == 1);
    CHECK(run.back().violent);
    CHECK(run.back().diagnosis.find("not resolved") != std::string::npos);

    // ill-conditioned Hessian
    Toy flat = t;
    flat.M = Eigen::Matrix4d::Identity();
    flat.M(3, 3) = 1e-10;
    const auto g2 = guiding_velocity(flat.rho(), flat.c(0.0), 0.0, opt);
    CHECK(g2.violent);
    CHECK(g2.condition >= 1e8);
}

TEST_CASE("classical phase gradient")
{
    const double eps = 1e-2, S = 0.5;
    auto build = [&](const FieldProvider& field, double hbar) {
        IntegratorConfig cfg;
        cfg.step = 1e-3;
        const Trajectory traj = integrate_worldline({0, -1.2, 0.3, 0}, {1.1, 0.45, 0, 0}, field, 1.0, 0.0, 2.5, cfg);
        BvpOptions bo;
        bo.steps = 25;
        EcdPair p{traj, action_phase_ansatz(traj, field, 1.0, 1.0 / eps, hbar), {}, calibrate(eps, hbar), S, {}};
        p.propagator.kind = PropagatorKind::semiclassical;
        p.propagator.hbar = hbar;
        p.propagator.paths = bvp_path_set(field, 1.0, bo);
        p.quad.rel_tol = 1e-10;
        return p;
    };
    const std::vector<double> samples{1.0, 1.5};

    const FieldProvider none = zero_field();
    const auto free_rep = classical_phase_gradient_check(build(none, 0.1), none, 1.0, samples, 2e-4);
    CHECK(free_rep.residual < 1e-6);

    const FieldProvider bump = gaussian_potential(0.2, 2.0);
    const auto r1 = classical_phase_gradient_check(build(bump, 0.1), bump, 1.0, samples, 2e-4);
    const auto r2 = classical_phase_gradient_check(build(bump, 0.05), bump, 1.0, samples, 2e-4);
    MESSAGE("phase-gradient residuals " << r1.residual << " " << r2.residual);
    CHECK(r2.residual / r1.residual <= 0.6);
    CHECK(r1.velocity_error < 1e-2);
    CHECK(r2.velocity_error < 1e-2);
    CHECK(r1.surfing <= r1.surfing_bound + 1e-12);
    CHECK(r2.surfing <= r2.surfing_bound + 1e-12);
}
