#include "ecd/ecd_core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ecd/errors.hpp"

namespace ecd {

using std::numbers::pi;

double EpsilonCalibration::window(double sigma) const
{
    if (sigma > epsilon)
        return 1.0;
    if (-sigma > epsilon)
        return -1.0;
    return 0.0;
}

EpsilonCalibration calibrate(double epsilon, double hbar)
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw DomainError("calibrate: epsilon must be positive");
    if (!(hbar > 0.0))
        throw DomainError("calibrate: hbar must be positive");
    return {epsilon, -1.0 / (2.0 * pi * pi * hbar * hbar * epsilon), hbar};
}

BoundaryAnsatz plane_phase_ansatz(Complex C, const FourVector& u, double hbar)
{
    const double u2 = minkowski_square(u);
    return {[=](double s) { return C * std::polar(1.0, u2 * s / (2.0 * hbar)); }, AnsatzKind::plane_phase};
}

BoundaryAnsatz action_phase_ansatz(const Trajectory& traj, const FieldProvider& field, double q, Complex C,
                                   double hbar)
{
    const std::vector<double> I = cumulative_action(traj, field, q);
    std::vector<double> L;
    for (const auto& p : traj.samples()) {
        double l = 0.5 * minkowski_square(p.gamma_dot);
        if (q != 0.0)
            l += q * minkowski_dot(field.A(p.gamma), p.gamma_dot);
        L.push_back(l);
    }
    const std::vector<TrajectorySample> samples = traj.samples();
    auto action = [samples, I, L](double s) {
        if (s < samples.front().s || s > samples.back().s)
            throw CoverageError("action-phase ansatz: s outside the trajectory");
        auto it = std::upper_bound(samples.begin(), samples.end(), s,
                                   [](double v, const TrajectorySample& p) { return v < p.s; });
        std::size_t k = static_cast<std::size_t>(it - samples.begin());
        k = std::clamp<std::size_t>(k, 1, samples.size() - 1) - 1;
        const double h = samples[k + 1].s - samples[k].s;
        const double t = (s - samples[k].s) / h;
        const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
        const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
        return h00 * I[k] + h10 * h * L[k] + h01 * I[k + 1] + h11 * h * L[k + 1];
    };
    return {[=](double s) { return C * std::polar(1.0, action(s) / hbar); }, AnsatzKind::action_phase};
}

BoundaryAnsatz tabulated_ansatz(std::vector<double> s, std::vector<Complex> values)
{
    if (s.size() != values.size() || s.size() < 2)
        throw DomainError("tabulated_ansatz: need at least two matching samples");
    if (!std::is_sorted(s.begin(), s.end()) || std::adjacent_find(s.begin(), s.end()) != s.end())
        throw DomainError("tabulated_ansatz: s must be strictly increasing");
    return {[s = std::move(s), v = std::move(values)](double x) {
                if (x < s.front() || x > s.back())
                    throw CoverageError("tabulated ansatz: s outside the table");
                auto it = std::upper_bound(s.begin(), s.end(), x);
                std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(it - s.begin()), 1, s.size() - 1) - 1;
                const double t = (x - s[k]) / (s[k + 1] - s[k]);
                return (1 - t) * v[k] + t * v[k + 1];
            },
            AnsatzKind::tabulated};
}

EcdPair free_pair(const FourVector& u, double c0, double epsilon, double s_lo, double s_hi, double s_max)
{
    if (!(s_max > epsilon))
        throw DomainError("free_pair: s_max must exceed epsilon");
    const double a = s_lo - s_max, b = s_hi + s_max;
    const int n = 64;
    std::vector<TrajectorySample> samples;
    for (int k = 0; k <= n; ++k) {
        const double s = k == n ? b : a + (b - a) * k / n;
        samples.push_back({s, s * u, u});
    }
    EcdPair pair{Trajectory(std::move(samples), 1.0), plane_phase_ansatz(c0 / epsilon, u), {}, calibrate(epsilon),
                 s_max, {}};
    pair.quad.rel_tol = 1e-11;
    return pair;
}

PhiResult phi_eval(const EcdPair& pair, const FourVector& x, double s)
{
    const double eps = pair.calibration.epsilon, S = pair.s_max;
    if (!(S > eps))
        throw DomainError("phi_eval: s_max must exceed epsilon");
    PhiResult out;
    Complex sum = 0.0;
    for (double sgn : {1.0, -1.0}) {
        auto f = [&](double t) -> Complex {
            const double sigma = sgn / t;
            const double sp = s - sigma;
            const WorldlinePoint w = pair.trajectory.at(sp);
            const Complex G = evaluate(pair.propagator, x, w.gamma, sigma);
            // window value is sgn on this half-line
            return sgn * G * pair.ansatz(sp) / (t * t);
        };
        const QuadResult r = integrate_gk(f, 1.0 / S, 1.0 / eps, {}, pair.quad);
        if (!r.converged)
            throw AccuracyError("phi_eval: quadrature budget exceeded", r.error / std::max(std::abs(r.value), 1e-300));
        sum += r.value;
        out.error += r.error;
        out.panels += r.panels;
    }
    const double N = pair.calibration.N, hbar = pair.propagator.hbar;
    out.value = Complex(0.0, 1.0 / N) * sum;
    out.error /= std::abs(N);
    out.tail_bound = 2.0 * std::abs(pair.ansatz(s)) / (4 * pi * pi * hbar * hbar * std::abs(N) * S);
    return out;
}

Complex free_phi_closed_form(const FourVector& x, double s, const FourVector& u, Complex C, double epsilon)
{
    const EpsilonCalibration cal = calibrate(epsilon);
    const FourVector xi = x - s * u;
    const double z = minkowski_square(xi) / (2 * epsilon);
    const double sinc = z == 0.0 ? 1.0 : std::sin(z) / z;
    const double phase = minkowski_dot(u, xi) + 0.5 * minkowski_square(u) * s;
    return (-C / (2 * pi * pi * cal.N)) * std::polar(1.0, phase) * (sinc / epsilon);
}

ConsistencyReport consistency_residual(const EcdPair& pair, const std::vector<double>& s_samples)
{
    const std::size_t n = s_samples.size();
    std::vector<double> res(n), tail(n), qerr(n);
    parallel_for(n, [&](std::size_t k) {
        const double s = s_samples[k];
        const PhiResult r = phi_eval(pair, pair.trajectory.at(s).gamma, s);
        const Complex a = pair.ansatz(s);
        const double norm = std::abs(a) < 1e-12 ? 1.0 : std::abs(a);
        res[k] = std::abs(r.value - a) / norm;
        tail[k] = r.tail_bound / norm;
        qerr[k] = r.error / norm;
    });
    ConsistencyReport rep;
    rep.s = s_samples;
    rep.residuals = res;
    for (std::size_t k = 0; k < n; ++k) {
        rep.residual = std::max(rep.residual, res[k]);
        rep.tail_bound = std::max(rep.tail_bound, tail[k]);
        rep.quad_error = std::max(rep.quad_error, qerr[k]);
    }
    return rep;
}

FourVector surfing_residual(const WaveFn& phi, const FourVector& gamma, double s, double h)
{
    const Complex c = std::conj(phi(gamma, s));
    FourVector out;
    for (int mu = 0; mu < 4; ++mu) {
        const FourVector e = h * unit_vector(mu);
        out[mu] = ((phi(gamma + e, s) - phi(gamma - e, s)) / (2 * h) * c).real();
    }
    return out;
}

double orthogonality_error(const WaveFn& phi, const FourVector& gamma, double s, double h, const FourVector& k)
{
    const Complex p0 = phi(gamma, s);
    const double rho = std::norm(p0);
    double worst = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        const FourVector e = h * unit_vector(mu);
        const Complex d = (phi(gamma + e, s) - phi(gamma - e, s)) / (2 * h) * std::conj(p0);
        worst = std::max(worst, std::abs(d - Complex(0.0, k[mu]) * rho) / rho);
    }
    return worst;
}

DensityFn density_of(const WaveFn& phi)
{
    return [phi](const FourVector& x, double s) { return std::norm(phi(x, s)); };
}

namespace {

using Mat4 = Eigen::Matrix4d;

Mat4 hessian_at(const DensityFn& rho, const FourVector& x, double s, double h)
{
    Mat4 H;
    const double r0 = rho(x, s);
    for (int a = 0; a < 4; ++a) {
        const FourVector ea = h * unit_vector(a);
        H(a, a) = (rho(x + ea, s) - 2 * r0 + rho(x - ea, s)) / (h * h);
        for (int b = a + 1; b < 4; ++b) {
            const FourVector eb = h * unit_vector(b);
            const double v =
                (rho(x + ea + eb, s) - rho(x + ea - eb, s) - rho(x - ea + eb, s) + rho(x - ea - eb, s)) / (4 * h * h);
            H(a, b) = H(b, a) = v;
        }
    }
    return H;
}

Eigen::Vector4d mixed_at(const DensityFn& rho, const FourVector& x, double s, double h, double hs)
{
    Eigen::Vector4d f;
    for (int a = 0; a < 4; ++a) {
        const FourVector e = h * unit_vector(a);
        f[a] = (rho(x + e, s + hs) - rho(x + e, s - hs) - rho(x - e, s + hs) + rho(x - e, s - hs)) / (4 * h * hs);
    }
    return f;
}

} // namespace

GuidingVelocity guiding_velocity(const DensityFn& rho, const FourVector& x, double s, const GuidingOptions& opt)
{
    GuidingVelocity out;
    const Mat4 H1 = hessian_at(rho, x, s, opt.h);
    const Mat4 H2 = hessian_at(rho, x, s, 0.5 * opt.h);
    const double n2 = H2.norm();
    if (!(n2 > 0.0) || !std::isfinite(n2)) {
        out.violent = true;
        out.condition = std::numeric_limits<double>::infinity();
        out.diagnosis = "Hessian vanishes";
        return out;
    }
    const double drift = (H1 - H2).norm() / n2;
    const Mat4 H = (4.0 * H2 - H1) / 3.0;
    Eigen::JacobiSVD<Mat4> svd(H);
    const auto sv = svd.singularValues();
    out.condition = sv[3] > 0.0 ? sv[0] / sv[3] : std::numeric_limits<double>::infinity();
    if (drift > opt.hessian_drift) {
        out.violent = true;
        out.diagnosis = "Hessian not resolved by the stencil (relative change " + std::to_string(drift) +
                        " between h and h/2): degenerate extremum";
        return out;
    }
    if (!(out.condition < opt.kappa_max)) {
        out.violent = true;
        out.diagnosis = "Hessian ill-conditioned (kappa = " + std::to_string(out.condition) + ")";
        return out;
    }
    const Eigen::Vector4d f =
        (4.0 * mixed_at(rho, x, s, 0.5 * opt.h, 0.5 * opt.h_s) - mixed_at(rho, x, s, opt.h, opt.h_s)) / 3.0;
    const Eigen::Vector4d v = -H.partialPivLu().solve(f);
    out.velocity = {v[0], v[1], v[2], v[3]};
    return out;
}

GuidingState guiding_step(const DensityFn& rho, const GuidingState& state, double ds, const GuidingOptions& opt)
{
    if (state.violent)
        return state;
    GuidingState out = state;
    auto eval = [&](const FourVector& x, double s, FourVector& v) {
        const GuidingVelocity g = guiding_velocity(rho, x, s, opt);
        if (g.violent) {
            out.violent = true;
            out.condition = g.condition;
            out.diagnosis = g.diagnosis + " at s = " + std::to_string(s);
            return false;
        }
        v = g.velocity;
        return true;
    };
    FourVector k1, k2, k3, k4;
    const double s = state.s;
    const FourVector& x = state.gamma;
    if (!eval(x, s, k1) || !eval(x + 0.5 * ds * k1, s + 0.5 * ds, k2) || !eval(x + 0.5 * ds * k2, s + 0.5 * ds, k3) ||
        !eval(x + ds * k3, s + ds, k4))
        return out;
    out.s = s + ds;
    out.gamma = x + (ds / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const GuidingVelocity g = guiding_velocity(rho, out.gamma, out.s, opt);
    out.gamma_dot = g.velocity;
    out.condition = g.condition;
    out.violent = g.violent;
    out.diagnosis = g.violent ? g.diagnosis + " at s = " + std::to_string(out.s) : "";
    return out;
}

std::vector<GuidingState> guiding_run(const DensityFn& rho, const FourVector& gamma0, double s0, double s1, double ds,
                                      const GuidingOptions& opt)
{
    if (!(ds > 0.0) || !(s1 > s0))
        throw DomainError("guiding_run: need ds > 0 and s1 > s0");
    const long n = std::lround((s1 - s0) / ds);
    if (std::abs(n * ds - (s1 - s0)) > 1e-9 * (s1 - s0))
        throw DomainError("guiding_run: ds must divide the s-span");
    GuidingState st;
    st.s = s0;
    st.gamma = gamma0;
    const GuidingVelocity g = guiding_velocity(rho, gamma0, s0, opt);
    st.gamma_dot = g.velocity;
    st.condition = g.condition;
    st.violent = g.violent;
    st.diagnosis = g.violent ? g.diagnosis + " at s = " + std::to_string(s0) : "";
    std::vector<GuidingState> out{st};
    for (long k = 0; k < n && !out.back().violent; ++k) {
        GuidingState next = guiding_step(rho, out.back(), ds, opt);
        if (next.violent && next.s == out.back().s) {
            out.back() = next;
            break;
        }
        next.s = s0 + (k + 1) * ds;
        out.push_back(next);
    }
    return out;
}

PhaseGradientReport classical_phase_gradient_check(const EcdPair& pair, const FieldProvider& field, double q,
                                                   const std::vector<double>& s_samples, double h)
{
    const double hbar = pair.propagator.hbar;
    PhaseGradientReport rep;
    rep.s = s_samples;
    // stencil: center, then for each mu the offsets -2h, -h, +h, +2h
    const std::array<double, 4> offs{-2.0, -1.0, 1.0, 2.0};
    for (double s : s_samples) {
        const WorldlinePoint w = pair.trajectory.at(s);
        std::vector<FourVector> pts{w.gamma};
        for (int mu = 0; mu < 4; ++mu)
            for (double o : offs)
                pts.push_back(w.gamma + (o * h) * unit_vector(mu));
        std::vector<Complex> vals(pts.size());
        parallel_for(pts.size(), [&](std::size_t k) { vals[k] = phi_eval(pair, pts[k], s).value; });
        const Complex phi = vals[0];
        const FourVector A = q != 0.0 ? field.A(w.gamma).lowered() : FourVector{};
        const FourVector p = w.gamma_dot.lowered() + q * A;
        const FourVector gdot = w.gamma_dot.lowered();
        double num = 0.0, vel = 0.0, surf = 0.0;
        for (int mu = 0; mu < 4; ++mu) {
            const Complex* v = &vals[1 + 4 * mu];
            const Complex d = (8.0 * (v[2] - v[1]) - (v[3] - v[0])) / (12.0 * h);
            num += std::norm(hbar * d - Complex(0.0, p[mu]) * phi);
            const double vmu = hbar * (d / phi).imag() - q * A[mu];
            vel += (vmu - gdot[mu]) * (vmu - gdot[mu]);
            surf = std::max(surf, std::abs((d * std::conj(phi)).real()));
        }
        const double r = std::sqrt(num) / (std::abs(phi) * p.euclidean_norm());
        rep.residuals.push_back(r);
        rep.residual = std::max(rep.residual, r);
        rep.velocity_error = std::max(rep.velocity_error, std::sqrt(vel) / gdot.euclidean_norm());
        rep.surfing = std::max(rep.surfing, surf);
        rep.surfing_bound = std::max(rep.surfing_bound, std::abs(phi) * std::sqrt(num) / hbar);
    }
    return rep;
}

EcdPair scale_transform_pair(const EcdPair& pair, double lambda)
{
    if (!(lambda > 0.0))
        throw DomainError("scale_transform_pair: lambda must be positive");
    if (lambda == 1.0)
        return pair;
    const double l2 = lambda * lambda;
    EcdPair out = pair;
    out.trajectory = apply_scaling(pair.trajectory, lambda);
    const BoundaryAnsatz a = pair.ansatz;
    out.ansatz = {[a, l2](double s) { return a(s / l2) / l2; }, a.kind};
    out.calibration = calibrate(l2 * pair.calibration.epsilon, pair.calibration.hbar);
    out.s_max = l2 * pair.s_max;
    PropagatorSpec& p = out.propagator;
    switch (p.kind) {
    case PropagatorKind::free:
    case PropagatorKind::delta_potential:
        break;
    case PropagatorKind::short_s: {
        const VectorFn A = pair.propagator.A;
        p.A = [A, lambda](const FourVector& x) { return (1.0 / lambda) * A((1.0 / lambda) * x); };
        break;
    }
    case PropagatorKind::constant_field:
        p.F = pair.propagator.F * (1.0 / l2);
        break;
    case PropagatorKind::semiclassical: {
        const PathSet ps = pair.propagator.paths;
        p.paths = [ps, lambda, l2](const FourVector& x, const FourVector& xp, double s) {
            std::vector<PathTerm> t = ps((1.0 / lambda) * x, (1.0 / lambda) * xp, s / l2);
            for (auto& term : t)
                term.amplitude /= l2 * l2;
            return t;
        };
        break;
    }
    }
    return out;
}

} // namespace ecd
