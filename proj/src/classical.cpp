#include "ecd/classical.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ecd/csv.hpp"
#include "ecd/errors.hpp"
#include "ecd/numerics.hpp"

namespace ecd {

Trajectory::Trajectory(std::vector<TrajectorySample> samples, double q)
    : samples_(std::move(samples)), q_(q)
{
    if (samples_.empty())
        throw DomainError("Trajectory: no samples");
    for (std::size_t k = 1; k < samples_.size(); ++k)
        if (!(samples_[k].s > samples_[k - 1].s))
            throw DomainError("Trajectory: s must be strictly increasing");
}

std::size_t Trajectory::segment(double s) const
{
    if (samples_.size() < 2 || s < s_min() || s > s_max())
        throw CoverageError("Trajectory: s = " + std::to_string(s) + " outside the sampled range");
    auto it = std::upper_bound(samples_.begin(), samples_.end(), s,
                               [](double v, const TrajectorySample& t) { return v < t.s; });
    std::size_t k = static_cast<std::size_t>(it - samples_.begin());
    if (k == 0)
        return 0;
    return std::min(k - 1, samples_.size() - 2);
}

namespace {
bool lower_start(const TrajectorySample& a, const TrajectorySample& b)
{
    for (int mu = 0; mu < 4; ++mu) {
        if (a.gamma[mu] < b.gamma[mu])
            return true;
        if (a.gamma[mu] > b.gamma[mu])
            return false;
    }
    return true;
}
} // namespace

WorldlinePoint Trajectory::at(double s) const
{
    const std::size_t k = segment(s);
    const TrajectorySample& a = samples_[k];
    const TrajectorySample& b = samples_[k + 1];
    const bool forward = lower_start(a, b);
    const TrajectorySample& p0 = forward ? a : b;
    const TrajectorySample& p1 = forward ? b : a;
    const double d = p1.s - p0.s;
    const double th = std::abs(s - p0.s) / std::abs(d);
    const double t2 = th * th, t3 = t2 * th;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + th, h01 = -2 * t3 + 3 * t2,
                 h11 = t3 - t2;
    const double d00 = 6 * t2 - 6 * th, d10 = 3 * t2 - 4 * th + 1, d01 = -6 * t2 + 6 * th,
                 d11 = 3 * t2 - 2 * th;
    WorldlinePoint out;
    for (int mu = 0; mu < 4; ++mu) {
        const double m0 = d * p0.gamma_dot[mu];
        const double m1 = d * p1.gamma_dot[mu];
        out.gamma[mu] = h00 * p0.gamma[mu] + h10 * m0 + h01 * p1.gamma[mu] + h11 * m1;
        out.gamma_dot[mu] = (d00 * p0.gamma[mu] + d10 * m0 + d01 * p1.gamma[mu] + d11 * m1) / d;
    }
    return out;
}

Worldline Trajectory::as_worldline() const
{
    return [self = *this](double s) { return self.at(s); };
}

FieldProvider zero_field()
{
    FieldProvider f;
    f.F = [](const FourVector&) { return AntisymTensor{}; };
    f.A = [](const FourVector&) { return FourVector{}; };
    return f;
}

FieldProvider constant_field(const AntisymTensor& F)
{
    FieldProvider f;
    f.F = [F](const FourVector&) { return F; };
    f.A = [F](const FourVector& x) {
        FourVector A;
        for (int nu = 0; nu < 4; ++nu) {
            double sum = 0.0;
            for (int l = 0; l < 4; ++l)
                sum += F.mixed(nu, l) * x[l];
            A[nu] = -0.5 * sum;
        }
        return A;
    };
    return f;
}

FieldProvider static_potential(std::function<double(const FourVector&)> V,
                               std::function<std::array<double, 3>(const FourVector&)> grad_V,
                               double lambda_F)
{
    FieldProvider f;
    f.F = [grad_V](const FourVector& x) {
        const auto g = grad_V(x);
        return AntisymTensor::from_fields({-g[0], -g[1], -g[2]}, {0.0, 0.0, 0.0});
    };
    f.A = [V](const FourVector& x) { return FourVector{V(x), 0.0, 0.0, 0.0}; };
    f.lambda_F = lambda_F;
    return f;
}

FieldProvider gaussian_potential(double V0, double w)
{
    if (!(w > 0.0))
        throw DomainError("gaussian_potential: width must be positive");
    auto V = [V0, w](const FourVector& x) {
        return V0 * std::exp(-(x[1] * x[1] + x[2] * x[2] + x[3] * x[3]) / (w * w));
    };
    auto gV = [V0, w](const FourVector& x) {
        const double e = -2.0 * V0 / (w * w) * std::exp(-(x[1] * x[1] + x[2] * x[2] + x[3] * x[3]) / (w * w));
        return std::array<double, 3>{e * x[1], e * x[2], e * x[3]};
    };
    return static_potential(V, gV, w);
}

FieldProvider scaled_field(const FieldProvider& field, double lambda)
{
    if (!(lambda > 0.0))
        throw DomainError("scaled_field: lambda must be positive");
    FieldProvider f;
    auto F = field.F;
    f.F = [F, lambda](const FourVector& x) { return F((1.0 / lambda) * x) * (1.0 / (lambda * lambda)); };
    if (field.A) {
        auto A = field.A;
        f.A = [A, lambda](const FourVector& x) { return (1.0 / lambda) * A((1.0 / lambda) * x); };
    }
    f.lambda_F = field.lambda_F * lambda;
    return f;
}

FieldProvider negated_field(const FieldProvider& field)
{
    FieldProvider f;
    auto F = field.F;
    f.F = [F](const FourVector& x) { return -F(x); };
    if (field.A) {
        auto A = field.A;
        f.A = [A](const FourVector& x) { return -A(x); };
    }
    f.lambda_F = field.lambda_F;
    return f;
}

FourVector lorentz_rhs(const FourVector& gamma, const FourVector& gamma_dot,
                       const FieldProvider& field, double q)
{
    const AntisymTensor F = field(gamma);
    FourVector out;
    for (int mu = 0; mu < 4; ++mu) {
        double sum = 0.0;
        for (int nu = 0; nu < 4; ++nu)
            sum += F.mixed(mu, nu) * gamma_dot[nu];
        out[mu] = q * sum;
    }
    return out;
}

namespace {

bool finite(const FourVector& v)
{
    for (int i = 0; i < 4; ++i)
        if (!std::isfinite(v[i]))
            return false;
    return true;
}

void rk4_step(FourVector& x, FourVector& v, double h, const FieldProvider& field, double q)
{
    const FourVector k1x = v;
    const FourVector k1v = lorentz_rhs(x, v, field, q);
    const FourVector k2x = v + (0.5 * h) * k1v;
    const FourVector k2v = lorentz_rhs(x + (0.5 * h) * k1x, k2x, field, q);
    const FourVector k3x = v + (0.5 * h) * k2v;
    const FourVector k3v = lorentz_rhs(x + (0.5 * h) * k2x, k3x, field, q);
    const FourVector k4x = v + h * k3v;
    const FourVector k4v = lorentz_rhs(x + h * k3x, k4x, field, q);
    x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
}

// kick-drift-kick with the second kick solved by fixed-point iteration
void leapfrog_step(FourVector& x, FourVector& v, double h, const FieldProvider& field, double q)
{
    const FourVector v_half = v + (0.5 * h) * lorentz_rhs(x, v, field, q);
    x += h * v_half;
    FourVector v_new = v_half;
    for (int it = 0; it < 4; ++it)
        v_new = v_half + (0.5 * h) * lorentz_rhs(x, v_new, field, q);
    v = v_new;
}

} // namespace

Trajectory integrate_worldline(const FourVector& gamma0, const FourVector& gamma_dot0,
                               const FieldProvider& field, double q, double s_begin, double s_end,
                               const IntegratorConfig& cfg)
{
    if (!(cfg.step > 0.0))
        throw DomainError("integrate_worldline: step must be positive");
    const double span = s_end - s_begin;
    if (!(span > 0.0))
        throw DomainError("integrate_worldline: empty s span");
    const double nf = std::round(span / cfg.step);
    if (nf < 1.0 || std::abs(nf * cfg.step - span) > 1e-9 * span)
        throw DomainError("integrate_worldline: step must divide the s span");
    const long n = static_cast<long>(nf);
    const double h = span / nf;

    std::vector<TrajectorySample> samples;
    samples.reserve(n + 1);
    FourVector x = gamma0, v = gamma_dot0;
    samples.push_back({s_begin, x, v});
    for (long k = 1; k <= n; ++k) {
        if (cfg.method == IntegratorMethod::rk4)
            rk4_step(x, v, h, field, q);
        else
            leapfrog_step(x, v, h, field, q);
        const double s = s_begin + k * h;
        if (!finite(x) || !finite(v))
            throw NumericFailure("integrate_worldline: non-finite state", s);
        samples.push_back({s, x, v});
    }
    return Trajectory(std::move(samples), q);
}

double gamma_dot_sq_drift(const Trajectory& traj)
{
    const double ref = minkowski_square(traj.samples().front().gamma_dot);
    double worst = 0.0;
    for (const auto& p : traj.samples())
        worst = std::max(worst, std::abs(minkowski_square(p.gamma_dot) - ref));
    return worst;
}

double EffectiveMass::m() const
{
    if (kind != MassKind::timelike)
        throw DomainError("effective mass is defined only for timelike trajectories");
    return std::sqrt(m_squared);
}

EffectiveMass effective_mass(const Trajectory& traj)
{
    if (traj.size() == 0)
        throw DomainError("effective_mass: empty trajectory");
    ExactSum acc, scale;
    for (const auto& p : traj.samples()) {
        acc.add(minkowski_square(p.gamma_dot));
        scale.add(p.gamma_dot.euclidean_norm() * p.gamma_dot.euclidean_norm());
    }
    const double n = static_cast<double>(traj.size());
    EffectiveMass m{acc.value() / n, MassKind::null};
    if (std::abs(m.m_squared) > 1e-14 * scale.value() / n)
        m.kind = m.m_squared > 0 ? MassKind::timelike : MassKind::tachyonic;
    return m;
}

std::string to_string(MassKind k)
{
    switch (k) {
    case MassKind::timelike:
        return "timelike";
    case MassKind::tachyonic:
        return "tachyonic";
    default:
        return "null";
    }
}

Trajectory apply_scaling(const Trajectory& traj, double lambda)
{
    if (!(lambda > 0.0))
        throw DomainError("apply_scaling: lambda must be positive");
    std::vector<TrajectorySample> out;
    out.reserve(traj.size());
    for (const auto& p : traj.samples())
        out.push_back({lambda * lambda * p.s, lambda * p.gamma, (1.0 / lambda) * p.gamma_dot});
    return Trajectory(std::move(out), traj.q());
}

Trajectory charge_conjugate(const Trajectory& traj)
{
    std::vector<TrajectorySample> out;
    out.reserve(traj.size());
    for (auto it = traj.samples().rbegin(); it != traj.samples().rend(); ++it)
        out.push_back({-it->s, it->gamma, -it->gamma_dot});
    return Trajectory(std::move(out), traj.q());
}

EomResidual eom_residual(const Trajectory& traj, const FieldProvider& field, double q)
{
    const auto& p = traj.samples();
    if (p.size() < 5)
        throw DomainError("eom_residual: need at least 5 samples");
    const double h = p[1].s - p[0].s;
    for (std::size_t k = 1; k < p.size(); ++k)
        if (std::abs((p[k].s - p[k - 1].s) - h) > 1e-9 * std::abs(h))
            throw DomainError("eom_residual: samples must be uniformly spaced");
    EomResidual r;
    double scale = 0.0;
    for (std::size_t k = 2; k + 2 < p.size(); ++k) {
        const FourVector a_fd = (1.0 / (12.0 * h)) * (p[k - 2].gamma_dot - 8.0 * p[k - 1].gamma_dot +
                                                      8.0 * p[k + 1].gamma_dot - p[k + 2].gamma_dot);
        const FourVector a = lorentz_rhs(p[k].gamma, p[k].gamma_dot, field, q);
        r.max_abs = std::max(r.max_abs, (a_fd - a).euclidean_norm());
        scale = std::max(scale, a.euclidean_norm());
    }
    r.relative = scale > 0.0 ? r.max_abs / scale : r.max_abs;
    return r;
}

std::vector<double> cumulative_action(const Trajectory& traj, const FieldProvider& field, double q)
{
    if (q != 0.0 && !field.has_potential())
        throw DomainError("cumulative_action: field has no potential");
    static const GaussRule gl = gauss_legendre(6);
    auto lagrangian = [&](double s) {
        const WorldlinePoint w = traj.at(s);
        double L = 0.5 * minkowski_square(w.gamma_dot);
        if (q != 0.0)
            L += q * minkowski_dot(field.A(w.gamma), w.gamma_dot);
        return L;
    };
    const auto& p = traj.samples();
    std::vector<double> I(p.size(), 0.0);
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        const double a = p[k].s, b = p[k + 1].s;
        const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
        double seg = 0.0;
        for (std::size_t i = 0; i < gl.nodes.size(); ++i)
            seg += gl.weights[i] * lagrangian(c + hw * gl.nodes[i]);
        I[k + 1] = I[k] + hw * seg;
    }
    return I;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj)
{
    write_csv_header(os, {"s", "gamma0", "gamma1", "gamma2", "gamma3", "gamma_dot0", "gamma_dot1",
                          "gamma_dot2", "gamma_dot3", "gamma_dot_sq_drift"});
    const double ref = minkowski_square(traj.samples().front().gamma_dot);
    for (const auto& p : traj.samples()) {
        write_csv_row(os, {p.s, p.gamma[0], p.gamma[1], p.gamma[2], p.gamma[3], p.gamma_dot[0],
                           p.gamma_dot[1], p.gamma_dot[2], p.gamma_dot[3],
                           std::abs(minkowski_square(p.gamma_dot) - ref)});
    }
}

} // namespace ecd
