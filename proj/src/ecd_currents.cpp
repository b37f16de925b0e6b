#include "ecd/ecd_currents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ecd/errors.hpp"
#include "ecd/numerics.hpp"

namespace ecd {

using std::numbers::pi;

PairSource source_of(const EcdPair& pair)
{
    PairSource src;
    src.phi = [pair](const FourVector& x, double s) { return phi_eval(pair, x, s).value; };
    src.trajectory = pair.trajectory;
    src.q = pair.trajectory.q();
    src.hbar = pair.propagator.hbar;
    src.calibration = pair.calibration;
    return src;
}

PairSource free_source(const FourVector& u, Complex C, double epsilon, double q, double s_lo, double s_hi)
{
    if (!(s_hi > s_lo))
        throw DomainError("free_source: empty s-range");
    const int n = 64;
    std::vector<TrajectorySample> samples;
    for (int k = 0; k <= n; ++k) {
        const double s = k == n ? s_hi : s_lo + (s_hi - s_lo) * k / n;
        samples.push_back({s, s * u, u});
    }
    PairSource src;
    src.phi = [u, C, epsilon](const FourVector& x, double s) { return free_phi_closed_form(x, s, u, C, epsilon); };
    src.trajectory = Trajectory(std::move(samples), q);
    src.q = q;
    src.hbar = 1.0;
    src.calibration = calibrate(epsilon);
    return src;
}

PairSource scale_source(const PairSource& src, double lambda)
{
    if (!(lambda > 0.0))
        throw DomainError("scale_source: lambda must be positive");
    const double l2 = lambda * lambda;
    PairSource out = src;
    const WaveFn phi = src.phi;
    out.phi = [phi, lambda, l2](const FourVector& x, double s) { return phi((1.0 / lambda) * x, s / l2) / l2; };
    out.trajectory = apply_scaling(src.trajectory, lambda);
    out.calibration = calibrate(l2 * src.calibration.epsilon, src.calibration.hbar);
    return out;
}

PairSource conjugate_source(const PairSource& src)
{
    PairSource out = src;
    const WaveFn phi = src.phi;
    out.phi = [phi](const FourVector& x, double s) { return std::conj(phi(x, -s)); };
    out.trajectory = charge_conjugate(src.trajectory);
    return out;
}

namespace {

struct Jet
{
    Complex phi;
    std::array<Complex, 4> D; // D^mu phi, upper index
    Complex ds;               // d_s phi
};

Jet jet(const PairSource& src, const VectorFn& A, const FourVector& x, double s, const CurrentOptions& opt,
        bool need_ds)
{
    Jet j;
    j.phi = src.phi(x, s);
    const FourVector a = A ? A(x) : FourVector{};
    for (int mu = 0; mu < 4; ++mu) {
        const FourVector e = opt.h * unit_vector(mu);
        const Complex d = (src.phi(x + e, s) - src.phi(x - e, s)) / (2 * opt.h);
        j.D[mu] = metric_diag[mu] * src.hbar * d - Complex(0.0, src.q * a[mu]) * j.phi;
    }
    j.ds = need_ds ? (src.phi(x, s + opt.h_s) - src.phi(x, s - opt.h_s)) / (2 * opt.h_s) : Complex(0.0);
    return j;
}

std::array<double, 2> s_window(const PairSource& src, const FourVector& x, const CurrentOptions& opt)
{
    if (opt.window)
        return *opt.window;
    const double c = time_crossing(src.trajectory, x[0]).s;
    return {c - opt.half_width, c + opt.half_width};
}

std::vector<double> s_breaks(const PairSource& src, const FourVector& x, const CurrentOptions& opt)
{
    std::vector<double> out;
    if (!opt.light_cone_breaks)
        return out;
    try {
        out.push_back(retarded_root(x, src.trajectory).s);
    } catch (const CoverageError&) {
    }
    try {
        out.push_back(advanced_root(x, src.trajectory).s);
    } catch (const CoverageError&) {
    }
    return out;
}

std::vector<double> integrate_s(const PairSource& src, const FourVector& x, const CurrentOptions& opt,
                                std::size_t n, const std::function<void(double, double*)>& f, const char* what)
{
    const auto w = s_window(src, x, opt);
    const VecQuadResult r = integrate_gk_vec(f, n, w[0], w[1], s_breaks(src, x, opt), opt.quad);
    if (!r.converged)
        throw AccuracyError(std::string(what) + ": quadrature budget exceeded", 0.0);
    return r.value;
}

// flat index of the upper triangle (nu <= mu)
constexpr int tri(int nu, int mu) { return nu * 4 - nu * (nu - 1) / 2 + (mu - nu); }

} // namespace

FourVector electric_current_at(const PairSource& src, const VectorFn& A, const FourVector& x,
                               const CurrentOptions& opt)
{
    if (src.q == 0.0)
        return {};
    const auto v = integrate_s(src, x, opt, 4, [&](double s, double* out) {
        const Jet j = jet(src, A, x, s, opt, false);
        for (int mu = 0; mu < 4; ++mu)
            out[mu] = src.q * (std::conj(j.phi) * j.D[mu]).imag();
    }, "ecd_electric_current");
    return {v[0], v[1], v[2], v[3]};
}

CurrentField ecd_electric_current(const PairSource& src, const VectorFn& A, const EventGrid& grid,
                                  const CurrentOptions& opt)
{
    return sample_current(grid, "j_ecd", [&](const FourVector& x) { return electric_current_at(src, A, x, opt); });
}

double free_charge_profile(double a)
{
    a = std::abs(a);
    QuadOptions qo;
    qo.rel_tol = 1e-12;
    qo.max_panels = 400000;
    auto sinc2 = [](double z) {
        if (z == 0.0)
            return 1.0;
        const double v = std::sin(z) / z;
        return v * v;
    };
    const double c = a * a;
    // Initial panels of about one oscillation each, so that the |f| scale is not underestimated.
    auto integrate = [&](const std::function<double(double)>& f, double lo, double hi, double phase) {
        const int n = std::max(8, static_cast<int>(phase / pi));
        std::vector<double> br;
        for (int k = 1; k < n; ++k)
            br.push_back(lo + (hi - lo) * k / n);
        const QuadResult r = integrate_gk([&](double t) { return Complex(f(t), 0.0); }, lo, hi, br, qo);
        if (!r.converged)
            throw AccuracyError("free_charge_profile: quadrature budget exceeded", r.error);
        return r.value.real();
    };
    // inside the light cone, t in [0, a]
    const double i1 = a > 0.0 ? integrate([&](double t) { return sinc2(0.5 * (t - a) * (t + a)); }, 0.0, a, c) : 0.0;
    // outside, z = (t^2 - a^2)/2 = w^2 up to Z
    const double Z = 400.0;
    const double i2 = integrate([&](double w) { return sinc2(w * w) * 2.0 * w / std::sqrt(c + 2.0 * w * w); }, 0.0,
                                std::sqrt(Z), 2.0 * Z);
    // beyond Z: sinc^2 / sqrt(c + 2z) = (1 - cos 2z) h(z) / 2 with h = z^-2 (c + 2z)^-1/2
    auto h = [c](double z) { return 1.0 / (z * z * std::sqrt(c + 2.0 * z)); };
    const double dh = -2.0 / (Z * Z * Z * std::sqrt(c + 2.0 * Z)) - 1.0 / (Z * Z * std::pow(c + 2.0 * Z, 1.5));
    // int_Z^inf h, with z = Z / u^2
    const double smooth = integrate_real(
        [&](double u) { return 2.0 * u * u / (Z * std::sqrt(c * u * u + 2.0 * Z)); }, 0.0, 1.0, qo);
    // int_Z^inf cos(2z) h by parts, the next term is O(h'') ~ Z^-4.5
    const double osc = -std::sin(2.0 * Z) * h(Z) / 2.0 - std::cos(2.0 * Z) * dh / 4.0;
    return 2.0 * (i1 + i2 + 0.5 * smooth - 0.5 * osc);
}

double free_charge_j0(double r, const FourVector& u, Complex C, const EpsilonCalibration& cal, double q)
{
    if (!(r > 0.0))
        throw DomainError("free_charge_j0: r must be positive");
    const double u2 = minkowski_square(u);
    if (!(u2 > 0.0))
        throw DomainError("free_charge_j0: u must be timelike");
    if (cal.hbar != 1.0)
        throw DomainError("free_charge_j0: the closed form assumes hbar = 1");
    const FourVector x{0.0, r, 0.0, 0.0};
    const double ux = minkowski_dot(u, x);
    const double rho = std::sqrt(std::max(0.0, ux * ux / u2 - minkowski_square(x)));
    const double eps = cal.epsilon, N = cal.N;
    const double pre = q * std::norm(C) / (4 * std::pow(pi, 4) * N * N * eps * eps);
    return pre * u[0] / std::sqrt(u2) * std::sqrt(eps) * free_charge_profile(rho / std::sqrt(eps));
}

double divergent_coefficient(double q, Complex C, const EpsilonCalibration& cal)
{
    return 2 * pi * q * std::norm(C) / (4 * std::pow(pi, 4) * cal.N * cal.N * cal.epsilon);
}

FourVector light_cone_current(const FourVector& x, const Trajectory& traj,
                              const std::function<double(const LightConeRoot&)>& weight)
{
    FourVector out;
    for (const LightConeRoot& r : {retarded_root(x, traj), advanced_root(x, traj)}) {
        const double d = 2.0 * std::abs(minkowski_dot(r.w.gamma_dot, x - r.w.gamma));
        if (d == 0.0)
            throw SingularityError("light_cone_current: evaluation point on the worldline");
        out += (weight(r) / d) * r.w.gamma_dot;
    }
    return out;
}

RegularizedCurrent subtract_divergent(const CurrentField& j, const Trajectory& traj, double coefficient,
                                      const EpsilonCalibration& cal)
{
    RegularizedCurrent out{j, coefficient, cal.epsilon, {}};
    out.finite.label = j.label + "_finite";
    if (coefficient != 0.0) {
        const CurrentField div = sample_current(j.grid, "j_div", [&](const FourVector& x) {
            return coefficient * light_cone_current(x, traj, [](const LightConeRoot&) { return 1.0; });
        });
        for (std::size_t k = 0; k < j.values.size(); ++k)
            out.finite.values[k] = j.values[k] - div.values[k];
    }
    for (int n = 0; n < j.grid.extent()[0]; ++n)
        out.slice_charges.push_back(grid_charge(out.finite, n));
    return out;
}

FourVector mass_current_bar_at(const PairSource& src, const VectorFn& A, const FourVector& x,
                               const CurrentOptions& opt, int power)
{
    const auto v = integrate_s(src, x, opt, 4, [&](double s, double* out) {
        const Jet j = jet(src, A, x, s, opt, true);
        const double w = power == 0 ? 1.0 : std::pow(s, power);
        for (int mu = 0; mu < 4; ++mu)
            out[mu] = w * (std::conj(j.ds) * j.D[mu]).real();
    }, "mass_current_b");
    return {v[0], v[1], v[2], v[3]};
}

namespace {

void deposit_breve(CurrentField& out, const PairSource& src, const DepositKernel& kernel, int power)
{
    const double w = 2.0 / src.calibration.N;
    deposit_line(out, src.trajectory, kernel, [&](const SliceCrossing& c) {
        const double sp = power == 0 ? 1.0 : std::pow(c.s, power);
        return (sp * w * std::norm(src.phi(c.w.gamma, c.s))) * c.w.gamma_dot;
    });
}

} // namespace

CurrentField mass_current_b(const PairSource& src, const VectorFn& A, const EventGrid& grid,
                            const CurrentOptions& opt)
{
    CurrentField b = sample_current(grid, "b", [&](const FourVector& x) {
        return src.hbar * mass_current_bar_at(src, A, x, opt);
    });
    deposit_breve(b, src, opt.kernel, 0);
    return b;
}

Matrix4 matter_tensor_at(const PairSource& src, const VectorFn& A, const FourVector& x, const CurrentOptions& opt)
{
    const auto v = integrate_s(src, x, opt, 10, [&](double s, double* out) {
        const Jet j = jet(src, A, x, s, opt, true);
        double dd = 0.0;
        for (int mu = 0; mu < 4; ++mu)
            dd += metric_diag[mu] * std::norm(j.D[mu]);
        const double L = -src.hbar * (std::conj(j.phi) * j.ds).imag() - 0.5 * dd;
        for (int nu = 0; nu < 4; ++nu)
            for (int mu = nu; mu < 4; ++mu) {
                const double g = nu == mu ? metric_diag[mu] : 0.0;
                out[tri(nu, mu)] = g * L + (j.D[nu] * std::conj(j.D[mu])).real();
            }
    }, "ecd_energy_momentum");
    Matrix4 m{};
    for (int nu = 0; nu < 4; ++nu)
        for (int mu = nu; mu < 4; ++mu)
            m[nu][mu] = m[mu][nu] = v[tri(nu, mu)];
    return m;
}

TensorField ecd_energy_momentum(const std::vector<PairSource>& pairs, const FieldProvider* field,
                                const EventGrid& grid, const CurrentOptions& opt)
{
    TensorField p = field ? stress_tensor_field(grid, *field) : TensorField(grid, "p", true);
    p.label = "p";
    p.symmetric = true;
    const VectorFn A = field && field->has_potential() ? VectorFn(field->A) : VectorFn{};
    for (const PairSource& src : pairs) {
        std::vector<Matrix4> m(grid.size());
        parallel_for(grid.size(), [&](std::size_t k) { m[k] = matter_tensor_at(src, A, grid.point(k), opt); });
        for (std::size_t k = 0; k < grid.size(); ++k)
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    p.values[k][a][b] += m[k][a][b];
        const double w = 2.0 / src.calibration.N;
        deposit_line_tensor(p, src.trajectory, opt.kernel, [&](const SliceCrossing& c) {
            const double v = w * std::norm(src.phi(c.w.gamma, c.s));
            Matrix4 W{};
            for (int mu = 0; mu < 4; ++mu)
                W[mu][mu] = metric_diag[mu] * v;
            return W;
        });
    }
    return p;
}

CurrentField ecd_dilatation_current(const std::vector<PairSource>& pairs, const FieldProvider* field,
                                    const TensorField& p, const CurrentOptions& opt)
{
    const EventGrid& grid = p.grid;
    CurrentField xi(grid, "xi");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const FourVector xl = grid.point(k).lowered();
        for (int mu = 0; mu < 4; ++mu) {
            double v = 0.0;
            for (int nu = 0; nu < 4; ++nu)
                v += p.values[k][mu][nu] * xl[nu];
            xi.values[k][mu] = v;
        }
    }
    const VectorFn A = field && field->has_potential() ? VectorFn(field->A) : VectorFn{};
    for (const PairSource& src : pairs) {
        // hbar int ds [s B_bar + Re(phi* D phi)]; the second piece is hbar^2 d^mu int |phi|^2 / 2
        CurrentField sb = sample_current(grid, "sB", [&](const FourVector& x) {
            const auto v = integrate_s(src, x, opt, 8, [&](double s, double* out) {
                const Jet j = jet(src, A, x, s, opt, true);
                for (int mu = 0; mu < 4; ++mu) {
                    out[mu] = s * (std::conj(j.ds) * j.D[mu]).real();
                    out[4 + mu] = (std::conj(j.phi) * j.D[mu]).real();
                }
            }, "ecd_dilatation_current");
            return src.hbar * FourVector{v[0] + v[4], v[1] + v[5], v[2] + v[6], v[3] + v[7]};
        });
        deposit_breve(sb, src, opt.kernel, 1);
        for (std::size_t k = 0; k < grid.size(); ++k)
            xi.values[k] += 2.0 * sb.values[k];
    }
    return xi;
}

AuditReport continuity_residual(const CurrentField& j)
{
    AuditReport r;
    r.label = j.label;
    const DivergenceResult d = grid_divergence(j);
    r.max_interior_divergence = d.max_interior;
    const int nt = j.grid.extent()[0];
    for (int n = 0; n < nt; ++n)
        r.slice_charges.push_back(grid_charge(j, n));
    const int lo = nt >= 3 ? 1 : 0, hi = nt >= 3 ? nt - 2 : nt - 1;
    double cmin = std::numeric_limits<double>::infinity(), cmax = -cmin, cabs = 0.0;
    for (int n = lo; n <= hi; ++n) {
        cmin = std::min(cmin, r.slice_charges[n]);
        cmax = std::max(cmax, r.slice_charges[n]);
        cabs = std::max(cabs, std::abs(r.slice_charges[n]));
    }
    r.charge_spread = cmax - cmin;
    r.relative_spread = cabs > 0.0 ? r.charge_spread / cabs : 0.0;
    for (std::size_t k = 0; k < j.values.size(); ++k)
        if (d.interior[k])
            for (int mu = 0; mu < 4; ++mu)
                r.max_abs_component = std::max(r.max_abs_component, std::abs(j.values[k][mu]));
    const auto& sp = j.grid.spacing();
    const double hmin = *std::min_element(sp.begin(), sp.end());
    r.relative_divergence = r.max_abs_component > 0.0 ? r.max_interior_divergence * hmin / r.max_abs_component : 0.0;
    r.metadata["grid_extent"] = j.grid.extent();
    r.metadata["grid_spacing"] = sp;
    r.metadata["interior_slices"] = {lo, hi};
    return r;
}

nlohmann::json to_json(const AuditReport& r)
{
    nlohmann::json j;
    j["label"] = r.label;
    j["slice_charges"] = r.slice_charges;
    j["charge_spread"] = r.charge_spread;
    j["relative_spread"] = r.relative_spread;
    j["max_interior_divergence"] = r.max_interior_divergence;
    j["max_abs_component"] = r.max_abs_component;
    j["relative_divergence"] = r.relative_divergence;
    j["metadata"] = r.metadata;
    return j;
}

namespace {

// D^mu f at y with central differences of step h
std::array<Complex, 4> covariant_gradient(const WaveFn& f, const VectorFn& A, double q, double hbar,
                                          const FourVector& y, double s, double h)
{
    std::array<Complex, 4> D;
    const Complex f0 = f(y, s);
    const FourVector a = A ? A(y) : FourVector{};
    for (int mu = 0; mu < 4; ++mu) {
        const FourVector e = h * unit_vector(mu);
        D[mu] = metric_diag[mu] * hbar * (f(y + e, s) - f(y - e, s)) / (2 * h) - Complex(0.0, q * a[mu]) * f0;
    }
    return D;
}

} // namespace

double unitarity_lemma_residual(const WaveFn& f, const WaveFn& g, const VectorFn& A, double q, double hbar,
                                const FourVector& x, double s, double h)
{
    auto fg = [&](double t) { return f(x, t) * std::conj(g(x, t)); };
    const Complex lhs = (fg(s + h) - fg(s - h)) / (2 * h);
    auto W = [&](const FourVector& y, int mu) {
        const auto Df = covariant_gradient(f, A, q, hbar, y, s, h);
        const auto Dg = covariant_gradient(g, A, q, hbar, y, s, h);
        return Complex(0.0, 0.5) * (Df[mu] * std::conj(g(y, s)) - std::conj(Dg[mu]) * f(y, s));
    };
    Complex rhs = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        const FourVector e = h * unit_vector(mu);
        rhs += (W(x + e, mu) - W(x - e, mu)) / (2 * h);
    }
    return std::abs(lhs - rhs);
}

double s_continuity_residual(const WaveFn& phi, const VectorFn& A, double q, double hbar, const FourVector& x,
                             double s, double h)
{
    const double drho = q * (std::norm(phi(x, s + h)) - std::norm(phi(x, s - h))) / (2 * h);
    double div = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        const FourVector e = h * unit_vector(mu);
        auto J = [&](const FourVector& y) {
            const auto D = covariant_gradient(phi, A, q, hbar, y, s, h);
            return q * (std::conj(phi(y, s)) * D[mu]).imag();
        };
        div += (J(x + e) - J(x - e)) / (2 * h);
    }
    return std::abs(drho + div);
}

} // namespace ecd
