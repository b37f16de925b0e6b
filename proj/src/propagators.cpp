#include "ecd/propagators.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ecd/errors.hpp"
#include "ecd/numerics.hpp"

namespace ecd {

using std::numbers::pi;
using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

namespace {

double sign_of(double s) { return s > 0 ? 1.0 : -1.0; }

void require_nonzero_s(double s, const char* what)
{
    if (s == 0.0)
        throw SingularityError(std::string(what) + ": s = 0");
}

Vec4 to_eigen(const FourVector& v) { return {v[0], v[1], v[2], v[3]}; }
FourVector to_four(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

Matrix4 from_eigen(const Mat4& m)
{
    Matrix4 out{};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            out[a][b] = m(a, b);
    return out;
}

Mat4 mixed_matrix(const AntisymTensor& F, double q)
{
    Mat4 M;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            M(a, b) = q * F.mixed(a, b);
    return M;
}

// exp(Y) and (exp(Y) - 1)/Y from one augmented exponential
std::pair<Mat4, Mat4> exp_phi1(const Mat4& Y)
{
    Eigen::Matrix<double, 8, 8> Z = Eigen::Matrix<double, 8, 8>::Zero();
    Z.topLeftCorner<4, 4>() = Y;
    Z.topRightCorner<4, 4>() = Mat4::Identity();
    const Eigen::Matrix<double, 8, 8> E = Z.exp();
    return {E.topLeftCorner<4, 4>(), E.topRightCorner<4, 4>()};
}

// d^2 I / dx^mu dx'^nu from dv0/dx = K: -g_nu K^nu_mu
Matrix4 hessian_from_velocity_map(const Mat4& K)
{
    Matrix4 H{};
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = 0; nu < 4; ++nu)
            H[mu][nu] = -metric_diag[nu] * K(nu, mu);
    return H;
}

struct ShotResult
{
    FourVector x, v;
    double action;
    std::vector<TrajectorySample> samples;
};

ShotResult shoot(const FieldProvider& field, double q, const FourVector& xp, const FourVector& v0, double s,
                 int steps, bool keep)
{
    const double ds = s / steps;
    const bool coupled = q != 0.0;
    auto lag = [&](const FourVector& x, const FourVector& v) {
        double L = 0.5 * minkowski_square(v);
        if (coupled)
            L += q * minkowski_dot(field.A(x), v);
        return L;
    };
    auto acc = [&](const FourVector& x, const FourVector& v) {
        return coupled ? lorentz_rhs(x, v, field, q) : FourVector{};
    };
    ShotResult r{xp, v0, 0.0, {}};
    if (keep) {
        r.samples.reserve(steps + 1);
        r.samples.push_back({0.0, xp, v0});
    }
    ExactSum I;
    for (int k = 0; k < steps; ++k) {
        const FourVector& x = r.x;
        const FourVector& v = r.v;
        const FourVector k1x = v, k1v = acc(x, v);
        const double k1I = lag(x, v);
        const FourVector x2 = x + 0.5 * ds * k1x, v2 = v + 0.5 * ds * k1v;
        const FourVector k2x = v2, k2v = acc(x2, v2);
        const double k2I = lag(x2, v2);
        const FourVector x3 = x + 0.5 * ds * k2x, v3 = v + 0.5 * ds * k2v;
        const FourVector k3x = v3, k3v = acc(x3, v3);
        const double k3I = lag(x3, v3);
        const FourVector x4 = x + ds * k3x, v4 = v + ds * k3v;
        const FourVector k4x = v4, k4v = acc(x4, v4);
        const double k4I = lag(x4, v4);
        r.x = x + (ds / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        r.v = v + (ds / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        I.add(ds / 6.0 * (k1I + 2.0 * k2I + 2.0 * k3I + k4I));
        for (int a = 0; a < 4; ++a)
            if (!std::isfinite(r.x[a]) || !std::isfinite(r.v[a]))
                throw NoPathError("classical_path_bvp: non-finite state while shooting");
        if (keep)
            r.samples.push_back({(k + 1) * ds, r.x, r.v});
    }
    r.action = I.value();
    return r;
}

Mat4 shooting_jacobian(const FieldProvider& field, double q, const FourVector& xp, const FourVector& v0, double s,
                       int steps)
{
    // large enough that rounding noise stays near 1e-12, the O(d^2) bias is smooth
    const double d = 1e-4 * std::max(1.0, v0.euclidean_norm());
    Mat4 J;
    for (int b = 0; b < 4; ++b) {
        const FourVector e = d * unit_vector(b);
        const FourVector fp = shoot(field, q, xp, v0 + e, s, steps, false).x;
        const FourVector fm = shoot(field, q, xp, v0 - e, s, steps, false).x;
        for (int a = 0; a < 4; ++a)
            J(a, b) = (fp[a] - fm[a]) / (2 * d);
    }
    return J;
}

} // namespace

Complex free_propagator(const FourVector& x, const FourVector& xp, double s, double hbar)
{
    require_nonzero_s(s, "free_propagator");
    const double pre = sign_of(s) / ((2 * pi * hbar) * (2 * pi * hbar) * s * s);
    const double phase = minkowski_square(x - xp) / (2 * hbar * s);
    return Complex(0.0, pre) * std::polar(1.0, phase);
}

Complex short_s_propagator(const FourVector& x, const FourVector& xp, double s, const VectorFn& A, double q,
                           double hbar)
{
    require_nonzero_s(s, "short_s_propagator");
    const FourVector d = x - xp;
    double phase = minkowski_square(d) / (2 * s);
    if (A)
        phase += q * minkowski_dot(A(x), d);
    const double pre = sign_of(s) / ((2 * pi * hbar) * (2 * pi * hbar) * s * s);
    return Complex(0.0, pre) * std::polar(1.0, phase / hbar);
}

ActionProvider free_action()
{
    ActionProvider I;
    I.action = [](const FourVector& x, const FourVector& xp, double s) {
        require_nonzero_s(s, "free action");
        return minkowski_square(x - xp) / (2 * s);
    };
    I.gradient = [](const FourVector& x, const FourVector& xp, double s) {
        return (1.0 / s) * (x - xp).lowered();
    };
    I.mixed_hessian = [](const FourVector&, const FourVector&, double s) {
        Matrix4 H{};
        for (int a = 0; a < 4; ++a)
            H[a][a] = -metric_diag[a] / s;
        return H;
    };
    return I;
}

ActionProvider constant_field_action(const AntisymTensor& F, double q)
{
    const Mat4 M = mixed_matrix(F, q);
    const FieldProvider field = constant_field(F);
    auto velocity_map = [M](double s) {
        require_nonzero_s(s, "constant-field action");
        const Mat4 J = s * exp_phi1(M * s).second;
        Eigen::FullPivLU<Mat4> lu(J);
        if (!lu.isInvertible())
            throw NoPathError("constant-field action: caustic (shooting map singular)");
        return Mat4(lu.inverse());
    };
    ActionProvider I;
    I.action = [M, field, q, velocity_map](const FourVector& x, const FourVector& xp, double s) {
        const Vec4 v0 = velocity_map(s) * to_eigen(x - xp);
        static const GaussRule rule = gauss_legendre(24);
        ExactSum sum;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            const double sig = 0.5 * s * (1.0 + rule.nodes[k]);
            const auto [E, P] = exp_phi1(M * sig);
            const FourVector v = to_four(E * v0);
            const FourVector pos = xp + to_four(sig * (P * v0));
            sum.add(rule.weights[k] * (0.5 * minkowski_square(v) + q * minkowski_dot(field.A(pos), v)));
        }
        return 0.5 * s * sum.value();
    };
    I.gradient = [M, field, q, velocity_map](const FourVector& x, const FourVector& xp, double s) {
        const Vec4 v0 = velocity_map(s) * to_eigen(x - xp);
        const FourVector v = to_four(exp_phi1(M * s).first * v0);
        return v.lowered() + q * field.A(x).lowered();
    };
    I.mixed_hessian = [velocity_map](const FourVector&, const FourVector&, double s) {
        return hessian_from_velocity_map(velocity_map(s));
    };
    return I;
}

ClassicalPath classical_path_bvp(const FieldProvider& field, const FourVector& xp, const FourVector& x, double s,
                                 double q, const BvpOptions& opt, const std::optional<FourVector>& guess)
{
    require_nonzero_s(s, "classical_path_bvp");
    if (q != 0.0 && !field.has_potential())
        throw DomainError("classical_path_bvp: the action needs the field's potential");
    if (opt.steps < 1 || opt.max_iter < 1)
        throw DomainError("classical_path_bvp: steps and max_iter must be positive");
    FourVector v0 = guess ? *guess : (1.0 / s) * (x - xp);
    const double scale = std::max(1.0, (x - xp).euclidean_norm());
    double miss = 0.0;
    for (int it = 0; it <= opt.max_iter; ++it) {
        const FourVector r = shoot(field, q, xp, v0, s, opt.steps, false).x - x;
        miss = r.euclidean_norm();
        if (miss <= opt.tol * scale) {
            ShotResult fin = shoot(field, q, xp, v0, s, opt.steps, opt.keep_path);
            if (s < 0.0)
                std::reverse(fin.samples.begin(), fin.samples.end());
            ClassicalPath out{opt.keep_path ? Trajectory(std::move(fin.samples), q) : Trajectory{}, fin.action, v0, {},
                              {}, it};
            out.momentum = fin.v.lowered();
            if (q != 0.0)
                out.momentum += q * field.A(fin.x).lowered();
            out.jacobian = from_eigen(shooting_jacobian(field, q, xp, v0, s, opt.steps));
            return out;
        }
        if (it == opt.max_iter)
            break;
        const Mat4 J = shooting_jacobian(field, q, xp, v0, s, opt.steps);
        Eigen::FullPivLU<Mat4> lu(J);
        if (!lu.isInvertible())
            throw NoPathError("classical_path_bvp: singular shooting Jacobian");
        v0 -= to_four(lu.solve(to_eigen(r)));
    }
    throw NoPathError("classical_path_bvp: no convergence, endpoint miss " + std::to_string(miss));
}

ActionProvider bvp_action(const FieldProvider& field, double q, const BvpOptions& opt)
{
    ActionProvider I;
    I.action = [=](const FourVector& x, const FourVector& xp, double s) {
        return classical_path_bvp(field, xp, x, s, q, opt).action;
    };
    I.gradient = [=](const FourVector& x, const FourVector& xp, double s) {
        return classical_path_bvp(field, xp, x, s, q, opt).momentum;
    };
    I.mixed_hessian = [=](const FourVector& x, const FourVector& xp, double s) {
        const ClassicalPath p = classical_path_bvp(field, xp, x, s, q, opt);
        Mat4 J;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                J(a, b) = p.jacobian[a][b];
        return hessian_from_velocity_map(J.inverse());
    };
    return I;
}

double hamilton_jacobi_residual(const FieldProvider& field, double q, const FourVector& xp, const FourVector& x,
                                double s, double h, const BvpOptions& opt)
{
    const ClassicalPath c = classical_path_bvp(field, xp, x, s, q, opt);
    auto I = [&](const FourVector& y, double t) {
        return classical_path_bvp(field, xp, y, t, q, opt, c.v0).action;
    };
    // central differences at h and h/2, Richardson-combined
    auto d1 = [](const std::function<double(double)>& f, double step) {
        const double a = (f(step) - f(-step)) / (2 * step);
        const double b = (f(0.5 * step) - f(-0.5 * step)) / step;
        return (4.0 * b - a) / 3.0;
    };
    const double dsI = d1([&](double t) { return I(x, s + t); }, h);
    const FourVector A = q != 0.0 ? field.A(x).lowered() : FourVector{};
    double kin = 0.0;
    for (int mu = 0; mu < 4; ++mu) {
        const double p = d1([&](double t) { return I(x + t * unit_vector(mu), s); }, h);
        const double k = p - q * A[mu];
        kin += metric_diag[mu] * k * k;
    }
    return std::abs(dsI + 0.5 * kin);
}

Matrix4 mixed_hessian_fd(const ActionProvider& I, const FourVector& x, const FourVector& xp, double s, double h)
{
    auto D = [&](double step) {
        Matrix4 H{};
        for (int mu = 0; mu < 4; ++mu) {
            const FourVector a = step * unit_vector(mu);
            for (int nu = 0; nu < 4; ++nu) {
                const FourVector b = step * unit_vector(nu);
                const double v = I.action(x + a, xp + b, s) - I.action(x + a, xp - b, s) -
                                 I.action(x - a, xp + b, s) + I.action(x - a, xp - b, s);
                H[mu][nu] = v / (4 * step * step);
            }
        }
        return H;
    };
    const Matrix4 H1 = D(h), H2 = D(0.5 * h);
    Matrix4 R{};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            R[a][b] = (4.0 * H2[a][b] - H1[a][b]) / 3.0;
    return R;
}

double van_vleck(const ActionProvider& I, const FourVector& x, const FourVector& xp, double s, double h)
{
    require_nonzero_s(s, "van_vleck");
    const Matrix4 H = I.mixed_hessian ? I.mixed_hessian(x, xp, s) : mixed_hessian_fd(I, x, xp, s, h);
    Mat4 m;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            m(a, b) = -H[a][b];
    const double det = m.determinant();
    if (!std::isfinite(det))
        throw NoPathError("van_vleck: non-finite mixed Hessian");
    return std::sqrt(std::abs(det));
}

Complex van_vleck_g(Complex y)
{
    if (std::abs(y) < 1e-3) {
        const Complex y2 = y * y;
        return -1.0 / (1.0 + y2 / 12.0 + y2 * y2 / 360.0);
    }
    if (std::abs(y.real()) > 700.0)
        throw RangeError("van_vleck_g: cosh overflow");
    const Complex den = 2.0 - 2.0 * std::cosh(y);
    if (std::abs(den) < 1e-300)
        throw SingularityError("van_vleck_g: caustic, 2 - 2 cosh y = 0");
    return y * y / den;
}

double constant_field_van_vleck(const AntisymTensor& F, double s, double q)
{
    require_nonzero_s(s, "constant_field_van_vleck");
    const Mat4 Y = mixed_matrix(F, q) * s;
    Eigen::EigenSolver<Mat4> es(Y, false);
    Complex det = 1.0;
    for (int k = 0; k < 4; ++k)
        det *= van_vleck_g(es.eigenvalues()[k]);
    return std::pow(std::abs(det), 0.25) / (s * s);
}

PathSet bvp_path_set(const FieldProvider& field, double q, const BvpOptions& opt)
{
    BvpOptions o = opt;
    o.keep_path = false;
    return [=](const FourVector& x, const FourVector& xp, double s) {
        const ClassicalPath p = classical_path_bvp(field, xp, x, s, q, o);
        Mat4 J;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                J(a, b) = p.jacobian[a][b];
        const double det = J.determinant();
        if (det == 0.0 || !std::isfinite(det))
            throw NoPathError("bvp_path_set: caustic (singular shooting Jacobian)");
        return std::vector<PathTerm>{{p.action, Complex(1.0 / std::sqrt(std::abs(det)), 0.0)}};
    };
}

Complex semiclassical_propagator(const std::vector<PathTerm>& paths, double s, double hbar)
{
    require_nonzero_s(s, "semiclassical_propagator");
    if (paths.empty())
        throw DomainError("semiclassical_propagator: empty path set");
    Complex sum = 0.0;
    for (const auto& p : paths)
        sum += p.amplitude * std::polar(1.0, p.action / hbar);
    const double pre = sign_of(s) / ((2 * pi * hbar) * (2 * pi * hbar));
    return Complex(0.0, pre) * sum;
}

std::vector<PathTerm> delta_potential_paths(const FourVector& x, const FourVector& xp, double s, double hbar)
{
    require_nonzero_s(s, "delta_potential_propagator");
    const double r = x.spatial_norm(), rp = xp.spatial_norm();
    if (r == 0.0 || rp == 0.0)
        throw SingularityError("delta_potential_propagator: point at the spatial origin");
    const double dt = x[0] - xp[0];
    return {{minkowski_square(x - xp) / (2 * s), Complex(1.0 / (s * s), 0.0)},
            {(dt * dt - (r + rp) * (r + rp)) / (2 * s), Complex(0.0, -hbar / (r * rp * s))}};
}

Complex delta_potential_propagator(const FourVector& x, const FourVector& xp, double s, double hbar)
{
    return semiclassical_propagator(delta_potential_paths(x, xp, s, hbar), s, hbar);
}

Complex evaluate(const PropagatorSpec& spec, const FourVector& x, const FourVector& xp, double s)
{
    switch (spec.kind) {
    case PropagatorKind::free:
        return free_propagator(x, xp, s, spec.hbar);
    case PropagatorKind::short_s:
        if (!spec.A)
            throw DomainError("short-s propagator needs A");
        return short_s_propagator(x, xp, s, spec.A, spec.q, spec.hbar);
    case PropagatorKind::semiclassical:
        if (!spec.paths)
            throw DomainError("semiclassical propagator needs a path set");
        return semiclassical_propagator(spec.paths(x, xp, s), s, spec.hbar);
    case PropagatorKind::constant_field: {
        const ActionProvider I = constant_field_action(spec.F, spec.q);
        const PathTerm t{I.action(x, xp, s), constant_field_van_vleck(spec.F, s, spec.q)};
        return semiclassical_propagator({t}, s, spec.hbar);
    }
    case PropagatorKind::delta_potential:
        return delta_potential_propagator(x, xp, s, spec.hbar);
    }
    throw DomainError("unknown propagator kind");
}

Complex gauge_transform_propagator(Complex G, const ScalarFn& alpha, const FourVector& x, const FourVector& xp,
                                   double q, double hbar)
{
    return G * std::polar(1.0, q * (alpha(x) - alpha(xp)) / hbar);
}

double schrodinger_residual(const WaveFn& phi, const VectorFn& A, double q, double hbar, const FourVector& x,
                            double s, double h)
{
    const Complex I(0.0, 1.0);
    const Complex p0 = phi(x, s);
    const Complex ds = (phi(x, s + h) - phi(x, s - h)) / (2 * h);
    Complex box = 0.0, adot = 0.0;
    double divA = 0.0, A2 = 0.0;
    const FourVector a = A ? A(x) : FourVector{};
    for (int mu = 0; mu < 4; ++mu) {
        const FourVector e = h * unit_vector(mu);
        const Complex pp = phi(x + e, s), pm = phi(x - e, s);
        box += metric_diag[mu] * (pp - 2.0 * p0 + pm) / (h * h);
        if (A) {
            adot += a[mu] * (pp - pm) / (2 * h);
            divA += (A(x + e)[mu] - A(x - e)[mu]) / (2 * h);
            A2 += metric_diag[mu] * a[mu] * a[mu];
        }
    }
    const Complex DD = hbar * hbar * box - I * q * hbar * (divA * p0 + 2.0 * adot) - q * q * A2 * p0;
    return std::abs(I * hbar * ds + 0.5 * DD);
}

} // namespace ecd
