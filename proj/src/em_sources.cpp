#include "ecd/em_sources.hpp"

#include <algorithm>
#include <cmath>

#include "ecd/errors.hpp"
#include "ecd/numerics.hpp"

namespace ecd {

namespace {

// Finds the sample segment on which g changes sign, then bisects with the
// Hermite interpolant. Mirrored sample sets produce mirrored answers.
double bracketed_root(const Trajectory& traj, const std::function<double(const WorldlinePoint&)>& g,
                      const char* what)
{
    const auto& p = traj.samples();
    auto gs = [&](std::size_t k) { return g({p[k].gamma, p[k].gamma_dot}); };
    std::size_t lo = 0, hi = p.size() - 1;
    double glo = gs(lo), ghi = gs(hi);
    if (glo == 0.0)
        return p[lo].s;
    if (ghi == 0.0)
        return p[hi].s;
    if ((glo > 0) == (ghi > 0))
        throw CoverageError(std::string(what) + ": root not bracketed by the trajectory samples");
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        const double gm = gs(mid);
        if (gm == 0.0)
            return p[mid].s;
        if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    double a = p[lo].s, b = p[hi].s;
    for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (m == a || m == b)
            break;
        const double gm = g(traj.at(m));
        if (gm == 0.0)
            return m;
        if ((gm > 0) == (glo > 0))
            a = m;
        else
            b = m;
    }
    return 0.5 * (a + b);
}

LightConeRoot polish_light_cone(const FourVector& x, const Trajectory& traj, double s)
{
    WorldlinePoint w = traj.at(s);
    FourVector d = x - w.gamma;
    const double f = minkowski_square(d);
    const double fp = -2.0 * minkowski_dot(w.gamma_dot, d);
    const double scale = d.euclidean_norm() * d.euclidean_norm();
    if (scale == 0.0 || fp == 0.0)
        throw SingularityError("light-cone root: evaluation point on the worldline");
    if (std::abs(f) > 1e-12 * scale) {
        const double s2 = s - f / fp;
        if (s2 >= traj.s_min() && s2 <= traj.s_max()) {
            const WorldlinePoint w2 = traj.at(s2);
            if (std::abs(minkowski_square(x - w2.gamma)) < std::abs(f)) {
                s = s2;
                w = w2;
            }
        }
    }
    return {s, w};
}

} // namespace

LightConeRoot retarded_root(const FourVector& x, const Trajectory& traj)
{
    auto g = [&](const WorldlinePoint& w) {
        const FourVector d = x - w.gamma;
        return d[0] - d.spatial_norm();
    };
    return polish_light_cone(x, traj, bracketed_root(traj, g, "retarded_root"));
}

LightConeRoot advanced_root(const FourVector& x, const Trajectory& traj)
{
    auto g = [&](const WorldlinePoint& w) {
        const FourVector d = x - w.gamma;
        return -d[0] - d.spatial_norm();
    };
    return polish_light_cone(x, traj, bracketed_root(traj, g, "advanced_root"));
}

FourVector lw_potential(const FourVector& x, const Trajectory& traj, double kappa)
{
    const LightConeRoot r = retarded_root(x, traj);
    const double denom = 2.0 * std::abs(minkowski_dot(r.w.gamma_dot, x - r.w.gamma));
    if (denom == 0.0)
        throw SingularityError("lw_potential: evaluation point on the worldline");
    return (kappa * traj.q() / denom) * r.w.gamma_dot;
}

AntisymTensor lw_field(const FourVector& x, const Trajectory& traj, double h, double kappa)
{
    // dA[mu][nu] = d_mu A_nu (lower nu)
    double dA[4][4];
    for (int mu = 0; mu < 4; ++mu) {
        const FourVector e = h * unit_vector(mu);
        const FourVector ap = lw_potential(x + e, traj, kappa).lowered();
        const FourVector am = lw_potential(x - e, traj, kappa).lowered();
        for (int nu = 0; nu < 4; ++nu)
            dA[mu][nu] = (ap[nu] - am[nu]) / (2.0 * h);
    }
    Matrix4 up{};
    for (int mu = 0; mu < 4; ++mu)
        for (int nu = mu + 1; nu < 4; ++nu)
            up[mu][nu] = metric_diag[mu] * metric_diag[nu] * (dA[mu][nu] - dA[nu][mu]);
    return AntisymTensor::from_upper(up);
}

Matrix4 stress_tensor(const AntisymTensor& F)
{
    const double F2 = F.invariant_FF();
    Matrix4 T{};
    for (int nu = 0; nu < 4; ++nu)
        for (int mu = nu; mu < 4; ++mu) {
            double sum = (nu == mu ? 0.25 * metric_diag[nu] * F2 : 0.0);
            for (int rho = 0; rho < 4; ++rho)
                sum += F(nu, rho) * metric_diag[rho] * F(rho, mu);
            T[nu][mu] = sum;
            T[mu][nu] = sum;
        }
    return T;
}

TensorField stress_tensor_field(const EventGrid& grid, const FieldProvider& field)
{
    TensorField T(grid, "Theta", true);
    parallel_for(grid.size(), [&](std::size_t k) { T.values[k] = stress_tensor(field(grid.point(k))); });
    return T;
}

SliceCrossing time_crossing(const Trajectory& traj, double x0)
{
    auto g = [x0](const WorldlinePoint& w) { return w.gamma[0] - x0; };
    double s = bracketed_root(traj, g, "time_crossing");
    WorldlinePoint w = traj.at(s);
    if (w.gamma[0] != x0 && w.gamma_dot[0] != 0.0) {
        const double s2 = s - (w.gamma[0] - x0) / w.gamma_dot[0];
        if (s2 >= traj.s_min() && s2 <= traj.s_max()) {
            const WorldlinePoint w2 = traj.at(s2);
            if (std::abs(w2.gamma[0] - x0) < std::abs(w.gamma[0] - x0)) {
                s = s2;
                w = w2;
            }
        }
    }
    return {-1, s, w};
}

std::vector<SliceCrossing> slice_crossings(const Trajectory& traj, const EventGrid& grid)
{
    const auto& p = traj.samples();
    if (p.size() < 2)
        throw CoverageError("slice_crossings: need at least two samples");
    const bool up = p[1].gamma[0] > p[0].gamma[0];
    for (std::size_t k = 1; k < p.size(); ++k) {
        const double d = p[k].gamma[0] - p[k - 1].gamma[0];
        if (!(up ? d > 0.0 : d < 0.0))
            throw UnsupportedError("deposit: gamma^0 is not strictly monotone along the trajectory");
    }
    std::vector<SliceCrossing> out;
    for (int n = 0; n < grid.extent()[0]; ++n) {
        SliceCrossing c = time_crossing(traj, grid.slice_time(n));
        c.slice = n;
        out.push_back(c);
    }
    return out;
}

namespace {

template<class Add>
void kernel_visit(const EventGrid& grid, int slice, const FourVector& x, const DepositKernel& kernel,
                  Add&& add)
{
    const auto& o = grid.origin();
    const auto& h = grid.spacing();
    const auto& e = grid.extent();
    if (kernel.kind == KernelKind::nearest) {
        std::array<int, 4> i{slice, 0, 0, 0};
        for (int a = 1; a < 4; ++a) {
            const double f = std::round((x[a] - o[a]) / h[a]);
            if (f < 0 || f > e[a] - 1)
                return;
            i[a] = static_cast<int>(f);
        }
        add(i, 1.0);
        return;
    }
    int i0[4];
    double w1[4];
    for (int a = 1; a < 4; ++a) {
        const double f = (x[a] - o[a]) / h[a];
        const double fl = std::floor(f);
        i0[a] = static_cast<int>(fl);
        w1[a] = f - fl;
    }
    for (int dx = 0; dx < 2; ++dx)
        for (int dy = 0; dy < 2; ++dy)
            for (int dz = 0; dz < 2; ++dz) {
                const std::array<int, 4> i{slice, i0[1] + dx, i0[2] + dy, i0[3] + dz};
                bool inside = true;
                for (int a = 1; a < 4; ++a)
                    if (i[a] < 0 || i[a] > e[a] - 1)
                        inside = false;
                if (!inside)
                    continue;
                const double w = (dx ? w1[1] : 1.0 - w1[1]) * (dy ? w1[2] : 1.0 - w1[2]) *
                                 (dz ? w1[3] : 1.0 - w1[3]);
                add(i, w);
            }
}

} // namespace

void deposit_line(CurrentField& out, const Trajectory& traj, const DepositKernel& kernel,
                  const std::function<FourVector(const SliceCrossing&)>& weight)
{
    const double vol = out.grid.cell_volume();
    for (const auto& c : slice_crossings(traj, out.grid)) {
        const double g0 = std::abs(c.w.gamma_dot[0]);
        if (g0 == 0.0)
            throw SingularityError("deposit: gamma_dot^0 vanishes at a slice crossing");
        const FourVector W = weight(c);
        kernel_visit(out.grid, c.slice, c.w.gamma, kernel, [&](const std::array<int, 4>& i, double w) {
            FourVector& v = out.at(i);
            for (int mu = 0; mu < 4; ++mu)
                v[mu] += (w * W[mu] / g0) / vol;
        });
    }
}

void deposit_line_tensor(TensorField& out, const Trajectory& traj, const DepositKernel& kernel,
                         const std::function<Matrix4(const SliceCrossing&)>& weight)
{
    const double vol = out.grid.cell_volume();
    for (const auto& c : slice_crossings(traj, out.grid)) {
        const double g0 = std::abs(c.w.gamma_dot[0]);
        if (g0 == 0.0)
            throw SingularityError("deposit: gamma_dot^0 vanishes at a slice crossing");
        const Matrix4 W = weight(c);
        kernel_visit(out.grid, c.slice, c.w.gamma, kernel, [&](const std::array<int, 4>& i, double w) {
            Matrix4& T = out.at(i);
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    T[a][b] += (w * W[a][b] / g0) / vol;
        });
    }
}

CurrentField deposit_electric_current(const Trajectory& traj, const EventGrid& grid,
                                      const DepositKernel& kernel)
{
    CurrentField j(grid, "j_electric");
    const double q = traj.q();
    deposit_line(j, traj, kernel, [q](const SliceCrossing& c) { return q * c.w.gamma_dot; });
    return j;
}

CurrentField deposit_mass_squared_current(const Trajectory& traj, const EventGrid& grid,
                                          const DepositKernel& kernel)
{
    CurrentField b(grid, "b_mass_squared");
    deposit_line(b, traj, kernel, [](const SliceCrossing& c) {
        return minkowski_square(c.w.gamma_dot) * c.w.gamma_dot;
    });
    return b;
}

FourVector mechanical_momentum(const Trajectory& traj, double x0)
{
    const SliceCrossing c = time_crossing(traj, x0);
    const double sg = c.w.gamma_dot[0] > 0 ? 1.0 : (c.w.gamma_dot[0] < 0 ? -1.0 : 0.0);
    return sg * c.w.gamma_dot;
}

TensorField classical_energy_momentum(const EventGrid& grid, const FieldProvider* field,
                                      const std::vector<Trajectory>& trajs,
                                      const DepositKernel& kernel)
{
    TensorField p = field ? stress_tensor_field(grid, *field) : TensorField(grid, "p", true);
    p.label = "p";
    for (const auto& t : trajs)
        deposit_line_tensor(p, t, kernel, [](const SliceCrossing& c) {
            Matrix4 W{};
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b)
                    W[a][b] = c.w.gamma_dot[a] * c.w.gamma_dot[b];
            return W;
        });
    return p;
}

AngularMomentumCurrents angular_momentum_current(const TensorField& p)
{
    AngularMomentumCurrents out;
    const EventGrid& g = p.grid;
    for (int nu = 0; nu < 4; ++nu)
        for (int rho = nu + 1; rho < 4; ++rho) {
            out.pairs.push_back({nu, rho});
            CurrentField J(g, "J^{" + std::to_string(nu) + std::to_string(rho) + ",mu}");
            for (std::size_t k = 0; k < g.size(); ++k) {
                const FourVector x = g.point(k);
                const Matrix4& P = p.values[k];
                for (int mu = 0; mu < 4; ++mu)
                    J.values[k][mu] = P[mu][nu] * x[rho] - P[mu][rho] * x[nu];
            }
            out.currents.push_back(std::move(J));
        }
    return out;
}

CurrentField dilatation_current(const TensorField& p, const std::vector<Trajectory>& trajs,
                                const DepositKernel& kernel)
{
    const EventGrid& g = p.grid;
    CurrentField xi(g, "xi");
    for (std::size_t k = 0; k < g.size(); ++k) {
        const FourVector xl = g.point(k).lowered();
        for (int nu = 0; nu < 4; ++nu) {
            double sum = 0.0;
            for (int mu = 0; mu < 4; ++mu)
                sum += p.values[k][nu][mu] * xl[mu];
            xi.values[k][nu] = sum;
        }
    }
    for (const auto& t : trajs)
        deposit_line(xi, t, kernel, [](const SliceCrossing& c) {
            return (-c.s * minkowski_square(c.w.gamma_dot)) * c.w.gamma_dot;
        });
    return xi;
}

double dilatation_shift_check(double D, const FourVector& P, const std::vector<double>& masses2,
                              const std::array<double, 3>& a, const std::vector<double>& b,
                              const std::function<double(const std::array<double, 3>&,
                                                         const std::vector<double>&)>& recompute)
{
    if (masses2.size() != b.size())
        throw DomainError("dilatation_shift_check: masses2 and b lengths differ");
    double predicted = D + P[1] * a[0] + P[2] * a[1] + P[3] * a[2];
    for (std::size_t k = 0; k < b.size(); ++k)
        predicted += masses2[k] * b[k];
    const double Dp = recompute(a, b);
    return std::abs(Dp - predicted) / std::max(std::abs(Dp), 1.0);
}

Trajectory shift_origin(const Trajectory& traj, const std::array<double, 3>& a, double b)
{
    std::vector<TrajectorySample> out;
    out.reserve(traj.size());
    const FourVector shift{0.0, a[0], a[1], a[2]};
    for (const auto& p : traj.samples())
        out.push_back({p.s - b, p.gamma - shift, p.gamma_dot});
    return Trajectory(std::move(out), traj.q());
}

} // namespace ecd
