#pragma once

#include <functional>
#include <numbers>
#include <vector>

#include "ecd/classical.hpp"
#include "ecd/grid.hpp"

namespace ecd {

// Normalization of the retarded potential, chosen so that the static charge
// gives q/(4 pi r).
inline constexpr double lw_kappa = 1.0 / (2.0 * std::numbers::pi);

struct LightConeRoot
{
    double s;
    WorldlinePoint w;
};

// Root of (x - gamma_s)^2 = 0 with gamma^0 < x^0 (retarded) or > x^0 (advanced).
// Bisection on the bracketing samples, then a Newton polish.
LightConeRoot retarded_root(const FourVector& x, const Trajectory& traj);
LightConeRoot advanced_root(const FourVector& x, const Trajectory& traj);

FourVector lw_potential(const FourVector& x, const Trajectory& traj, double kappa = lw_kappa);
// Central differences of lw_potential with step h.
AntisymTensor lw_field(const FourVector& x, const Trajectory& traj, double h, double kappa = lw_kappa);

// Theta^{nu mu} = g^{nu mu} F^2 / 4 + F^{nu rho} F_rho^mu
Matrix4 stress_tensor(const AntisymTensor& F);
TensorField stress_tensor_field(const EventGrid& grid, const FieldProvider& field);

enum class KernelKind { nearest, trilinear };

struct DepositKernel
{
    KernelKind kind = KernelKind::nearest;
};

struct SliceCrossing
{
    int slice;
    double s;
    WorldlinePoint w;
};

// One crossing gamma^0(s) = t_n per grid time slice. Throws UnsupportedError
// if gamma^0 is not strictly monotone over the samples.
std::vector<SliceCrossing> slice_crossings(const Trajectory& traj, const EventGrid& grid);
SliceCrossing time_crossing(const Trajectory& traj, double x0);

// Deposits int ds delta^4(x - gamma_s) W(s) as W(s*)/|gamma_dot^0(s*)| on each slice.
void deposit_line(CurrentField& out, const Trajectory& traj, const DepositKernel& kernel,
                  const std::function<FourVector(const SliceCrossing&)>& weight);
void deposit_line_tensor(TensorField& out, const Trajectory& traj, const DepositKernel& kernel,
                         const std::function<Matrix4(const SliceCrossing&)>& weight);

CurrentField deposit_electric_current(const Trajectory& traj, const EventGrid& grid,
                                      const DepositKernel& kernel = {});
CurrentField deposit_mass_squared_current(const Trajectory& traj, const EventGrid& grid,
                                          const DepositKernel& kernel = {});

FourVector mechanical_momentum(const Trajectory& traj, double x0);

// p^{nu mu} = Theta^{nu mu}(F) + sum_k int ds delta^4 gamma_dot^nu gamma_dot^mu
TensorField classical_energy_momentum(const EventGrid& grid, const FieldProvider* field,
                                      const std::vector<Trajectory>& trajs,
                                      const DepositKernel& kernel);

struct AngularMomentumCurrents
{
    std::vector<std::array<int, 2>> pairs; // (nu, rho), nu < rho
    std::vector<CurrentField> currents;    // J^{nu rho, mu}
};
AngularMomentumCurrents angular_momentum_current(const TensorField& p);

// xi^nu = p^{nu mu} x_mu - sum_k int ds delta^4 s gamma_dot^2 gamma_dot^nu
CurrentField dilatation_current(const TensorField& p, const std::vector<Trajectory>& trajs,
                                const DepositKernel& kernel = {KernelKind::trilinear});

// Recomputes D after the origin shift x -> x - a, s_k -> s_k - b_k and returns
// |D' - (D + P.a + sum_k m_k^2 b_k)| / max(|D'|, 1). P.a is the Euclidean
// 3-product of the spatial momentum with a.
double dilatation_shift_check(double D, const FourVector& P, const std::vector<double>& masses2,
                              const std::array<double, 3>& a, const std::vector<double>& b,
                              const std::function<double(const std::array<double, 3>&,
                                                         const std::vector<double>&)>& recompute);

// Trajectory with gamma -> gamma - (0, a) and s -> s - b.
Trajectory shift_origin(const Trajectory& traj, const std::array<double, 3>& a, double b);

} // namespace ecd
