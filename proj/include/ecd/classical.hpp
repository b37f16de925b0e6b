#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "ecd/minkowski.hpp"

namespace ecd {

struct TrajectorySample
{
    double s;
    FourVector gamma;
    FourVector gamma_dot;
};

struct WorldlinePoint
{
    FourVector gamma;
    FourVector gamma_dot;
};

using Worldline = std::function<WorldlinePoint(double s)>;

class Trajectory
{
  public:
    Trajectory() = default;
    Trajectory(std::vector<TrajectorySample> samples, double q);

    const std::vector<TrajectorySample>& samples() const { return samples_; }
    double q() const { return q_; }
    std::size_t size() const { return samples_.size(); }
    double s_min() const { return samples_.front().s; }
    double s_max() const { return samples_.back().s; }

    // Cubic Hermite interpolation on the bracketing segment. The segment is
    // always parametrized from its lower-gamma^0 endpoint, so a reversed copy
    // of the samples interpolates to the same points.
    WorldlinePoint at(double s) const;
    std::size_t segment(double s) const;
    Worldline as_worldline() const;

  private:
    std::vector<TrajectorySample> samples_;
    double q_ = 1.0;
};

// External field. A is optional and given with the index up.
struct FieldProvider
{
    std::function<AntisymTensor(const FourVector&)> F;
    std::function<FourVector(const FourVector&)> A;
    double lambda_F = std::numeric_limits<double>::infinity();

    AntisymTensor operator()(const FourVector& x) const { return F(x); }
    bool has_potential() const { return static_cast<bool>(A); }
};

FieldProvider zero_field();
// Uniform field with potential A_nu = -F_{nu lambda} x^lambda / 2.
FieldProvider constant_field(const AntisymTensor& F);
// Static scalar potential A^0 = V(x), with its spatial gradient.
FieldProvider static_potential(std::function<double(const FourVector&)> V,
                               std::function<std::array<double, 3>(const FourVector&)> grad_V,
                               double lambda_F);
// A^0 = V0 exp(-|x|^2 / w^2), lambda_F = w.
FieldProvider gaussian_potential(double V0, double w);
// F -> lambda^-2 F(x/lambda), A -> lambda^-1 A(x/lambda)
FieldProvider scaled_field(const FieldProvider& field, double lambda);
FieldProvider negated_field(const FieldProvider& field);

enum class IntegratorMethod { rk4, leapfrog };

struct IntegratorConfig
{
    IntegratorMethod method = IntegratorMethod::rk4;
    double step = 1e-3;
    double tolerance = 1e-10;
};

// q F^mu_nu(gamma) gamma_dot^nu
FourVector lorentz_rhs(const FourVector& gamma, const FourVector& gamma_dot,
                       const FieldProvider& field, double q);

Trajectory integrate_worldline(const FourVector& gamma0, const FourVector& gamma_dot0,
                               const FieldProvider& field, double q, double s_begin, double s_end,
                               const IntegratorConfig& cfg);

// max |gamma_dot^2(s) - gamma_dot^2(s_0)| over the samples
double gamma_dot_sq_drift(const Trajectory& traj);

enum class MassKind { timelike, tachyonic, null };

struct EffectiveMass
{
    double m_squared;
    MassKind kind;
    double m() const;
};

EffectiveMass effective_mass(const Trajectory& traj);
std::string to_string(MassKind k);

Trajectory apply_scaling(const Trajectory& traj, double lambda);
Trajectory charge_conjugate(const Trajectory& traj);

struct EomResidual
{
    double max_abs = 0.0;
    double relative = 0.0;
};

// Compares a 4th-order central difference of the gamma_dot samples with the
// Lorentz force. Needs uniformly spaced samples.
EomResidual eom_residual(const Trajectory& traj, const FieldProvider& field, double q);

// Cumulative action int L ds, L = gamma_dot^2/2 + q A(gamma).gamma_dot, at each sample.
std::vector<double> cumulative_action(const Trajectory& traj, const FieldProvider& field, double q);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

} // namespace ecd
