#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ecd/classical.hpp"
#include "ecd/numerics.hpp"
#include "ecd/propagators.hpp"

namespace ecd {

struct EpsilonCalibration
{
    double epsilon = 0.0;
    double N = 0.0;
    double hbar = 1.0;

    // U(eps; sigma) = theta(sigma - eps) - theta(-sigma - eps)
    double window(double sigma) const;
};

// N = -1 / (2 pi^2 hbar^2 eps); the hbar = 1 value is -1/(2 pi^2 eps).
EpsilonCalibration calibrate(double epsilon, double hbar = 1.0);

enum class AnsatzKind { plane_phase, action_phase, tabulated };

// phi(gamma_s, s) as a function of s.
struct BoundaryAnsatz
{
    std::function<Complex(double)> value;
    AnsatzKind kind = AnsatzKind::tabulated;

    Complex operator()(double s) const { return value(s); }
};

// C exp(i u^2 s / (2 hbar))
BoundaryAnsatz plane_phase_ansatz(Complex C, const FourVector& u, double hbar = 1.0);
// C exp(i I_gamma(s) / hbar), I_gamma the cumulative action from the first sample.
BoundaryAnsatz action_phase_ansatz(const Trajectory& traj, const FieldProvider& field, double q, Complex C,
                                   double hbar);
// Linear interpolation of sampled values; s must be increasing.
BoundaryAnsatz tabulated_ansatz(std::vector<double> s, std::vector<Complex> values);

struct EcdPair
{
    Trajectory trajectory;
    BoundaryAnsatz ansatz;
    PropagatorSpec propagator;
    EpsilonCalibration calibration;
    double s_max = 1e3; // truncation of |s - s'|
    QuadOptions quad{};
};

// Straight trajectory gamma = u s covering [s_lo - s_max, s_hi + s_max], plane-phase
// ansatz with C = c0 / eps, free propagator.
EcdPair free_pair(const FourVector& u, double c0, double epsilon, double s_lo, double s_hi, double s_max);

struct PhiResult
{
    Complex value;
    double error = 0.0;      // quadrature estimate
    double tail_bound = 0.0; // truncated |s - s'| > s_max, free-integrand estimate
    int panels = 0;
};

// (i/N) int ds' G(x, gamma_s'; s - s') phi(gamma_s', s') U(eps; s - s')
// Each half-line is integrated in t = 1/|s - s'| over [1/s_max, 1/eps].
PhiResult phi_eval(const EcdPair& pair, const FourVector& x, double s);

// (-C / (2 pi^2 N)) exp(i (u.xi + u^2 s/2)) sinc(xi^2 / (2 eps)) / eps, xi = x - u s
Complex free_phi_closed_form(const FourVector& x, double s, const FourVector& u, Complex C, double epsilon);

struct ConsistencyReport
{
    double residual = 0.0;   // max over samples
    double tail_bound = 0.0; // max over samples
    double quad_error = 0.0; // max over samples, relative
    std::vector<double> s;
    std::vector<double> residuals;
};

// max_s |phi_eval(gamma_s, s) - ansatz(s)| / |ansatz(s)| (absolute where |ansatz| < 1e-12)
ConsistencyReport consistency_residual(const EcdPair& pair, const std::vector<double>& s_samples);

// Re[d_mu phi phi*] at (gamma, s) by central differences.
FourVector surfing_residual(const WaveFn& phi, const FourVector& gamma, double s, double h);

// max_mu |d_mu phi phi* - i k_mu |phi|^2| / |phi|^2 by central differences (k lower index).
double orthogonality_error(const WaveFn& phi, const FourVector& gamma, double s, double h, const FourVector& k);

using DensityFn = std::function<double(const FourVector&, double)>;
DensityFn density_of(const WaveFn& phi);

struct GuidingOptions
{
    double h = 1e-2;           // spatial stencil
    double h_s = 1e-2;         // s stencil
    double kappa_max = 1e8;    // condition number threshold
    double hessian_drift = 0.25; // max relative change of H between h and h/2
};

struct GuidingState
{
    double s = 0.0;
    FourVector gamma;
    FourVector gamma_dot;
    double condition = 1.0;
    bool violent = false;
    std::string diagnosis;
};

struct GuidingVelocity
{
    FourVector velocity;
    double condition = 1.0;
    bool violent = false;
    std::string diagnosis;
};

// gamma_dot = -H^-1 f with H the Hessian of rho and f = d_s d rho, both
// Richardson-extrapolated. Flags rather than throws when H is unusable.
GuidingVelocity guiding_velocity(const DensityFn& rho, const FourVector& x, double s, const GuidingOptions& opt);

// One RK4 step. A violent evaluation halts: the state is returned unchanged with the flag set.
GuidingState guiding_step(const DensityFn& rho, const GuidingState& state, double ds, const GuidingOptions& opt);

// Integrates until s1 or the first violent event.
std::vector<GuidingState> guiding_run(const DensityFn& rho, const FourVector& gamma0, double s0, double s1, double ds,
                                      const GuidingOptions& opt);

struct PhaseGradientReport
{
    double residual = 0.0;       // max |hbar d phi - i p phi| / (|phi| |p|)
    double velocity_error = 0.0; // max |hbar Im d ln phi - qA - gamma_dot| / |gamma_dot|
    double surfing = 0.0;        // max |Re d phi phi*|
    double surfing_bound = 0.0;  // matching |phi| |d phi - i p phi / hbar|
    std::vector<double> s;
    std::vector<double> residuals;
};

// Fourth-order central differences of phi at gamma_s; p_mu = gamma_dot_mu + q A_mu.
PhaseGradientReport classical_phase_gradient_check(const EcdPair& pair, const FieldProvider& field, double q,
                                                   const std::vector<double>& s_samples, double h);

// phi -> lambda^-2 phi(x/lambda, s/lambda^2), gamma -> lambda gamma(s/lambda^2),
// A -> A(x/lambda)/lambda, eps -> lambda^2 eps, N -> N/lambda^2, s_max -> lambda^2 s_max.
EcdPair scale_transform_pair(const EcdPair& pair, double lambda);

} // namespace ecd
