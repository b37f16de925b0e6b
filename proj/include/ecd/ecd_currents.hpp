#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecd/ecd_core.hpp"
#include "ecd/em_sources.hpp"
#include "ecd/grid.hpp"

namespace ecd {

// A phi evaluator together with the worldline it surfs on.
struct PairSource
{
    WaveFn phi;
    Trajectory trajectory;
    double q = 1.0;
    double hbar = 1.0;
    EpsilonCalibration calibration;
};

// phi from phi_eval; expensive, one s-quadrature per value.
PairSource source_of(const EcdPair& pair);
// The closed-form free solution on gamma = u s (hbar = 1, s_max -> infinity).
PairSource free_source(const FourVector& u, Complex C, double epsilon, double q, double s_lo, double s_hi);
// phi -> lambda^-2 phi(x/lambda, s/lambda^2), gamma -> lambda gamma(s/lambda^2), eps -> lambda^2 eps
PairSource scale_source(const PairSource& src, double lambda);
// phi -> phi*(x, -s), gamma -> gamma(-s)
PairSource conjugate_source(const PairSource& src);

struct CurrentOptions
{
    // s-window: [s* - half_width, s* + half_width] around the crossing gamma^0(s*) = x^0,
    // or the fixed window when given.
    double half_width = 20.0;
    std::optional<std::array<double, 2>> window;
    double h = 1e-4;   // spatial stencil of D phi
    double h_s = 1e-4; // s stencil
    QuadOptions quad{1e-9, 1e-300, 20000};
    bool light_cone_breaks = true; // split the s-quadrature at the light-cone roots
    DepositKernel kernel{};
};

// q int ds Im[phi* D^mu phi], D^mu = hbar d^mu - i q A^mu. Empty A means A = 0.
FourVector electric_current_at(const PairSource& src, const VectorFn& A, const FourVector& x,
                               const CurrentOptions& opt);
CurrentField ecd_electric_current(const PairSource& src, const VectorFn& A, const EventGrid& grid,
                                  const CurrentOptions& opt);

// int dt sinc^2((t^2 - a^2)/2) over the real line
double free_charge_profile(double a);
// j^0 of the free solution at the event (0, r, 0, 0).
double free_charge_j0(double r, const FourVector& u, Complex C, const EpsilonCalibration& cal, double q = 1.0);
// Weight of the light-cone piece: 2 pi q |C|^2 / (4 pi^4 N^2 eps).
double divergent_coefficient(double q, Complex C, const EpsilonCalibration& cal);

// sum over the retarded and advanced roots of (x - gamma_s)^2 = 0 of
// weight(root) gamma_dot / (2 |gamma_dot.(x - gamma)|)
FourVector light_cone_current(const FourVector& x, const Trajectory& traj,
                              const std::function<double(const LightConeRoot&)>& weight);

struct RegularizedCurrent
{
    CurrentField finite;
    double divergent_coefficient = 0.0;
    double epsilon = 0.0;
    std::vector<double> slice_charges; // of the finite part
};

RegularizedCurrent subtract_divergent(const CurrentField& j, const Trajectory& traj, double coefficient,
                                      const EpsilonCalibration& cal);

// int ds s^power Re[d_s phi* D^mu phi]
FourVector mass_current_bar_at(const PairSource& src, const VectorFn& A, const FourVector& x,
                               const CurrentOptions& opt, int power = 0);
// b = hbar b_bar + b_breve, b_breve deposited with weight (2/N) |phi(gamma_s, s)|^2 gamma_dot.
CurrentField mass_current_b(const PairSource& src, const VectorFn& A, const EventGrid& grid,
                            const CurrentOptions& opt);

// m^{nu mu}(x) without the trajectory-supported term:
// int ds [g^{nu mu} L_m + Re(D^nu phi (D^mu phi)*)], L_m = -hbar Im(phi* d_s phi) - (D phi)*.D phi / 2.
// This sign makes d_nu m^{nu mu} + int ds d_s Im(phi* D^mu phi) = 0 for solutions.
Matrix4 matter_tensor_at(const PairSource& src, const VectorFn& A, const FourVector& x, const CurrentOptions& opt);

// Theta(F) + sum_k m_k, with g (2/N) |phi|^2 deposited on each worldline.
TensorField ecd_energy_momentum(const std::vector<PairSource>& pairs, const FieldProvider* field,
                                const EventGrid& grid, const CurrentOptions& opt);

// xi^mu = p^{mu nu} x_nu + sum_k 2 int ds [s (hbar B_bar + B_breve) + hbar Re(phi* D^mu phi)]
// The last term is hbar^2 d^mu int ds |phi|^2; without it and with the other sign on the
// s-weighted term the current is not conserved for exact solutions.
CurrentField ecd_dilatation_current(const std::vector<PairSource>& pairs, const FieldProvider* field,
                                    const TensorField& p, const CurrentOptions& opt);

struct AuditReport
{
    std::string label;
    std::vector<double> slice_charges;
    double charge_spread = 0.0;          // max - min over interior slices
    double relative_spread = 0.0;        // spread / max |charge|
    double max_interior_divergence = 0.0;
    double max_abs_component = 0.0;      // scale of the audited field
    double relative_divergence = 0.0;    // divergence * min spacing / scale
    nlohmann::json metadata = nlohmann::json::object();
};

AuditReport continuity_residual(const CurrentField& j);
nlohmann::json to_json(const AuditReport& r);

// |d_s(f g*) - d_mu[(i/2)(D^mu f g* - (D^mu g)* f)]| by nested central differences.
double unitarity_lemma_residual(const WaveFn& f, const WaveFn& g, const VectorFn& A, double q, double hbar,
                                const FourVector& x, double s, double h);
// |d_s rho + d_mu J^mu|, rho = q |phi|^2, J = q Im phi* D phi
double s_continuity_residual(const WaveFn& phi, const VectorFn& A, double q, double hbar, const FourVector& x,
                             double s, double h);

} // namespace ecd
