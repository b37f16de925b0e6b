#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ecd/classical.hpp"
#include "ecd/minkowski.hpp"

namespace ecd {

using ScalarFn = std::function<double(const FourVector&)>;
using VectorFn = std::function<FourVector(const FourVector&)>;
using WaveFn = std::function<Complex(const FourVector&, double)>;

// i sign(s) / (2 pi hbar)^2 * exp(i (x - x')^2 / (2 hbar s)) / s^2
Complex free_propagator(const FourVector& x, const FourVector& xp, double s, double hbar = 1.0);

// Free propagator with the phase corrected by q A(x).(x - x'), A upper index.
Complex short_s_propagator(const FourVector& x, const FourVector& xp, double s, const VectorFn& A,
                           double q = 1.0, double hbar = 1.0);

// I(x, x'; s) of the classical path, with optional closed-form derivatives.
struct ActionProvider
{
    std::function<double(const FourVector&, const FourVector&, double)> action;
    // p_mu = dI/dx^mu at the final point
    std::function<FourVector(const FourVector&, const FourVector&, double)> gradient;
    // d^2 I / dx^mu dx'^nu
    std::function<Matrix4(const FourVector&, const FourVector&, double)> mixed_hessian;
};

ActionProvider free_action();
// Exact action in a uniform field with the gauge A^nu = -F^nu_l x^l / 2.
ActionProvider constant_field_action(const AntisymTensor& F, double q);

struct BvpOptions
{
    int steps = 2000;
    int max_iter = 40;
    double tol = 1e-12;
    bool keep_path = true; // record the path samples
};

struct ClassicalPath
{
    Trajectory path;
    double action = 0.0;
    FourVector v0;
    FourVector momentum; // p_mu = gamma_dot_mu + q A_mu at the final point
    Matrix4 jacobian{};  // d x_final^mu / d v0^nu
    int iterations = 0;
};

// Shooting from x' with Newton on the initial velocity. The initial guess is
// the free path unless `guess` is given. Throws NoPathError on failure.
ClassicalPath classical_path_bvp(const FieldProvider& field, const FourVector& xp, const FourVector& x,
                                 double s, double q, const BvpOptions& opt = {},
                                 const std::optional<FourVector>& guess = std::nullopt);

ActionProvider bvp_action(const FieldProvider& field, double q, const BvpOptions& opt = {});

// ds I + (dI - qA)^2 / 2 from Richardson-extrapolated central differences
// (steps h, h/2) of BVP actions.
double hamilton_jacobi_residual(const FieldProvider& field, double q, const FourVector& xp,
                                const FourVector& x, double s, double h, const BvpOptions& opt = {});

// Four-point mixed differences at h and h/2 combined by Richardson extrapolation.
Matrix4 mixed_hessian_fd(const ActionProvider& I, const FourVector& x, const FourVector& xp, double s,
                         double h);

// |det(-d_x d_x' I)|^{1/2}; uses the provider's mixed Hessian when present.
double van_vleck(const ActionProvider& I, const FourVector& x, const FourVector& xp, double s,
                 double h = 1e-2);

// g(y) = y^2 / (2 - 2 cosh y)
Complex van_vleck_g(Complex y);
// s^-2 |det g(qFs)|^{1/4}
double constant_field_van_vleck(const AntisymTensor& F, double s, double q);

struct PathTerm
{
    double action;
    Complex amplitude; // the prefactor F_beta; real for direct paths
};
using PathSet = std::function<std::vector<PathTerm>(const FourVector&, const FourVector&, double)>;

enum class PropagatorKind { free, short_s, semiclassical, constant_field, delta_potential };

struct PropagatorSpec
{
    PropagatorKind kind = PropagatorKind::free;
    double hbar = 1.0;
    double q = 1.0;
    VectorFn A;        // short_s
    PathSet paths;     // semiclassical
    AntisymTensor F{}; // constant_field
};

// Single direct path from the shooting solver; F from the shooting Jacobian.
PathSet bvp_path_set(const FieldProvider& field, double q, const BvpOptions& opt = {});

// i sign(s) / (2 pi hbar)^2 * sum_beta F_beta exp(i I_beta / hbar)
Complex semiclassical_propagator(const std::vector<PathTerm>& paths, double s, double hbar = 1.0);

// Direct path plus the path bouncing off the spatial origin.
std::vector<PathTerm> delta_potential_paths(const FourVector& x, const FourVector& xp, double s,
                                            double hbar = 1.0);
Complex delta_potential_propagator(const FourVector& x, const FourVector& xp, double s, double hbar = 1.0);

Complex evaluate(const PropagatorSpec& spec, const FourVector& x, const FourVector& xp, double s);

Complex gauge_transform_propagator(Complex G, const ScalarFn& alpha, const FourVector& x, const FourVector& xp,
                                   double q = 1.0, double hbar = 1.0);

// |i hbar ds phi + D_mu D^mu phi / 2| with D = hbar d - i q A, central differences.
double schrodinger_residual(const WaveFn& phi, const VectorFn& A, double q, double hbar, const FourVector& x,
                            double s, double h);

} // namespace ecd
