#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace ecd {

// Exact floating-point accumulation (Shewchuk partials, as in Python's math.fsum).
// The rounded result does not depend on the order in which terms are added.
class ExactSum
{
  public:
    void add(double x);
    double value() const;

  private:
    std::vector<double> partials_;
    double special_ = 0.0; // carries inf/nan
};

double exact_sum(const std::vector<double>& xs);

// Worker count used by parallel grid maps. 0 selects hardware concurrency.
void set_default_workers(unsigned n);
unsigned default_workers();

// Calls fn(i) for i in [0, n). Each index is owned by exactly one worker, so
// results written to slot i do not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned workers = 0);

struct GaussRule
{
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights;
};
GaussRule gauss_legendre(int n);

struct QuadOptions
{
    double rel_tol = 1e-10;
    double abs_tol = 1e-300;
    int max_panels = 20000;
    double max_phase_per_panel = 1.5707963267948966; // pi/2
};

struct QuadResult
{
    std::complex<double> value;
    double error = 0.0;
    int panels = 0;
    bool converged = true;
};

// Adaptive Gauss-Kronrod (7/15) on [a,b] with the given interior breakpoints.
// Node pairs are combined symmetrically and panel sums are accumulated exactly,
// so mirrored integrands give exactly mirrored results. Panels whose integrand
// phase turns by more than max_phase_per_panel are split as well.
QuadResult integrate_gk(const std::function<std::complex<double>(double)>& f, double a, double b,
                        std::vector<double> breakpoints, const QuadOptions& opt);

struct VecQuadResult
{
    std::vector<double> value;
    std::vector<double> error;
    int panels = 0;
    bool converged = true;
};

// Same scheme for an n-component real integrand. A panel is accepted when every
// component meets rel_tol against the largest component's |f| integral.
VecQuadResult integrate_gk_vec(const std::function<void(double, double*)>& f, std::size_t n, double a, double b,
                               std::vector<double> breakpoints, const QuadOptions& opt);

// Real-valued convenience wrapper.
double integrate_real(const std::function<double(double)>& f, double a, double b,
                      const QuadOptions& opt, double* err = nullptr);

struct LogLogFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double x_min = 0.0;
    double x_max = 0.0;
    double max_abs_residual = 0.0;
};

// Least squares of log|y| against log x.
LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

std::vector<double> logspace(double a, double b, int n);

} // namespace ecd
