#include "ecd/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "ecd/errors.hpp"

namespace ecd {

void ExactSum::add(double x)
{
    if (!std::isfinite(x)) {
        special_ += x;
        return;
    }
    std::size_t i = 0;
    for (std::size_t k = 0; k < partials_.size(); ++k) {
        double y = partials_[k];
        if (std::abs(x) < std::abs(y))
            std::swap(x, y);
        const double hi = x + y;
        const double lo = y - (hi - x);
        if (lo != 0.0)
            partials_[i++] = lo;
        x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
}

double ExactSum::value() const
{
    if (special_ != 0.0 || std::isnan(special_))
        return special_;
    if (partials_.empty())
        return 0.0;
    std::size_t n = partials_.size() - 1;
    double hi = partials_[n];
    double lo = 0.0;
    while (n > 0) {
        const double x = hi;
        const double y = partials_[--n];
        hi = x + y;
        const double yr = hi - x;
        lo = y - yr;
        if (lo != 0.0)
            break;
    }
    // round-half-even correction, as in CPython's fsum
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
        const double y = lo * 2.0;
        const double x = hi + y;
        const double yr = x - hi;
        if (y == yr)
            hi = x;
    }
    return hi;
}

double exact_sum(const std::vector<double>& xs)
{
    ExactSum acc;
    for (double x : xs)
        acc.add(x);
    return acc.value();
}

namespace {
std::atomic<unsigned> g_workers{0};
}

void set_default_workers(unsigned n) { g_workers = n; }

unsigned default_workers()
{
    const unsigned n = g_workers.load();
    if (n > 0)
        return n;
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned workers)
{
    if (workers == 0)
        workers = default_workers();
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers)
                    fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

GaussRule gauss_legendre(int n)
{
    if (n < 1)
        throw DomainError("gauss_legendre: n must be positive");
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1)
                p0 = 1.0, p1 = x;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1)
        rule.nodes[n / 2] = 0.0;
    return rule;
}

namespace {

constexpr double eps_machine = std::numeric_limits<double>::epsilon();

constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel
{
    double a, b;
    std::complex<double> kronrod;
    double error;
    double abs_integral;
    double phase_turn;
};

Panel gk15(const std::function<std::complex<double>(double)>& f, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::complex<double> fv[15];
    // fv[0..6]: c - h x_k, fv[7]: c, fv[8..14]: c + h x_k (k = 6..0 mirrored)
    for (int k = 0; k < 7; ++k) {
        fv[k] = f(c - h * xgk[k]);
        fv[14 - k] = f(c + h * xgk[k]);
    }
    fv[7] = f(c);

    std::complex<double> res_k = wgk[7] * fv[7];
    std::complex<double> res_g = wg[3] * fv[7];
    double res_abs = wgk[7] * std::abs(fv[7]);
    for (int k = 0; k < 7; ++k) {
        const std::complex<double> pair = fv[k] + fv[14 - k];
        res_k += wgk[k] * pair;
        res_abs += wgk[k] * (std::abs(fv[k]) + std::abs(fv[14 - k]));
        if (k % 2 == 1)
            res_g += wg[k / 2] * pair;
    }
    Panel p;
    p.a = a;
    p.b = b;
    p.kronrod = res_k * h;
    p.error = std::abs((res_k - res_g) * h);
    p.abs_integral = res_abs * std::abs(h);

    double turn = 0.0;
    double prev = 0.0;
    bool have_prev = false;
    for (int k = 0; k < 15; ++k) {
        if (std::abs(fv[k]) == 0.0)
            continue;
        const double arg = std::arg(fv[k]);
        if (have_prev) {
            double d = arg - prev;
            d = std::remainder(d, 2.0 * std::numbers::pi);
            turn += std::abs(d);
        }
        prev = arg;
        have_prev = true;
    }
    p.phase_turn = turn;
    return p;
}

} // namespace

QuadResult integrate_gk(const std::function<std::complex<double>(double)>& f, double a, double b,
                        std::vector<double> breakpoints, const QuadOptions& opt)
{
    QuadResult out;
    if (a == b) {
        out.value = 0.0;
        return out;
    }
    const double lo = std::min(a, b), hi = std::max(a, b);
    std::vector<double> edges{lo};
    std::sort(breakpoints.begin(), breakpoints.end());
    for (double x : breakpoints)
        if (x > lo && x < hi && x != edges.back())
            edges.push_back(x);
    edges.push_back(hi);

    std::vector<Panel> work;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        work.push_back(gk15(f, edges[i], edges[i + 1]));

    ExactSum scale_acc;
    for (const auto& p : work)
        scale_acc.add(p.abs_integral);
    const double scale = scale_acc.value();
    const double total_len = hi - lo;
    const double tol = std::max(opt.abs_tol, opt.rel_tol * scale);

    std::vector<Panel> done;
    // depth-first, processed from the right end so that pop_back walks left to right
    std::vector<Panel> stack(work.rbegin(), work.rend());
    int count = static_cast<int>(stack.size());
    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();
        const double len = p.b - p.a;
        const bool tiny = len <= 1e-14 * (std::abs(p.a) + std::abs(p.b));
        // a panel whose estimate is at rounding level cannot improve by splitting
        const bool ok_err = p.error <= std::max(tol * (len / total_len), 50.0 * eps_machine * p.abs_integral);
        const bool ok_phase = p.phase_turn <= opt.max_phase_per_panel;
        if ((ok_err && ok_phase) || tiny) {
            done.push_back(p);
            continue;
        }
        if (count + 1 > opt.max_panels) {
            out.converged = false;
            done.push_back(p);
            continue;
        }
        const double m = 0.5 * (p.a + p.b);
        stack.push_back(gk15(f, m, p.b));
        stack.push_back(gk15(f, p.a, m));
        ++count;
    }

    ExactSum re, im, err;
    for (const auto& p : done) {
        re.add(p.kronrod.real());
        im.add(p.kronrod.imag());
        err.add(p.error);
    }
    out.value = {re.value(), im.value()};
    out.error = err.value();
    out.panels = static_cast<int>(done.size());
    if (b < a)
        out.value = -out.value;
    return out;
}

namespace {

struct VecPanel
{
    double a, b;
    std::vector<double> kronrod, error, abs_integral;
};

VecPanel gk15_vec(const std::function<void(double, double*)>& f, std::size_t n, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::vector<double> fv(15 * n);
    for (int k = 0; k < 7; ++k) {
        f(c - h * xgk[k], &fv[k * n]);
        f(c + h * xgk[k], &fv[(14 - k) * n]);
    }
    f(c, &fv[7 * n]);
    VecPanel p{a, b, std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double mid = fv[7 * n + i];
        double res_k = wgk[7] * mid, res_g = wg[3] * mid, res_abs = wgk[7] * std::abs(mid);
        for (int k = 0; k < 7; ++k) {
            const double lo = fv[k * n + i], hi = fv[(14 - k) * n + i];
            const double pair = lo + hi;
            res_k += wgk[k] * pair;
            res_abs += wgk[k] * (std::abs(lo) + std::abs(hi));
            if (k % 2 == 1)
                res_g += wg[k / 2] * pair;
        }
        p.kronrod[i] = res_k * h;
        p.error[i] = std::abs((res_k - res_g) * h);
        p.abs_integral[i] = res_abs * std::abs(h);
    }
    return p;
}

} // namespace

VecQuadResult integrate_gk_vec(const std::function<void(double, double*)>& f, std::size_t n, double a, double b,
                               std::vector<double> breakpoints, const QuadOptions& opt)
{
    VecQuadResult out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0, true};
    if (a == b || n == 0)
        return out;
    const double lo = std::min(a, b), hi = std::max(a, b);
    std::vector<double> edges{lo};
    std::sort(breakpoints.begin(), breakpoints.end());
    for (double x : breakpoints)
        if (x > lo && x < hi && x != edges.back())
            edges.push_back(x);
    edges.push_back(hi);

    std::vector<VecPanel> work;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        work.push_back(gk15_vec(f, n, edges[i], edges[i + 1]));
    // one tolerance for all components, set by the largest; a component that is
    // zero up to noise would otherwise never converge
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ExactSum acc;
        for (const auto& p : work)
            acc.add(p.abs_integral[i]);
        scale = std::max(scale, acc.value());
    }
    const double tol = std::max(opt.abs_tol, opt.rel_tol * scale);
    const double total_len = hi - lo;

    std::vector<VecPanel> done;
    std::vector<VecPanel> stack(work.rbegin(), work.rend());
    int count = static_cast<int>(stack.size());
    while (!stack.empty()) {
        VecPanel p = std::move(stack.back());
        stack.pop_back();
        const double len = p.b - p.a;
        bool ok = len <= 1e-14 * (std::abs(p.a) + std::abs(p.b));
        if (!ok) {
            const double peak = *std::max_element(p.abs_integral.begin(), p.abs_integral.end());
            const double allowed = std::max(tol * (len / total_len), 50.0 * eps_machine * peak);
            ok = true;
            for (std::size_t i = 0; i < n && ok; ++i)
                ok = p.error[i] <= allowed;
        }
        if (ok) {
            done.push_back(std::move(p));
            continue;
        }
        if (count + 1 > opt.max_panels) {
            out.converged = false;
            done.push_back(std::move(p));
            continue;
        }
        const double m = 0.5 * (p.a + p.b);
        stack.push_back(gk15_vec(f, n, m, p.b));
        stack.push_back(gk15_vec(f, n, p.a, m));
        ++count;
    }
    for (std::size_t i = 0; i < n; ++i) {
        ExactSum v, e;
        for (const auto& p : done) {
            v.add(p.kronrod[i]);
            e.add(p.error[i]);
        }
        out.value[i] = b < a ? -v.value() : v.value();
        out.error[i] = e.value();
    }
    out.panels = static_cast<int>(done.size());
    return out;
}

double integrate_real(const std::function<double(double)>& f, double a, double b,
                      const QuadOptions& opt, double* err)
{
    auto g = [&f](double x) { return std::complex<double>(f(x), 0.0); };
    QuadResult r = integrate_gk(g, a, b, {}, opt);
    if (err)
        *err = r.error;
    if (!r.converged)
        throw AccuracyError("integrate_real: panel budget exhausted", r.error);
    return r.value.real();
}

LogLogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw DomainError("loglog_fit: need at least two matching samples");
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || y[i] == 0.0)
            throw DomainError("loglog_fit: non-positive abscissa or zero ordinate");
        const double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    LogLogFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    fit.x_min = *std::min_element(x.begin(), x.end());
    fit.x_max = *std::max_element(x.begin(), x.end());
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::log(std::abs(y[i])) - (fit.intercept + fit.slope * std::log(x[i]));
        fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
    }
    return fit;
}

std::vector<double> logspace(double a, double b, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
        v[i] = a * std::pow(b / a, n == 1 ? 0.0 : double(i) / (n - 1));
    return v;
}

} // namespace ecd
