#include "ecd/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "ecd/classical.hpp"
#include "ecd/csv.hpp"
#include "ecd/ecd_core.hpp"
#include "ecd/ecd_currents.hpp"
#include "ecd/em_sources.hpp"
#include "ecd/errors.hpp"
#include "ecd/numerics.hpp"

namespace ecd::scenario {

using nlohmann::json;

namespace {

enum class Type { number, positive, count, vec3, vec4, positive_vec4, extent4, choice, number_list, positive_list };

struct Field
{
    std::string key;
    Type type;
    bool required = false;
    json def = nullptr;
    std::vector<std::string> choices = {};
};

struct Section
{
    std::string name;
    std::vector<Field> fields;
};

using Schema = std::vector<Section>;

json v4(double a, double b, double c, double d) { return json::array({a, b, c, d}); }

Section particle_section()
{
    return {"particle", {{"q", Type::number, false, 1.0}, {"x0", Type::vec4, true}, {"u0", Type::vec4, true}}};
}

Section field_section(const std::string& def_type = "none")
{
    return {"field",
            {{"type", Type::choice, false, def_type, {"none", "constant", "gaussian"}},
             {"E", Type::vec3, false, json::array({0.0, 0.0, 0.0})},
             {"B", Type::vec3, false, json::array({0.0, 0.0, 0.0})},
             {"V0", Type::number, false, 0.0},
             {"width", Type::positive, false, 1.0}}};
}

Section integrator_section()
{
    return {"integrator",
            {{"method", Type::choice, false, "rk4", {"rk4", "leapfrog"}},
             {"step", Type::positive, false, 1e-3},
             {"s_begin", Type::number, false, 0.0},
             {"s_end", Type::number, true},
             {"tolerance", Type::positive, false, 1e-10}}};
}

Section grid_section()
{
    return {"grid",
            {{"origin", Type::vec4, true}, {"spacing", Type::positive_vec4, true}, {"extent", Type::extent4, true}}};
}

const std::map<std::string, Schema>& schemas()
{
    static const std::map<std::string, Schema> s{
        {"classical-orbit", {particle_section(), field_section(), integrator_section()}},
        {"lw-field-map",
         {particle_section(), field_section(), integrator_section(), grid_section(),
          {"lw", {{"h", Type::positive, false, 1e-4}, {"tolerance", Type::positive, false, 1e-12}}}}},
        {"conservation-audit",
         {particle_section(), field_section(), integrator_section(), grid_section(),
          {"deposit", {{"kernel", Type::choice, false, "nearest", {"nearest", "trilinear"}}}},
          {"audit", {{"tolerance", Type::positive, false, 1e-12}}}}},
        {"free-ecd",
         {{"calibration", {{"epsilon", Type::positive, true}}},
          {"pair",
           {{"u", Type::vec4, false, v4(1, 0, 0, 0)},
            {"c0", Type::number, false, 1.0},
            {"s_max", Type::positive, false, 10.0}}},
          {"samples", {{"s", Type::number_list, false, json::array({0.5, 1.0})}}},
          {"quadrature", {{"rel_tol", Type::positive, false, 1e-10}}},
          {"consistency", {{"tolerance", Type::positive, false, 0.05}}}}},
        {"guiding-run",
         {{"density",
           {{"type", Type::choice, false, "gaussian-packet", {"gaussian-packet", "free-pair"}},
            {"u", Type::vec4, false, v4(1, 0, 0, 0)},
            {"width", Type::positive_vec4, false, v4(1, 1, 1, 1)},
            {"epsilon", Type::positive, false, 1e-2},
            {"c0", Type::number, false, 1.0}}},
          {"run",
           {{"gamma0", Type::vec4, false, v4(0, 0, 0, 0)},
            {"s0", Type::number, false, 0.0},
            {"s1", Type::number, true},
            {"ds", Type::positive, true}}},
          {"guiding",
           {{"h", Type::positive, false, 1e-2},
            {"h_s", Type::positive, false, 1e-2},
            {"kappa_max", Type::positive, false, 1e8},
            {"hessian_drift", Type::positive, false, 0.25}}}}},
        {"classical-limit-sweep",
         {particle_section(), field_section("gaussian"), integrator_section(),
          {"calibration", {{"epsilon", Type::positive, true}}},
          {"pair", {{"c0", Type::number, false, 1.0}, {"s_max", Type::positive, false, 0.5}}},
          {"sweep", {{"hbar", Type::positive_list, true}}},
          {"check",
           {{"samples", Type::number_list, false, json::array({1.0, 1.5})},
            {"h", Type::positive, false, 2e-4},
            {"bvp_steps", Type::count, false, 25},
            {"rel_tol", Type::positive, false, 1e-10},
            {"trend_ratio", Type::positive, false, 0.6}}}}},
        {"current-regularization",
         {{"calibration", {{"epsilon", Type::positive, true}}},
          {"pair", {{"u", Type::vec4, false, v4(1, 0, 0, 0)}, {"c0", Type::number, false, 1.0}, {"q", Type::number, false, 1.0}}},
          {"profile",
           {{"r_min", Type::positive, true}, {"r_max", Type::positive, true}, {"count", Type::count, false, 64}}},
          {"fit", {{"slope_tolerance", Type::positive, false, 0.02}}}}},
    };
    return s;
}

std::string join(const std::vector<std::string>& v)
{
    std::string out;
    for (const auto& s : v)
        out += (out.empty() ? "" : ", ") + s;
    return out;
}

bool is_number_array(const json& v, std::size_t n)
{
    if (!v.is_array() || (n && v.size() != n))
        return false;
    return std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); });
}

// Returns an empty string when v has the right type, otherwise the complaint.
std::string check_type(const Field& f, const json& v)
{
    switch (f.type) {
    case Type::number:
        return v.is_number() ? "" : "must be a number";
    case Type::positive:
        if (!v.is_number())
            return "must be a number";
        return v.get<double>() > 0.0 ? "" : "must be positive";
    case Type::count:
        if (!v.is_number_integer())
            return "must be an integer";
        return v.get<long long>() >= 1 ? "" : "must be at least 1";
    case Type::vec3:
        return is_number_array(v, 3) ? "" : "must be an array of 3 numbers";
    case Type::vec4:
        return is_number_array(v, 4) ? "" : "must be an array of 4 numbers";
    case Type::positive_vec4:
        if (!is_number_array(v, 4))
            return "must be an array of 4 numbers";
        return std::all_of(v.begin(), v.end(), [](const json& x) { return x.get<double>() > 0.0; })
                   ? ""
                   : "must be positive in every component";
    case Type::extent4:
        if (!v.is_array() || v.size() != 4 ||
            !std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number_integer(); }))
            return "must be an array of 4 integers";
        return std::all_of(v.begin(), v.end(), [](const json& x) { return x.get<long long>() >= 1; })
                   ? ""
                   : "must be at least 1 in every component";
    case Type::choice:
        if (!v.is_string())
            return "must be a string";
        return std::find(f.choices.begin(), f.choices.end(), v.get<std::string>()) != f.choices.end()
                   ? ""
                   : "must be one of: " + join(f.choices);
    case Type::number_list:
        return is_number_array(v, 0) && !v.empty() ? "" : "must be a non-empty array of numbers";
    case Type::positive_list:
        if (!is_number_array(v, 0) || v.empty())
            return "must be a non-empty array of numbers";
        return std::all_of(v.begin(), v.end(), [](const json& x) { return x.get<double>() > 0.0; })
                   ? ""
                   : "must be positive in every entry";
    }
    return "";
}

void line_column(const std::string& text, std::size_t byte, int& line, int& column)
{
    line = 1;
    column = 1;
    for (std::size_t i = 0; i < std::min(byte ? byte - 1 : 0, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
}

// Cross-key checks that need more than one value.
void semantic_checks(const std::string& kind, const json& d, std::vector<Diagnostic>& out)
{
    auto num = [&](const char* sec, const char* key) { return d[sec][key].get<double>(); };
    if (d.contains("integrator") && num("integrator", "s_end") == num("integrator", "s_begin"))
        out.push_back({"integrator.s_end", "must differ from integrator.s_begin"});
    if (kind == "current-regularization") {
        if (num("profile", "r_max") <= num("profile", "r_min"))
            out.push_back({"profile.r_max", "must exceed profile.r_min"});
        if (d["profile"]["count"].get<int>() < 3)
            out.push_back({"profile.count", "must be at least 3"});
    }
    if (kind == "guiding-run" && num("run", "s1") <= num("run", "s0"))
        out.push_back({"run.s1", "must exceed run.s0"});
    for (const char* sec : {"pair", "density"}) {
        if (!d.contains(sec) || !d[sec].contains("u"))
            continue;
        const auto u = d[sec]["u"].get<std::vector<double>>();
        if (u[0] * u[0] - u[1] * u[1] - u[2] * u[2] - u[3] * u[3] <= 0.0 || u[0] <= 0.0)
            out.push_back({std::string(sec) + ".u", "must be future timelike"});
    }
}

// ---- running -----------------------------------------------------------------

FourVector vec4(const json& v) { return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(), v[3].get<double>()}; }
std::array<double, 3> vec3(const json& v) { return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()}; }

FieldProvider make_field(const json& f)
{
    const std::string type = f["type"];
    if (type == "constant")
        return constant_field(AntisymTensor::from_fields(vec3(f["E"]), vec3(f["B"])));
    if (type == "gaussian")
        return gaussian_potential(f["V0"].get<double>(), f["width"].get<double>());
    return zero_field();
}

Trajectory make_trajectory(const json& d, const FieldProvider& field)
{
    const json& p = d["particle"];
    const json& in = d["integrator"];
    IntegratorConfig cfg;
    cfg.method = in["method"] == "leapfrog" ? IntegratorMethod::leapfrog : IntegratorMethod::rk4;
    cfg.step = in["step"];
    cfg.tolerance = in["tolerance"];
    return integrate_worldline(vec4(p["x0"]), vec4(p["u0"]), field, p["q"].get<double>(), in["s_begin"].get<double>(),
                               in["s_end"].get<double>(), cfg);
}

EventGrid make_grid(const json& g)
{
    const auto e = g["extent"];
    const auto h = g["spacing"].get<std::array<double, 4>>();
    return EventGrid(vec4(g["origin"]), h, {e[0].get<int>(), e[1].get<int>(), e[2].get<int>(), e[3].get<int>()});
}

struct Table
{
    std::string file;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

class Context
{
  public:
    explicit Context(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void write(const Table& t)
    {
        std::ostringstream os;
        write_csv_header(os, t.columns);
        for (const auto& r : t.rows)
            write_csv_row(os, r);
        const std::string text = os.str();
        std::ofstream f(dir_ / t.file, std::ios::binary);
        if (!f)
            throw std::filesystem::filesystem_error("cannot open output", dir_ / t.file, std::make_error_code(std::errc::io_error));
        f << text;
        if (!f)
            throw std::filesystem::filesystem_error("write failed", dir_ / t.file, std::make_error_code(std::errc::io_error));
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
        outputs.push_back({{"file", t.file}, {"rows", t.rows.size()}, {"columns", t.columns}, {"fnv1a64", hex}});
    }

    // value against an upper bound; a miss marks the run
    json bounded(const std::string& name, double value, double tolerance)
    {
        const bool pass = std::isfinite(value) && value <= tolerance;
        if (!pass)
            failures.push_back(name);
        return {{"value", value}, {"tolerance", tolerance}, {"pass", pass}};
    }

    json outputs = json::array();
    std::vector<std::string> failures;

  private:
    std::filesystem::path dir_;
};

json run_classical_orbit(const json& d, Context& ctx)
{
    const FieldProvider field = make_field(d["field"]);
    const Trajectory traj = make_trajectory(d, field);
    const double q = d["particle"]["q"];
    Table t{"trajectory.csv", {"s", "t", "x", "y", "z", "u0", "u1", "u2", "u3", "gamma_dot_sq", "drift"}, {}};
    const double g0 = minkowski_square(traj.samples().front().gamma_dot);
    for (const auto& p : traj.samples()) {
        const double g2 = minkowski_square(p.gamma_dot);
        t.rows.push_back({p.s, p.gamma[0], p.gamma[1], p.gamma[2], p.gamma[3], p.gamma_dot[0], p.gamma_dot[1],
                          p.gamma_dot[2], p.gamma_dot[3], g2, g2 - g0});
    }
    ctx.write(t);
    const EomResidual eom = eom_residual(traj, field, q);
    const EffectiveMass m = effective_mass(traj);
    return {{"gamma_dot_sq_drift", ctx.bounded("gamma_dot_sq_drift", gamma_dot_sq_drift(traj), d["integrator"]["tolerance"])},
            {"eom_residual",
             {{"max_abs", eom.max_abs}, {"relative", eom.relative}, {"stencil", "4th-order central difference"},
              {"step", d["integrator"]["step"]}}},
            {"effective_mass", {{"m_squared", m.m_squared}, {"kind", to_string(m.kind)}}},
            {"samples", traj.size()}};
}

json run_lw_field_map(const json& d, Context& ctx)
{
    const FieldProvider field = make_field(d["field"]);
    const Trajectory traj = make_trajectory(d, field);
    const EventGrid grid = make_grid(d["grid"]);
    const double h = d["lw"]["h"];
    std::vector<std::vector<double>> rows(grid.size());
    std::vector<double> trace(grid.size()), asym(grid.size()), scale(grid.size());
    parallel_for(grid.size(), [&](std::size_t k) {
        const FourVector x = grid.point(k);
        const FourVector A = lw_potential(x, traj);
        const AntisymTensor F = lw_field(x, traj, h);
        const Matrix4 T = stress_tensor(F);
        const auto E = F.electric(), B = F.magnetic();
        double tr = 0.0, as = 0.0, sc = 0.0;
        for (int mu = 0; mu < 4; ++mu) {
            tr += metric_diag[mu] * T[mu][mu];
            for (int nu = 0; nu < 4; ++nu) {
                as = std::max(as, std::abs(T[mu][nu] - T[nu][mu]));
                sc = std::max(sc, std::abs(T[mu][nu]));
            }
        }
        trace[k] = std::abs(tr);
        asym[k] = as;
        scale[k] = sc;
        rows[k] = {x[0], x[1], x[2], x[3], A[0], A[1], A[2], A[3], E[0], E[1], E[2], B[0], B[1], B[2], T[0][0], tr};
    });
    ctx.write({"field_map.csv",
               {"t", "x", "y", "z", "A0", "A1", "A2", "A3", "Ex", "Ey", "Ez", "Bx", "By", "Bz", "theta00", "theta_trace"},
               rows});
    double tr = 0.0, as = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (scale[k] > 0.0) {
            tr = std::max(tr, trace[k] / scale[k]);
            as = std::max(as, asym[k] / scale[k]);
        }
    }
    const double tol = d["lw"]["tolerance"];
    return {{"theta_trace_relative", ctx.bounded("theta_trace_relative", tr, tol)},
            {"theta_asymmetry_relative", ctx.bounded("theta_asymmetry_relative", as, tol)},
            {"stencil_step", h},
            {"points", grid.size()}};
}

json run_conservation_audit(const json& d, Context& ctx)
{
    const FieldProvider field = make_field(d["field"]);
    const Trajectory traj = make_trajectory(d, field);
    const EventGrid grid = make_grid(d["grid"]);
    DepositKernel kernel;
    kernel.kind = d["deposit"]["kernel"] == "trilinear" ? KernelKind::trilinear : KernelKind::nearest;
    const CurrentField j = deposit_electric_current(traj, grid, kernel);
    const CurrentField m = deposit_mass_squared_current(traj, grid, kernel);
    Table t{"slice_charges.csv", {"slice", "t", "charge", "boundary_flux", "mass_squared_charge"}, {}};
    std::vector<double> charges;
    for (int n = 0; n < grid.extent()[0]; ++n) {
        charges.push_back(grid_charge(j, n));
        t.rows.push_back({double(n), grid.slice_time(n), charges.back(), grid_boundary_flux(j, n), grid_charge(m, n)});
    }
    ctx.write(t);
    const auto [lo, hi] = std::minmax_element(charges.begin(), charges.end());
    const double ref = std::max({std::abs(*lo), std::abs(*hi), std::abs(traj.q())});
    return {{"charge_spread_relative", ctx.bounded("charge_spread_relative", (*hi - *lo) / ref, d["audit"]["tolerance"])},
            {"particle_charge", traj.q()},
            {"gamma_dot_sq_drift", gamma_dot_sq_drift(traj)},
            {"kernel", d["deposit"]["kernel"]}};
}

json run_free_ecd(const json& d, Context& ctx)
{
    const double eps = d["calibration"]["epsilon"];
    const auto s = d["samples"]["s"].get<std::vector<double>>();
    const json& p = d["pair"];
    const double s_max = p["s_max"];
    EcdPair pair = free_pair(vec4(p["u"]), p["c0"].get<double>(), eps, *std::min_element(s.begin(), s.end()),
                             *std::max_element(s.begin(), s.end()), s_max);
    pair.quad.rel_tol = d["quadrature"]["rel_tol"];
    const ConsistencyReport r = consistency_residual(pair, s);
    Table t{"consistency.csv", {"s", "residual"}, {}};
    for (std::size_t k = 0; k < r.s.size(); ++k)
        t.rows.push_back({r.s[k], r.residuals[k]});
    ctx.write(t);
    return {{"calibration", {{"epsilon", eps}, {"N", pair.calibration.N}}},
            {"consistency_residual", ctx.bounded("consistency_residual", r.residual, d["consistency"]["tolerance"])},
            {"tail_bound", {{"value", r.tail_bound}, {"s_max", s_max}}},
            {"quadrature_error", {{"value", r.quad_error}, {"rel_tol", d["quadrature"]["rel_tol"]}}},
            {"truncation_estimate", {{"value", eps / s_max}, {"formula", "epsilon / s_max"}}}};
}

json run_guiding(const json& d, Context& ctx)
{
    const json& den = d["density"];
    const FourVector u = vec4(den["u"]);
    DensityFn rho;
    if (den["type"] == "free-pair") {
        const double eps = den["epsilon"];
        const Complex C = den["c0"].get<double>() / eps;
        rho = density_of([u, C, eps](const FourVector& x, double s) { return free_phi_closed_form(x, s, u, C, eps); });
    } else {
        const FourVector w = vec4(den["width"]);
        rho = [u, w](const FourVector& x, double s) {
            double e = 0.0;
            for (int mu = 0; mu < 4; ++mu) {
                const double z = (x[mu] - u[mu] * s) / w[mu];
                e += z * z;
            }
            return std::exp(-e);
        };
    }
    GuidingOptions opt;
    opt.h = d["guiding"]["h"];
    opt.h_s = d["guiding"]["h_s"];
    opt.kappa_max = d["guiding"]["kappa_max"];
    opt.hessian_drift = d["guiding"]["hessian_drift"];
    const json& r = d["run"];
    const auto states = guiding_run(rho, vec4(r["gamma0"]), r["s0"].get<double>(), r["s1"].get<double>(),
                                    r["ds"].get<double>(), opt);
    Table t{"guiding.csv", {"s", "t", "x", "y", "z", "u0", "u1", "u2", "u3", "condition", "violent"}, {}};
    double verr = 0.0;
    for (const auto& st : states) {
        t.rows.push_back({st.s, st.gamma[0], st.gamma[1], st.gamma[2], st.gamma[3], st.gamma_dot[0], st.gamma_dot[1],
                          st.gamma_dot[2], st.gamma_dot[3], st.condition, st.violent ? 1.0 : 0.0});
        if (!st.violent)
            verr = std::max(verr, (st.gamma_dot - u).euclidean_norm() / u.euclidean_norm());
    }
    ctx.write(t);
    json out{{"steps", states.size()},
             {"halted", states.back().violent},
             {"diagnosis", states.back().diagnosis},
             {"final_s", states.back().s},
             {"stencil", {{"h", opt.h}, {"h_s", opt.h_s}, {"kappa_max", opt.kappa_max}}}};
    if (den["type"] == "gaussian-packet")
        out["velocity_error"] = {{"value", verr}, {"reference", "density drift velocity u"}, {"stencil_h", opt.h}};
    return out;
}

json run_classical_limit(const json& d, Context& ctx)
{
    const FieldProvider field = make_field(d["field"]);
    const Trajectory traj = make_trajectory(d, field);
    const double q = d["particle"]["q"], eps = d["calibration"]["epsilon"];
    const json& c = d["check"];
    const auto samples = c["samples"].get<std::vector<double>>();
    const auto hbars = d["sweep"]["hbar"].get<std::vector<double>>();
    BvpOptions bo;
    bo.steps = c["bvp_steps"];
    Table t{"sweep.csv", {"hbar", "residual", "velocity_error", "surfing", "surfing_bound"}, {}};
    std::vector<double> res;
    for (double hbar : hbars) {
        EcdPair p{traj,
                  action_phase_ansatz(traj, field, q, d["pair"]["c0"].get<double>() / eps, hbar),
                  {},
                  calibrate(eps, hbar),
                  d["pair"]["s_max"].get<double>(),
                  {}};
        p.propagator.kind = PropagatorKind::semiclassical;
        p.propagator.hbar = hbar;
        p.propagator.q = q;
        p.propagator.paths = bvp_path_set(field, q, bo);
        p.quad.rel_tol = c["rel_tol"];
        const PhaseGradientReport r = classical_phase_gradient_check(p, field, q, samples, c["h"].get<double>());
        t.rows.push_back({hbar, r.residual, r.velocity_error, r.surfing, r.surfing_bound});
        res.push_back(r.residual);
    }
    ctx.write(t);
    json trend = json::array();
    for (std::size_t k = 1; k < hbars.size(); ++k) {
        json e = ctx.bounded("trend_ratio", res[k] / res[k - 1], c["trend_ratio"]);
        e["hbar"] = {hbars[k - 1], hbars[k]};
        trend.push_back(e);
    }
    return {{"trend", trend}, {"lambda_F", field.lambda_F}, {"stencil_h", c["h"]}, {"samples", samples}};
}

json run_regularization(const json& d, Context& ctx)
{
    const double eps = d["calibration"]["epsilon"];
    const json& p = d["pair"];
    const FourVector u = vec4(p["u"]);
    const double q = p["q"];
    const Complex C = p["c0"].get<double>() / eps;
    const double r0 = d["profile"]["r_min"], r1 = d["profile"]["r_max"];
    const int n = d["profile"]["count"];
    const double span = 10.0 * (r1 + 1.0) * u[0];
    const PairSource src = free_source(u, C, eps, q, -span, span);
    const EventGrid grid({0, r0, 0, 0}, {1, (r1 - r0) / (n - 1), 1, 1}, {1, n, 1, 1});
    CurrentField j(grid, "j_free");
    parallel_for(grid.size(), [&](std::size_t k) {
        j.values[k] = {free_charge_j0(grid.point(k)[1], u, C, src.calibration, q), 0, 0, 0};
    });
    const double coef = divergent_coefficient(q, C, src.calibration);
    const RegularizedCurrent reg = subtract_divergent(j, src.trajectory, coef, src.calibration);
    Table t{"profile.csv", {"r", "j0", "j0_div", "j0_finite"}, {}};
    std::vector<double> r, j0;
    double finite = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double x = grid.point(k)[1], f = reg.finite.values[k][0];
        t.rows.push_back({x, j.values[k][0], j.values[k][0] - f, f});
        r.push_back(x);
        j0.push_back(j.values[k][0]);
        finite = std::max(finite, std::abs(f));
    }
    ctx.write(t);
    const LogLogFit fit = loglog_fit(r, j0);
    json slope = ctx.bounded("tail_slope", std::abs(fit.slope + 1.0), d["fit"]["slope_tolerance"]);
    slope["slope"] = fit.slope;
    slope["target"] = -1.0;
    slope["window"] = {r0, r1};
    return {{"tail_slope", slope},
            {"divergent_coefficient", coef},
            {"max_abs_finite", {{"value", finite}, {"window", {r0, r1}}}},
            {"calibration", {{"epsilon", eps}, {"N", src.calibration.N}}}};
}

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

std::string to_string(const Diagnostic& d)
{
    if (d.line > 0)
        return "line " + std::to_string(d.line) + ", column " + std::to_string(d.column) + ": " + d.message;
    return d.path.empty() ? d.message : d.path + " " + d.message;
}

std::vector<std::string> kinds()
{
    std::vector<std::string> k;
    for (const auto& [name, s] : schemas())
        k.push_back(name);
    return k;
}

json parse(const std::string& text, std::vector<Diagnostic>& diagnostics)
{
    try {
        return json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        Diagnostic d;
        line_column(text, e.byte, d.line, d.column);
        const std::string what = e.what();
        const auto colon = what.find("]: ");
        d.message = "parse error: " + (colon == std::string::npos ? what : what.substr(colon + 3));
        diagnostics.push_back(d);
        return nullptr;
    }
}

std::vector<Diagnostic> validate(const json& doc)
{
    std::vector<Diagnostic> out;
    if (!doc.is_object()) {
        out.push_back({"", "the document must be an object"});
        return out;
    }
    if (!doc.contains("schema_version"))
        out.push_back({"schema_version", "is required"});
    else if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<long long>() != schema_version)
        out.push_back({"schema_version", "must be " + std::to_string(schema_version)});
    if (!doc.contains("kind")) {
        out.push_back({"kind", "is required; allowed kinds: " + join(kinds())});
        return out;
    }
    if (!doc["kind"].is_string() || !schemas().count(doc["kind"].get<std::string>())) {
        out.push_back({"kind", "unknown kind " + doc["kind"].dump() + "; allowed kinds: " + join(kinds())});
        return out;
    }
    const std::string kind = doc["kind"];
    const Schema& schema = schemas().at(kind);
    for (const auto& [key, v] : doc.items()) {
        if (key == "schema_version" || key == "kind")
            continue;
        if (key == "name") {
            if (!v.is_string())
                out.push_back({"name", "must be a string"});
            continue;
        }
        if (key == "output") {
            if (!v.is_object())
                out.push_back({"output", "must be an object"});
            for (const auto& [k2, v2] : v.items()) {
                if (k2 != "directory")
                    out.push_back({"output." + k2, "is not a known key; allowed: directory"});
                else if (!v2.is_string())
                    out.push_back({"output.directory", "must be a string"});
            }
            continue;
        }
        if (std::none_of(schema.begin(), schema.end(), [&](const Section& s) { return s.name == key; })) {
            std::vector<std::string> allowed{"schema_version", "kind", "name", "output"};
            for (const auto& s : schema)
                allowed.push_back(s.name);
            out.push_back({key, "is not a known key for kind " + kind + "; allowed: " + join(allowed)});
        }
    }
    for (const Section& sec : schema) {
        const bool present = doc.contains(sec.name);
        if (present && !doc[sec.name].is_object()) {
            out.push_back({sec.name, "must be an object"});
            continue;
        }
        const json& body = present ? doc[sec.name] : json::object();
        for (const auto& [key, v] : body.items()) {
            if (std::none_of(sec.fields.begin(), sec.fields.end(), [&](const Field& f) { return f.key == key; })) {
                std::vector<std::string> allowed;
                for (const auto& f : sec.fields)
                    allowed.push_back(f.key);
                out.push_back({sec.name + "." + key, "is not a known key; allowed: " + join(allowed)});
            }
        }
        for (const Field& f : sec.fields) {
            const std::string path = sec.name + "." + f.key;
            if (!body.contains(f.key)) {
                if (f.required)
                    out.push_back({path, "is required"});
                continue;
            }
            const std::string err = check_type(f, body[f.key]);
            if (!err.empty())
                out.push_back({path, err});
        }
    }
    if (out.empty())
        semantic_checks(kind, normalize(doc), out);
    return out;
}

std::vector<Diagnostic> validate_file(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        return {{"", "cannot read " + path.string()}};
    std::stringstream ss;
    ss << f.rdbuf();
    std::vector<Diagnostic> diags;
    const json doc = parse(ss.str(), diags);
    if (!diags.empty())
        return diags;
    return validate(doc);
}

json normalize(const json& doc)
{
    json out = doc;
    for (const Section& sec : schemas().at(doc["kind"].get<std::string>())) {
        json& body = out[sec.name];
        if (body.is_null())
            body = json::object();
        for (const Field& f : sec.fields)
            if (!body.contains(f.key) && !f.def.is_null())
                body[f.key] = f.def;
    }
    if (!out.contains("name"))
        out["name"] = doc["kind"];
    return out;
}

void apply_override(json& doc, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ValidationError("override '" + assignment + "' must look like key.path=value");
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    std::string pointer;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) {
        if (part.empty())
            throw ValidationError("override key '" + key + "' has an empty component");
        pointer += "/" + part;
    }
    if (!doc.is_object())
        throw ValidationError("override needs an object document");
    try {
        doc[json::json_pointer(pointer)] = value;
    } catch (const json::exception& e) {
        throw ValidationError("override '" + key + "': " + e.what());
    }
}

json run(const json& doc, const RunOptions& opt)
{
    const auto diags = validate(doc);
    if (!diags.empty()) {
        std::string msg;
        for (const auto& d : diags)
            msg += (msg.empty() ? "" : "; ") + to_string(d);
        throw ValidationError(msg);
    }
    const json d = normalize(doc);
    std::filesystem::create_directories(opt.out_dir);
    set_default_workers(opt.workers);

    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = utc_now();
    Context ctx(opt.out_dir);
    const std::string kind = d["kind"];
    json results;
    if (kind == "classical-orbit")
        results = run_classical_orbit(d, ctx);
    else if (kind == "lw-field-map")
        results = run_lw_field_map(d, ctx);
    else if (kind == "conservation-audit")
        results = run_conservation_audit(d, ctx);
    else if (kind == "free-ecd")
        results = run_free_ecd(d, ctx);
    else if (kind == "guiding-run")
        results = run_guiding(d, ctx);
    else if (kind == "classical-limit-sweep")
        results = run_classical_limit(d, ctx);
    else
        results = run_regularization(d, ctx);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json manifest{{"schema_version", schema_version},
                  {"tool_version", tool_version},
                  {"scenario", d},
                  {"started_utc", started},
                  {"wall_time_s", wall},
                  {"workers", default_workers()},
                  {"results", results},
                  {"outputs", ctx.outputs},
                  {"status", ctx.failures.empty() ? "ok" : "accuracy-failure"},
                  {"failures", ctx.failures}};
    std::ofstream f(opt.out_dir / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << "\n";
    if (!f)
        throw std::filesystem::filesystem_error("write failed", opt.out_dir / "manifest.json",
                                                std::make_error_code(std::errc::io_error));
    return manifest;
}

int exit_code_of(const std::exception& e)
{
    if (dynamic_cast<const ValidationError*>(&e))
        return exit_validation;
    if (dynamic_cast<const AccuracyError*>(&e))
        return exit_accuracy;
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e))
        return exit_io;
    if (dynamic_cast<const Error*>(&e))
        return exit_numeric;
    return exit_internal;
}

int exit_code_of(const json& manifest)
{
    return manifest.value("status", "") == "ok" ? exit_ok : exit_accuracy;
}

} // namespace ecd::scenario
