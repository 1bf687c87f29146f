#include "optomag/scenario.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "optomag/analytic.hpp"
#include "optomag/constants.hpp"
#include "optomag/csv.hpp"
#include "optomag/diagnostics.hpp"
#include "optomag/errors.hpp"
#include "optomag/fisher.hpp"
#include "optomag/parallel.hpp"
#include "optomag/spectra.hpp"

namespace optomag {

using nlohmann::json;

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e)) return 2;
    if (dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const ConservationError*>(&e) ||
        dynamic_cast<const TruncationError*>(&e)) {
        return 3;
    }
    return 1;
}

std::string error_name(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const ParameterError*>(&e)) return "ParameterError";
    if (dynamic_cast<const ConvergenceError*>(&e)) return "ConvergenceError";
    if (dynamic_cast<const ConservationError*>(&e)) return "ConservationError";
    if (dynamic_cast<const TruncationError*>(&e)) return "TruncationError";
    if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
    return "Error";
}

std::vector<std::vector<double>> sweep_points(const std::vector<SweepAxis>& axes) {
    std::vector<std::vector<double>> pts{{}};
    for (const auto& a : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& p : pts)
            for (double v : a.values()) {
                auto q = p;
                q.push_back(v);
                next.push_back(q);
            }
        pts = std::move(next);
    }
    return pts;
}

DissipativeOptions dissipative_options(const ScenarioConfig& c) {
    DissipativeOptions o;
    const auto fr = c.numerics.count("frame") ? c.numerics.at("frame") : std::string("squeezed");
    if (fr == "squeezed") {
        o.frame = Frame::Squeezed;
    } else if (fr == "lab") {
        o.frame = Frame::Lab;
    } else {
        throw ConfigError("frame must be 'squeezed' or 'lab'");
    }
    const auto init = c.numerics.count("init") ? c.numerics.at("init") : std::string("coherent");
    if (init == "coherent") {
        o.init = MechInit::Coherent;
    } else if (init == "thermal") {
        o.init = MechInit::Thermal;
    } else {
        throw ConfigError("init must be 'coherent' or 'thermal'");
    }
    o.cavity_dim = c.integer("cavity_dim", 0);
    o.mech_dim = c.integer("mech_dim", 0);
    o.cavity_tail = c.number("cavity_tail", o.cavity_tail);
    o.dB_step = c.number("dB_step", 0.0);
    o.convergence_check = c.flag("convergence_check", false);
    o.convergence_tol = c.number("convergence_tol", o.convergence_tol);
    o.richardson = c.flag("richardson", o.richardson);
    o.richardson_tol = c.number("richardson_tol", o.richardson_tol);
    o.quadrature_tol = c.number("quadrature_tol", o.quadrature_tol);
    o.evolve.rtol = c.number("rtol", o.evolve.rtol);
    o.evolve.atol = c.number("atol", o.evolve.atol);
    if (o.cavity_dim < 0 || o.mech_dim < 0) throw ConfigError("dimensions must be non-negative");
    if (!(o.evolve.rtol > 0) || !(o.evolve.atol > 0)) throw ConfigError("tolerances must be positive");
    return o;
}

json params_json(const SystemParams& p) {
    return {{"omega_m", p.omega_m}, {"lambda1", p.lambda1}, {"lambda2", p.lambda2},
            {"kappa", p.kappa},     {"gamma", p.gamma},     {"n_th", p.n_th},
            {"mass", p.mass},       {"rod_length", p.rod_length}, {"alpha_mag", p.alpha_mag},
            {"young_modulus", p.young_modulus}, {"B_z", p.B_z}, {"N1", p.N1},
            {"N2", p.N2},           {"alpha", {p.alpha.real(), p.alpha.imag()}},
            {"beta", {p.beta.real(), p.beta.imag()}}};
}

json derived_json(const DerivedParams& d) {
    return {{"r", d.r},           {"omega_s", d.omega_s},       {"lambda_s", d.lambda_s},
            {"c_act", d.c_act},   {"f", d.f},                   {"f_s", d.f_s},
            {"lambda_tilde", d.lambda_tilde}, {"f_tilde", d.f_tilde}, {"tau1", d.tau1},
            {"half_period", d.half_period},   {"spring_k", d.spring_k}};
}

namespace {

using Rows = std::vector<std::vector<double>>;

struct TableDef {
    std::string file;
    std::vector<std::string> columns;
};

struct PointOutput {
    std::vector<Rows> tables;
    json diagnostics = json::object();
};

struct Context {
    const ScenarioConfig& cfg;
    int inner_threads = 1;
};

using PointFn = std::function<PointOutput(const SystemParams&, const Context&)>;

struct ScenarioDef {
    std::vector<TableDef> tables;
    std::vector<SweepAxis> default_sweep;
    bool sweepable = true;
    PointFn point;
};

SweepAxis axis(const std::string& v, double lo, double hi, int n, bool log = false) {
    SweepAxis a;
    a.variable = v;
    a.min = lo;
    a.max = hi;
    a.count = n;
    a.log = log;
    return a;
}

double theta_of(const Context& c) { return c.cfg.number("theta", constants::pi / 2); }

json report_json(const FisherReport& r) {
    return {{"value", r.value}, {"kind", to_string(r.kind)}, {"method", to_string(r.method)},
            {"diagnostics", r.diagnostics}};
}

PointOutput derive_point(const SystemParams& p, const Context&) {
    const DerivedParams d = derive(p);
    PointOutput o;
    o.tables = {{{d.r, d.omega_s, d.lambda_s, d.c_act, d.spring_k, d.f, d.f_s, d.lambda_tilde, d.f_tilde, d.tau1,
                  d.half_period, ancilla_relative_fluctuation(p)}}};
    o.diagnostics = derived_json(d);
    return o;
}

PointOutput squeezing_point(const SystemParams& p, const Context& c) {
    const DerivedParams d = derive(p);
    const double periods = c.cfg.number("periods", 2.0);
    const int n = c.cfg.integer("points", 401);
    if (!(periods > 0) || n < 2) throw ConfigError("squeezing needs periods > 0 and points >= 2");
    PointOutput o;
    Rows rows;
    for (int i = 0; i < n; ++i) {
        // one period of the variance is pi / omega_s
        const double t = periods * constants::pi / d.omega_s * i / (n - 1);
        rows.push_back({t, d.omega_s * t, variance_x(d.r, d.omega_s, t), squeezing_degree(d.r, d.omega_s, t)});
    }
    o.tables = {rows};
    o.diagnostics = {{"r", d.r}, {"max_squeezing_db", max_squeezing_db(d.r)}};
    return o;
}

PointOutput tomography_point(const SystemParams& p, const Context& c) {
    const int lmax = c.cfg.integer("l_max", 5);
    if (lmax < 1) throw ConfigError("l_max must be >= 1");
    const auto spec = make_spec(p, derive(p).tau1);
    Rows rows;
    for (int l = 1; l <= lmax; ++l) {
        const Tomography t = tomography(l, spec);
        rows.push_back({double(l), t.rho_dd.real(), t.rho_uu.real(), t.rho_du.real(), t.rho_du.imag(),
                        t.rho_ud.real(), t.rho_ud.imag(), t.sigma_z, t.delta_phase});
    }
    PointOutput o;
    o.tables = {rows};
    return o;
}

PointOutput pae_point(const SystemParams& p, const Context& c) {
    const int nmax = c.cfg.integer("n_max", 10);
    if (nmax < 0) throw ConfigError("n_max must be >= 0");
    const DerivedParams d = derive(p);
    Rows rows;
    for (int n = 0; n <= nmax; ++n) rows.push_back({double(n), pae(p, d, n)});
    PointOutput o;
    o.tables = {rows};
    return o;
}

// probe amplitude sqrt(N1) along the phase of alpha
SystemParams at_probe_photons(const SystemParams& p) {
    SystemParams q = p;
    q.alpha = std::abs(p.alpha) > 0 ? std::sqrt(p.N1) * p.alpha / std::abs(p.alpha) : cplx(std::sqrt(p.N1), 0.0);
    return q;
}

PointOutput qfi_point(const SystemParams& p, const Context& c) {
    const auto q = qfi_analytic_tau1(p);
    const auto cf = cfi_analytic_tau1(at_probe_photons(p), theta_of(c));
    PointOutput o;
    std::vector<double> row = {derive(p).r, q.value, std::log(q.value), cf.value,
                               sensitivity(q, SensitivityMode::PerSqrtHz, p)};
    if (c.cfg.flag("numeric", false)) {
        const auto num = qfi_numeric(p, derive(p).tau1);
        // numeric value is for N1 = |alpha|^2 photons
        row.push_back(num.value * p.N1 / std::norm(p.alpha));
        o.diagnostics["numeric"] = report_json(num);
    }
    o.tables = {{row}};
    return o;
}

PointOutput surface_point(const SystemParams& p, const Context&) {
    const auto q = qfi_analytic_tau1(p);
    PointOutput o;
    o.tables = {{{derive(p).r, q.value, sensitivity(q, SensitivityMode::PerSqrtHz, p),
                  ultimate_bound_per_sqrt_hz(p)}}};
    return o;
}

PointOutput sens_r_point(const SystemParams& p, const Context& c) {
    const auto q = qfi_analytic_tau1(p);
    const auto cf = cfi_analytic_tau1(at_probe_photons(p), theta_of(c));
    PointOutput o;
    const double dc = cf.value > 0 ? sensitivity(cf, SensitivityMode::PerSqrtHz, p) : INFINITY;
    o.tables = {{{derive(p).r, sensitivity(q, SensitivityMode::PerSqrtHz, p), dc, ultimate_bound_per_sqrt_hz(p)}}};
    return o;
}

PointOutput window_point(const SystemParams& p, const Context& c) {
    DissipativeOptions opt = dissipative_options(c.cfg);
    opt.threads = c.inner_threads;
    const int n = c.cfg.integer("window_points", 21);
    const auto grid = default_window_grid(p, n);
    const TimeWindow w = cfi_time_window(p, grid, theta_of(c), opt);
    const double tau1 = derive(p).tau1;
    Rows rows;
    for (std::size_t i = 0; i < w.times.size(); ++i) {
        rows.push_back({w.times[i] / tau1, w.times[i], w.cfi[i], w.cfi[i] / w.cfi_tau1});
    }
    PointOutput o;
    o.tables = {rows};
    o.diagnostics["flatness"] = w.flatness;
    o.diagnostics["cfi_tau1"] = w.cfi_tau1;
    o.diagnostics["tau1_report"] = report_json(w.reports[n / 2]);
    return o;
}

PointOutput dissipative_point(const SystemParams& p, const Context& c) {
    DissipativeOptions opt = dissipative_options(c.cfg);
    opt.threads = c.inner_threads;
    const double t = c.cfg.number("t_over_tau1", 1.0) * derive(p).tau1;
    const int cap = c.cfg.integer("max_mech_dim", 120);
    const int d = opt.mech_dim > 0 ? opt.mech_dim : lindblad_mech_dim(p);
    if (d > cap) {
        throw TruncationError("mechanical truncation " + std::to_string(d) + " exceeds max_mech_dim " +
                              std::to_string(cap));
    }
    const FisherReport r = cfi_dissipative(p, t, theta_of(c), opt);
    const FisherReport ideal = cfi_numeric(p, t, theta_of(c));
    PointOutput o;
    o.tables = {{{r.value, ideal.value, r.value / ideal.value, r.diagnostics.value("mech_dim", 0.0),
                  r.diagnostics.value("cavity_dim", 0.0)}}};
    o.diagnostics = report_json(r);
    return o;
}

const std::map<std::string, ScenarioDef>& registry() {
    static const std::map<std::string, ScenarioDef> reg = [] {
        std::map<std::string, ScenarioDef> m;
        m["derive"] = {{{"derive.csv",
                         {"r", "omega_s", "lambda_s", "c_act", "spring_k", "f", "f_s", "lambda_tilde", "f_tilde",
                          "tau1", "half_period", "ancilla_relative_fluctuation"}}},
                       {},
                       true,
                       derive_point};
        m["squeezing"] = {{{"squeezing.csv", {"t", "omega_s_t", "variance_x", "squeezing_db"}}}, {}, true,
                          squeezing_point};
        m["tomography"] = {{{"tomography.csv",
                             {"l", "rho_dd", "rho_uu", "rho_du_re", "rho_du_im", "rho_ud_re", "rho_ud_im", "sigma_z",
                              "delta_phase"}}},
                           {},
                           true,
                           tomography_point};
        m["pae"] = {{{"pae.csv", {"n", "pae"}}}, {}, true, pae_point};
        m["qfi"] = {{{"qfi.csv", {"r_eff", "fq", "ln_fq", "fc", "delta_b_per_sqrt_hz"}}},
                    {axis("r", 0.0, 0.9, 19)},
                    true,
                    qfi_point};
        m["sensitivity-surface"] = {{{"sensitivity_surface.csv", {"r_eff", "fq", "delta_b_per_sqrt_hz", "ultimate_bound"}}},
                                    {axis("N1", 1e4, 1e8, 20, true), axis("N2", 1e3, 2.4e6, 20, true)},
                                    true,
                                    surface_point};
        m["sensitivity-vs-r"] = {{{"sensitivity_vs_r.csv", {"r_eff", "delta_b_qfi", "delta_b_cfi", "ultimate_bound"}}},
                                 {axis("r", 0.0, 0.9, 10)},
                                 true,
                                 sens_r_point};
        m["cfi-window"] = {{{"cfi_window.csv", {"t_over_tau1", "t", "fc", "fc_over_fc_tau1"}}}, {}, true, window_point};
        m["cfi-vs-nth"] = {{{"cfi_vs_nth.csv", {"fc", "fc_ideal", "fc_over_ideal", "mech_dim", "cavity_dim"}}},
                           {axis("n_th", 1e-2, 1e1, 4, true)},
                           true,
                           dissipative_point};
        m["cfi-vs-decay"] = {{{"cfi_vs_decay.csv", {"fc", "fc_ideal", "fc_over_ideal", "mech_dim", "cavity_dim"}}},
                             {axis("kappa_rel", 0.01, 0.1, 3)},
                             true,
                             dissipative_point};
        m["spectra"] = {{{"spectra.csv",
                          {"probe_power", "omega", "freq_hz", "sxx_thermal", "sxx_shot", "sxx_total", "sff_sqrt"}},
                         {"bandwidth.csv",
                          {"probe_power", "intracavity_photons", "omega_opt", "sff_min", "low", "high", "low_hz",
                           "high_hz", "width_hz"}}},
                        {},
                        false,
                        nullptr};
        return m;
    }();
    return reg;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + path.string() + "'");
    f << text;
}

RunResult run_spectra(const ScenarioConfig& c, const RunOptions& opt, json manifest) {
    const SpectraParams base = resolve_spectra(c.spectra);
    const auto powers = c.list("powers", {20e-12, 200e-12, 2e-9, 20e-9});
    const int points = c.integer("points", 4001);
    CsvTable spec("spectra", registry().at("spectra").tables[0].columns);
    CsvTable bw("spectra-bandwidth", registry().at("spectra").tables[1].columns);
    json bands = json::array();
    for (double P : powers) {
        SpectraParams sp = base;
        sp.probe_power = P;
        try {
            sp.validate();
        } catch (const ParameterError& e) {
            throw ConfigError(e.what());
        }
        const RVec grid = default_spectrum_grid(sp, points);
        const NoiseSpectrum ns = noise_spectrum(sp, grid);
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            spec.add_row({P, grid(i), grid(i) / constants::two_pi, ns.s_xx_thermal(i), ns.s_xx_shot(i),
                          ns.s_xx_total(i), ns.s_ff_sqrt(i)});
        }
        const double w0 = optimum_frequency(sp);
        const double lo = ns.bandwidth ? ns.bandwidth->low : NAN, hi = ns.bandwidth ? ns.bandwidth->high : NAN;
        bw.add_row({P, intracavity_photons(sp), w0, force_sensitivity(sp, w0), lo, hi, lo / constants::two_pi,
                    hi / constants::two_pi, (hi - lo) / constants::two_pi});
        bands.push_back({{"probe_power", P}, {"low", lo}, {"high", hi}});
    }
    const std::filesystem::path dir(opt.out_dir);
    spec.write((dir / "spectra.csv").string());
    bw.write((dir / "bandwidth.csv").string());
    manifest["spectra_params"] = {{"mass", base.mass},
                                  {"omega_res", base.omega_res},
                                  {"gamma", base.gamma},
                                  {"temperature", base.temperature},
                                  {"omega_L", base.omega_L},
                                  {"kappa_total", base.kappa_total},
                                  {"kappa_ex", base.kappa_ex},
                                  {"coupling_G", base.coupling_G},
                                  {"detection_efficiency", base.detection_efficiency},
                                  {"thermal_force_floor", thermal_force_floor(base)}};
    manifest["bandwidths"] = bands;
    RunResult res;
    res.files = {"spectra.csv", "bandwidth.csv"};
    res.manifest = std::move(manifest);
    return res;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& c, const RunOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    set_strict(opt.strict);
    if (opt.threads < 1) throw ConfigError("threads must be >= 1");
    const auto& reg = registry();
    const auto it = reg.find(c.name);
    if (it == reg.end()) throw ConfigError("unknown scenario '" + c.name + "'");
    const ScenarioDef& def = it->second;
    std::filesystem::create_directories(opt.out_dir);

    json manifest = {{"tool", "optomag"},
                     {"version", tool_version},
                     {"csv_format", csv_format_version},
                     {"scenario", c.name},
                     {"config", c.source},
                     {"threads", opt.threads},
                     {"seed", opt.seed},
                     {"strict", opt.strict},
                     {"numerics", c.numerics}};
    const SystemParams base = resolve_params(c.overrides);
    manifest["params"] = params_json(base);
    manifest["derived"] = derived_json(derive(base));

    RunResult res;
    if (!def.sweepable) {
        if (!c.sweep.empty()) throw ConfigError("scenario '" + c.name + "' does not accept a [sweep] section");
        res = run_spectra(c, opt, manifest);
    } else {
        auto fixed = [&](const SweepAxis& a) {
            for (const auto& n : same_quantity(a.variable))
                if (c.overrides.count(n)) return true;
            return false;
        };
        std::vector<SweepAxis> axes;
        if (c.sweep.empty()) {
            // default axes give way to values fixed in [params]
            for (const auto& a : def.default_sweep)
                if (!fixed(a)) axes.push_back(a);
        } else {
            axes = c.sweep;
            for (const auto& a : axes)
                if (fixed(a)) throw ConfigError("'" + a.variable + "' is both swept and fixed in [params]");
        }
        const auto points = sweep_points(axes);
        json jaxes = json::array();
        for (const auto& a : axes) {
            jaxes.push_back({{"variable", a.variable}, {"min", a.min}, {"max", a.max}, {"count", a.count},
                             {"log", a.log}});
        }
        manifest["sweep"] = jaxes;
        // resolve every point up front so configuration errors abort the whole run
        std::vector<SystemParams> params;
        for (const auto& pt : points) {
            auto ov = c.overrides;
            for (std::size_t k = 0; k < axes.size(); ++k) apply_param(ov, axes[k].variable, pt[k]);
            params.push_back(resolve_params(ov));
        }
        const int n = static_cast<int>(points.size());
        const int outer = std::min(opt.threads, n);
        Context ctx{c, n == 1 ? opt.threads : 1};
        std::vector<PointOutput> outs(n);
        const auto errors = parallel_for(n, outer, [&](int i) { outs[i] = def.point(params[i], ctx); });
        if (n == 1 && errors[0]) std::rethrow_exception(errors[0]);

        std::vector<CsvTable> tables;
        for (const auto& t : def.tables) {
            std::vector<std::string> cols;
            for (const auto& a : axes) cols.push_back(a.variable);
            cols.insert(cols.end(), t.columns.begin(), t.columns.end());
            if (c.name == "qfi" && c.flag("numeric", false)) cols.push_back("fq_numeric");
            tables.emplace_back(c.name, cols);
        }
        json jpoints = json::array();
        for (int i = 0; i < n; ++i) {
            json jp = {{"index", i}, {"values", points[i]}};
            if (errors[i]) {
                PointFailure f;
                f.index = i;
                f.point = points[i];
                try {
                    std::rethrow_exception(errors[i]);
                } catch (const std::exception& e) {
                    f.error = error_name(e);
                    f.message = e.what();
                }
                jp["error"] = {{"type", f.error}, {"message", f.message}};
                res.failures.push_back(f);
            } else {
                for (std::size_t t = 0; t < tables.size(); ++t)
                    for (const auto& row : outs[i].tables[t]) {
                        auto full = points[i];
                        full.insert(full.end(), row.begin(), row.end());
                        tables[t].add_row(full);
                    }
                jp["diagnostics"] = outs[i].diagnostics;
            }
            jpoints.push_back(jp);
        }
        manifest["points"] = jpoints;
        for (std::size_t t = 0; t < tables.size(); ++t) {
            tables[t].write((std::filesystem::path(opt.out_dir) / def.tables[t].file).string());
            res.files.push_back(def.tables[t].file);
        }
        if (!res.failures.empty()) {
            res.exit_code = 4;
            json jf = json::array();
            for (const auto& f : res.failures) {
                jf.push_back({{"index", f.index}, {"values", f.point}, {"type", f.error}, {"message", f.message}});
            }
            manifest["failures"] = jf;
            write_text(std::filesystem::path(opt.out_dir) / "failures.json", json{{"failures", jf}}.dump(2) + "\n");
        }
        res.manifest = std::move(manifest);
    }
    res.manifest["files"] = res.files;
    res.manifest["exit_code"] = res.exit_code;
    res.manifest["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(std::filesystem::path(opt.out_dir) / "manifest.json", res.manifest.dump(2) + "\n");
    return res;
}

}  // namespace optomag
