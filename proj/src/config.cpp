#include "optomag/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "optomag/errors.hpp"

namespace optomag {

namespace {

double to_double(const std::string& key, const std::string& text) {
    try {
        return boost::lexical_cast<double>(boost::trim_copy(text));
    } catch (const boost::bad_lexical_cast&) {
        throw ConfigError("'" + key + "': expected a number, got '" + text + "'");
    }
}

int to_int(const std::string& key, const std::string& text) {
    const double v = to_double(key, text);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("'" + key + "': expected an integer");
    return static_cast<int>(v);
}

const std::vector<std::string> kRaw = {"omega_m", "lambda1", "lambda2", "kappa",       "gamma",
                                       "n_th",    "mass",    "rod_length", "alpha_mag", "young_modulus",
                                       "B_z",     "N1",      "N2",      "alpha_re",    "alpha_im",
                                       "beta_re", "beta_im"};
const std::vector<std::string> kShort = {"r", "lambda1_rel", "lambda2_rel", "kappa_rel", "gamma_rel", "f_rel"};

const std::vector<std::string> kSpectra = {"mass",     "omega_res",   "gamma_hz",   "temperature",
                                           "probe_power", "omega_L_hz", "kappa_hz", "kappa_ex_hz",
                                           "G_mhz_per_nm", "detection_efficiency", "r", "use_omega_m"};

}  // namespace

std::vector<double> SweepAxis::values() const {
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) {
        const double u = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        v[i] = log ? std::exp(std::log(min) + u * (std::log(max) - std::log(min))) : min + u * (max - min);
    }
    if (count > 1) {
        v.front() = min;
        v.back() = max;
    }
    return v;
}

SweepAxis parse_axis(const std::string& variable, const std::string& text) {
    std::vector<std::string> parts;
    boost::split(parts, text, boost::is_any_of(":"));
    if (parts.size() < 3 || parts.size() > 4) {
        throw ConfigError("sweep '" + variable + "': expected min:max:count[:log]");
    }
    SweepAxis a;
    a.variable = variable;
    a.min = to_double(variable, parts[0]);
    a.max = to_double(variable, parts[1]);
    a.count = to_int(variable, parts[2]);
    if (parts.size() == 4) {
        const std::string s = boost::trim_copy(parts[3]);
        if (s == "log") {
            a.log = true;
        } else if (s != "lin") {
            throw ConfigError("sweep '" + variable + "': unknown spacing '" + s + "'");
        }
    }
    if (a.count < 2) throw ConfigError("sweep '" + variable + "': count must be >= 2");
    if (!(a.max > a.min)) throw ConfigError("sweep '" + variable + "': max must exceed min");
    if (a.log && !(a.min > 0)) throw ConfigError("sweep '" + variable + "': log spacing needs min > 0");
    const auto& names = parameter_names();
    if (std::find(names.begin(), names.end(), variable) == names.end()) {
        throw ConfigError("sweep variable '" + variable + "' is not a parameter name");
    }
    return a;
}

const std::vector<std::string>& parameter_names() {
    static const std::vector<std::string> all = [] {
        std::vector<std::string> v = kRaw;
        v.insert(v.end(), kShort.begin(), kShort.end());
        return v;
    }();
    return all;
}

void apply_param(std::map<std::string, double>& overrides, const std::string& name, double value) {
    const auto& names = parameter_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw ConfigError("unknown parameter '" + name + "'");
    }
    if (!std::isfinite(value)) throw ConfigError("parameter '" + name + "' is not finite");
    overrides[name] = value;
}

namespace {

const std::pair<const char*, const char*> kAliases[] = {{"lambda1", "lambda1_rel"}, {"lambda2", "lambda2_rel"},
                                                        {"kappa", "kappa_rel"},     {"gamma", "gamma_rel"},
                                                        {"N2", "r"},                {"B_z", "f_rel"}};

}  // namespace

std::vector<std::string> same_quantity(const std::string& name) {
    std::vector<std::string> out{name};
    for (const auto& [raw, alias] : kAliases) {
        if (name == raw) out.emplace_back(alias);
        if (name == alias) out.emplace_back(raw);
    }
    return out;
}

SystemParams resolve_params(const std::map<std::string, double>& ov) {
    SystemParams p = reference_device();
    auto has = [&](const char* k) { return ov.count(k) > 0; };
    auto get = [&](const char* k) { return ov.at(k); };
    for (const auto& [raw, alias] : kAliases)
        if (has(raw) && has(alias)) throw ConfigError(std::string(raw) + " and " + alias + " both given");
    double* fields[] = {&p.omega_m, &p.lambda1, &p.lambda2, &p.kappa, &p.gamma, &p.n_th, &p.mass,
                        &p.rod_length, &p.alpha_mag, &p.young_modulus, &p.B_z, &p.N1, &p.N2};
    for (std::size_t i = 0; i < 13; ++i)
        if (ov.count(kRaw[i])) *fields[i] = ov.at(kRaw[i]);
    if (has("alpha_re") || has("alpha_im")) {
        p.alpha = cplx(has("alpha_re") ? get("alpha_re") : p.alpha.real(), has("alpha_im") ? get("alpha_im") : p.alpha.imag());
    }
    if (has("beta_re") || has("beta_im")) {
        p.beta = cplx(has("beta_re") ? get("beta_re") : p.beta.real(), has("beta_im") ? get("beta_im") : p.beta.imag());
    }
    if (has("lambda1_rel")) p.lambda1 = get("lambda1_rel") * p.omega_m;
    if (has("lambda2_rel")) p.lambda2 = get("lambda2_rel") * p.omega_m;
    if (has("kappa_rel")) p.kappa = get("kappa_rel") * p.omega_m;
    if (has("gamma_rel")) p.gamma = get("gamma_rel") * p.omega_m;
    try {
        if (has("r")) p.N2 = r_for_target(p, get("r"));
        if (has("f_rel")) p.B_z = bz_for_drive(p, get("f_rel") * p.omega_m);
        validate(p);
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("invalid parameters: ") + e.what());
    }
    return p;
}

double ScenarioConfig::number(const std::string& key, double fallback) const {
    auto it = numerics.find(key);
    return it == numerics.end() ? fallback : to_double(key, it->second);
}

int ScenarioConfig::integer(const std::string& key, int fallback) const {
    auto it = numerics.find(key);
    return it == numerics.end() ? fallback : to_int(key, it->second);
}

bool ScenarioConfig::flag(const std::string& key, bool fallback) const {
    auto it = numerics.find(key);
    if (it == numerics.end()) return fallback;
    const std::string v = boost::to_lower_copy(boost::trim_copy(it->second));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("'" + key + "': expected a boolean");
}

std::vector<double> ScenarioConfig::list(const std::string& key, const std::vector<double>& fallback) const {
    auto it = numerics.find(key);
    if (it == numerics.end()) return fallback;
    std::vector<std::string> parts;
    boost::split(parts, it->second, boost::is_any_of(","));
    std::vector<double> out;
    for (const auto& s : parts) out.push_back(to_double(key, s));
    return out;
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {"derive",         "squeezing",        "tomography",
                                                   "pae",            "qfi",              "sensitivity-surface",
                                                   "sensitivity-vs-r", "cfi-window",     "cfi-vs-nth",
                                                   "cfi-vs-decay",   "spectra"};
    return names;
}

ScenarioConfig parse_config(const std::string& text, const std::string& name) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ScenarioConfig c;
    c.source = text;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside a section");
        if (section == "scenario") {
            for (const auto& [k, v] : body) {
                if (k == "name") {
                    c.name = boost::trim_copy(v.data());
                } else {
                    throw ConfigError("unknown key '" + k + "' in [scenario]");
                }
            }
        } else if (section == "params") {
            for (const auto& [k, v] : body) apply_param(c.overrides, k, to_double(k, v.data()));
        } else if (section == "sweep") {
            for (const auto& [k, v] : body) {
                for (const auto& a : c.sweep)
                    if (a.variable == k) throw ConfigError("duplicate sweep axis '" + k + "'");
                c.sweep.push_back(parse_axis(k, v.data()));
            }
        } else if (section == "numerics") {
            for (const auto& [k, v] : body) c.numerics[k] = boost::trim_copy(v.data());
        } else if (section == "spectra") {
            for (const auto& [k, v] : body) {
                if (std::find(kSpectra.begin(), kSpectra.end(), k) == kSpectra.end()) {
                    throw ConfigError("unknown key '" + k + "' in [spectra]");
                }
                c.spectra[k] = to_double(k, v.data());
            }
        } else {
            throw ConfigError("unknown section [" + section + "]");
        }
    }
    if (!name.empty()) {
        if (!c.name.empty() && c.name != name) {
            throw ConfigError("config is for scenario '" + c.name + "', not '" + name + "'");
        }
        c.name = name;
    }
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), c.name) == names.end()) {
        throw ConfigError("unknown scenario '" + c.name + "'");
    }
    resolve_params(c.overrides);
    return c;
}

ScenarioConfig load_config(const std::string& path, const std::string& name) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), name);
}

SpectraParams resolve_spectra(const std::map<std::string, double>& v) {
    auto get = [&](const char* k, double fallback) { return v.count(k) ? v.at(k) : fallback; };
    SpectraParams sp = resonant_sensor_defaults(get("r", 0.6), get("use_omega_m", 0.0) != 0.0);
    constexpr double two_pi = 6.283185307179586476925286766559;
    sp.mass = get("mass", sp.mass);
    sp.omega_res = get("omega_res", sp.omega_res);
    sp.gamma = get("gamma_hz", sp.gamma / two_pi) * two_pi;
    sp.temperature = get("temperature", sp.temperature);
    sp.probe_power = get("probe_power", sp.probe_power);
    sp.omega_L = get("omega_L_hz", sp.omega_L / two_pi) * two_pi;
    sp.kappa_total = get("kappa_hz", sp.kappa_total / two_pi) * two_pi;
    sp.kappa_ex = get("kappa_ex_hz", sp.kappa_ex / two_pi) * two_pi;
    if (v.count("G_mhz_per_nm")) sp.coupling_G = coupling_from_mhz_per_nm(v.at("G_mhz_per_nm"));
    sp.detection_efficiency = get("detection_efficiency", sp.detection_efficiency);
    try {
        sp.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("invalid spectra parameters: ") + e.what());
    }
    return sp;
}

}  // namespace optomag
