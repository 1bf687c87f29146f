#pragma once

#include <map>
#include <string>
#include <vector>

#include "optomag/params.hpp"
#include "optomag/spectra.hpp"

namespace optomag {

/// One sweep axis: `variable = min:max:count[:log]`.
struct SweepAxis {
    std::string variable;
    double min = 0.0;
    double max = 0.0;
    int count = 0;
    bool log = false;

    std::vector<double> values() const;
};

SweepAxis parse_axis(const std::string& variable, const std::string& text);

/// Names accepted by apply_param, in documentation order.
const std::vector<std::string>& parameter_names();

/// Sets a physical parameter or one of the shorthands (r, *_rel, f_rel, alpha_re, ...).
/// Shorthands are resolved after raw fields, see resolve_params.
void apply_param(std::map<std::string, double>& overrides, const std::string& name, double value);

/// `name` and the names that set the same field (raw field and its *_rel / r / f_rel shorthand).
std::vector<std::string> same_quantity(const std::string& name);

/// Reference-device defaults with overrides applied; shorthands in units of omega_m.
SystemParams resolve_params(const std::map<std::string, double>& overrides);

struct ScenarioConfig {
    std::string name;
    std::map<std::string, double> overrides;
    std::vector<SweepAxis> sweep;
    std::map<std::string, std::string> numerics;
    std::map<std::string, double> spectra;
    std::string source;  // raw text

    double number(const std::string& key, double fallback) const;
    int integer(const std::string& key, int fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;
};

const std::vector<std::string>& scenario_names();

/// Parses INI text; `name` overrides [scenario] name when non-empty.
ScenarioConfig parse_config(const std::string& text, const std::string& name = "");
ScenarioConfig load_config(const std::string& path, const std::string& name = "");

/// Spectra inputs from the [spectra] section on top of the resonant-sensor defaults.
SpectraParams resolve_spectra(const std::map<std::string, double>& values);

}  // namespace optomag
