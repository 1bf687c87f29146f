#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "optomag/config.hpp"
#include "optomag/lindblad.hpp"

namespace optomag {

inline constexpr const char* tool_version = "1.0.0";

struct RunOptions {
    std::string out_dir = "out";
    int threads = 1;
    std::uint64_t seed = 0;  // reserved
    bool strict = false;
};

struct PointFailure {
    std::size_t index = 0;
    std::vector<double> point;
    std::string error;
    std::string message;
};

struct RunResult {
    int exit_code = 0;
    std::vector<std::string> files;
    std::vector<PointFailure> failures;
    nlohmann::json manifest;
};

/// Process exit code for an exception: 2 configuration, 3 convergence, 1 otherwise.
int exit_code_for(const std::exception& e);
std::string error_name(const std::exception& e);

/// Cartesian product of the sweep axes in file order; the last axis varies fastest.
std::vector<std::vector<double>> sweep_points(const std::vector<SweepAxis>& axes);

/// Dissipative numerics from the [numerics] section.
DissipativeOptions dissipative_options(const ScenarioConfig& c);

nlohmann::json params_json(const SystemParams& p);
nlohmann::json derived_json(const DerivedParams& d);

/// Runs the scenario, writes CSV files and manifest.json into opt.out_dir.
/// Throws on errors that affect the whole run; failed sweep points are reported with exit code 4.
RunResult run_scenario(const ScenarioConfig& c, const RunOptions& opt);

}  // namespace optomag
