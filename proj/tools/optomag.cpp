#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "optomag/config.hpp"
#include "optomag/errors.hpp"
#include "optomag/scenario.hpp"

namespace {

int report_error(const std::exception& e, int code, const std::string& out_dir) {
    const nlohmann::json err = {{"error", optomag::error_name(e)}, {"message", e.what()}, {"exit_code", code}};
    std::cerr << err.dump() << '\n';
    if (!out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        std::ofstream f(std::filesystem::path(out_dir) / "error.json");
        if (f) f << err.dump(2) << '\n';
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dual-coupling optomechanical magnetometer: scenario runner"};
    app.set_version_flag("--version", optomag::tool_version);
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    int threads = 1;
    std::uint64_t seed = 0;
    bool strict = false;

    for (const auto& name : optomag::scenario_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " scenario");
        sub->add_option("--config", config_path, "INI configuration file");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--threads", threads, "worker threads for sweeps")->capture_default_str()->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "reserved; no stochastic paths")->capture_default_str();
        sub->add_flag("--strict", strict, "treat warnings as errors");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        const optomag::ScenarioConfig cfg =
            config_path.empty() ? optomag::parse_config("", name) : optomag::load_config(config_path, name);
        optomag::RunOptions opt;
        opt.out_dir = out_dir;
        opt.threads = threads;
        opt.seed = seed;
        opt.strict = strict;
        const optomag::RunResult res = optomag::run_scenario(cfg, opt);
        for (const auto& f : res.files) std::cout << (std::filesystem::path(out_dir) / f).string() << '\n';
        if (res.exit_code == 4) {
            const nlohmann::json err = {{"error", "PartialFailure"},
                                        {"message", std::to_string(res.failures.size()) + " sweep point(s) failed"},
                                        {"exit_code", 4},
                                        {"failures", res.manifest["failures"]}};
            std::cerr << err.dump() << '\n';
        }
        return res.exit_code;
    } catch (const std::exception& e) {
        return report_error(e, optomag::exit_code_for(e), out_dir);
    }
}
