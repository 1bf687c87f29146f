#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "optomag/csv.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("optomag_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string& args) {
    const std::string cmd = std::string(OPTOMAG_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "run.ini";
    std::ofstream(p) << text;
    return p;
}

}  // namespace

TEST_CASE("cli: derive writes a csv and a manifest") {
    const auto out = scratch("derive");
    REQUIRE(run("derive --out " + out.string()) == 0);
    const auto t = optomag::read_csv((out / "derive.csv").string());
    CHECK(t.schema() == "derive");
    REQUIRE(t.rows() == 1);
    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["scenario"] == "derive");
    CHECK(manifest["exit_code"] == 0);
    CHECK(manifest["files"].size() == 1);
}

TEST_CASE("cli: configuration errors exit with 2") {
    const auto out = scratch("bad");
    const auto cfg = write_config(out, "[params]\nno_such_parameter = 1\n");
    CHECK(run("qfi --config " + cfg.string() + " --out " + out.string()) == 2);
    const auto err = nlohmann::json::parse(slurp(out / "error.json"));
    CHECK(err["error"] == "ConfigError");
    CHECK(err["exit_code"] == 2);
    const auto cfg2 = write_config(out, "[params]\nr = 0.3\nN2 = 1e5\n");
    CHECK(run("qfi --config " + cfg2.string() + " --out " + out.string()) == 2);
    CHECK(run("qfi --threads 0") == 2);
    CHECK(run("no-such-scenario") == 2);
}

TEST_CASE("cli: truncation failures exit with 3, partial sweeps with 4") {
    const auto out = scratch("trunc");
    const auto one = write_config(out, "[params]\nn_th = 1e3\ngamma_rel = 0.01\n[numerics]\nmax_mech_dim = 60\n");
    CHECK(run("cfi-vs-nth --config " + one.string() + " --out " + out.string()) == 3);
    const auto err = nlohmann::json::parse(slurp(out / "error.json"));
    CHECK(err["error"] == "TruncationError");
    const auto out2 = scratch("partial");
    const auto sweep = write_config(out2, "[params]\ngamma_rel = 0.01\n[sweep]\nn_th = 0.1:1e3:2:log\n[numerics]\nmax_mech_dim = 60\n");
    CHECK(run("cfi-vs-nth --config " + sweep.string() + " --out " + out2.string()) == 4);
    const auto failures = nlohmann::json::parse(slurp(out2 / "failures.json"));
    REQUIRE(failures["failures"].size() == 1);
    const auto t = optomag::read_csv((out2 / "cfi_vs_nth.csv").string());
    CHECK(t.rows() == 1);
}

TEST_CASE("cli: output is byte-identical across thread counts") {
    const auto a = scratch("det1"), b = scratch("det2");
    const std::string cfg =
        "[params]\nr = 0.2\ngamma_rel = 0.01\n[sweep]\nkappa_rel = 0.0:0.02:3\n[numerics]\nrichardson = false\n";
    const auto ca = write_config(a, cfg), cb = write_config(b, cfg);
    REQUIRE(run("cfi-vs-decay --threads 1 --config " + ca.string() + " --out " + a.string()) == 0);
    REQUIRE(run("cfi-vs-decay --threads 2 --config " + cb.string() + " --out " + b.string()) == 0);
    const std::string x = slurp(a / "cfi_vs_decay.csv");
    CHECK(!x.empty());
    CHECK(x == slurp(b / "cfi_vs_decay.csv"));
    REQUIRE(run("qfi --threads 1 --out " + a.string()) == 0);
    REQUIRE(run("qfi --threads 3 --out " + b.string()) == 0);
    CHECK(slurp(a / "qfi.csv") == slurp(b / "qfi.csv"));
}

TEST_CASE("cli: qfi sweep slope in r") {
    const auto out = scratch("slope");
    REQUIRE(run("qfi --out " + out.string()) == 0);
    const auto t = optomag::read_csv((out / "qfi.csv").string());
    const auto& cols = t.columns();
    const auto ir = std::find(cols.begin(), cols.end(), "r_eff") - cols.begin();
    const auto il = std::find(cols.begin(), cols.end(), "ln_fq") - cols.begin();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(t.rows());
    for (const auto& row : t.data()) {
        sx += row[ir];
        sy += row[il];
        sxx += row[ir] * row[ir];
        sxy += row[ir] * row[il];
    }
    CHECK(std::abs((n * sxy - sx * sy) / (n * sxx - sx * sx) - 12.0) < 1e-8);
}
