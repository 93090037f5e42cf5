#include "catch_amalgamated.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
    const std::string cmd = std::string(TWM_CLI) + " " + args + " >/dev/null 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("twm-cli-" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const std::string fig1 = std::string(TWM_CONFIG_DIR) + "/fig1.cfg";
const std::string fig1c = std::string(TWM_CONFIG_DIR) + "/fig1-critical.cfg";

} // namespace

TEST_CASE("usage errors", "[cli]") {
    CHECK(cli("") != 0);
    CHECK(cli("frobnicate") != 0);
    CHECK(cli("simulate") == 2);  // no config
    CHECK(cli("simulate --config " + fig1 + " --set bogus=1") == 2);
}

TEST_CASE("spectrum and critical outputs", "[cli]") {
    const auto out = scratch("spec");
    REQUIRE(cli("spectrum --config " + fig1 + " --out " + out.string() + " --set n=\"1.03 1\"") == 0);
    const auto sp = nlohmann::json::parse(slurp(out / "spectrum.json"));
    CHECK(sp["winding"] == sp["harvested"]);
    CHECK(sp["bound_violations"] == 0);
    CHECK(slurp(out / "eigenvalues.csv").find("lambda_re,lambda_im") == 0);

    REQUIRE(cli("critical --config " + fig1c + " --out " + out.string()) == 0);
    const auto cr = nlohmann::json::parse(slurp(out / "critical.json"));
    CHECK(cr["gap_confirmed"] == true);
    CHECK(cr["n"][0].get<double>() == Catch::Approx(1.0286).margin(1e-4));
}

TEST_CASE("reduce writes the basis profiles", "[cli]") {
    const auto out = scratch("reduce");
    REQUIRE(cli("reduce --config " + fig1c + " --out " + out.string()) == 0);
    const auto b = nlohmann::json::parse(slurp(out / "basis.json"));
    CHECK(b["q"] == 1);
    CHECK(b["modes"][0]["profile"][0].size() == 12);
    CHECK(b["modes"][0]["z"].size() == b["modes"][0]["profile"].size());
}

TEST_CASE("simulate is reproducible byte for byte", "[cli]") {
    const auto a = scratch("sim-a"), b = scratch("sim-b");
    const std::string args = " --config " + fig1 + " --set horizon=10 --set cells=40 --set sample_dt=0.5";
    REQUIRE(cli("simulate --out " + a.string() + args) == 0);
    REQUIRE(cli("simulate --out " + b.string() + args) == 0);
    CHECK(slurp(a / "timeseries.csv") == slurp(b / "timeseries.csv"));
    CHECK(slurp(a / "timeseries.csv").find("t,n1,n2,power1,power2,out0_re") == 0);
}

TEST_CASE("compare writes the error report", "[cli]") {
    const auto out = scratch("cmp");
    REQUIRE(cli("compare --config " + fig1c + " --out " + out.string() + " --set horizon=20 --set cells=125") == 0);
    CHECK(slurp(out / "compare.csv").find("t,abs_dn,abs_dmod,stable_norm") == 0);
    const auto j = nlohmann::json::parse(slurp(out / "compare.json"));
    CHECK(j["sup_dn"].get<double>() < 1e-3);
}
