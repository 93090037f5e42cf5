#include "catch_amalgamated.hpp"

#include "twm/io/tasks.hpp"
#include "twm/presets.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace twm;
using namespace twm::io;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("twm-test-" + name);
    std::filesystem::remove_all(p);
    return p;
}

Scenario short_sim() {
    Scenario sc;
    sc.options = {{"horizon", "20"}, {"cells", "40"}, {"sample_dt", "0.1"}, {"amplitude", "0.01"}};
    return sc;
}

SimOutput synthetic(std::function<double(double)> power, double n = 1.0) {
    SimOutput out;
    for (int i = 0; i <= 4000; ++i) {
        const double t = 0.1 * i;
        out.samples.push_back({t, {n}, {power(t)}, 0.0, 0.0, 0.0});
    }
    return out;
}

} // namespace

TEST_CASE("regime classification", "[sweep]") {
    CHECK(classify(synthetic([](double) { return 2.0; })).regime == Regime::steady);
    CHECK(classify(synthetic([](double t) { return 2.0 + 0.5 * std::sin(3.0 * t); })).regime == Regime::oscillating);
    CHECK(classify(synthetic([](double t) { return 2.0 + 0.01 * t; })).regime == Regime::drifting);
    CHECK(classify(synthetic([](double) { return 1e5; })).regime == Regime::runaway);
    CHECK(classify(synthetic([](double) { return 1.0; }, 40.0)).regime == Regime::runaway);
}

TEST_CASE("one-point sweep equals a single run", "[sweep]") {
    const auto cfg = presets::fig1(0.3, 0.0);
    auto sc = short_sim();
    const auto r = simulate_run(cfg, sc);
    const auto row = sweep_point("simulate", cfg, sc);
    const auto& last = r.output.samples.back();
    CHECK(row[0] == io::detail::fmt(last.power[0] + last.power[1]));
    CHECK(row[4] == to_string(r.regime.regime));

    sc.sweeps = {{"phi", 0.0, 0.0, 1, false}};
    const auto out = scratch("one");
    task_sweep(cfg, sc, out);
    const auto csv = slurp(out / "sweep.csv");
    const auto second = csv.substr(csv.find('\n') + 1);
    std::string expect = "0,0,ok";
    for (const auto& f : row) expect += "," + f;
    CHECK(second == expect + "\n");
}

TEST_CASE("sweeps are deterministic and ordered across thread counts", "[sweep]") {
    const auto cfg = presets::fig1(0.3, 0.0);
    auto sc = short_sim();
    sc.sweeps = {{"eta", 0.1, 0.5, 2, false}, {"phi", 0.0, 3.0, 2, false}};
    sc.threads = 1;
    const auto a = scratch("det1"), b = scratch("det3");
    task_sweep(cfg, sc, a);
    sc.threads = 3;
    task_sweep(cfg, sc, b);
    CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
    CHECK(slurp(a / "sweep.csv").find("index,eta,phi,status,power_final") == 0);
}

TEST_CASE("failing points are recorded and the sweep continues", "[sweep]") {
    auto cfg = presets::fig1(0.3, 0.0);
    auto sc = short_sim();
    sc.options["n"] = "1 1";
    // A negative tau is rejected for the second point only.
    sc.sweeps = {{"section1.tau", 359.0, -1.0, 2, false}};
    const auto pts = sweep_points(cfg, sc);
    REQUIRE(pts.size() == 2);
    CHECK(pts[1].seed == sc.seed + 1);
    const auto rows = run_points(pts, 2, [&](const SweepPoint& p) {
        require_valid(p.config);
        return sweep_point("simulate", p.config, sc);
    }, 8);
    CHECK(rows[0].status == "ok");
    CHECK(rows[1].status.rfind("error: ", 0) == 0);
    CHECK(rows[1].fields.size() == 8);
}
