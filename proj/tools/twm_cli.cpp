#include "twm/io/tasks.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace twm;

namespace {

struct Globals {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::vector<std::string> set;  // key=value scenario overrides
};

int run(const std::string& task, const Globals& g) {
    LaserConfig cfg;
    io::Scenario sc;
    if (!g.config.empty()) {
        const auto parsed = io::parse_config(g.config);
        for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
        cfg = parsed.config;
        if (parsed.scenario) sc = *parsed.scenario;
    } else if (task != "verify") {
        throw ConfigError("--config is required for '" + task + "'");
    }
    for (const auto& kv : g.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        const auto key = io::detail::trim(kv.substr(0, eq));
        if (!io::scenario_option_keys().count(key)) throw ConfigError("unknown scenario option '" + key + "'");
        sc.options[key] = io::detail::trim(kv.substr(eq + 1));
    }
    if (g.seed) sc.seed = *g.seed;
    if (g.threads) sc.threads = *g.threads;
    sc.task = task;
    const std::string out = !g.out.empty() ? g.out : !sc.out.empty() ? sc.out : "out";

    const auto r = io::run_task(task, cfg, sc, out);
    for (const auto& m : r.messages) std::cout << m << "\n";
    if (!r.ok) std::cerr << task << ": validation failed\n";
    return r.ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Traveling-wave laser model: simulation, spectra and mode reduction"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "Configuration file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Output directory (default: scenario 'out' or ./out)");
    app.add_option("--seed", g.seed, "Seed for randomized inputs");
    app.add_option("--threads", g.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--set", g.set, "Override a scenario option, key=value (repeatable)");

    const std::map<std::string, std::string> help{
        {"simulate", "Integrate the full model; writes timeseries.csv and summary.json"},
        {"spectrum", "Eigenvalues of H(n) in a window; writes spectrum.json and eigenvalues.csv"},
        {"critical", "Critical density search; writes critical.json"},
        {"reduce", "Build the centre-mode basis; writes basis.json"},
        {"compare", "Full model against the reduced ODE; writes compare.csv and compare.json"},
        {"verify", "Run the oracle battery; writes verify.json"},
        {"sweep", "Grid of runs over one or two parameters; writes sweep.csv"}};
    for (const auto& name : io::task_names()) app.add_subcommand(name, help.at(name))->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return run(app.get_subcommands().front()->get_name(), g);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
