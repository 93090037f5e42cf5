#pragma once

#include "twm/compare.hpp"
#include "twm/critical.hpp"
#include "twm/io/config.hpp"
#include "twm/io/output.hpp"
#include "twm/io/sweep.hpp"
#include "twm/verify.hpp"

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace twm::io {

namespace fs = std::filesystem;

/// Outcome of one task: `ok` is false when an embedded validation failed.
struct TaskResult {
    bool ok = true;
    json summary;
    std::vector<std::string> messages;
};

namespace detail {

inline CarrierVector carriers(const LaserConfig& cfg, const Scenario& sc) {
    auto v = sc.numbers("n", {});
    if (v.empty()) v.assign(cfg.size(), 1.0);
    if (v.size() != cfg.size()) throw ConfigError("option 'n' needs one value per section");
    return v;
}

inline cplx complex_option(const Scenario& sc, const std::string& k, cplx fallback) {
    if (!sc.has(k)) return fallback;
    const auto v = to_complex(sc.text(k, ""));
    if (!v) throw ConfigError("scenario option '" + k + "' is not a complex number");
    return *v;
}

inline json carriers_json(const CarrierVector& n) { return json(std::vector<double>(n.begin(), n.end())); }

inline std::optional<Window> window_option(const LaserConfig& cfg, const CarrierVector& n, const Scenario& sc) {
    if (sc.has("window")) {
        const auto w = sc.numbers("window");
        if (w.size() != 4) throw ConfigError("option 'window' is 're_min re_max im_min im_max'");
        return Window{w[0], w[1], w[2], w[3]};
    }
    if (sc.has("im_half")) {
        auto w = default_window(cfg, n);
        const double h = sc.number("im_half", 0.0);
        w.im_min = -h;
        w.im_max = h;
        return w;
    }
    return std::nullopt;
}

} // namespace detail

// ---------------------------------------------------------------- simulate

struct SimulateResult {
    SimOutput output;
    RegimeSummary regime;
    FieldState final_state;
};

inline SimulateResult simulate_run(const LaserConfig& cfg, const Scenario& sc) {
    const int cells = static_cast<int>(sc.number("cells", 125));
    const auto g = SimGrid::with_first_section(cfg, cells);
    const auto n0 = detail::carriers(cfg, sc);
    auto s = initial_state(cfg, g, detail::complex_option(sc, "amplitude", 1e-3), n0);
    RunOptions o;
    o.stride = std::max(1, static_cast<int>(std::lround(sc.number("sample_dt", 0.05) / g.dz)));
    o.snapshot_times = {sc.number("horizon", 100.0)};
    SimulateResult r;
    r.output = run(cfg, s, {}, sc.number("horizon", 100.0), o);
    r.regime = classify(r.output);
    r.final_state = r.output.snapshots.back();
    r.output.snapshots.clear();
    return r;
}

inline TaskResult task_simulate(const LaserConfig& cfg, const Scenario& sc, const fs::path& out) {
    const auto r = simulate_run(cfg, sc);
    {
        CsvWriter w(out / "timeseries.csv", sample_header(cfg.size()));
        for (const auto& x : r.output.samples) w.row(sample_row(x));
    }
    const auto& last = r.output.samples.back();
    TaskResult t;
    t.summary = {{"task", "simulate"},
                 {"t_final", last.t},
                 {"n_final", detail::carriers_json(last.n)},
                 {"power_final", last.power},
                 {"regime", to_string(r.regime.regime)},
                 {"mean_power", r.regime.mean_power},
                 {"swing", r.regime.swing},
                 {"peaks", r.regime.peaks},
                 {"dz", r.final_state.grid.dz}};
    write_json(out / "summary.json", t.summary);
    t.messages.push_back(std::string("regime: ") + to_string(r.regime.regime));
    return t;
}

// ---------------------------------------------------------------- spectrum

inline TaskResult task_spectrum(const LaserConfig& cfg, const Scenario& sc, const fs::path& out) {
    const auto n = detail::carriers(cfg, sc);
    const auto sp = find_eigenvalues(cfg, n, detail::window_option(cfg, n, sc));
    {
        CsvWriter w(out / "eigenvalues.csv", {"lambda_re", "lambda_im", "multiplicity", "residual"});
        for (const auto& e : sp.eigenvalues) w.row({e.lambda.real(), e.lambda.imag(), double(e.multiplicity), e.residual});
    }
    TaskResult t;
    t.summary = to_json(sp);
    t.summary["n"] = detail::carriers_json(n);
    const int viol = verify::bound_violations(sp);
    t.summary["bound_violations"] = viol;
    write_json(out / "spectrum.json", t.summary);
    if (sp.harvested != sp.winding) {
        t.ok = false;
        t.messages.push_back("harvested " + std::to_string(sp.harvested) + " roots but winding number is " +
                             std::to_string(sp.winding));
    }
    if (viol) {
        t.ok = false;
        t.messages.push_back(std::to_string(viol) + " eigenvalues above Lambda_u");
    }
    t.messages.push_back(std::to_string(sp.eigenvalues.size()) + " eigenvalues");
    return t;
}

// ---------------------------------------------------------------- critical

inline CriticalResult critical_run(const LaserConfig& cfg, const Scenario& sc) {
    const auto n = detail::carriers(cfg, sc);
    const auto idx = static_cast<std::size_t>(sc.number("free_index", 0));
    std::optional<double> omega;
    if (sc.has("omega")) omega = sc.number("omega", 0.0);
    CriticalOptions o;
    o.expected_q = static_cast<int>(sc.number("q", 1));
    return critical_density_search(cfg, n, idx, omega, o);
}

inline json to_json(const CriticalResult& r) {
    return {{"n", detail::carriers_json(r.n)},
            {"omega", r.omega},
            {"iterations", r.iterations},
            {"gap_confirmed", r.gap_confirmed},
            {"message", r.message},
            {"spectrum", to_json(r.spectrum)}};
}

inline TaskResult task_critical(const LaserConfig& cfg, const Scenario& sc, const fs::path& out) {
    const auto r = critical_run(cfg, sc);
    TaskResult t;
    t.summary = to_json(r);
    write_json(out / "critical.json", t.summary);
    if (!r.gap_confirmed) {
        t.ok = false;
        t.messages.push_back("no spectral gap confirmed: " + r.message);
    }
    std::ostringstream os;
    os.precision(12);
    os << "critical n = (";
    for (std::size_t k = 0; k < r.n.size(); ++k) os << (k ? ", " : "") << r.n[k];
    os << "), omega = " << r.omega << ", q = " << r.spectrum.gap.q << ", xi = " << r.spectrum.gap.xi;
    t.messages.push_back(os.str());
    return t;
}

// ---------------------------------------------------------------- reduce

/// Critical search, then a basis over [n* - box_below, n* + box_above] in the
/// free section; every other density is held fixed.
inline ModeBasis reduce_run(const LaserConfig& cfg, const Scenario& sc) {
    const auto crit = critical_run(cfg, sc);
    if (!crit.gap_confirmed) throw NumericalError("reduce: no spectral gap at the critical density");
    const auto idx = static_cast<std::size_t>(sc.number("free_index", 0));
    ValidityBox box{crit.n, crit.n};
    box.lo[idx] -= sc.number("box_below", 0.03);
    box.hi[idx] += sc.number("box_above", 0.06);
    const int q = static_cast<int>(sc.number("q", crit.spectrum.gap.q));
    return build_basis(cfg, crit.n, q, box);
}

inline TaskResult task_reduce(const LaserConfig& cfg, const Scenario& sc, const fs::path& out) {
    const auto b = reduce_run(cfg, sc);
    TaskResult t;
    write_json(out / "basis.json", to_json(b));
    t.summary = {{"n_ref", detail::carriers_json(b.n_ref())}, {"q", b.q()}, {"trust_radius", b.trust_radius()}};
    t.messages.push_back("basis with q = " + std::to_string(b.q()) + " written");
    return t;
}

// ---------------------------------------------------------------- compare

inline CompareReport compare_run(const LaserConfig& cfg, const Scenario& sc) {
    const auto b = reduce_run(cfg, sc);
    ReducedState init;
    init.n = b.n_ref();
    init.Ec.assign(b.q(), detail::complex_option(sc, "ec", 2.0));
    CompareOptions o;
    o.cells_first = static_cast<int>(sc.number("cells", 250));
    o.sample_dt = sc.number("sample_dt", 1.0);
    o.stable_delta = sc.number("delta", 0.0);
    const double horizon = sc.number("horizon", cfg.epsilon > 0.0 ? 10.0 / cfg.epsilon : 100.0);
    return compare_full_vs_reduced(cfg, b, init, horizon, o);
}

inline TaskResult task_compare(const LaserConfig& cfg, const Scenario& sc, const fs::path& out) {
    const auto r = compare_run(cfg, sc);
    {
        CsvWriter w(out / "compare.csv", {"t", "abs_dn", "abs_dmod", "stable_norm"});
        for (std::size_t i = 0; i < r.t.size(); ++i) w.row({r.t[i], r.dn[i], r.dmod[i], r.stable_norm[i]});
    }
    TaskResult t;
    t.summary = {{"sup_dn", r.sup_dn}, {"sup_dmod", r.sup_dmod}, {"xi", r.xi}, {"dz", r.dz}, {"epsilon", cfg.epsilon}};
    if (r.decay_rate) t.summary["decay_rate"] = *r.decay_rate;
    if (r.stable_lambda) t.summary["stable_lambda"] = to_json(*r.stable_lambda);
    write_json(out / "compare.json", t.summary);
    t.messages.push_back("sup |dn| = " + verify::sci(r.sup_dn) + ", sup ||proj| - |Ec|| = " + verify::sci(r.sup_dmod));
    return t;
}

// ---------------------------------------------------------------- verify

inline TaskResult task_verify(const LaserConfig&, const Scenario& sc, const fs::path& out) {
    const auto checks = verify::oracle_battery(sc.seed);
    TaskResult t;
    json arr = json::array();
    for (const auto& c : checks) {
        arr.push_back({{"id", c.id}, {"name", c.name}, {"pass", c.pass}, {"detail", c.detail}, {"seconds", c.seconds}});
        std::ostringstream os;
        os << (c.pass ? "PASS " : "FAIL ") << c.id << "  " << c.name << "  (" << c.detail << ")";
        t.messages.push_back(os.str());
        t.ok = t.ok && c.pass;
    }
    t.summary = {{"seed", sc.seed}, {"checks", arr}};
    write_json(out / "verify.json", t.summary);
    return t;
}

// ---------------------------------------------------------------- sweep

/// Summary columns for one sweep point of the given task.
inline std::vector<std::string> sweep_columns(const std::string& task) {
    if (task == "simulate")
        return {"power_final", "mean_power", "swing", "peaks", "regime", "n1_final", "lambda_re", "lambda_im"};
    if (task == "spectrum") return {"count", "lambda_re", "lambda_im", "Lambda_u"};
    if (task == "critical") return {"n_free", "omega", "q", "xi"};
    if (task == "compare") return {"sup_dn", "sup_dmod", "decay_rate"};
    throw ConfigError("sweep_task must be simulate, spectrum, critical or compare");
}

inline std::vector<std::string> sweep_point(const std::string& task, const LaserConfig& cfg, const Scenario& sc) {
    using detail::fmt;
    if (task == "simulate") {
        const auto r = simulate_run(cfg, sc);
        const auto& last = r.output.samples.back();
        double p = 0.0;
        for (double v : last.power) p += v;
        // Dominant eigenvalue at the final density.
        std::string lre, lim;
        if (r.regime.regime != Regime::runaway) {
            const auto sp = find_eigenvalues(cfg, last.n);
            if (!sp.eigenvalues.empty()) {
                lre = fmt(sp.eigenvalues.front().lambda.real());
                lim = fmt(sp.eigenvalues.front().lambda.imag());
            }
        }
        return {fmt(p), fmt(r.regime.mean_power), fmt(r.regime.swing), std::to_string(r.regime.peaks),
                to_string(r.regime.regime), fmt(last.n[0]), lre, lim};
    }
    if (task == "spectrum") {
        const auto n = detail::carriers(cfg, sc);
        const auto sp = find_eigenvalues(cfg, n, detail::window_option(cfg, n, sc));
        if (sp.eigenvalues.empty()) return {"0", "", "", fmt(sp.Lambda_u)};
        return {std::to_string(sp.eigenvalues.size()), fmt(sp.eigenvalues.front().lambda.real()),
                fmt(sp.eigenvalues.front().lambda.imag()), fmt(sp.Lambda_u)};
    }
    if (task == "critical") {
        const auto r = critical_run(cfg, sc);
        return {fmt(r.n[static_cast<std::size_t>(sc.number("free_index", 0))]), fmt(r.omega),
                std::to_string(r.spectrum.gap.q), fmt(r.spectrum.gap.xi)};
    }
    const auto r = compare_run(cfg, sc);
    return {fmt(r.sup_dn), fmt(r.sup_dmod), r.decay_rate ? fmt(*r.decay_rate) : std::string()};
}

inline TaskResult task_sweep(const LaserConfig& cfg, const Scenario& sc, const fs::path& out) {
    const auto task = sc.text("sweep_task", "simulate");
    const auto cols = sweep_columns(task);
    const auto pts = sweep_points(cfg, sc);
    const auto rows = run_points(pts, sc.threads, [&](const SweepPoint& p) { return sweep_point(task, p.config, sc); },
                                 cols.size());
    std::vector<std::string> header{"index"};
    for (const auto& a : sc.sweeps) header.push_back(a.path);
    header.push_back("status");
    header.insert(header.end(), cols.begin(), cols.end());
    CsvWriter w(out / "sweep.csv", header);
    TaskResult t;
    int failed = 0;
    std::map<std::string, int> regimes;
    const auto regime_col = std::find(cols.begin(), cols.end(), "regime") - cols.begin();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<std::string> r{std::to_string(pts[i].index)};
        for (double v : pts[i].values) r.push_back(detail::fmt(v));
        r.push_back(rows[i].status);
        r.insert(r.end(), rows[i].fields.begin(), rows[i].fields.end());
        w.row_text(r);
        if (rows[i].status != "ok") ++failed;
        else if (static_cast<std::size_t>(regime_col) < cols.size()) ++regimes[rows[i].fields[regime_col]];
    }
    t.summary = {{"points", rows.size()}, {"failed", failed}, {"regimes", regimes}};
    t.messages.push_back(std::to_string(rows.size()) + " points, " + std::to_string(failed) + " failed");
    for (const auto& [k, v] : regimes) t.messages.push_back(k + ": " + std::to_string(v));
    return t;
}

inline const std::vector<std::string>& task_names() {
    static const std::vector<std::string> names{"simulate", "spectrum", "critical", "reduce", "compare", "verify", "sweep"};
    return names;
}

inline TaskResult run_task(const std::string& task, const LaserConfig& cfg, const Scenario& sc, const fs::path& out) {
    fs::create_directories(out);
    if (task == "simulate") return task_simulate(cfg, sc, out);
    if (task == "spectrum") return task_spectrum(cfg, sc, out);
    if (task == "critical") return task_critical(cfg, sc, out);
    if (task == "reduce") return task_reduce(cfg, sc, out);
    if (task == "compare") return task_compare(cfg, sc, out);
    if (task == "verify") return task_verify(cfg, sc, out);
    if (task == "sweep") return task_sweep(cfg, sc, out);
    throw ConfigError("unknown task '" + task + "'");
}

} // namespace twm::io
