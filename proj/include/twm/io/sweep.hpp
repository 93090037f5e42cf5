#pragma once

#include "twm/io/config.hpp"
#include "twm/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace twm::io {

enum class Regime { steady, oscillating, drifting, runaway };

inline const char* to_string(Regime r) {
    switch (r) {
    case Regime::steady: return "steady";
    case Regime::oscillating: return "oscillating";
    case Regime::drifting: return "drifting";
    case Regime::runaway: return "runaway";
    }
    return "?";
}

struct RegimeOptions {
    double window_fraction = 0.25;  // final part of the run that is inspected
    double steady_swing = 1e-3;     // (max - min) / mean of the total power
    double osc_swing = 1e-2;
    int osc_peaks = 10;
    double runaway_power = 1e3;
    double runaway_density = 10.0;
};

struct RegimeSummary {
    Regime regime = Regime::steady;
    double mean_power = 0.0;
    double swing = 0.0;
    int peaks = 0;
};

/// Labels the tail of a run from the total power: flat, periodic with many
/// peaks, slowly drifting, or escaping to large power / density.
inline RegimeSummary classify(const SimOutput& out, const RegimeOptions& o = {}) {
    RegimeSummary s;
    if (out.samples.empty()) return s;
    const double t_end = out.samples.back().t;
    const double t0 = out.samples.front().t + (1.0 - o.window_fraction) * (t_end - out.samples.front().t);
    std::vector<double> P;
    double nmax = 0.0;
    for (const auto& x : out.samples) {
        if (x.t < t0) continue;
        double p = 0.0;
        for (double v : x.power) p += v;
        P.push_back(p);
        for (double v : x.n) nmax = std::max(nmax, std::abs(v));
    }
    if (P.empty()) return s;
    double mn = P.front(), mx = P.front(), sum = 0.0;
    for (double p : P) {
        mn = std::min(mn, p);
        mx = std::max(mx, p);
        sum += p;
    }
    s.mean_power = sum / P.size();
    s.swing = s.mean_power > 0.0 ? (mx - mn) / s.mean_power : 0.0;
    // Peaks that rise above the mean by a visible fraction of the swing.
    const double level = s.mean_power + 0.25 * (mx - s.mean_power);
    for (std::size_t k = 1; k + 1 < P.size(); ++k)
        if (P[k] > P[k - 1] && P[k] >= P[k + 1] && P[k] > level) ++s.peaks;

    if (!std::isfinite(s.mean_power) || s.mean_power > o.runaway_power || nmax > o.runaway_density)
        s.regime = Regime::runaway;
    else if (s.swing < o.steady_swing)
        s.regime = Regime::steady;
    else if (s.swing >= o.osc_swing && s.peaks >= o.osc_peaks)
        s.regime = Regime::oscillating;
    else
        s.regime = Regime::drifting;
    return s;
}

struct SweepPoint {
    std::size_t index = 0;
    std::vector<double> values;  // one per axis
    LaserConfig config;
    std::uint64_t seed = 0;
};

/// Cartesian grid over the axes, first axis slowest.
inline std::vector<SweepPoint> sweep_points(const LaserConfig& base, const Scenario& sc) {
    std::vector<SweepPoint> pts;
    if (sc.sweeps.empty()) {
        pts.push_back({0, {}, base, sc.seed});
        return pts;
    }
    const auto a = sc.sweeps[0].values();
    const auto b = sc.sweeps.size() > 1 ? sc.sweeps[1].values() : std::vector<double>{0.0};
    for (double va : a)
        for (double vb : b) {
            SweepPoint p;
            p.index = pts.size();
            p.config = base;
            p.values.push_back(va);
            apply_path(p.config, sc.sweeps[0].path, va);
            if (sc.sweeps.size() > 1) {
                p.values.push_back(vb);
                apply_path(p.config, sc.sweeps[1].path, vb);
            }
            p.seed = sc.seed + p.index;
            pts.push_back(std::move(p));
        }
    return pts;
}

/// One output row: status is "ok" or the error text; fields follow the task header.
struct SweepRow {
    std::string status = "ok";
    std::vector<std::string> fields;
};

/// Runs `job` on every point with a bounded pool; rows come back in grid order.
inline std::vector<SweepRow> run_points(const std::vector<SweepPoint>& pts, int threads,
                                        const std::function<std::vector<std::string>(const SweepPoint&)>& job,
                                        std::size_t width) {
    std::vector<SweepRow> rows(pts.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < pts.size(); i = next++) {
            try {
                rows[i].fields = job(pts[i]);
            } catch (const std::exception& e) {
                rows[i].status = std::string("error: ") + e.what();
                rows[i].fields.assign(width, "");
            }
        }
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(pts.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

} // namespace twm::io
