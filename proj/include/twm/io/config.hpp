#pragma once

#include "twm/laser_model.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace twm::io {

/// One swept parameter: `path lo hi count [geometric]`, inclusive.
struct SweepAxis {
    std::string path;
    double lo = 0.0, hi = 0.0;
    int count = 1;
    bool geometric = false;  // equal ratios instead of equal steps

    std::vector<double> values() const {
        std::vector<double> v;
        for (int i = 0; i < count; ++i) {
            const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
            v.push_back(geometric ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f);
        }
        if (count > 1) v.back() = hi;
        return v;
    }
    bool operator==(const SweepAxis&) const = default;
};

struct Scenario {
    std::string task;
    std::string out;
    std::uint64_t seed = 1;
    int threads = 1;
    std::vector<SweepAxis> sweeps;
    std::map<std::string, std::string> options;

    bool has(const std::string& k) const { return options.count(k) != 0; }
    double number(const std::string& k, double fallback) const;
    std::vector<double> numbers(const std::string& k, std::vector<double> fallback = {}) const;
    std::string text(const std::string& k, const std::string& fallback) const {
        auto it = options.find(k);
        return it == options.end() ? fallback : it->second;
    }
    bool operator==(const Scenario&) const = default;
};

struct ParsedConfig {
    LaserConfig config;
    std::optional<Scenario> scenario;
    std::vector<std::string> warnings;
};

/// Task options accepted in [scenario] besides task/out/seed/threads/sweepN.
inline const std::set<std::string>& scenario_option_keys() {
    static const std::set<std::string> keys{
        "horizon",  "cells",    "sample_dt", "amplitude", "n",        "free_index", "omega", "q",
        "box_below", "box_above", "ec",      "delta",     "sweep_task", "im_half", "window"};
    return keys;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::optional<double> to_double(const std::string& s) {
    const auto t = trim(s);
    if (t.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) return std::nullopt;
    return v;
}

/// real | (re, im) | polar(mod, arg)
inline std::optional<cplx> to_complex(const std::string& s) {
    const auto t = trim(s);
    auto pair = [](const std::string& inner) -> std::optional<std::pair<double, double>> {
        const auto comma = inner.find(',');
        if (comma == std::string::npos) return std::nullopt;
        const auto a = to_double(inner.substr(0, comma));
        const auto b = to_double(inner.substr(comma + 1));
        if (!a || !b) return std::nullopt;
        return std::make_pair(*a, *b);
    };
    if (t.size() > 2 && t.front() == '(' && t.back() == ')') {
        const auto p = pair(t.substr(1, t.size() - 2));
        if (!p) return std::nullopt;
        return cplx(p->first, p->second);
    }
    if (t.rfind("polar(", 0) == 0 && t.back() == ')') {
        const auto p = pair(t.substr(6, t.size() - 7));
        if (!p) return std::nullopt;
        return std::polar(p->first, p->second);
    }
    if (const auto v = to_double(t)) return cplx(*v, 0.0);
    return std::nullopt;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt(cplx v) {
    if (v.imag() == 0.0 && !std::signbit(v.imag())) return fmt(v.real());
    return "(" + fmt(v.real()) + ", " + fmt(v.imag()) + ")";
}

} // namespace detail

inline double Scenario::number(const std::string& k, double fallback) const {
    auto it = options.find(k);
    if (it == options.end()) return fallback;
    const auto v = detail::to_double(it->second);
    if (!v) throw ConfigError("scenario option '" + k + "' is not a number: " + it->second);
    return *v;
}

inline std::vector<double> Scenario::numbers(const std::string& k, std::vector<double> fallback) const {
    auto it = options.find(k);
    if (it == options.end()) return fallback;
    std::istringstream is(it->second);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) {
        const auto v = detail::to_double(tok);
        if (!v) throw ConfigError("scenario option '" + k + "' has a non-numeric entry: " + tok);
        out.push_back(*v);
    }
    return out;
}

/// Parses the line-oriented configuration format. Errors carry
/// "<origin>:<line>:" prefixes; validate() warnings are returned, errors thrown.
inline ParsedConfig parse_config_string(const std::string& text, const std::string& origin = "<config>") {
    ParsedConfig out;
    LaserConfig& cfg = out.config;
    cfg.sections.clear();

    enum class Block { top, section, scenario } block = Block::top;
    std::map<std::string, int> seen;  // key -> line within the current block
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
    };

    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const auto line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line == "[section]") {
                block = Block::section;
                cfg.sections.emplace_back();
            } else if (line == "[scenario]") {
                if (out.scenario) fail("duplicate [scenario] block");
                block = Block::scenario;
                out.scenario.emplace();
            } else {
                fail("unknown block " + line);
            }
            seen.clear();
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        const auto val = detail::trim(line.substr(eq + 1));
        if (key.empty()) fail("missing key");
        if (auto it = seen.find(key); it != seen.end())
            fail("duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")");
        seen[key] = lineno;

        auto real = [&]() {
            const auto v = detail::to_double(val);
            if (!v) fail("value of '" + key + "' is not a number: " + val);
            return *v;
        };
        auto complex = [&]() {
            const auto v = detail::to_complex(val);
            if (!v) fail("value of '" + key + "' is not a complex number: " + val);
            return *v;
        };
        auto boolean = [&]() {
            if (val == "true" || val == "1") return true;
            if (val == "false" || val == "0") return false;
            fail("value of '" + key + "' must be true or false");
            return false;
        };

        switch (block) {
        case Block::top:
            if (key == "epsilon") cfg.epsilon = real();
            else if (key == "r0") cfg.r0 = complex();
            else if (key == "rL") cfg.rL = complex();
            else fail("unknown key '" + key + "'");
            break;
        case Block::section: {
            auto& s = cfg.sections.back();
            if (key == "length") s.length = real();
            else if (key == "kappa") s.kappa = real();
            else if (key == "d") s.d = complex();
            else if (key == "alpha_h") s.alpha_h = real();
            else if (key == "gain_model") {
                if (val == "linear") s.gain_model = GainModel::linear;
                else if (val == "log") s.gain_model = GainModel::log;
                else fail("gain_model must be linear or log");
            } else if (key == "gain_slope") s.gain_slope = real();
            else if (key == "rho") s.rho.base = real();
            else if (key == "rho_slope") s.rho.slope = real();
            else if (key == "gamma") s.gamma.base = real();
            else if (key == "gamma_slope") s.gamma.slope = real();
            else if (key == "omega_r") s.omega_r.base = real();
            else if (key == "omega_r_slope") s.omega_r.slope = real();
            else if (key == "current") s.current = real();
            else if (key == "tau") s.tau = real();
            else if (key == "n_floor") s.n_floor_override = real();
            else if (key == "frozen") s.frozen = boolean();
            else fail("unknown key '" + key + "' in [section]");
            break;
        }
        case Block::scenario: {
            auto& sc = *out.scenario;
            if (key == "task") sc.task = val;
            else if (key == "out") sc.out = val;
            else if (key == "seed") {
                const auto v = real();
                if (v < 0 || v != std::floor(v)) fail("seed must be a non-negative integer");
                sc.seed = static_cast<std::uint64_t>(v);
            } else if (key == "threads") {
                const auto v = real();
                if (v < 1 || v != std::floor(v)) fail("threads must be a positive integer");
                sc.threads = static_cast<int>(v);
            } else if (key.rfind("sweep", 0) == 0 && key.size() > 5 && key != "sweep_task") {
                std::istringstream is(val);
                SweepAxis ax;
                std::string lo, hi, cnt, spacing, extra;
                if (!(is >> ax.path >> lo >> hi >> cnt) || ((is >> spacing) && spacing != "geometric") || (is >> extra))
                    fail("sweep entries are 'path lo hi count [geometric]'");
                ax.geometric = spacing == "geometric";
                const auto a = detail::to_double(lo), b = detail::to_double(hi), c = detail::to_double(cnt);
                if (!a || !b || !c || *c < 1 || *c != std::floor(*c)) fail("bad sweep range for '" + ax.path + "'");
                if (ax.geometric && !(*a * *b > 0.0)) fail("geometric sweep needs endpoints of one sign");
                ax.lo = *a;
                ax.hi = *b;
                ax.count = static_cast<int>(*c);
                sc.sweeps.push_back(ax);
                if (sc.sweeps.size() > 2) fail("at most two swept parameters");
            } else if (scenario_option_keys().count(key)) {
                sc.options[key] = val;
            } else {
                fail("unknown key '" + key + "' in [scenario]");
            }
            break;
        }
        }
    }

    if (cfg.sections.empty()) throw ConfigError(origin + ": no sections defined");
    for (const auto& d : validate(cfg)) {
        if (d.is_error()) throw ConfigError(origin + ": " + d.message);
        out.warnings.push_back(d.message);
    }
    return out;
}

inline ParsedConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path + ": cannot open file");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_string(ss.str(), path);
}

inline std::string serialize_config(const LaserConfig& cfg, const std::optional<Scenario>& sc = {}) {
    using detail::fmt;
    std::ostringstream os;
    os << "epsilon = " << fmt(cfg.epsilon) << "\n";
    os << "r0 = " << fmt(cfg.r0) << "\n";
    os << "rL = " << fmt(cfg.rL) << "\n";
    for (const auto& s : cfg.sections) {
        os << "\n[section]\n";
        os << "length = " << fmt(s.length) << "\n";
        os << "kappa = " << fmt(s.kappa) << "\n";
        os << "d = " << fmt(s.d) << "\n";
        os << "alpha_h = " << fmt(s.alpha_h) << "\n";
        os << "gain_model = " << (s.gain_model == GainModel::log ? "log" : "linear") << "\n";
        os << "gain_slope = " << fmt(s.gain_slope) << "\n";
        os << "rho = " << fmt(s.rho.base) << "\n";
        os << "rho_slope = " << fmt(s.rho.slope) << "\n";
        os << "gamma = " << fmt(s.gamma.base) << "\n";
        os << "gamma_slope = " << fmt(s.gamma.slope) << "\n";
        os << "omega_r = " << fmt(s.omega_r.base) << "\n";
        os << "omega_r_slope = " << fmt(s.omega_r.slope) << "\n";
        os << "current = " << fmt(s.current) << "\n";
        os << "tau = " << fmt(s.tau) << "\n";
        if (s.n_floor_override) os << "n_floor = " << fmt(*s.n_floor_override) << "\n";
        os << "frozen = " << (s.frozen ? "true" : "false") << "\n";
    }
    if (sc) {
        os << "\n[scenario]\n";
        if (!sc->task.empty()) os << "task = " << sc->task << "\n";
        if (!sc->out.empty()) os << "out = " << sc->out << "\n";
        os << "seed = " << sc->seed << "\n";
        os << "threads = " << sc->threads << "\n";
        for (std::size_t i = 0; i < sc->sweeps.size(); ++i) {
            const auto& a = sc->sweeps[i];
            os << "sweep" << i + 1 << " = " << a.path << " " << fmt(a.lo) << " " << fmt(a.hi) << " " << a.count << (a.geometric ? " geometric" : "") << "\n";
        }
        for (const auto& [k, v] : sc->options) os << k << " = " << v << "\n";
    }
    return os.str();
}

/// Sets one scalar addressed by a sweep path: epsilon (along the family with
/// fixed F), r0.abs/r0.arg, rL.abs/rL.arg (aliases eta/phi), or
/// sectionK.<key> for any real section key.
inline void apply_path(LaserConfig& cfg, const std::string& path, double v) {
    if (path == "epsilon") {
        cfg = cfg.with_epsilon(v);
        return;
    }
    auto polar_set = [&](cplx& z, bool mod) { z = mod ? std::polar(v, std::arg(z)) : std::polar(std::abs(z), v); };
    if (path == "eta" || path == "rL.abs") return polar_set(cfg.rL, true);
    if (path == "phi" || path == "rL.arg") return polar_set(cfg.rL, false);
    if (path == "r0.abs") return polar_set(cfg.r0, true);
    if (path == "r0.arg") return polar_set(cfg.r0, false);
    if (path.rfind("section", 0) == 0) {
        const auto dot = path.find('.');
        if (dot != std::string::npos) {
            const auto idx = detail::to_double(path.substr(7, dot - 7));
            if (idx && *idx >= 1 && *idx <= static_cast<double>(cfg.size()) && *idx == std::floor(*idx)) {
                auto& s = cfg.sections[static_cast<std::size_t>(*idx) - 1];
                const auto key = path.substr(dot + 1);
                if (key == "length") { s.length = v; return; }
                if (key == "kappa") { s.kappa = v; return; }
                if (key == "d") { s.d = cplx(v, s.d.imag()); return; }
                if (key == "d_im") { s.d = cplx(s.d.real(), v); return; }
                if (key == "alpha_h") { s.alpha_h = v; return; }
                if (key == "gain_slope") { s.gain_slope = v; return; }
                if (key == "rho") { s.rho.base = v; return; }
                if (key == "gamma") { s.gamma.base = v; return; }
                if (key == "omega_r") { s.omega_r.base = v; return; }
                if (key == "current") { s.current = v; return; }
                if (key == "tau") { s.tau = v; return; }
            }
        }
    }
    throw ConfigError("unknown sweep path '" + path + "'");
}

} // namespace twm::io
