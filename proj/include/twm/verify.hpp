#pragma once

#include "twm/compare.hpp"
#include "twm/critical.hpp"
#include "twm/eigenmode.hpp"
#include "twm/mode_ode.hpp"
#include "twm/oracle/apply_h_fd.hpp"
#include "twm/oracle/modal_fit.hpp"
#include "twm/oracle/semigroup.hpp"
#include "twm/oracle/transfer_rk4.hpp"
#include "twm/presets.hpp"
#include "twm/simulator.hpp"
#include "twm/spectrum.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace twm::verify {

/// Section with coefficients drawn from the ranges used by the audits.
inline SectionParams random_section(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SectionParams s;
    s.length = 0.4 + u(rng);
    s.kappa = 4.0 * u(rng);
    s.d = {0.2 + u(rng), 0.2 * (u(rng) - 0.5)};
    s.alpha_h = 4.0 * u(rng);
    s.gain_slope = 1.0 + u(rng);
    s.rho = {0.5 * u(rng), 0.0};
    s.gamma = {60.0 + 40.0 * u(rng), 0.0};
    s.omega_r = {-20.0 + 40.0 * u(rng), 0.0};
    return s;
}

inline LaserConfig random_config(std::mt19937_64& rng, int m) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    LaserConfig cfg;
    for (int k = 0; k < m; ++k) cfg.sections.push_back(random_section(rng));
    cfg.r0 = std::polar(0.6 * u(rng), 2.0 * kPi * u(rng));
    cfg.rL = std::polar(0.6 * u(rng), 2.0 * kPi * u(rng));
    return cfg;
}

struct TransportResult {
    double max_error = 0.0;
    int steps = 0;
};

/// Zero-coefficient run against the explicit characteristic semigroup.
inline TransportResult transport_exactness(int cells = 256, double periods = 3.0) {
    LaserConfig cfg;
    SectionParams s;
    s.kappa = 0.0;
    s.d = 0.0;
    s.rho = {0.0, 0.0};
    cfg.sections = {s};
    cfg.r0 = cplx(0.7, 0.0);
    cfg.rL = cplx(-0.4, 0.3);
    const auto g = SimGrid::make(cfg, cells);
    auto f1 = [](double z) { return cplx(std::sin(3.0 * z), std::cos(2.0 * z)); };
    auto f2 = [](double z) { return cplx(std::exp(-z), 0.3 * z); };
    auto st = initial_state(cfg, g, 0.0);
    for (int j = 0; j < g.nodes(); ++j) st.psi[j] = {f1(g.z(j)), f2(g.z(j))};
    apply_boundary(st, cfg, 0.0);
    auto g1 = [&](double z) { return z == 0.0 ? cfg.r0 * f2(0.0) : f1(z); };
    auto g2 = [&](double z) { return z == 1.0 ? cfg.rL * f1(1.0) : f2(z); };
    const oracle::TransportSemigroup sg(cfg.r0, cfg.rL, 1.0, g1, g2);
    TransportResult r;
    r.steps = static_cast<int>(std::lround(periods * cfg.total_length() / g.dz));
    const StepOptions frozen{true};
    for (int i = 0; i < r.steps; ++i) {
        step_inplace(st, cfg, {}, frozen);
        for (int j = 0; j < g.nodes(); ++j) {
            r.max_error = std::max(r.max_error, std::abs(st.psi[j][0] - sg.psi1(st.t, g.z(j))));
            r.max_error = std::max(r.max_error, std::abs(st.psi[j][1] - sg.psi2(st.t, g.z(j))));
        }
    }
    return r;
}

struct TransferOracleResult {
    double max_rel_error = 0.0;
    double max_det_error = 0.0;
    int samples = 0;
};

/// Closed-form transfer matrices against RK4 integration, |gamma z| < 20.
inline TransferOracleResult transfer_oracle(int samples, std::uint64_t seed, int rk_steps = 10000) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    TransferOracleResult r;
    while (r.samples < samples) {
        const auto s = random_section(rng);
        const cplx lam(2.0 * u(rng), 10.0 * u(rng));
        const double nk = 1.0 + 0.3 * u(rng);
        const double z = s.length * (0.5 + 0.5 * std::abs(u(rng)));
        const auto t = transfer_section(s, nk, lam, z);
        if (!(std::abs(t.gamma * z) < 20.0)) continue;
        const auto m = t.matrix();
        const auto rk = oracle::transfer_by_integration(s, nk, lam, z, rk_steps);
        const double num = std::max({std::abs(m.a - rk[0][0]), std::abs(m.b - rk[0][1]), std::abs(m.c - rk[1][0]),
                                     std::abs(m.d - rk[1][1])});
        r.max_rel_error = std::max(r.max_rel_error, num / std::max(1.0, m.max_abs()));
        r.max_det_error = std::max(r.max_det_error, std::abs(t.det() - 1.0));
        ++r.samples;
    }
    return r;
}

struct AuditResult {
    int configs = 0;
    int mismatches = 0;
    int eigenvalues = 0;
    int bound_violations = 0;
    int errors = 0;
};

/// Harvested root count against the winding number, plus Re lambda < Lambda_u.
inline AuditResult winding_audit(int configs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    AuditResult r;
    for (int c = 0; c < configs; ++c) {
        const int m = 1 + c % 3;
        const auto cfg = random_config(rng, m);
        CarrierVector n;
        for (int k = 0; k < m; ++k) n.push_back(0.8 + 0.4 * u(rng));
        ++r.configs;
        try {
            const auto sp = find_eigenvalues(cfg, n);
            if (sp.harvested != sp.winding) ++r.mismatches;
            for (const auto& e : sp.eigenvalues) {
                r.eigenvalues += e.multiplicity;
                if (!(e.lambda.real() < sp.Lambda_u)) ++r.bound_violations;
            }
        } catch (const Error&) {
            ++r.errors;
        }
    }
    return r;
}

/// Eigenvalues of a spectrum above Lambda_u.
inline int bound_violations(const Spectrum& sp) {
    int v = 0;
    for (const auto& e : sp.eigenvalues)
        if (!(e.lambda.real() < sp.Lambda_u)) ++v;
    return v;
}

struct TriangulationResult {
    cplx root;
    cplx fit;
    double fit_error = 0.0;
    double residual = 0.0;
    int residual_cells = 0;  // total over all sections
};

/// Dominant root of h, a Prony fit of a frozen-carrier run, and the
/// finite-difference residual of the eigenfunction.
inline TriangulationResult triangulate(const LaserConfig& cfg, const CarrierVector& n, int cells_first = 250,
                                       int residual_total = 4096, double horizon = 200.0, double skip = 60.0) {
    TriangulationResult r;
    const auto sp = find_eigenvalues(cfg, n);
    if (sp.eigenvalues.empty()) throw NumericalError("triangulate: no eigenvalues");
    r.root = sp.eigenvalues.front().lambda;

    const auto g = SimGrid::with_first_section(cfg, cells_first);
    auto s = initial_state(cfg, g, 0.0, n);
    for (int j = 0; j < g.nodes(); ++j) {
        const double z = g.z(j);
        s.psi[j] = {cplx(std::sin(7.0 * z), std::cos(3.0 * z)), cplx(std::cos(11.0 * z), 0.3)};
    }
    apply_boundary(s, cfg, 0.0);
    RunOptions o;
    o.freeze_carriers = true;
    o.stride = std::max(1, static_cast<int>(std::lround(0.05 / g.dz)));
    const auto out = run(cfg, s, {}, horizon, o);
    const auto fit = oracle::modal_fit(out, skip, 2);
    r.fit = fit.rates.front();
    r.fit_error = std::abs(r.fit - r.root);

    const auto fine = SectionedGrid::make(cfg, residual_total / cfg.total_length());
    r.residual_cells = 0;
    for (int c : fine.cells) r.residual_cells += c;
    const EigenMode m(cfg, n, r.root);
    r.residual = oracle::eigen_residual(cfg, n, m.sample(fine), r.root);
    return r;
}

struct Check {
    std::string id;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Times `fn`, which fills pass and detail; exceptions become failures.
template <class Fn>
Check timed_check(std::string id, std::string name, Fn&& fn) {
    Check c{std::move(id), std::move(name)};
    const auto t0 = std::chrono::steady_clock::now();
    try {
        fn(c);
    } catch (const std::exception& e) {
        c.pass = false;
        c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return c;
}

inline std::string sci(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

/// The oracle checks that fit in about a minute: transport, transfer
/// matrices, triangulation, winding, eigenvalue bound and critical search.
inline std::vector<Check> oracle_battery(std::uint64_t seed) {
    std::vector<Check> out;
    int violations = 0, eigenvalues = 0;

    out.push_back(timed_check("AC1", "transport exactness", [&](Check& c) {
        const auto r = transport_exactness(256, 3.0);
        c.pass = r.max_error < 1e-12;
        c.detail = "max error " + sci(r.max_error) + " over " + std::to_string(r.steps) + " steps";
    }));
    out.push_back(timed_check("AC2", "transfer matrix oracle", [&](Check& c) {
        const auto r = transfer_oracle(1000, seed);
        c.pass = r.max_rel_error < 1e-8 && r.max_det_error < 1e-10;
        c.detail = "rel " + sci(r.max_rel_error) + ", det " + sci(r.max_det_error) + " on " + std::to_string(r.samples);
    }));
    out.push_back(timed_check("AC3", "eigenvalue triangulation", [&](Check& c) {
        const auto cfg = presets::fig1(0.3, 0.0);
        const CarrierVector n{1.0, 1.0};
        const auto r = triangulate(cfg, n);
        const auto sp = find_eigenvalues(cfg, n);
        violations += bound_violations(sp);
        eigenvalues += static_cast<int>(sp.eigenvalues.size());
        c.pass = r.fit_error < 1e-3 && r.residual < 1e-6;
        c.detail = "|root - fit| " + sci(r.fit_error) + ", residual " + sci(r.residual) + " on " +
                   std::to_string(r.residual_cells) + " cells";
    }));
    out.push_back(timed_check("AC4", "winding number audit", [&](Check& c) {
        const auto r = winding_audit(20, seed);
        violations += r.bound_violations;
        eigenvalues += r.eigenvalues;
        c.pass = r.mismatches == 0 && r.errors == 0;
        c.detail = std::to_string(r.mismatches) + " mismatches, " + std::to_string(r.errors) + " errors in " +
                   std::to_string(r.configs) + " configs";
    }));
    out.push_back(timed_check("AC6", "critical density search", [&](Check& c) {
        double worst = 0.0;
        for (double r0 : {0.3, 0.5, 0.8}) {
            const auto cfg = presets::fabry_perot(r0, 0.7, 0.5, 0.0);
            const auto res = critical_density_search(cfg, {1.0}, 0, 0.0);
            const double exact = 1.0 + (0.5 - 0.5 * std::log(r0 * 0.7)) / cfg.sections[0].gain_slope;
            worst = std::max(worst, std::abs(res.n[0] - exact));
            violations += bound_violations(res.spectrum);
            eigenvalues += static_cast<int>(res.spectrum.eigenvalues.size());
        }
        const auto res = critical_density_search(presets::fig1(0.3, 0.0), {1.0, 1.0}, 0);
        violations += bound_violations(res.spectrum);
        eigenvalues += static_cast<int>(res.spectrum.eigenvalues.size());
        const int q = res.spectrum.gap.q;
        c.pass = worst < 1e-10 && res.gap_confirmed && (q == 1 || q == 2) && res.spectrum.gap.xi > 0.0;
        std::ostringstream os;
        os.precision(10);
        os << "closed form error " << sci(worst) << "; feedback laser n1* = " << res.n[0] << ", q = " << q
           << ", xi = " << res.spectrum.gap.xi;
        c.detail = os.str();
    }));
    out.push_back(timed_check("AC5", "eigenvalue bound compliance", [&](Check& c) {
        c.pass = violations == 0 && eigenvalues > 0;
        c.detail = std::to_string(violations) + " violations among " + std::to_string(eigenvalues) + " eigenvalues";
    }));
    return out;
}

} // namespace twm::verify
