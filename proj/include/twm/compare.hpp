#pragma once

#include "twm/mode_ode.hpp"
#include "twm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace twm {

/// Mode (or its adjoint) sampled on simulator nodes and cell centres.
/// Local coordinates are rescaled to the true section lengths.
inline FieldState sample_on_grid(const EigenMode& m, const SimGrid& g, bool adjoint = false) {
    const auto& cfg = m.config();
    FieldState s;
    s.grid = g;
    s.n = m.n();
    s.psi.assign(g.nodes(), Vec2{0.0, 0.0});
    s.p.assign(g.total_cells(), Vec2{0.0, 0.0});
    for (std::size_t k = 0; k < g.sections(); ++k) {
        const double l = cfg.sections[k].length;
        const cplx w = adjoint ? m.adjoint_p_ratio(k) : m.p_ratio(k);
        auto at = [&](double x) {
            const Vec2 v = m.psi_in(k, x);
            return adjoint ? Vec2{v[1], v[0]} : v;
        };
        for (int i = 0; i <= g.cells[k]; ++i) s.psi[g.offset[k] + i] = at(l * i / g.cells[k]);
        for (int i = 0; i < g.cells[k]; ++i) {
            const Vec2 v = at(l * (i + 0.5) / g.cells[k]);
            s.p[g.offset[k] + i] = {w * v[0], w * v[1]};
        }
    }
    return s;
}

/// Bilinear pairing with the simulator quadrature: trapezoid on nodes for psi,
/// midpoint on centres for p.
inline cplx sim_bilinear(const FieldState& a, const FieldState& b) {
    const auto& g = a.grid;
    cplx acc = 0.0;
    for (std::size_t k = 0; k < g.sections(); ++k) {
        const int lo = g.offset[k], hi = lo + g.cells[k];
        for (int j = lo; j <= hi; ++j) {
            const double w = (j == lo || j == hi) ? 0.5 : 1.0;
            acc += w * (a.psi[j][0] * b.psi[j][0] + a.psi[j][1] * b.psi[j][1]);
        }
        for (int c = lo; c < hi; ++c) acc += a.p[c][0] * b.p[c][0] + a.p[c][1] * b.p[c][1];
    }
    return acc * g.dz;
}

inline double sim_norm(const FieldState& a) {
    const auto& g = a.grid;
    double acc = 0.0;
    for (std::size_t k = 0; k < g.sections(); ++k) {
        const int lo = g.offset[k], hi = lo + g.cells[k];
        for (int j = lo; j <= hi; ++j) {
            const double w = (j == lo || j == hi) ? 0.5 : 1.0;
            acc += w * (std::norm(a.psi[j][0]) + std::norm(a.psi[j][1]));
        }
        for (int c = lo; c < hi; ++c) acc += std::norm(a.p[c][0]) + std::norm(a.p[c][1]);
    }
    return std::sqrt(acc * g.dz);
}

inline void add_scaled(FieldState& dst, cplx s, const FieldState& src) {
    for (std::size_t j = 0; j < dst.psi.size(); ++j)
        for (int c = 0; c < 2; ++c) dst.psi[j][c] += s * src.psi[j][c];
    for (std::size_t j = 0; j < dst.p.size(); ++j)
        for (int c = 0; c < 2; ++c) dst.p[j][c] += s * src.p[j][c];
}

/// Projection of a simulator field onto the tracked modes at density n.
struct SimProjection {
    std::vector<cplx> coords;
    double stable_norm = 0.0;  // norm of E - B coords
};

inline SimProjection project_state(const ModeBasis& basis, const FieldState& E, const CarrierVector& n) {
    const auto f = basis.frame(n);
    SimProjection out;
    auto rest = E;
    for (int j = 0; j < basis.q(); ++j) {
        const auto B = sample_on_grid(f.modes[j], E.grid);
        const auto Phi = sample_on_grid(f.modes[j], E.grid, true);
        const cplx c = sim_bilinear(Phi, E) / sim_bilinear(Phi, B);
        out.coords.push_back(c);
        add_scaled(rest, -c, B);
    }
    out.stable_norm = sim_norm(rest);
    return out;
}

/// Full field B(n) E_c (+ delta * S) on the simulator grid.
inline FieldState full_state_from_reduced(const ModeBasis& basis, const LaserConfig& cfg, const SimGrid& g,
                                          const ReducedState& init, const std::optional<EigenMode>& perturbation = {},
                                          cplx delta = 0.0) {
    const auto f = basis.frame(init.n);
    FieldState s;
    s.grid = g;
    s.n = init.n;
    s.t = init.t;
    s.psi.assign(g.nodes(), Vec2{0.0, 0.0});
    s.p.assign(g.total_cells(), Vec2{0.0, 0.0});
    for (int j = 0; j < basis.q(); ++j) add_scaled(s, init.Ec[j], sample_on_grid(f.modes[j], g));
    if (perturbation && delta != 0.0) add_scaled(s, delta, sample_on_grid(*perturbation, g));
    apply_boundary(s, cfg, 0.0);
    return s;
}

struct CompareOptions {
    int cells_first = 250;         // simulator cells in section 1
    double sample_dt = 1.0;
    double stable_delta = 0.0;     // amplitude of the stable-mode perturbation (0: none)
    int stable_index = -1;         // eigenvalue index in the reference spectrum; -1 = first untracked
    double fit_skip = 0.0;         // start of the decay fit (0: two transit times)
    double fit_efolds = 4.0;       // fit until the stable norm has dropped by this many e-folds
    ReducedOptions reduced{};
};

struct CompareReport {
    std::vector<double> t;
    std::vector<double> dn;        // max_k |n_full - n_reduced|
    std::vector<double> dmod;      // max_j ||proj_j| - |E_c,j||
    std::vector<double> stable_norm;
    double sup_dn = 0.0;
    double sup_dmod = 0.0;
    std::optional<double> decay_rate;  // fitted rate of the stable perturbation
    std::optional<cplx> stable_lambda;
    double xi = 0.0;               // gap at the reference density
    double dz = 0.0;
};

/// Least-squares slope of log y against t; nullopt with fewer than 3 points.
inline std::optional<double> log_linear_rate(const std::vector<double>& t, const std::vector<double>& y) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    int m = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(y[i] > 0.0)) continue;
        const double ly = std::log(y[i]);
        st += t[i];
        sy += ly;
        stt += t[i] * t[i];
        sty += t[i] * ly;
        ++m;
    }
    if (m < 3) return std::nullopt;
    const double den = m * stt - st * st;
    if (den == 0.0) return std::nullopt;
    return -(m * sty - st * sy) / den;
}

/// Runs the simulator from B(n) E_c(0) (+ optional stable perturbation) and the
/// reduced flow from (E_c(0), n(0)) and compares them at common sample times.
inline CompareReport compare_full_vs_reduced(const LaserConfig& cfg, const ModeBasis& basis, const ReducedState& init,
                                             double horizon, const CompareOptions& opt = {}) {
    if (!(horizon > 0.0)) throw DomainError("compare: horizon must be positive");
    CompareReport rep;

    auto win = default_window(cfg, basis.n_ref());
    for (auto l : basis.lambda_ref()) {
        win.im_min = std::min(win.im_min, l.imag() - 60.0);
        win.im_max = std::max(win.im_max, l.imag() + 60.0);
    }
    const auto sp = find_eigenvalues(cfg, basis.n_ref(), win);
    rep.xi = sp.gap.xi;

    std::optional<EigenMode> pert;
    if (opt.stable_delta != 0.0) {
        const int idx = opt.stable_index >= 0 ? opt.stable_index : basis.q();
        if (idx >= static_cast<int>(sp.eigenvalues.size())) throw NumericalError("compare: no stable eigenvalue to perturb along");
        rep.stable_lambda = sp.eigenvalues[idx].lambda;
        pert.emplace(cfg, basis.n_ref(), *rep.stable_lambda);
    }

    auto red_opt = opt.reduced;
    red_opt.sample_dt = opt.sample_dt;
    const auto red = integrate_reduced(basis, cfg, init, horizon, red_opt);

    const auto g = SimGrid::with_first_section(cfg, opt.cells_first);
    rep.dz = g.dz;
    auto state = full_state_from_reduced(basis, cfg, g, init, pert, opt.stable_delta);
    const InjectionSignal none;
    const long steps = std::lround(horizon / g.dz);
    std::size_t next = 0;
    auto record = [&]() {
        while (next < red.samples.size() && red.samples[next].t - init.t <= state.t - init.t + 0.5 * g.dz) {
            const auto& r = red.samples[next];
            if (std::abs(r.t - state.t) <= 0.5 * g.dz + 1e-9) {
                CarrierVector nb = state.n;
                const auto pr = project_state(basis, state, nb);
                double dn = 0.0, dm = 0.0;
                for (std::size_t k = 0; k < cfg.size(); ++k) dn = std::max(dn, std::abs(state.n[k] - r.n[k]));
                for (int j = 0; j < basis.q(); ++j) dm = std::max(dm, std::abs(std::abs(pr.coords[j]) - std::abs(r.Ec[j])));
                rep.t.push_back(r.t);
                rep.dn.push_back(dn);
                rep.dmod.push_back(dm);
                rep.stable_norm.push_back(pr.stable_norm);
                rep.sup_dn = std::max(rep.sup_dn, dn);
                rep.sup_dmod = std::max(rep.sup_dmod, dm);
            }
            ++next;
        }
    };
    record();
    for (long i = 1; i <= steps; ++i) {
        step_inplace(state, cfg, none, StepOptions{cfg.epsilon == 0.0});
        if (!basis.box().contains(state.n)) {
            std::ostringstream os;
            os << "compare: full model density left the validity box by " << basis.box().distance(state.n);
            throw ValidityError(os.str(), state.t, state.n);
        }
        record();
    }

    if (pert) {
        const double t0 = init.t + (opt.fit_skip > 0.0 ? opt.fit_skip : 2.0 * cfg.total_length());
        double s0 = -1.0;
        std::vector<double> ft, fy;
        for (std::size_t i = 0; i < rep.t.size(); ++i) {
            if (rep.t[i] < t0) continue;
            if (s0 < 0.0) s0 = rep.stable_norm[i];
            if (rep.stable_norm[i] < s0 * std::exp(-opt.fit_efolds)) break;
            ft.push_back(rep.t[i]);
            fy.push_back(rep.stable_norm[i]);
        }
        rep.decay_rate = log_linear_rate(ft, fy);
    }
    return rep;
}

} // namespace twm
