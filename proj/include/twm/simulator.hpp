#pragma once

#include "twm/laser_model.hpp"
#include "twm/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace twm {

/// Uniform z-grid shared by all sections. Each section holds an integer
/// number of cells; if the lengths are not commensurate with the spacing the
/// sections are stretched to the nearest multiple (see length_error).
struct SimGrid {
    std::vector<int> cells;    // per section
    std::vector<int> offset;   // first node of each section
    double dz = 0.0;
    double length_error = 0.0; // max |N_k dz - l_k|

    int total_cells() const { return offset.back() + cells.back(); }
    int nodes() const { return total_cells() + 1; }
    std::size_t sections() const { return cells.size(); }
    double z(int node) const { return node * dz; }
    /// Section of cell c.
    std::size_t section_of_cell(int c) const {
        std::size_t k = 0;
        while (k + 1 < cells.size() && c >= offset[k + 1]) ++k;
        return k;
    }

    /// About `total` cells overall, rounded per section.
    static SimGrid make(const LaserConfig& cfg, int total) {
        if (total < static_cast<int>(cfg.size())) throw ConfigError("grid: fewer cells than sections");
        const double L = cfg.total_length();
        const double target = L / total;
        SimGrid g;
        int acc = 0;
        for (const auto& s : cfg.sections) {
            const int c = std::max(1, static_cast<int>(std::lround(s.length / target)));
            g.offset.push_back(acc);
            g.cells.push_back(c);
            acc += c;
        }
        g.dz = L / acc;
        for (std::size_t k = 0; k < cfg.size(); ++k)
            g.length_error = std::max(g.length_error, std::abs(g.cells[k] * g.dz - cfg.sections[k].length));
        return g;
    }

    /// Smallest grid with at least `min_total` cells on which every section
    /// length is an exact multiple of dz (within tol); falls back to make().
    static SimGrid commensurate(const LaserConfig& cfg, int min_total, int search = 4096, double tol = 1e-9) {
        for (int n = min_total; n < min_total + search; ++n) {
            auto g = make(cfg, n);
            if (g.length_error < tol) return g;
        }
        return make(cfg, min_total);
    }

    /// Section 1 gets `cells_first` cells; the rest follow from its spacing.
    static SimGrid with_first_section(const LaserConfig& cfg, int cells_first) {
        const double dz = cfg.sections[0].length / cells_first;
        int total = 0;
        for (const auto& s : cfg.sections) total += std::max(1, static_cast<int>(std::lround(s.length / dz)));
        return make(cfg, total);
    }
};

/// psi at the N+1 nodes, p at the N cell centres.
struct FieldState {
    SimGrid grid;
    std::vector<Vec2> psi;
    std::vector<Vec2> p;
    CarrierVector n;
    double t = 0.0;
};

/// Piecewise-constant injection alpha(t); zero before the first breakpoint.
class InjectionSignal {
public:
    InjectionSignal() = default;
    InjectionSignal(std::vector<double> times, std::vector<cplx> values) : times_(std::move(times)), values_(std::move(values)) {
        if (times_.size() != values_.size()) throw ConfigError("injection: times and values differ in length");
        if (!std::is_sorted(times_.begin(), times_.end())) throw ConfigError("injection: breakpoints not sorted");
    }
    static InjectionSignal constant(cplx a) { return InjectionSignal({-std::numeric_limits<double>::infinity()}, {a}); }

    cplx operator()(double t) const {
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        if (it == times_.begin()) return 0.0;
        return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
    }
    bool zero() const {
        return std::all_of(values_.begin(), values_.end(), [](cplx v) { return v == 0.0; });
    }
    double sup_abs() const {
        double m = 0.0;
        for (const auto& v : values_) m = std::max(m, std::abs(v));
        return m;
    }
    const std::vector<double>& times() const { return times_; }
    const std::vector<cplx>& values() const { return values_; }

private:
    std::vector<double> times_;
    std::vector<cplx> values_;
};

/// Per-section field integrals: A = int |psi|^2 (trapezoid on nodes),
/// C = int Re(conj(psi) . p) (midpoint, p lives at cell centres).
struct SectionIntegrals {
    std::vector<double> A, C;
};

inline SectionIntegrals section_integrals(const FieldState& s) {
    const auto& g = s.grid;
    SectionIntegrals out;
    out.A.assign(g.sections(), 0.0);
    out.C.assign(g.sections(), 0.0);
    for (std::size_t k = 0; k < g.sections(); ++k) {
        const int a = g.offset[k], b = a + g.cells[k];
        double sa = 0.0, sc = 0.0;
        for (int j = a; j <= b; ++j) {
            const double w = (j == a || j == b) ? 0.5 : 1.0;
            sa += w * (std::norm(s.psi[j][0]) + std::norm(s.psi[j][1]));
        }
        for (int c = a; c < b; ++c) {
            const Vec2& l = s.psi[c];
            const Vec2& r = s.psi[c + 1];
            for (int i = 0; i < 2; ++i) sc += std::real(std::conj(0.5 * (l[i] + r[i])) * s.p[c][i]);
        }
        out.A[k] = sa * g.dz;
        out.C[k] = sc * g.dz;
    }
    return out;
}

/// f_k = I_k - n_k / tau_k - (P / l_k) int_{S_k} [(G - rho) |psi|^2 + rho Re(conj(psi) p)].
inline std::vector<double> carrier_rhs_from_integrals(const LaserConfig& cfg, const CarrierVector& n,
                                                      const SectionIntegrals& si, double weight) {
    std::vector<double> f(cfg.size(), 0.0);
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        const auto& s = cfg.sections[k];
        if (s.frozen) continue;
        const double rho = s.rho(n[k]);
        f[k] = s.current - n[k] / s.tau - weight / s.length * ((gain(s, n[k]) - rho) * si.A[k] + rho * si.C[k]);
    }
    return f;
}

inline std::vector<double> carrier_rhs(const LaserConfig& cfg, const CarrierVector& n, const FieldState& field) {
    check_admissible(cfg, n);
    return carrier_rhs_from_integrals(cfg, n, section_integrals(field), cfg.P());
}

/// D = (P/2) ||psi||^2 + sum l_k (n_k - n_*).
inline double lyapunov_D(const LaserConfig& cfg, const FieldState& s, double n_star) {
    const auto si = section_integrals(s);
    double D = 0.0;
    for (std::size_t k = 0; k < cfg.size(); ++k) D += 0.5 * cfg.P() * si.A[k] + cfg.sections[k].length * (s.n[k] - n_star);
    return D;
}

/// max{D(0), (J + |alpha|_inf^2 / (1 - |r0|^2) - n_* / tau~) / gamma} with
/// J = sum l_k I_k, 1/tau~ = sum l_k / tau_k, gamma = min{1/tau_k, Re d_k / 2}.
/// Meaningful only when every section has Re d_k > 0 and evolving carriers.
inline double boundedness_bound(const LaserConfig& cfg, double D0, double alpha_sup, double n_star) {
    double J = 0.0, inv_tau = 0.0, gam = std::numeric_limits<double>::infinity();
    for (const auto& s : cfg.sections) {
        if (s.frozen) throw DomainError("boundedness bound: frozen sections are not covered");
        if (!(s.d.real() > 0.0)) throw DomainError("boundedness bound requires Re d_k > 0");
        J += s.length * s.current;
        inv_tau += s.length / s.tau;
        gam = std::min({gam, 1.0 / s.tau, 0.5 * s.d.real()});
    }
    const double r0 = std::abs(cfg.r0);
    return std::max(D0, (J + alpha_sup * alpha_sup / (1.0 - r0 * r0) - n_star * inv_tau) / gam);
}

namespace detail {

// (e^x - 1) / x and (e^x - 1 - x) / x^2, series near 0.
inline cplx phi1(cplx x) {
    if (std::abs(x) < 1e-4) return 1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0;
    return (std::exp(x) - 1.0) / x;
}
inline cplx phi2(cplx x) {
    if (std::abs(x) < 1e-3) return 0.5 + x / 6.0 + x * x / 24.0 + x * x * x / 120.0;
    return (std::exp(x) - 1.0 - x) / (x * x);
}

struct CellCoefficients {
    cplx E, Eh;     // exp(beta h), exp(beta h / 2)
    cplx ep;        // exp(a h), a = i Omega_r - Gamma
    cplx c1, c2;    // mean of p over the step: c1 q + c2 m
    cplx cp;        // p_new = ep q + cp m
    cplx B;         // i kappa h / 2
    cplx A;         // 1 - h rho c2 / 2
    cplx inv_det;   // 1 / (A^2 - B^2)
    double rho;
};

inline CellCoefficients cell_coefficients(const SectionParams& s, double nu, double h) {
    CellCoefficients c;
    const cplx b = beta(s, nu);
    const double rho = s.rho(nu);
    const double Gam = s.gamma(nu);
    const cplx a(-Gam, s.omega_r(nu));
    c.E = std::exp(b * h);
    c.Eh = std::exp(0.5 * b * h);
    c.ep = std::exp(a * h);
    c.c1 = phi1(a * h);
    c.c2 = Gam * h * phi2(a * h);
    c.cp = Gam * h * phi1(a * h);
    c.B = cplx(0.0, 0.5 * s.kappa * h);
    c.A = 1.0 - 0.5 * h * rho * c.c2;
    c.inv_det = 1.0 / (c.A * c.A - c.B * c.B);
    c.rho = rho;
    return c;
}

inline bool all_finite(const FieldState& s) {
    for (const auto& v : s.psi)
        if (!std::isfinite(v[0].real()) || !std::isfinite(v[0].imag()) || !std::isfinite(v[1].real()) ||
            !std::isfinite(v[1].imag()))
            return false;
    for (const auto& v : s.p)
        if (!std::isfinite(v[0].real()) || !std::isfinite(v[0].imag()) || !std::isfinite(v[1].real()) ||
            !std::isfinite(v[1].imag()))
            return false;
    return true;
}

} // namespace detail

struct StepOptions {
    bool freeze_carriers = false;  // n' = 0 in every section
};

/// Imposes psi1(0) = r0 psi2(0) + alpha and psi2(L) = rL psi1(L).
inline void apply_boundary(FieldState& s, const LaserConfig& cfg, cplx alpha) {
    s.psi.back()[1] = cfg.rL * s.psi.back()[0];
    s.psi.front()[0] = cfg.r0 * s.psi.front()[1] + alpha;
}

namespace detail {

// Field and polarization update across all cells with carriers n.
inline void advance_fields(FieldState& s, const LaserConfig& cfg, const CarrierVector& n) {
    const auto& g = s.grid;
    const double h = g.dz;
    const int N = g.total_cells();
    std::vector<Vec2> psi_new(s.psi.size());
    for (std::size_t k = 0; k < g.sections(); ++k) {
        const auto c = cell_coefficients(cfg.sections[k], n[k], h);
        const int a = g.offset[k], b = a + g.cells[k];
        for (int cell = a; cell < b; ++cell) {
            const cplx u1 = s.psi[cell][0];
            const cplx u2 = s.psi[cell + 1][1];
            const Vec2 q = s.p[cell];
            const cplx hE = h * c.Eh;
            const cplx rhs1 = c.E * u1 + hE * (-c.B / h * c.Eh * u2 + c.rho * c.c1 * q[0] + 0.5 * c.rho * c.c2 * c.Eh * u1);
            const cplx rhs2 = c.E * u2 + hE * (-c.B / h * c.Eh * u1 + c.rho * c.c1 * q[1] + 0.5 * c.rho * c.c2 * c.Eh * u2);
            const cplx v1 = (c.A * rhs1 - c.B * rhs2) * c.inv_det;
            const cplx v2 = (c.A * rhs2 - c.B * rhs1) * c.inv_det;
            psi_new[cell + 1][0] = v1;
            psi_new[cell][1] = v2;
            const cplx m1 = 0.5 * (c.Eh * u1 + v1 / c.Eh);
            const cplx m2 = 0.5 * (c.Eh * u2 + v2 / c.Eh);
            s.p[cell] = {c.ep * q[0] + c.cp * m1, c.ep * q[1] + c.cp * m2};
        }
    }
    psi_new[0][0] = s.psi[0][0];
    psi_new[N][1] = s.psi[N][1];
    s.psi.swap(psi_new);
}

} // namespace detail

/// One step dt = dz. Transport along characteristics is exact; sources use
/// an exponential midpoint rule, p is integrated exactly with psi frozen at
/// the cell centre, and n uses an explicit midpoint rule.
inline void step_inplace(FieldState& s, const LaserConfig& cfg, const InjectionSignal& signal,
                         const StepOptions& opt = {}) {
    const double h = s.grid.dz;
    const bool evolve = !opt.freeze_carriers;
    CarrierVector n_half = s.n;
    const auto I0 = evolve ? section_integrals(s) : SectionIntegrals{};
    if (evolve) {
        const auto f0 = carrier_rhs_from_integrals(cfg, s.n, I0, cfg.P());
        for (std::size_t k = 0; k < n_half.size(); ++k) n_half[k] = s.n[k] + 0.5 * h * f0[k];
        for (std::size_t k = 0; k < n_half.size(); ++k)
            if (!(n_half[k] > cfg.sections[k].n_floor()))
                throw SimulationError("carrier density below floor in section " + std::to_string(k + 1), s.t);
    }
    detail::advance_fields(s, cfg, n_half);
    s.t += h;
    apply_boundary(s, cfg, signal(s.t));
    if (evolve) {
        const auto I1 = section_integrals(s);
        const auto fa = carrier_rhs_from_integrals(cfg, n_half, I0, cfg.P());
        const auto fb = carrier_rhs_from_integrals(cfg, n_half, I1, cfg.P());
        for (std::size_t k = 0; k < s.n.size(); ++k) {
            s.n[k] += 0.5 * h * (fa[k] + fb[k]);
            if (!(s.n[k] > cfg.sections[k].n_floor()) || !std::isfinite(s.n[k]))
                throw SimulationError("carrier density below floor in section " + std::to_string(k + 1), s.t);
        }
    }
    if (!detail::all_finite(s)) throw SimulationError("non-finite field values", s.t);
}

inline FieldState step(FieldState s, const LaserConfig& cfg, const InjectionSignal& signal, const StepOptions& opt = {}) {
    step_inplace(s, cfg, signal, opt);
    return s;
}

/// psi = amplitude in both components, p at the instantaneous equilibrium
/// Gamma psi / (Gamma - i Omega_r), n_k = 1 unless given.
inline FieldState initial_state(const LaserConfig& cfg, const SimGrid& g, cplx amplitude = 1e-3,
                                std::optional<CarrierVector> n = {}, const InjectionSignal& signal = {}) {
    FieldState s;
    s.grid = g;
    s.n = n ? *n : CarrierVector(cfg.size(), 1.0);
    check_admissible(cfg, s.n);
    s.psi.assign(g.nodes(), Vec2{amplitude, amplitude});
    s.p.resize(g.total_cells());
    for (std::size_t k = 0; k < g.sections(); ++k) {
        const auto& sec = cfg.sections[k];
        const cplx r = sec.gamma(s.n[k]) / cplx(sec.gamma(s.n[k]), -sec.omega_r(s.n[k]));
        for (int c = g.offset[k]; c < g.offset[k] + g.cells[k]; ++c) s.p[c] = {r * amplitude, r * amplitude};
    }
    apply_boundary(s, cfg, signal(0.0));
    return s;
}

struct Sample {
    double t;
    CarrierVector n;
    std::vector<double> power;  // int_{S_k} |psi|^2
    cplx out0;                  // psi2(t, 0)
    cplx outL;                  // psi1(t, L)
    double D;
};

struct SimOutput {
    std::vector<Sample> samples;
    std::vector<FieldState> snapshots;
};

struct RunOptions {
    int stride = 1;                      // record every stride steps
    std::vector<double> snapshot_times;  // nearest step at or after each time
    bool freeze_carriers = false;
    double n_star = 0.0;                 // reference level in D(t)
};

inline Sample make_sample(const LaserConfig& cfg, const FieldState& s, double n_star) {
    const auto si = section_integrals(s);
    double D = 0.0;
    for (std::size_t k = 0; k < cfg.size(); ++k) D += 0.5 * cfg.P() * si.A[k] + cfg.sections[k].length * (s.n[k] - n_star);
    return {s.t, s.n, si.A, s.psi.front()[1], s.psi.back()[0], D};
}

/// Steps until t >= horizon (round(horizon / dz) steps), sampling every
/// `stride` steps; the initial state is always recorded.
inline SimOutput run(const LaserConfig& cfg, FieldState state, const InjectionSignal& signal, double horizon,
                     const RunOptions& opt = {}) {
    if (horizon < 0.0) throw DomainError("run: negative horizon");
    if (opt.stride < 1) throw DomainError("run: stride must be >= 1");
    SimOutput out;
    const long steps = std::lround(horizon / state.grid.dz);
    auto snaps = opt.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;
    auto take_snapshots = [&]() {
        while (next_snap < snaps.size() && state.t + 1e-12 >= snaps[next_snap]) {
            out.snapshots.push_back(state);
            ++next_snap;
        }
    };
    out.samples.push_back(make_sample(cfg, state, opt.n_star));
    take_snapshots();
    const StepOptions so{opt.freeze_carriers};
    for (long i = 1; i <= steps; ++i) {
        step_inplace(state, cfg, signal, so);
        if (i % opt.stride == 0) out.samples.push_back(make_sample(cfg, state, opt.n_star));
        take_snapshots();
    }
    return out;
}

} // namespace twm
