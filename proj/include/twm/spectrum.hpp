#pragma once

#include "twm/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace twm {

struct GrowthRates {
    double R_psi;
    double R_p;
    double R_inf;
};

/// Essential growth rates of the diagonal part of H(n).
inline GrowthRates growth_rates(const LaserConfig& cfg, const CarrierVector& n) {
    check_admissible(cfg, n);
    const double L = cfg.total_length();
    const double rr = std::abs(cfg.r0 * cfg.rL);
    double R_psi = -std::numeric_limits<double>::infinity();
    if (rr > 0.0) {
        double acc = 0.5 * std::log(rr);
        for (std::size_t k = 0; k < cfg.size(); ++k)
            acc += cfg.sections[k].length * beta(cfg.sections[k], n[k]).real();
        R_psi = acc / L;
    }
    double gmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cfg.size(); ++k) gmin = std::min(gmin, cfg.sections[k].gamma(n[k]));
    const double R_p = -gmin;
    return {R_psi, R_p, std::max(R_psi, R_p)};
}

/// Upper bound Lambda_u(n) for the real part of every eigenvalue of H(n).
inline double lambda_upper_bound(const LaserConfig& cfg, const CarrierVector& n) {
    check_admissible(cfg, n);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        const auto& s = cfg.sections[k];
        best = std::max({best, beta(s, n[k]).real() + 2.0 * s.rho(n[k]), -0.5 * s.gamma(n[k])});
    }
    return best;
}

struct Window {
    double re_min = 0.0, re_max = 0.0, im_min = 0.0, im_max = 0.0;

    bool contains(cplx z, double margin = 0.0) const {
        return z.real() > re_min + margin && z.real() < re_max - margin && z.imag() > im_min + margin &&
               z.imag() < im_max - margin;
    }
    bool empty() const { return !(re_max > re_min) || !(im_max > im_min); }
};

/// Re in [R_inf + 0.1, Lambda_u + 0.1], Im in [-25, 25].
inline Window default_window(const LaserConfig& cfg, const CarrierVector& n) {
    const auto rates = growth_rates(cfg, n);
    return {rates.R_inf + 0.1, lambda_upper_bound(cfg, n) + 0.1, -25.0, 25.0};
}

struct Eigenvalue {
    cplx lambda;
    int multiplicity = 1;
    double residual = 0.0;  // |h(n; lambda)|
};

struct SpectralGap {
    int q = 0;          // eigenvalues (with multiplicity) with Re > -delta
    double xi = 0.0;    // -max(Re of the rest, R_inf)
    double delta = 1e-8;
};

struct Spectrum {
    std::vector<Eigenvalue> eigenvalues;  // sorted by Re descending, then Im
    GrowthRates rates{};
    double Lambda_u = 0.0;
    Window window;
    int winding = 0;
    int harvested = 0;
    SpectralGap gap;

    std::optional<Eigenvalue> dominant() const {
        if (eigenvalues.empty()) return std::nullopt;
        return eigenvalues.front();
    }
};

class CountMismatchError : public NumericalError {
public:
    CountMismatchError(int harvested, int winding, Spectrum partial)
        : NumericalError("eigenvalue count mismatch: Newton harvest " + std::to_string(harvested) +
                         ", winding number " + std::to_string(winding)),
          harvested_(harvested), winding_(winding), partial_(std::move(partial)) {}
    int harvested() const { return harvested_; }
    int winding() const { return winding_; }
    const Spectrum& partial() const { return partial_; }

private:
    int harvested_, winding_;
    Spectrum partial_;
};

struct EigenSearchOptions {
    double seed_spacing = 0.5;      // grid seed spacing in the window
    int max_newton_iter = 60;
    double newton_max_step = 1.0;
    double dedup_tol = 1e-7;
    double multiplicity_radius = 1e-4;
    double delta = 1e-8;            // axis closeness for the gap count
    int max_refinements = 3;
    double fixed_point_kappa_max = 0.5;  // use fixed-point seeds when max |kappa| below this
};

namespace detail {

// Phase change of h between two contour points, adaptively refined so that
// each accepted piece turns by less than max_turn.
inline double arg_change(const LaserConfig& cfg, const CarrierVector& n, cplx a, cplx b, const CharValue& ha,
                         const CharValue& hb, int depth) {
    const double whole = std::arg(hb.value / ha.value);
    const cplx m = 0.5 * (a + b);
    const auto hm = char_fn(cfg, n, m);
    const double d1 = std::arg(hm.value / ha.value);
    const double d2 = std::arg(hb.value / hm.value);
    // Predicted turn from the logarithmic derivative at the ends.
    const double pred = std::max(std::abs(ha.derivative / ha.value), std::abs(hb.derivative / hb.value)) *
                        std::abs(b - a);
    const bool smooth = std::abs(d1) < 0.4 && std::abs(d2) < 0.4 && pred < 0.8 &&
                        std::abs(std::remainder(d1 + d2 - whole, 2.0 * kPi)) < 1e-9;
    if (smooth || depth > 48) {
        if (depth > 48 && !smooth)
            throw NumericalError("winding number: contour passes through or too close to a root");
        return d1 + d2;
    }
    return arg_change(cfg, n, a, m, ha, hm, depth + 1) + arg_change(cfg, n, m, b, hm, hb, depth + 1);
}

inline int winding_along(const LaserConfig& cfg, const CarrierVector& n, const std::vector<cplx>& corners,
                         double max_piece) {
    double total = 0.0;
    for (std::size_t e = 0; e < corners.size(); ++e) {
        const cplx a = corners[e];
        const cplx b = corners[(e + 1) % corners.size()];
        const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / max_piece)));
        cplx prev = a;
        auto hprev = char_fn(cfg, n, prev);
        for (int i = 1; i <= pieces; ++i) {
            const cplx next = a + (b - a) * (static_cast<double>(i) / pieces);
            const auto hnext = char_fn(cfg, n, next);
            total += arg_change(cfg, n, prev, next, hprev, hnext, 0);
            prev = next;
            hprev = hnext;
        }
    }
    const double turns = total / (2.0 * kPi);
    const double rounded = std::round(turns);
    if (std::abs(turns - rounded) > 1e-3) {
        std::ostringstream os;
        os << "winding number not integral: " << turns;
        throw NumericalError(os.str());
    }
    return static_cast<int>(rounded);
}

} // namespace detail

/// Number of roots of h(n; .) inside the window (argument principle).
inline int winding_number(const LaserConfig& cfg, const CarrierVector& n, const Window& w) {
    const std::vector<cplx> corners{{w.re_min, w.im_min}, {w.re_max, w.im_min}, {w.re_max, w.im_max},
                                    {w.re_min, w.im_max}};
    return detail::winding_along(cfg, n, corners, 0.05);
}

/// Number of roots inside a circle, sampled as a 64-gon.
inline int winding_circle(const LaserConfig& cfg, const CarrierVector& n, cplx center, double radius) {
    std::vector<cplx> pts;
    const int k = 64;
    for (int i = 0; i < k; ++i) pts.push_back(center + radius * std::polar(1.0, 2.0 * kPi * i / k));
    return detail::winding_along(cfg, n, pts, radius);
}

struct NewtonResult {
    cplx lambda;
    bool converged = false;
    int iterations = 0;
};

/// Newton iteration on h(n; .) with step length capped at max_step.
inline NewtonResult newton_root(const LaserConfig& cfg, const CarrierVector& n, cplx seed, int max_iter = 60,
                                double max_step = 1.0) {
    cplx z = seed;
    for (int it = 0; it < max_iter; ++it) {
        CharValue hv;
        try {
            hv = char_fn(cfg, n, z);
        } catch (const PoleError&) {
            return {z, false, it};
        }
        if (hv.value == 0.0) return {z, true, it};
        cplx step = hv.newton_step();
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return {z, false, it};
        if (std::abs(step) > max_step) step *= max_step / std::abs(step);
        z -= step;
        if (std::abs(step) < 1e-13 * std::max(1.0, std::abs(z))) return {z, true, it + 1};
    }
    return {z, false, max_iter};
}

/// Seeds lambda_0 + j pi i / L + sum (l_k/L) chi_k(lambda), iterated to a
/// fixed point; exact when kappa = 0.
inline std::vector<cplx> fixed_point_seeds(const LaserConfig& cfg, const CarrierVector& n, const Window& w) {
    std::vector<cplx> out;
    const cplx rr = cfg.r0 * cfg.rL;
    if (std::abs(rr) == 0.0) return out;
    const double L = cfg.total_length();
    cplx lambda0 = 0.5 * std::log(rr);
    for (std::size_t k = 0; k < cfg.size(); ++k) lambda0 += cfg.sections[k].length * beta(cfg.sections[k], n[k]);
    lambda0 /= L;
    const int jlo = static_cast<int>(std::floor((w.im_min - lambda0.imag()) * L / kPi)) - 2;
    const int jhi = static_cast<int>(std::ceil((w.im_max - lambda0.imag()) * L / kPi)) + 2;
    for (int j = jlo; j <= jhi; ++j) {
        cplx z = lambda0 + cplx(0.0, j * kPi / L);
        try {
            for (int it = 0; it < 50; ++it) {
                cplx acc = lambda0 + cplx(0.0, j * kPi / L);
                for (std::size_t k = 0; k < cfg.size(); ++k)
                    acc += cfg.sections[k].length / L * chi(cfg.sections[k], n[k], z);
                if (std::abs(acc - z) < 1e-14) break;
                z = acc;
            }
        } catch (const PoleError&) {
            continue;
        }
        out.push_back(z);
    }
    return out;
}

namespace detail {

inline void insert_root(std::vector<Eigenvalue>& roots, cplx z, double tol) {
    for (const auto& r : roots)
        if (std::abs(r.lambda - z) < tol) return;
    roots.push_back({z, 1, 0.0});
}

inline void harvest(const LaserConfig& cfg, const CarrierVector& n, const Window& w, const EigenSearchOptions& o,
                    double spacing, std::vector<Eigenvalue>& roots) {
    const int nx = std::max(3, static_cast<int>(std::ceil((w.re_max - w.re_min) / spacing)));
    const int ny = std::max(3, static_cast<int>(std::ceil((w.im_max - w.im_min) / spacing)));
    std::vector<cplx> seeds;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            seeds.emplace_back(w.re_min + (i + 0.5) * (w.re_max - w.re_min) / nx,
                               w.im_min + (j + 0.5) * (w.im_max - w.im_min) / ny);
    double kmax = 0.0;
    for (const auto& s : cfg.sections) kmax = std::max(kmax, std::abs(s.kappa));
    if (kmax < o.fixed_point_kappa_max) {
        const auto fp = fixed_point_seeds(cfg, n, w);
        seeds.insert(seeds.end(), fp.begin(), fp.end());
    }
    for (const cplx& s : seeds) {
        const auto r = newton_root(cfg, n, s, o.max_newton_iter, o.newton_max_step);
        if (r.converged && w.contains(r.lambda)) insert_root(roots, r.lambda, o.dedup_tol);
    }
}

} // namespace detail

/// Roots of the characteristic function inside a window, with the Newton
/// harvest audited against the argument-principle count.
inline Spectrum find_eigenvalues(const LaserConfig& cfg, const CarrierVector& n, std::optional<Window> window = {},
                                 const EigenSearchOptions& opts = {}) {
    check_admissible(cfg, n);
    Spectrum sp;
    sp.rates = growth_rates(cfg, n);
    sp.Lambda_u = lambda_upper_bound(cfg, n);
    sp.window = window ? *window : default_window(cfg, n);
    sp.gap.delta = opts.delta;
    const Window& w = sp.window;

    std::vector<Eigenvalue> roots;
    if (!w.empty()) {
        sp.winding = winding_number(cfg, n, w);
        double spacing = opts.seed_spacing;
        for (int pass = 0;; ++pass) {
            detail::harvest(cfg, n, w, opts, spacing, roots);
            // Multiplicities from small circles (skipped if another root is inside).
            int count = 0;
            for (auto& r : roots) {
                bool crowded = false;
                for (const auto& o : roots)
                    if (&o != &r && std::abs(o.lambda - r.lambda) < 2.0 * opts.multiplicity_radius) crowded = true;
                r.multiplicity = crowded ? 1 : std::max(1, winding_circle(cfg, n, r.lambda, opts.multiplicity_radius));
                count += r.multiplicity;
            }
            sp.harvested = count;
            if (count == sp.winding) break;
            if (pass >= opts.max_refinements) {
                sp.eigenvalues = roots;
                throw CountMismatchError(count, sp.winding, sp);
            }
            spacing *= 0.5;
        }
    }
    for (auto& r : roots) r.residual = std::abs(char_fn(cfg, n, r.lambda).full());
    std::sort(roots.begin(), roots.end(), [](const Eigenvalue& a, const Eigenvalue& b) {
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
        return a.lambda.imag() < b.lambda.imag();
    });
    sp.eigenvalues = std::move(roots);

    double rest = sp.rates.R_inf;
    for (const auto& e : sp.eigenvalues) {
        if (e.lambda.real() > -sp.gap.delta)
            sp.gap.q += e.multiplicity;
        else
            rest = std::max(rest, e.lambda.real());
    }
    sp.gap.xi = -rest;
    return sp;
}

} // namespace twm
