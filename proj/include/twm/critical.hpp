#pragma once

#include "twm/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

namespace twm {

struct CriticalOptions {
    int max_iter = 80;
    double tol = 1e-13;           // on |h / h'|
    double fd_step = 1e-6;        // relative step for dh/dn
    double max_dn = 0.05;         // trust region for the density update
    double scan_dn = 0.02;        // scan step when bracketing the crossing
    int scan_steps = 200;
    double bracket_tol = 1e-4;
    int expected_q = 1;
    double confirm_im = 60.0;     // half-height of the confirmation window
    EigenSearchOptions search{};
};

struct CriticalResult {
    CarrierVector n;
    double omega = 0.0;
    int iterations = 0;
    Spectrum spectrum;
    bool gap_confirmed = false;
    std::string message;
};


namespace detail {

// dh/dn_free relative to the scale of h0.
inline cplx h_dn(const LaserConfig& cfg, CarrierVector n, std::size_t idx, cplx lambda, double ref_log,
                 double rel_step) {
    const double dn = rel_step * std::max(1.0, std::abs(n[idx]));
    const double saved = n[idx];
    n[idx] = saved + dn;
    const auto hp = char_fn(cfg, n, lambda);
    n[idx] = saved - dn;
    const auto hm = char_fn(cfg, n, lambda);
    return (hp.value * std::exp(hp.log_scale - ref_log) - hm.value * std::exp(hm.log_scale - ref_log)) / (2.0 * dn);
}

// Follows the root lambda(n) in n_free until Re lambda = 0.
inline bool track_to_axis(const LaserConfig& cfg, CarrierVector& n, std::size_t idx, cplx& lambda,
                          const CriticalOptions& opts) {
    for (int it = 0; it < opts.max_iter; ++it) {
        const auto r = newton_root(cfg, n, lambda, 60, 0.25);
        if (!r.converged) return false;
        lambda = r.lambda;
        if (std::abs(lambda.real()) < 1e-12) return true;
        const auto h0 = char_fn(cfg, n, lambda);
        const cplx dl = -h_dn(cfg, n, idx, lambda, h0.log_scale, opts.fd_step) / h0.derivative;
        if (!(std::abs(dl.real()) > 0.0)) return false;
        double step = -lambda.real() / dl.real();
        step = std::clamp(step, -opts.max_dn, opts.max_dn);
        if (!(n[idx] + step > cfg.sections[idx].n_floor())) step = 0.5 * (cfg.sections[idx].n_floor() - n[idx]);
        n[idx] += step;
        lambda += dl * step;
    }
    return false;
}

// Newton on Re h = Im h = 0 in (n_free, omega).
inline bool newton_2d(const LaserConfig& cfg, CarrierVector& n, std::size_t idx, double& omega,
                      const CriticalOptions& opts, int& iterations) {
    double& nf = n[idx];
    for (int it = 0; it < opts.max_iter; ++it) {
        iterations = it + 1;
        const auto h0 = char_fn(cfg, n, cplx(0.0, omega));
        const cplx h = h0.value;
        const double merit0 = std::abs(h / h0.derivative);
        if (merit0 < opts.tol) return true;
        const cplx h_omega = kI * h0.derivative;
        const cplx h_n = h_dn(cfg, n, idx, cplx(0.0, omega), h0.log_scale, opts.fd_step);

        // [h_n h_omega] [dn; domega] = -h as a real 2x2 system.
        const double a11 = h_n.real(), a12 = h_omega.real(), a21 = h_n.imag(), a22 = h_omega.imag();
        const double det = a11 * a22 - a12 * a21;
        if (det == 0.0 || !std::isfinite(det)) return false;
        double step_n = (-h.real() * a22 + h.imag() * a12) / det;
        double step_w = (-a11 * h.imag() + a21 * h.real()) / det;
        if (!std::isfinite(step_n) || !std::isfinite(step_w)) return false;
        if (std::abs(step_n) > opts.max_dn) {
            const double s = opts.max_dn / std::abs(step_n);
            step_n *= s;
            step_w *= s;
        }
        const double saved = nf;
        double t = 1.0;
        for (int bt = 0; bt < 30; ++bt) {
            const double trial = saved + t * step_n;
            if (trial > cfg.sections[idx].n_floor()) {
                nf = trial;
                try {
                    if (std::abs(char_fn(cfg, n, cplx(0.0, omega + t * step_w)).newton_step()) < merit0) break;
                } catch (const PoleError&) {
                }
            }
            t *= 0.5;
        }
        nf = saved + t * step_n;
        omega += t * step_w;
        if (std::abs(t * step_n) < 1e-15 * std::max(1.0, std::abs(nf)) &&
            std::abs(t * step_w) < 1e-15 * std::max(1.0, std::abs(omega)))
            return std::abs(char_fn(cfg, n, cplx(0.0, omega)).newton_step()) < 1e-10;
    }
    return false;
}

} // namespace detail

/// Critical density along one free carrier index. Without a frequency seed
/// the first sign change of max Re lambda(n) is bracketed by a scan in n_free
/// and bisection; the dominant root there is followed to the imaginary axis,
/// polished by Newton on Re h = Im h = 0 in (n_free, omega), and the spectral
/// gap is confirmed at the result. With a seed the root nearest i omega_seed
/// is followed directly.
inline CriticalResult critical_density_search(const LaserConfig& cfg, CarrierVector n, std::size_t free_index,
                                              std::optional<double> omega_seed = {},
                                              const CriticalOptions& opts = {}) {
    if (free_index >= cfg.size()) throw DomainError("critical search: free index out of range");
    check_admissible(cfg, n);

    cplx lambda;
    if (omega_seed) {
        const auto r = newton_root(cfg, n, cplx(0.0, *omega_seed), opts.max_iter, 0.5);
        if (!r.converged) throw NumericalError("critical search: no eigenvalue near the seed frequency");
        lambda = r.lambda;
    } else {
        auto dominant = [&](const CarrierVector& nn) {
            const auto sp = find_eigenvalues(cfg, nn, std::nullopt, opts.search);
            if (sp.eigenvalues.empty()) throw NumericalError("critical search: no eigenvalue in the search window");
            return sp.eigenvalues.front().lambda;
        };
        double lo = n[free_index];
        cplx lam_lo = dominant(n);
        const double dir = lam_lo.real() < 0.0 ? 1.0 : -1.0;
        double hi = lo;
        cplx lam_hi = lam_lo;
        bool bracketed = false;
        for (int i = 0; i < opts.scan_steps; ++i) {
            CarrierVector t = n;
            t[free_index] = hi + dir * opts.scan_dn;
            if (!(t[free_index] > cfg.sections[free_index].n_floor())) break;
            const cplx l = dominant(t);
            lo = hi;
            lam_lo = lam_hi;
            hi = t[free_index];
            lam_hi = l;
            if ((l.real() < 0.0) != (lam_lo.real() < 0.0)) {
                bracketed = true;
                break;
            }
        }
        if (!bracketed) throw NumericalError("critical search: no stability change found along the scan");
        while (std::abs(hi - lo) > opts.bracket_tol) {
            CarrierVector t = n;
            t[free_index] = 0.5 * (lo + hi);
            const cplx l = dominant(t);
            if ((l.real() < 0.0) == (lam_lo.real() < 0.0)) {
                lo = t[free_index];
                lam_lo = l;
            } else {
                hi = t[free_index];
                lam_hi = l;
            }
        }
        const bool use_lo = std::abs(lam_lo.real()) < std::abs(lam_hi.real());
        n[free_index] = use_lo ? lo : hi;
        lambda = use_lo ? lam_lo : lam_hi;
    }

    CriticalResult res;
    if (!detail::track_to_axis(cfg, n, free_index, lambda, opts))
        throw NumericalError("critical search: root continuation failed");
    double omega = lambda.imag();
    if (!detail::newton_2d(cfg, n, free_index, omega, opts, res.iterations)) {
        std::ostringstream os;
        os << "critical search: Newton did not converge (|h/h'| = "
           << std::abs(char_fn(cfg, n, cplx(0.0, omega)).newton_step()) << ")";
        throw NumericalError(os.str());
    }
    res.n = n;
    res.omega = omega;
    auto win = default_window(cfg, n);
    win.im_min = std::min(win.im_min, omega - opts.confirm_im);
    win.im_max = std::max(win.im_max, omega + opts.confirm_im);
    res.spectrum = find_eigenvalues(cfg, n, win, opts.search);
    const auto& g = res.spectrum.gap;
    res.gap_confirmed = g.q == opts.expected_q && g.xi > 0.0;
    std::ostringstream os;
    if (res.gap_confirmed)
        os << "critical: q = " << g.q << ", xi = " << g.xi;
    else
        os << "gap not confirmed: q = " << g.q << " (expected " << opts.expected_q << "), xi = " << g.xi;
    res.message = os.str();
    return res;
}

} // namespace twm
