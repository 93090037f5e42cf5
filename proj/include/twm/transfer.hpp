#pragma once

#include "twm/laser_model.hpp"

#include <array>
#include <cmath>

namespace twm {

using Vec2 = std::array<cplx, 2>;

struct Mat2 {
    cplx a, b, c, d;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    cplx det() const { return a * d - b * c; }
    Vec2 operator*(const Vec2& v) const { return {a * v[0] + b * v[1], c * v[0] + d * v[1]}; }
    Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    Mat2 operator*(cplx s) const { return {a * s, b * s, c * s, d * s}; }
    Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
    Mat2 operator-(const Mat2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
    Mat2 transpose() const { return {a, c, b, d}; }
    /// Inverse transpose of a unimodular matrix.
    Mat2 inverse_transpose_unimodular() const { return {d, -c, -b, a}; }
    double max_abs() const { return std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)}); }
};

/// Transfer matrix across a section piece of length z, stored as
/// exp(log_scale) * scaled so that strongly amplifying sections do not
/// overflow. The derivative with respect to lambda shares the same scale.
struct SectionTransfer {
    Mat2 scaled;
    Mat2 dscaled;     // d/dlambda, times exp(-log_scale)
    double log_scale = 0.0;
    cplx mu;
    cplx gamma;       // principal branch sqrt(mu^2 + kappa^2)

    Mat2 matrix() const { return scaled * std::exp(log_scale); }
    Mat2 derivative() const { return dscaled * std::exp(log_scale); }
    cplx det() const { return scaled.det() * std::exp(2.0 * log_scale); }
};

namespace detail {

// cosh(w), sinh(w)/w and (cosh(w) - sinh(w)/w)/w^2 as power series in u = w^2.
struct HyperbolicSeries {
    cplx c, s, r;
};

inline HyperbolicSeries hyperbolic_series(cplx u) {
    cplx c = 1.0, s = 1.0, r = 1.0 / 3.0;
    cplx term_c = 1.0, term_s = 1.0, upow = 1.0;
    double fact_even = 1.0;  // (2k)!
    for (int k = 1; k < 30; ++k) {
        upow *= u;
        fact_even *= (2.0 * k - 1.0) * (2.0 * k);
        const double fact_odd = fact_even * (2.0 * k + 1.0);
        term_c = upow / fact_even;
        term_s = upow / fact_odd;
        c += term_c;
        s += term_s;
        // r = sum_{k>=1} 2k u^{k-1} / (2k+1)!, first term handled above.
        const double fact_r = fact_odd * (2.0 * k + 2.0) * (2.0 * k + 3.0);
        r += 2.0 * (k + 1) * upow / fact_r;
        if (std::abs(term_c) < 1e-18 * std::abs(c) && std::abs(term_s) < 1e-18 * std::abs(s)) break;
    }
    return {c, s, r};
}

} // namespace detail

/// Closed-form transfer matrix T_k(z) = exp(A z) with generator
/// A = [[-mu, -i kappa], [i kappa, mu]], mu = lambda - chi - beta.
/// Written as cosh(gamma z) I + sinh(gamma z)/gamma A, which is even in gamma.
inline SectionTransfer transfer_section(const SectionParams& s, double n_k, cplx lambda, double z) {
    const cplx mu = lambda - chi(s, n_k, lambda) - beta(s, n_k);
    const cplx dmu = 1.0 - chi_derivative(s, n_k, lambda);
    const double kappa = s.kappa;
    const cplx g2 = mu * mu + kappa * kappa;
    const cplx gam = std::sqrt(g2);
    const cplx w = gam * z;

    const Mat2 A{-mu, cplx(0.0, -kappa), cplx(0.0, kappa), mu};
    const Mat2 dA{-1.0, 0.0, 0.0, 1.0};

    SectionTransfer out;
    out.mu = mu;
    out.gamma = gam;

    cplx C, Sz, dC, dSz;  // cosh, sinh(w)/gamma and their mu-derivatives (all scaled)
    if (std::abs(w) < 1.0) {
        const auto hs = detail::hyperbolic_series(g2 * z * z);
        C = hs.c;
        Sz = z * hs.s;
        dC = z * z * mu * hs.s;
        dSz = z * z * z * mu * hs.r;
        out.log_scale = 0.0;
    } else {
        // Factor exp(Re w) out of every entry.
        const cplx phase = std::exp(cplx(0.0, w.imag()));
        const cplx e2 = std::exp(-2.0 * w);
        const cplx ch = phase * (1.0 + e2) * 0.5;
        const cplx sh = phase * (1.0 - e2) * 0.5;
        C = ch;
        Sz = sh / gam;
        dC = sh * z * mu / gam;
        dSz = mu * (z * ch - sh / gam) / g2;
        out.log_scale = w.real();
    }
    out.scaled = Mat2::identity() * C + A * Sz;
    out.dscaled = (Mat2::identity() * dC + A * dSz + dA * Sz) * dmu;
    return out;
}

/// Plain (unscaled) transfer matrix; refuses inputs whose amplification
/// would overflow double precision.
inline Mat2 transfer_section_unscaled(const SectionParams& s, double n_k, cplx lambda, double z) {
    const auto t = transfer_section(s, n_k, lambda, z);
    if (std::abs(t.gamma.real()) * z > 700.0)
        throw OverflowError("transfer_section: |Re gamma| z exceeds 700");
    return t.matrix();
}

/// Characteristic function h = [rL, -1] T_m ... T_1 [r0, 1]^T and its lambda
/// derivative, both carried as exp(log_scale) * value.
struct CharValue {
    cplx value;
    cplx derivative;
    double log_scale = 0.0;

    cplx full() const { return value * std::exp(log_scale); }
    cplx full_derivative() const { return derivative * std::exp(log_scale); }
    double log_abs() const { return std::log(std::abs(value)) + log_scale; }
    /// h / h', independent of the scale.
    cplx newton_step() const { return value / derivative; }
};

inline CharValue char_fn(const LaserConfig& cfg, const CarrierVector& n, cplx lambda) {
    Vec2 v{cfg.r0, 1.0};
    Vec2 dv{0.0, 0.0};
    double scale = 0.0;
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        const auto& sec = cfg.sections[k];
        const auto t = transfer_section(sec, n[k], lambda, sec.length);
        const Vec2 nv = t.scaled * v;
        const Vec2 tdv = t.scaled * dv;
        const Vec2 dtv = t.dscaled * v;
        Vec2 ndv{tdv[0] + dtv[0], tdv[1] + dtv[1]};
        scale += t.log_scale;
        const double m = std::max(std::abs(nv[0]), std::abs(nv[1]));
        v = {nv[0] / m, nv[1] / m};
        dv = {ndv[0] / m, ndv[1] / m};
        scale += std::log(m);
    }
    return {cfg.rL * v[0] - v[1], cfg.rL * dv[0] - dv[1], scale};
}

} // namespace twm
