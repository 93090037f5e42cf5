#pragma once

#include "twm/laser_model.hpp"
#include "twm/profile.hpp"

#include <cmath>
#include <vector>

namespace twm::oracle {

namespace detail {

// Fourth-order first derivative on a uniform grid; one-sided stencils at the ends.
inline std::vector<cplx> derivative4(const std::vector<cplx>& f, double h) {
    const int n = static_cast<int>(f.size()) - 1;
    if (n < 4) throw DomainError("apply_H_fd: need at least 4 cells per section");
    std::vector<cplx> d(f.size());
    const double c = 1.0 / (12.0 * h);
    d[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
    d[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    for (int i = 2; i <= n - 2; ++i) d[i] = c * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
    d[n - 1] = -c * (-3.0 * f[n] - 10.0 * f[n - 1] + 18.0 * f[n - 2] - 6.0 * f[n - 3] + f[n - 4]);
    d[n] = -c * (-25.0 * f[n] + 48.0 * f[n - 1] - 36.0 * f[n - 2] + 16.0 * f[n - 3] - 3.0 * f[n - 4]);
    return d;
}

} // namespace detail

/// H(n) applied to a sampled field:
/// psi -> diag(-1, 1) psi' - i kappa sigma_x psi + beta psi + rho p,
/// p -> (i Omega_r - Gamma) p + Gamma psi.
inline FieldProfile apply_H_fd(const LaserConfig& cfg, const CarrierVector& n, const FieldProfile& e) {
    auto out = FieldProfile::zeros(e.grid);
    for (std::size_t k = 0; k < e.grid.sections(); ++k) {
        const auto& s = cfg.sections[k];
        const double nu = n[k];
        const double G = s.gain_model == GainModel::log ? s.gain_slope * std::log(nu) : s.gain_slope * (nu - 1.0);
        const double rho = s.rho(nu), Gam = s.gamma(nu), Om = s.omega_r(nu);
        const cplx b = cplx(1.0, s.alpha_h) * G - s.d - rho;
        const cplx ik(0.0, s.kappa);
        const std::size_t sz = e.psi[k].size();
        std::vector<cplx> f1(sz), f2(sz);
        for (std::size_t i = 0; i < sz; ++i) {
            f1[i] = e.psi[k][i][0];
            f2[i] = e.psi[k][i][1];
        }
        const auto d1 = detail::derivative4(f1, e.grid.dz(k));
        const auto d2 = detail::derivative4(f2, e.grid.dz(k));
        for (std::size_t i = 0; i < sz; ++i) {
            const Vec2& ps = e.psi[k][i];
            const Vec2& pp = e.p[k][i];
            out.psi[k][i][0] = -d1[i] - ik * ps[1] + b * ps[0] + rho * pp[0];
            out.psi[k][i][1] = d2[i] - ik * ps[0] + b * ps[1] + rho * pp[1];
            for (int c = 0; c < 2; ++c) out.p[k][i][c] = cplx(-Gam, Om) * pp[c] + Gam * ps[c];
        }
    }
    return out;
}

/// L2 norm (trapezoid) of (H - lambda) E.
inline double eigen_residual(const LaserConfig& cfg, const CarrierVector& n, const FieldProfile& e, cplx lambda) {
    auto r = apply_H_fd(cfg, n, e);
    r.axpy(-lambda, e);
    double acc = 0.0;
    for (std::size_t k = 0; k < r.psi.size(); ++k) {
        std::vector<double> f(r.psi[k].size());
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = std::norm(r.psi[k][i][0]) + std::norm(r.psi[k][i][1]) + std::norm(r.p[k][i][0]) +
                   std::norm(r.p[k][i][1]);
        acc += trapezoid(f, r.grid.dz(k));
    }
    return std::sqrt(acc);
}

} // namespace twm::oracle
