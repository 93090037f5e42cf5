#pragma once

#include "twm/profile.hpp"
#include "twm/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace twm {

class NotARootError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Eigenfunction of H(n) for a root lambda of h, evaluable at any z.
/// psi = c T(z, 0) [r0, 1]^T, normalised to ||psi|| = 1 with psi1(0) + psi2(0)
/// real positive; p = Gamma psi / (lambda - i Omega_r + Gamma).
class EigenMode {
public:
    EigenMode(const LaserConfig& cfg, const CarrierVector& n, cplx lambda, double defect_tol = 1e-8,
              double quad_cells_per_unit = 512.0)
        : cfg_(cfg), n_(n), lambda_(lambda), bounds_(cfg.boundaries()) {
        check_admissible(cfg, n);
        Vec2 v{cfg.r0, 1.0};
        double lg = 0.0;
        for (std::size_t k = 0; k < cfg.size(); ++k) {
            start_.push_back(v);
            start_log_.push_back(lg);
            const auto t = transfer_section(cfg.sections[k], n[k], lambda, cfg.sections[k].length);
            const Vec2 nv = t.scaled * v;
            const double m = std::max(std::abs(nv[0]), std::abs(nv[1]));
            v = {nv[0] / m, nv[1] / m};
            lg += t.log_scale + std::log(m);
        }
        double top = lg;
        for (double s : start_log_) top = std::max(top, s);
        log_factor_ = -top;
        factor_ = 1.0;

        const auto grid = SectionedGrid::make(cfg, quad_cells_per_unit);
        const double nrm = std::sqrt(psi_norm2(sample(grid)));
        if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericalError("eigenmode: degenerate profile");
        const cplx s0 = cfg.r0 + 1.0;
        factor_ = std::conj(s0) / std::abs(s0) / nrm;
        norm_constant_ = nrm * std::exp(-log_factor_);

        const Vec2 end = psi(bounds_.back());
        defect_ = std::abs(end[1] - cfg.rL * end[0]);
        if (!(defect_ < defect_tol))
            throw NotARootError("eigenmode: boundary defect " + std::to_string(defect_) + " exceeds tolerance");
    }

    cplx lambda() const { return lambda_; }
    const CarrierVector& n() const { return n_; }
    const LaserConfig& config() const { return cfg_; }
    double boundary_defect() const { return defect_; }
    /// ||T(., 0)[r0, 1]^T|| before normalisation.
    double norm_constant() const { return norm_constant_; }

    /// Multiplies the profile (and its adjoint) by a constant phase.
    void rotate(cplx phase) { factor_ *= phase; }

    std::size_t section_of(double z) const {
        for (std::size_t k = 0; k + 1 < bounds_.size(); ++k)
            if (z < bounds_[k + 1]) return k;
        return bounds_.size() - 2;
    }

    /// psi at local coordinate x in section k.
    Vec2 psi_in(std::size_t k, double x) const {
        const auto t = transfer_section(cfg_.sections[k], n_[k], lambda_, x);
        const Vec2 v = t.scaled * start_[k];
        const cplx s = factor_ * std::exp(t.log_scale + start_log_[k] + log_factor_);
        return {v[0] * s, v[1] * s};
    }

    cplx p_ratio(std::size_t k) const {
        const auto& s = cfg_.sections[k];
        return s.gamma(n_[k]) / (lambda_ - chi_pole(s, n_[k]));
    }

    /// Adjoint polarization weight: pi = w phi.
    cplx adjoint_p_ratio(std::size_t k) const {
        const auto& s = cfg_.sections[k];
        return s.rho(n_[k]) / (lambda_ - chi_pole(s, n_[k]));
    }

    Vec2 psi(double z) const {
        const auto k = section_of(z);
        return psi_in(k, z - bounds_[k]);
    }

    Vec2 p(double z) const {
        const auto k = section_of(z);
        const Vec2 v = psi_in(k, z - bounds_[k]);
        const cplx r = p_ratio(k);
        return {r * v[0], r * v[1]};
    }

    FieldProfile sample(const SectionedGrid& g) const {
        auto f = FieldProfile::zeros(g);
        for (std::size_t k = 0; k < g.sections(); ++k) {
            const cplx r = p_ratio(k);
            for (int i = 0; i <= g.cells[k]; ++i) {
                const Vec2 v = psi_in(k, i * g.dz(k));
                f.psi[k][i] = v;
                f.p[k][i] = {r * v[0], r * v[1]};
            }
        }
        return f;
    }

    /// Left eigenfunction Phi = (phi, pi) for the bilinear pairing: the
    /// adjoint boundary problem is solved by phi = (psi2, psi1), pi = rho phi / (lambda - i Omega_r + Gamma).
    FieldProfile adjoint_sample(const SectionedGrid& g) const {
        auto f = FieldProfile::zeros(g);
        for (std::size_t k = 0; k < g.sections(); ++k) {
            const cplx w = adjoint_p_ratio(k);
            for (int i = 0; i <= g.cells[k]; ++i) {
                const Vec2 v = psi_in(k, i * g.dz(k));
                f.psi[k][i] = {v[1], v[0]};
                f.p[k][i] = {w * v[1], w * v[0]};
            }
        }
        return f;
    }

    /// Adjoint evaluated at z: (phi, pi).
    std::pair<Vec2, Vec2> adjoint(double z) const {
        const auto k = section_of(z);
        const Vec2 v = psi_in(k, z - bounds_[k]);
        const cplx w = adjoint_p_ratio(k);
        return {{v[1], v[0]}, {w * v[1], w * v[0]}};
    }

private:
    LaserConfig cfg_;
    CarrierVector n_;
    cplx lambda_;
    std::vector<double> bounds_;
    std::vector<Vec2> start_;
    std::vector<double> start_log_;
    double log_factor_ = 0.0;
    cplx factor_ = 1.0;
    double norm_constant_ = 1.0;
    double defect_ = 0.0;
};

inline EigenMode eigenmode(const LaserConfig& cfg, const CarrierVector& n, cplx lambda) {
    return EigenMode(cfg, n, lambda);
}

/// <Phi, E> = integral 2 psi1 psi2 (1 - chi'(lambda)); zero iff lambda is not simple.
inline cplx biorthogonal_normalizer(const EigenMode& m, const SectionedGrid& g) {
    return bilinear(m.adjoint_sample(g), m.sample(g));
}

} // namespace twm
