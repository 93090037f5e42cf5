#pragma once

#include "twm/types.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace twm {

enum class GainModel { linear, log };

/// Affine coefficient in the carrier density: base + slope * (n - 1).
struct Affine {
    double base = 0.0;
    double slope = 0.0;

    double operator()(double nu) const { return base + slope * (nu - 1.0); }
    bool operator==(const Affine&) const = default;
};

/// Physical coefficients of one longitudinal section S_k.
struct SectionParams {
    double length = 1.0;
    double kappa = 0.0;
    cplx d{0.5, 0.0};
    double alpha_h = 0.0;
    GainModel gain_model = GainModel::linear;
    double gain_slope = 1.0;          // G_k'(1)
    Affine rho{0.0, 0.0};
    Affine gamma{90.0, 0.0};
    Affine omega_r{0.0, 0.0};
    double current = 0.01;            // I_k
    double tau = 100.0;               // tau_k
    std::optional<double> n_floor_override;
    // Carrier density held constant (n_k' = 0), e.g. a passive phase section.
    bool frozen = false;

    double n_floor() const {
        if (n_floor_override) return *n_floor_override;
        return gain_model == GainModel::log ? 0.0 : -std::numeric_limits<double>::infinity();
    }

    bool operator==(const SectionParams&) const = default;
};

struct LaserConfig {
    std::vector<SectionParams> sections;
    cplx r0{0.0, 0.0};
    cplx rL{0.0, 0.0};
    double epsilon = 0.01;

    std::size_t size() const { return sections.size(); }

    /// Scaling constant of the carrier equation; tied to epsilon.
    double P() const { return epsilon; }

    double total_length() const {
        double L = 0.0;
        for (const auto& s : sections) L += s.length;
        return L;
    }

    /// Section boundaries z_1 = 0, ..., z_{m+1} = L.
    std::vector<double> boundaries() const {
        std::vector<double> z{0.0};
        for (const auto& s : sections) z.push_back(z.back() + s.length);
        return z;
    }

    /// Same slow vector field F = f/epsilon at a different epsilon: I_k and
    /// 1/tau_k scale with epsilon, P = epsilon follows automatically.
    LaserConfig with_epsilon(double eps) const {
        if (!(eps > 0.0) || !(epsilon > 0.0))
            throw ConfigError("with_epsilon: epsilon must be positive");
        LaserConfig out = *this;
        const double s = eps / epsilon;
        for (auto& sec : out.sections) {
            sec.current *= s;
            sec.tau /= s;
        }
        out.epsilon = eps;
        return out;
    }

    bool operator==(const LaserConfig&) const = default;
};

inline void check_admissible(const SectionParams& s, double nu) {
    if (!(nu > s.n_floor()) || !std::isfinite(nu)) {
        std::ostringstream os;
        os << "carrier density " << nu << " outside admissible range (" << s.n_floor() << ", inf)";
        throw DomainError(os.str());
    }
}

inline void check_admissible(const LaserConfig& cfg, const CarrierVector& n) {
    if (n.size() != cfg.size())
        throw DomainError("carrier vector has " + std::to_string(n.size()) + " entries, config has " +
                          std::to_string(cfg.size()) + " sections");
    for (std::size_t k = 0; k < n.size(); ++k) check_admissible(cfg.sections[k], n[k]);
}

/// Gain G_k(nu); G(1) = 0 and G'(1) = gain_slope for both models.
inline double gain(const SectionParams& s, double nu) {
    check_admissible(s, nu);
    switch (s.gain_model) {
    case GainModel::log: return s.gain_slope * std::log(nu);
    case GainModel::linear: break;
    }
    return s.gain_slope * (nu - 1.0);
}

inline double gain_derivative(const SectionParams& s, double nu) {
    check_admissible(s, nu);
    return s.gain_model == GainModel::log ? s.gain_slope / nu : s.gain_slope;
}

/// beta(n) = (1 + i alpha_H) G(n) - d - rho(n).
inline cplx beta(const SectionParams& s, double nu) {
    const double g = gain(s, nu);
    return cplx(1.0, s.alpha_h) * g - s.d - s.rho(nu);
}

/// The pole of chi_k sits at i Omega_r - Gamma.
inline cplx chi_pole(const SectionParams& s, double nu) { return cplx(-s.gamma(nu), s.omega_r(nu)); }

/// chi_k(n; lambda) = rho Gamma / (lambda - i Omega_r + Gamma).
inline cplx chi(const SectionParams& s, double nu, cplx lambda, double pole_tol = 1e-12) {
    const double rho = s.rho(nu);
    if (rho == 0.0) return {0.0, 0.0};
    const cplx denom = lambda - chi_pole(s, nu);
    if (std::abs(denom) < pole_tol) {
        std::ostringstream os;
        os << "lambda = " << lambda << " at pole of chi (" << chi_pole(s, nu) << ")";
        throw PoleError(os.str());
    }
    return rho * s.gamma(nu) / denom;
}

/// d chi / d lambda.
inline cplx chi_derivative(const SectionParams& s, double nu, cplx lambda) {
    const double rho = s.rho(nu);
    if (rho == 0.0) return {0.0, 0.0};
    const cplx denom = lambda - chi_pole(s, nu);
    return -rho * s.gamma(nu) / (denom * denom);
}

struct Diagnostic {
    enum class Severity { warning, error };
    Severity severity;
    std::string message;

    bool is_error() const { return severity == Severity::error; }
};

/// Structural violations are errors; violated physical assumptions are
/// warnings (the two-section reference laser has Re d_1 < 0).
inline std::vector<Diagnostic> validate(const LaserConfig& cfg) {
    std::vector<Diagnostic> out;
    auto err = [&](std::string m) { out.push_back({Diagnostic::Severity::error, std::move(m)}); };
    auto warn = [&](std::string m) { out.push_back({Diagnostic::Severity::warning, std::move(m)}); };

    if (cfg.sections.empty()) err("no sections defined");
    if (!(std::abs(cfg.r0) < 1.0)) err("|r0| must be < 1");
    if (!(std::abs(cfg.rL) < 1.0)) err("|rL| must be < 1");
    if (!(cfg.epsilon >= 0.0) || !std::isfinite(cfg.epsilon)) err("epsilon must be >= 0");

    for (std::size_t k = 0; k < cfg.sections.size(); ++k) {
        const auto& s = cfg.sections[k];
        const std::string tag = "section " + std::to_string(k + 1) + ": ";
        if (!(s.length > 0.0) || !std::isfinite(s.length)) err(tag + "length must be > 0");
        if (!(s.gain_slope > 0.0)) err(tag + "gain_slope must be > 0");
        if (!s.frozen) {
            if (!(s.tau > 0.0)) err(tag + "tau must be > 0");
            if (!(s.current > 0.0)) err(tag + "current must be > 0");
        }
        if (s.gain_model == GainModel::log && s.n_floor() < 0.0)
            err(tag + "log gain requires n_floor >= 0");

        // Lossless passive sections with frozen carriers are a legitimate idealisation.
        if (s.d.real() < 0.0 || (s.d.real() == 0.0 && !s.frozen))
            warn(tag + "Re d <= 0 (waveguide losses assumed positive)");
        // Sample Gamma and rho on a few admissible points.
        const double lo = std::isfinite(s.n_floor()) ? s.n_floor() + 1e-3 : -1.0;
        bool gamma_bad = false, rho_bad = false;
        for (double nu : {lo, 0.5, 1.0, 1.5, 2.0, 4.0}) {
            if (!(nu > s.n_floor())) continue;
            if (s.gamma(nu) <= 1.0) gamma_bad = true;
            if (nu >= 1.0 && s.rho(nu) < 0.0) rho_bad = true;
        }
        if (gamma_bad) warn(tag + "Gamma <= 1 on sampled densities");
        if (rho_bad) warn(tag + "rho < 0 for n >= 1");
    }
    return out;
}

inline void require_valid(const LaserConfig& cfg) {
    for (const auto& d : validate(cfg))
        if (d.is_error()) throw ConfigError(d.message);
}

} // namespace twm
