#pragma once

#include "twm/critical.hpp"
#include "twm/eigenmode.hpp"
#include "twm/profile.hpp"
#include "twm/simulator.hpp"
#include "twm/spectrum.hpp"

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace twm {

/// Raised when n leaves the box on which the basis was validated.
class ValidityError : public NumericalError {
public:
    ValidityError(const std::string& what, double t, CarrierVector n)
        : NumericalError(what), time(t), where(std::move(n)) {}
    double time;
    CarrierVector where;
};

struct ValidityBox {
    CarrierVector lo, hi;

    static ValidityBox around(const CarrierVector& c, const CarrierVector& half_width) {
        ValidityBox b;
        for (std::size_t k = 0; k < c.size(); ++k) {
            b.lo.push_back(c[k] - half_width[k]);
            b.hi.push_back(c[k] + half_width[k]);
        }
        return b;
    }
    bool contains(const CarrierVector& n, double margin = 0.0) const {
        for (std::size_t k = 0; k < n.size(); ++k) {
            if (lo[k] == hi[k]) {
                if (n[k] != lo[k]) return false;
                continue;
            }
            if (n[k] < lo[k] + margin || n[k] > hi[k] - margin) return false;
        }
        return true;
    }
    /// Largest excursion of n outside the box (0 inside).
    double distance(const CarrierVector& n) const {
        double d = 0.0;
        for (std::size_t k = 0; k < n.size(); ++k) d = std::max({d, lo[k] - n[k], n[k] - hi[k]});
        return d;
    }
};

struct ReducedState {
    std::vector<cplx> Ec;
    CarrierVector n;
    double t = 0.0;
};

/// Modes at one density, gauge-locked to the reference frame.
struct BasisFrame {
    CarrierVector n;
    std::vector<cplx> lambda;
    std::vector<EigenMode> modes;
    std::vector<FieldProfile> B, Phi;
    std::vector<cplx> norm;  // <Phi_j, B_j>

    /// Coordinate of E along mode i: <Phi_i, E> / N_i.
    cplx coordinate(std::size_t i, const FieldProfile& E) const { return bilinear(Phi[i], E) / norm[i]; }

    std::vector<cplx> project(const FieldProfile& E) const {
        std::vector<cplx> c(B.size());
        for (std::size_t i = 0; i < B.size(); ++i) c[i] = coordinate(i, E);
        return c;
    }

    FieldProfile synthesize(const std::vector<cplx>& Ec) const {
        auto f = FieldProfile::zeros(B.front().grid);
        for (std::size_t j = 0; j < B.size(); ++j) f.axpy(Ec[j], B[j]);
        return f;
    }
};

/// Everything the reduced vector field needs at one density.
struct ReducedCoefficients {
    CarrierVector n;
    std::vector<cplx> lambda;
    std::vector<Eigen::MatrixXcd> D;  // D_k(i, j) = <Phi_i, d_{n_k} B_j> / N_i
    std::vector<Eigen::MatrixXcd> M;  // Hermitian quadratic form of the carrier sink
};

struct BasisOptions {
    double cells_per_unit = 256.0;
    double fd_step = 1e-4;
    bool require_critical = true;
    bool check_gap = true;  // separation below the tracked modes, at n_ref and the box corners
    double gauge_tol = 1e-3;
    double biorth_tol = 1e-8;
    int random_checks = 4;
    unsigned seed = 1;
    double confirm_im = 60.0;
    // Explicit starting points for the tracked roots; skips the spectrum scan
    // at n_ref, so require_critical and check_gap must be off.
    std::vector<cplx> seeds;
    EigenSearchOptions search{};
};

class ModeBasis {
public:
    ModeBasis(const LaserConfig& cfg, const CarrierVector& n_ref, int q, const ValidityBox& box,
              const BasisOptions& opts = {})
        : cfg_(cfg), n_ref_(n_ref), q_(q), box_(box), opts_(opts),
          grid_(SectionedGrid::make(cfg, opts.cells_per_unit)) {
        require_valid(cfg);
        check_admissible(cfg, n_ref);
        if (q < 1) throw DomainError("basis: q must be positive");
        if (box.lo.size() != cfg.size() || box.hi.size() != cfg.size())
            throw DomainError("basis: validity box has the wrong dimension");
        if (!box.contains(n_ref)) throw DomainError("basis: reference density outside the validity box");
        for (std::size_t k = 0; k < cfg.size(); ++k)
            if (cfg.sections[k].frozen && box.lo[k] != box.hi[k])
                throw DomainError("basis: frozen section " + std::to_string(k + 1) + " must have a degenerate box");

        if (!opts.seeds.empty()) {
            if (static_cast<int>(opts.seeds.size()) != q) throw DomainError("basis: need one seed per tracked mode");
            if (opts.require_critical || opts.check_gap)
                throw DomainError("basis: seeded construction cannot confirm the gap");
            for (auto sd : opts.seeds) {
                const auto r = newton_root(cfg, n_ref, sd, 60, 0.5);
                if (!r.converged) throw NumericalError("basis: no eigenvalue near the seed");
                lambda_ref_.push_back(r.lambda);
            }
            trust_ = 1.0;
            for (int a = 0; a < q; ++a)
                for (int c = 0; c < q; ++c)
                    if (a != c) trust_ = std::min(trust_, 0.5 * std::abs(lambda_ref_[a] - lambda_ref_[c]));
        } else {
            const auto sp = spectrum_at(n_ref, {});
            if (static_cast<int>(sp.eigenvalues.size()) < q) throw NumericalError("basis: fewer than q eigenvalues found");
            if (opts.require_critical && sp.gap.q != q) {
                std::ostringstream os;
                os << "basis: spectrum at the reference density has " << sp.gap.q << " critical eigenvalues, expected " << q;
                throw NumericalError(os.str());
            }
            for (int j = 0; j < q; ++j) {
                if (sp.eigenvalues[j].multiplicity != 1) throw NumericalError("basis: dominant eigenvalue is not simple");
                lambda_ref_.push_back(sp.eigenvalues[j].lambda);
            }
            if (opts.check_gap && static_cast<int>(sp.eigenvalues.size()) > q && sp.eigenvalues[q].lambda.real() >= lambda_ref_.back().real())
                throw NumericalError("basis: no spectral separation below the tracked modes");

            trust_ = 1.0;
            for (int j = 0; j < q; ++j)
                for (std::size_t o = 0; o < sp.eigenvalues.size(); ++o)
                    if (static_cast<int>(o) != j) trust_ = std::min(trust_, 0.5 * std::abs(sp.eigenvalues[o].lambda - lambda_ref_[j]));
        }

        for (int j = 0; j < q; ++j) {
            const auto h0 = char_fn(cfg, n_ref, lambda_ref_[j]);
            std::vector<cplx> row(cfg.size(), 0.0);
            for (std::size_t k = 0; k < cfg.size(); ++k)
                if (!cfg.sections[k].frozen)
                    row[k] = -detail::h_dn(cfg, n_ref, k, lambda_ref_[j], h0.log_scale, 1e-6) / h0.derivative;
            dlambda_.push_back(row);
        }

        // Reference profiles anchor the gauge; the first frame locks to itself.
        ref_ready_ = false;
        const auto f0 = frame(n_ref);
        ref_B_ = f0.B;
        ref_ready_ = true;
        lambda_ref_ = f0.lambda;
        check_frame(f0);
        check_idempotence(f0);

        for (const auto& corner : corners()) {
            const auto fc = frame(corner);
            check_frame(fc);
            if (!opts.check_gap) continue;
            const auto spc = spectrum_at(corner, fc.lambda);
            double min_tracked = fc.lambda.front().real();
            for (auto l : fc.lambda) min_tracked = std::min(min_tracked, l.real());
            for (const auto& ev : spc.eigenvalues) {
                bool tracked = false;
                for (auto l : fc.lambda) tracked = tracked || std::abs(ev.lambda - l) < 1e-6;
                if (!tracked && ev.lambda.real() >= min_tracked) {
                    std::ostringstream os;
                    os << "basis: gap lost at box corner (";
                    for (std::size_t k = 0; k < corner.size(); ++k) os << (k ? ", " : "") << corner[k];
                    os << "): eigenvalue " << ev.lambda << " not separated";
                    throw NumericalError(os.str());
                }
            }
        }
    }

    const LaserConfig& config() const { return cfg_; }
    const CarrierVector& n_ref() const { return n_ref_; }
    int q() const { return q_; }
    const ValidityBox& box() const { return box_; }
    const SectionedGrid& grid() const { return grid_; }
    double trust_radius() const { return trust_; }
    const std::vector<cplx>& lambda_ref() const { return lambda_ref_; }
    double fd_step() const { return opts_.fd_step; }
    /// Implicit-function derivative d lambda_j / d n_k at the reference density.
    const std::vector<std::vector<cplx>>& dlambda_ref() const { return dlambda_; }

    /// Re-solves the tracked roots at n and builds gauge-locked profiles.
    BasisFrame frame(const CarrierVector& n) const {
        check_admissible(cfg_, n);
        BasisFrame f;
        f.n = n;
        for (int j = 0; j < q_; ++j) {
            cplx pred = lambda_ref_[j];
            for (std::size_t k = 0; k < n.size(); ++k) pred += dlambda_[j][k] * (n[k] - n_ref_[k]);
            const auto r = newton_root(cfg_, n, pred, 60, 0.1);
            if (!r.converged || std::abs(r.lambda - pred) > trust_) {
                std::ostringstream os;
                os << "basis: root tracking jump for mode " << j + 1 << " (|lambda - predicted| = "
                   << std::abs(r.lambda - pred) << ", trust radius " << trust_ << ")";
                throw NumericalError(os.str());
            }
            EigenMode m(cfg_, n, r.lambda, 1e-7, opts_.cells_per_unit);
            auto B = m.sample(grid_);
            if (ref_ready_) {
                // Anchor on psi alone; p = Gamma psi / (lambda - i Omega_r + Gamma) is slaved to it.
                const cplx s = psi_inner(ref_B_[j], B);
                const double scale = std::sqrt(psi_norm2(ref_B_[j]) * psi_norm2(B));
                if (!(std::abs(s) > opts_.gauge_tol * scale))
                    throw NumericalError("basis: gauge lock failed for mode " + std::to_string(j + 1));
                const cplx phase = std::conj(s) / std::abs(s);
                m.rotate(phase);
                B *= phase;
            }
            auto Phi = m.adjoint_sample(grid_);
            const cplx N = bilinear(Phi, B);
            f.lambda.push_back(r.lambda);
            f.norm.push_back(N);
            f.B.push_back(std::move(B));
            f.Phi.push_back(std::move(Phi));
            f.modes.push_back(std::move(m));
        }
        return f;
    }

    ReducedCoefficients coefficients(const CarrierVector& n) const {
        const double h = opts_.fd_step;
        for (std::size_t k = 0; k < n.size(); ++k) {
            if (box_.lo[k] == box_.hi[k]) {
                if (n[k] != box_.lo[k]) throw ValidityError("basis: frozen density moved", 0.0, n);
            } else if (n[k] - h < box_.lo[k] || n[k] + h > box_.hi[k]) {
                throw ValidityError("basis: density within one difference step of the validity box edge", 0.0, n);
            }
        }
        const auto f = frame(n);
        ReducedCoefficients c;
        c.n = n;
        c.lambda = f.lambda;
        for (std::size_t k = 0; k < cfg_.size(); ++k) {
            Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(q_, q_);
            if (!cfg_.sections[k].frozen) {
                auto np = n, nm = n;
                np[k] += h;
                nm[k] -= h;
                const auto fp = frame(np), fm = frame(nm);
                for (int j = 0; j < q_; ++j) {
                    auto dB = fp.B[j];
                    dB.axpy(-1.0, fm.B[j]);
                    dB *= 1.0 / (2.0 * h);
                    for (int i = 0; i < q_; ++i) D(i, j) = bilinear(f.Phi[i], dB) / f.norm[i];
                }
            }
            c.D.push_back(D);
            c.M.push_back(quadratic_form(f, k));
        }
        return c;
    }

    /// All 2^m corners of the box over the sections that may move.
    std::vector<CarrierVector> corners() const {
        std::vector<std::size_t> free;
        for (std::size_t k = 0; k < cfg_.size(); ++k)
            if (box_.lo[k] != box_.hi[k]) free.push_back(k);
        std::vector<CarrierVector> out;
        for (std::size_t mask = 0; mask < (std::size_t{1} << free.size()); ++mask) {
            CarrierVector c = n_ref_;
            for (std::size_t b = 0; b < free.size(); ++b) c[free[b]] = (mask >> b) & 1 ? box_.hi[free[b]] : box_.lo[free[b]];
            out.push_back(c);
        }
        return out;
    }

private:
    Spectrum spectrum_at(const CarrierVector& n, const std::vector<cplx>& must_cover) const {
        auto win = default_window(cfg_, n);
        double lo = win.im_min, hi = win.im_max;
        for (auto l : must_cover) {
            lo = std::min(lo, l.imag() - opts_.confirm_im);
            hi = std::max(hi, l.imag() + opts_.confirm_im);
            win.re_max = std::max(win.re_max, l.real() + 0.1);
        }
        if (must_cover.empty()) {
            lo = std::min(lo, -opts_.confirm_im);
            hi = std::max(hi, opts_.confirm_im);
        }
        win.im_min = lo;
        win.im_max = hi;
        return find_eigenvalues(cfg_, n, win, opts_.search);
    }

    Eigen::MatrixXcd quadratic_form(const BasisFrame& f, std::size_t k) const {
        const auto& s = cfg_.sections[k];
        const double nk = f.n[k];
        const double g_minus_rho = gain(s, nk) - s.rho(nk);
        const double half_rho = 0.5 * s.rho(nk);
        Eigen::MatrixXcd M(q_, q_);
        std::vector<cplx> w(grid_.cells[k] + 1);
        for (int i = 0; i < q_; ++i)
            for (int j = 0; j < q_; ++j) {
                const auto& a = f.B[i];
                const auto& b = f.B[j];
                for (std::size_t x = 0; x < w.size(); ++x) {
                    cplx acc = 0.0;
                    for (int c = 0; c < 2; ++c)
                        acc += g_minus_rho * std::conj(a.psi[k][x][c]) * b.psi[k][x][c] +
                               half_rho * (std::conj(a.psi[k][x][c]) * b.p[k][x][c] + std::conj(a.p[k][x][c]) * b.psi[k][x][c]);
                    w[x] = acc;
                }
                M(i, j) = simpson(w, grid_.dz(k));
            }
        return M;
    }

    void check_frame(const BasisFrame& f) const {
        for (int i = 0; i < q_; ++i) {
            const double si = std::sqrt(inner(f.Phi[i], f.Phi[i]).real() * inner(f.B[i], f.B[i]).real());
            if (!(std::abs(f.norm[i]) > 1e-8 * si))
                throw NumericalError("basis: biorthogonal normalizer vanishes (eigenvalue not simple)");
            for (int j = 0; j < q_; ++j) {
                const cplx v = bilinear(f.Phi[i], f.B[j]) / f.norm[i];
                const double err = std::abs(v - (i == j ? 1.0 : 0.0));
                if (!(err < opts_.biorth_tol)) {
                    std::ostringstream os;
                    os << "basis: biorthogonality defect " << err << " between modes " << i + 1 << " and " << j + 1;
                    throw NumericalError(os.str());
                }
            }
        }
    }

    void check_idempotence(const BasisFrame& f) const {
        std::mt19937_64 rng(opts_.seed);
        std::normal_distribution<double> nd;
        for (int r = 0; r < opts_.random_checks; ++r) {
            auto E = FieldProfile::zeros(grid_);
            for (std::size_t k = 0; k < grid_.sections(); ++k)
                for (std::size_t i = 0; i < E.psi[k].size(); ++i)
                    for (int c = 0; c < 2; ++c) {
                        E.psi[k][i][c] = cplx(nd(rng), nd(rng));
                        E.p[k][i][c] = cplx(nd(rng), nd(rng));
                    }
            const auto c1 = f.project(E);
            const auto PE = f.synthesize(c1);
            const auto c2 = f.project(PE);
            auto S = E;
            S.axpy(-1.0, PE);
            const auto c3 = f.project(S);
            double scale = 0.0, err = 0.0;
            for (int i = 0; i < q_; ++i) {
                scale = std::max(scale, std::abs(c1[i]));
                err = std::max({err, std::abs(c2[i] - c1[i]), std::abs(c3[i])});
            }
            if (!(err < opts_.biorth_tol * std::max(1.0, scale)))
                throw NumericalError("basis: projection is not idempotent (defect " + std::to_string(err) + ")");
        }
    }

    LaserConfig cfg_;
    CarrierVector n_ref_;
    int q_;
    ValidityBox box_;
    BasisOptions opts_;
    SectionedGrid grid_;
    std::vector<cplx> lambda_ref_;
    std::vector<std::vector<cplx>> dlambda_;
    std::vector<FieldProfile> ref_B_;
    bool ref_ready_ = false;
    double trust_ = 1.0;
};

inline ModeBasis build_basis(const LaserConfig& cfg, const CarrierVector& n_crit, int q, const ValidityBox& n_box,
                             const BasisOptions& opts = {}) {
    return ModeBasis(cfg, n_crit, q, n_box, opts);
}

inline Eigen::MatrixXcd Hc(const ModeBasis& basis, const CarrierVector& n) {
    if (!basis.box().contains(n)) throw ValidityError("Hc: density outside the validity box", 0.0, n);
    const auto f = basis.frame(n);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(basis.q(), basis.q());
    for (int j = 0; j < basis.q(); ++j) H(j, j) = f.lambda[j];
    return H;
}

namespace detail {

// (I_k - n_k / tau_k) / epsilon, or without the division at epsilon = 0.
inline double slow_source(const LaserConfig& cfg, std::size_t k, double nk) {
    const auto& s = cfg.sections[k];
    const double src = s.current - nk / s.tau;
    return cfg.epsilon > 0.0 ? src / cfg.epsilon : src;
}

} // namespace detail

/// F = f / epsilon; the quadratic term carries P / epsilon = 1. At epsilon = 0
/// the source I_k - n_k / tau_k is returned undivided. Frozen sections give 0.
inline std::vector<double> F_slow(const LaserConfig& cfg, const CarrierVector& n, const FieldProfile& E) {
    check_admissible(cfg, n);
    std::vector<double> F(cfg.size(), 0.0);
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        const auto& s = cfg.sections[k];
        if (s.frozen) continue;
        std::vector<double> a(E.psi[k].size()), c(E.psi[k].size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = std::norm(E.psi[k][i][0]) + std::norm(E.psi[k][i][1]);
            c[i] = std::real(std::conj(E.psi[k][i][0]) * E.p[k][i][0] + std::conj(E.psi[k][i][1]) * E.p[k][i][1]);
        }
        const double A = simpson(a, E.grid.dz(k)), C = simpson(c, E.grid.dz(k));
        const double rho = s.rho(n[k]);
        F[k] = detail::slow_source(cfg, k, n[k]) - ((gain(s, n[k]) - rho) * A + rho * C) / s.length;
    }
    return F;
}

/// Same on a simulator state (trapezoid / midpoint quadrature).
inline std::vector<double> F_slow(const LaserConfig& cfg, const CarrierVector& n, const FieldState& E) {
    check_admissible(cfg, n);
    auto F = carrier_rhs_from_integrals(cfg, n, section_integrals(E), 1.0);
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        if (cfg.sections[k].frozen) continue;
        const auto& s = cfg.sections[k];
        F[k] += detail::slow_source(cfg, k, n[k]) - (s.current - n[k] / s.tau);
    }
    return F;
}

/// F(n, B(n) E_c) from the precomputed quadratic forms.
inline std::vector<double> F_slow(const LaserConfig& cfg, const ReducedCoefficients& c, const std::vector<cplx>& Ec) {
    std::vector<double> F(cfg.size(), 0.0);
    Eigen::VectorXcd e(Ec.size());
    for (std::size_t j = 0; j < Ec.size(); ++j) e(j) = Ec[j];
    for (std::size_t k = 0; k < cfg.size(); ++k) {
        if (cfg.sections[k].frozen) continue;
        const double quad = (e.adjoint() * c.M[k] * e)(0, 0).real();
        F[k] = detail::slow_source(cfg, k, c.n[k]) - quad / cfg.sections[k].length;
    }
    return F;
}

inline Eigen::MatrixXcd a1(const LaserConfig& cfg, const ReducedCoefficients& c, const std::vector<cplx>& Ec) {
    const auto F = F_slow(cfg, c, Ec);
    const auto q = static_cast<Eigen::Index>(Ec.size());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(q, q);
    for (std::size_t k = 0; k < cfg.size(); ++k) A -= F[k] * c.D[k];
    return A;
}

/// a_1 = -P_c(n) d_n B(n) F(n, B(n) E_c).
inline Eigen::MatrixXcd a1(const ModeBasis& basis, const LaserConfig& cfg, const std::vector<cplx>& Ec,
                           const CarrierVector& n) {
    return a1(cfg, basis.coefficients(n), Ec);
}

struct ReducedRhs {
    std::vector<cplx> dEc;
    std::vector<double> dn;
};

inline ReducedRhs reduced_rhs(const LaserConfig& cfg, const ReducedCoefficients& c, const std::vector<cplx>& Ec) {
    const auto F = F_slow(cfg, c, Ec);
    const auto q = static_cast<Eigen::Index>(Ec.size());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(q, q);
    for (std::size_t k = 0; k < cfg.size(); ++k) A -= F[k] * c.D[k];
    A *= cfg.epsilon;
    for (Eigen::Index j = 0; j < q; ++j) A(j, j) += c.lambda[j];
    ReducedRhs r;
    r.dEc.assign(Ec.size(), 0.0);
    for (Eigen::Index i = 0; i < q; ++i)
        for (Eigen::Index j = 0; j < q; ++j) r.dEc[i] += A(i, j) * Ec[j];
    r.dn.resize(cfg.size());
    for (std::size_t k = 0; k < cfg.size(); ++k) r.dn[k] = cfg.epsilon * F[k];
    return r;
}

/// dE_c = [H_c(n) + eps a_1(E_c, n)] E_c, dn = eps F(n, B(n) E_c).
inline ReducedRhs reduced_rhs(const ModeBasis& basis, const LaserConfig& cfg, const ReducedState& s) {
    if (s.Ec.size() != static_cast<std::size_t>(basis.q()) || s.n.size() != cfg.size())
        throw DomainError("reduced_rhs: state has the wrong dimension");
    return reduced_rhs(cfg, basis.coefficients(s.n), s.Ec);
}

struct ReducedOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double sample_dt = 1.0;
    std::optional<double> omega_frame;  // defaults to Im lambda_1(n_ref)
    double initial_dt = 1e-2;
    double min_dt = 1e-10;
};

struct ReducedSeries {
    std::vector<ReducedState> samples;
    long rhs_calls = 0;
    long steps = 0;
};

/// Dormand-Prince 5(4) with dense output, integrated in the frame rotating at
/// omega_frame; samples are returned in the lab frame.
inline ReducedSeries integrate_reduced(const ModeBasis& basis, const LaserConfig& cfg, const ReducedState& init,
                                       double horizon, const ReducedOptions& opt = {}) {
    namespace odeint = boost::numeric::odeint;
    using state_t = std::vector<double>;
    if (!(horizon > 0.0)) throw DomainError("integrate_reduced: horizon must be positive");
    if (!(opt.sample_dt > 0.0)) throw DomainError("integrate_reduced: sample_dt must be positive");
    const std::size_t q = basis.q(), m = cfg.size();
    if (init.Ec.size() != q || init.n.size() != m) throw DomainError("integrate_reduced: state has the wrong dimension");
    const double omega = opt.omega_frame ? *opt.omega_frame : basis.lambda_ref().front().imag();

    ReducedSeries out;
    auto pack = [&](const std::vector<cplx>& E, const CarrierVector& n, double t) {
        state_t x(2 * q + m);
        const cplx rot = std::exp(cplx(0.0, -omega * t));
        for (std::size_t j = 0; j < q; ++j) {
            const cplx e = E[j] * rot;
            x[2 * j] = e.real();
            x[2 * j + 1] = e.imag();
        }
        for (std::size_t k = 0; k < m; ++k) x[2 * q + k] = n[k];
        return x;
    };
    auto unpack = [&](const state_t& x, double t) {
        ReducedState s;
        s.t = t;
        const cplx rot = std::exp(cplx(0.0, omega * t));
        for (std::size_t j = 0; j < q; ++j) s.Ec.push_back(cplx(x[2 * j], x[2 * j + 1]) * rot);
        s.n.assign(x.begin() + 2 * q, x.end());
        return s;
    };

    auto system = [&](const state_t& x, state_t& dx, double t) {
        ++out.rhs_calls;
        CarrierVector n(x.begin() + 2 * q, x.end());
        if (!basis.box().contains(n, 0.0)) {
            std::ostringstream os;
            os << "integrate_reduced: density left the validity box by " << basis.box().distance(n);
            throw ValidityError(os.str(), t, n);
        }
        std::vector<cplx> E(q);
        for (std::size_t j = 0; j < q; ++j) E[j] = cplx(x[2 * j], x[2 * j + 1]);
        ReducedRhs r;
        try {
            r = reduced_rhs(cfg, basis.coefficients(n), E);
        } catch (const ValidityError& e) {
            throw ValidityError(e.what(), t, n);
        }
        dx.assign(x.size(), 0.0);
        for (std::size_t j = 0; j < q; ++j) {
            const cplx d = r.dEc[j] - cplx(0.0, omega) * E[j];
            dx[2 * j] = d.real();
            dx[2 * j + 1] = d.imag();
        }
        for (std::size_t k = 0; k < m; ++k) dx[2 * q + k] = r.dn[k];
    };

    auto stepper = odeint::make_dense_output(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<state_t>());
    state_t x = pack(init.Ec, init.n, 0.0);
    stepper.initialize(x, init.t, std::min(opt.initial_dt, horizon));
    out.samples.push_back(init);
    const double t_end = init.t + horizon;
    long next = 1;
    state_t xs(x.size());
    auto emit_until = [&](double t_reached) {
        while (true) {
            const double ts = std::min(init.t + next * opt.sample_dt, t_end);
            if (ts > t_reached + 1e-12 * std::max(1.0, std::abs(ts))) break;
            stepper.calc_state(ts, xs);
            out.samples.push_back(unpack(xs, ts - init.t));
            out.samples.back().t = ts;
            if (ts >= t_end) return true;
            ++next;
        }
        return false;
    };
    while (true) {
        try {
            stepper.do_step(system);
        } catch (const odeint::step_adjustment_error& e) {
            throw NumericalError(std::string("integrate_reduced: step-size underflow: ") + e.what());
        }
        ++out.steps;
        if (stepper.current_time_step() < opt.min_dt) {
            std::ostringstream os;
            os << "integrate_reduced: step-size underflow at t = " << stepper.current_time();
            throw NumericalError(os.str());
        }
        if (emit_until(stepper.current_time())) break;
    }
    return out;
}

} // namespace twm
