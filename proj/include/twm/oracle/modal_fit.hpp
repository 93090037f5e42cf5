#pragma once

#include "twm/simulator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace twm::oracle {

struct ModalFit {
    std::vector<cplx> rates;       // fitted lambda_j, sorted by Re descending
    std::vector<cplx> amplitudes;
    double residual = 0.0;         // relative least-squares residual
    double t_begin = 0.0, t_end = 0.0;
};

class IllConditionedFit : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Prony fit of y(t_0 + k dt) = sum_j c_j exp(lambda_j k dt) with 1 or 2
/// terms: linear prediction by least squares, then amplitudes by least squares.
inline ModalFit prony(const std::vector<cplx>& y, double t0, double dt, int terms, double max_residual = 1e-2) {
    using Mat = Eigen::MatrixXcd;
    using Vec = Eigen::VectorXcd;
    if (terms < 1 || terms > 2) throw DomainError("modal fit: 1 or 2 terms supported");
    const int n = static_cast<int>(y.size());
    if (n < 4 * terms) throw IllConditionedFit("modal fit: too few samples");

    // Normalise to unit scale; long decays otherwise underflow the conditioning.
    double scale = 0.0;
    for (const auto& v : y) scale = std::max(scale, std::abs(v));
    if (!(scale > 0.0)) throw IllConditionedFit("modal fit: zero signal");

    const int rows = n - terms;
    Mat M(rows, terms);
    Vec rhs(rows);
    for (int k = 0; k < rows; ++k) {
        for (int j = 0; j < terms; ++j) M(k, j) = y[k + j] / scale;
        rhs(k) = y[k + terms] / scale;
    }
    const auto qr = M.colPivHouseholderQr();
    if (qr.rank() < terms) throw IllConditionedFit("modal fit: rank-deficient prediction matrix");
    const Vec a = qr.solve(rhs);

    std::vector<cplx> z;
    if (terms == 1) {
        z.push_back(a(0));
    } else {
        // z^2 = a1 z + a0
        const cplx a0 = a(0), a1 = a(1);
        const cplx disc = std::sqrt(a1 * a1 + 4.0 * a0);
        z.push_back(0.5 * (a1 + disc));
        z.push_back(0.5 * (a1 - disc));
    }

    ModalFit out;
    out.t_begin = t0;
    out.t_end = t0 + (n - 1) * dt;
    Mat V(n, terms);
    Vec Y(n);
    for (int k = 0; k < n; ++k) {
        Y(k) = y[k] / scale;
        for (int j = 0; j < terms; ++j) V(k, j) = std::pow(z[j], k);
    }
    const auto vqr = V.colPivHouseholderQr();
    if (vqr.rank() < terms) throw IllConditionedFit("modal fit: coincident exponentials");
    const Vec c = vqr.solve(Y);
    out.residual = (V * c - Y).norm() / Y.norm();
    for (int j = 0; j < terms; ++j) {
        if (std::abs(z[j]) == 0.0) throw IllConditionedFit("modal fit: vanishing root");
        out.rates.push_back(std::log(z[j]) / dt);
        out.amplitudes.push_back(c(j) * scale * std::exp(-out.rates.back() * t0));
    }
    std::vector<std::size_t> idx(terms);
    for (int j = 0; j < terms; ++j) idx[j] = j;
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return out.rates[i].real() > out.rates[j].real(); });
    ModalFit sorted = out;
    for (int j = 0; j < terms; ++j) {
        sorted.rates[j] = out.rates[idx[j]];
        sorted.amplitudes[j] = out.amplitudes[idx[j]];
    }
    if (!(sorted.residual <= max_residual))
        throw IllConditionedFit("modal fit: relative residual " + std::to_string(sorted.residual) + " too large");
    return sorted;
}

/// Fit to the output psi1(t, L) of a frozen-carrier run, skipping samples
/// before t_skip. Frequencies must satisfy |Im lambda| dt < pi.
inline ModalFit modal_fit(const SimOutput& out, double t_skip, int terms, double max_residual = 1e-2) {
    std::vector<cplx> y;
    double t0 = 0.0, dt = 0.0;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        if (out.samples[i].t < t_skip) continue;
        if (y.empty()) {
            t0 = out.samples[i].t;
            if (i + 1 < out.samples.size()) dt = out.samples[i + 1].t - out.samples[i].t;
        }
        y.push_back(out.samples[i].outL);
    }
    if (y.size() < 2 || !(dt > 0.0)) throw IllConditionedFit("modal fit: no samples after the transient");
    return prony(y, t0, dt, terms, max_residual);
}

} // namespace twm::oracle
