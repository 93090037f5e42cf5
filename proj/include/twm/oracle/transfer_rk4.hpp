#pragma once

#include "twm/laser_model.hpp"

#include <array>

namespace twm::oracle {

using Mat2c = std::array<std::array<cplx, 2>, 2>;

/// Fundamental matrix of psi1' = -mu psi1 - i kappa psi2, psi2' = i kappa psi1 + mu psi2
/// on [0, z], by classical RK4 with a fixed number of steps.
inline Mat2c transfer_by_integration(const SectionParams& s, double n_k, cplx lambda, double z, int steps = 10000) {
    const cplx mu = lambda - chi(s, n_k, lambda) - beta(s, n_k);
    const cplx ik = cplx(0.0, s.kappa);
    auto f = [&](const std::array<cplx, 2>& y) -> std::array<cplx, 2> {
        return {-mu * y[0] - ik * y[1], ik * y[0] + mu * y[1]};
    };
    Mat2c out{};
    const double h = z / steps;
    for (int col = 0; col < 2; ++col) {
        std::array<cplx, 2> y{col == 0 ? 1.0 : 0.0, col == 1 ? 1.0 : 0.0};
        for (int i = 0; i < steps; ++i) {
            const auto k1 = f(y);
            const auto k2 = f({y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]});
            const auto k3 = f({y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]});
            const auto k4 = f({y[0] + h * k3[0], y[1] + h * k3[1]});
            for (int r = 0; r < 2; ++r) y[r] += h / 6.0 * (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]);
            if (!std::isfinite(std::abs(y[0])) || !std::isfinite(std::abs(y[1])))
                throw OverflowError("transfer_by_integration: solution overflowed");
        }
        out[0][col] = y[0];
        out[1][col] = y[1];
    }
    return out;
}

} // namespace twm::oracle
