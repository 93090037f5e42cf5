#pragma once

#include "twm/types.hpp"

#include <array>
#include <functional>

namespace twm::oracle {

/// Explicit transport semigroup for psi_t = diag(-1, 1) psi_z with
/// psi1(0) = r0 psi2(0), psi2(L) = rL psi1(L), traced back along characteristics.
class TransportSemigroup {
public:
    using Profile = std::function<cplx(double)>;

    TransportSemigroup(cplx r0, cplx rL, double L, Profile psi1_0, Profile psi2_0)
        : r0_(r0), rL_(rL), L_(L), f1_(std::move(psi1_0)), f2_(std::move(psi2_0)) {}

    cplx psi1(double t, double z) const {
        if (z - t >= 0.0) return f1_(z - t);
        return r0_ * psi2(t - z, 0.0);
    }

    cplx psi2(double t, double z) const {
        if (z + t <= L_) return f2_(z + t);
        return rL_ * psi1(t - (L_ - z), L_);
    }

private:
    cplx r0_, rL_;
    double L_;
    Profile f1_, f2_;
};

} // namespace twm::oracle
