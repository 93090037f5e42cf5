#pragma once

#include "twm/laser_model.hpp"
#include "twm/quadrature.hpp"
#include "twm/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace twm {

/// Uniform node grid per section; the interface node is stored in both
/// neighbouring sections.
struct SectionedGrid {
    std::vector<double> z0;
    std::vector<double> length;
    std::vector<int> cells;

    static SectionedGrid make(const LaserConfig& cfg, double cells_per_unit, int min_cells = 8) {
        SectionedGrid g;
        const auto zb = cfg.boundaries();
        for (std::size_t k = 0; k < cfg.size(); ++k) {
            int c = std::max(min_cells, static_cast<int>(std::ceil(cfg.sections[k].length * cells_per_unit)));
            c += c % 2;
            g.z0.push_back(zb[k]);
            g.length.push_back(cfg.sections[k].length);
            g.cells.push_back(c);
        }
        return g;
    }

    std::size_t sections() const { return cells.size(); }
    double dz(std::size_t k) const { return length[k] / cells[k]; }
    double z(std::size_t k, int i) const { return z0[k] + i * dz(k); }
};

/// Field (psi, p) sampled on a SectionedGrid: psi[k][i], p[k][i].
struct FieldProfile {
    SectionedGrid grid;
    std::vector<std::vector<Vec2>> psi;
    std::vector<std::vector<Vec2>> p;

    static FieldProfile zeros(const SectionedGrid& g) {
        FieldProfile f;
        f.grid = g;
        for (std::size_t k = 0; k < g.sections(); ++k) {
            f.psi.emplace_back(g.cells[k] + 1, Vec2{0.0, 0.0});
            f.p.emplace_back(g.cells[k] + 1, Vec2{0.0, 0.0});
        }
        return f;
    }

    FieldProfile& operator+=(const FieldProfile& o) {
        for (std::size_t k = 0; k < psi.size(); ++k)
            for (std::size_t i = 0; i < psi[k].size(); ++i)
                for (int c = 0; c < 2; ++c) {
                    psi[k][i][c] += o.psi[k][i][c];
                    p[k][i][c] += o.p[k][i][c];
                }
        return *this;
    }

    FieldProfile& operator*=(cplx s) {
        for (std::size_t k = 0; k < psi.size(); ++k)
            for (std::size_t i = 0; i < psi[k].size(); ++i)
                for (int c = 0; c < 2; ++c) {
                    psi[k][i][c] *= s;
                    p[k][i][c] *= s;
                }
        return *this;
    }

    /// Adds s * o.
    void axpy(cplx s, const FieldProfile& o) {
        for (std::size_t k = 0; k < psi.size(); ++k)
            for (std::size_t i = 0; i < psi[k].size(); ++i)
                for (int c = 0; c < 2; ++c) {
                    psi[k][i][c] += s * o.psi[k][i][c];
                    p[k][i][c] += s * o.p[k][i][c];
                }
    }
};

/// Hermitian L2 product over psi and p (Simpson per section).
inline cplx inner(const FieldProfile& a, const FieldProfile& b) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < a.psi.size(); ++k) {
        std::vector<cplx> f(a.psi[k].size());
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = std::conj(a.psi[k][i][0]) * b.psi[k][i][0] + std::conj(a.psi[k][i][1]) * b.psi[k][i][1] +
                   std::conj(a.p[k][i][0]) * b.p[k][i][0] + std::conj(a.p[k][i][1]) * b.p[k][i][1];
        acc += simpson(f, a.grid.dz(k));
    }
    return acc;
}

/// Bilinear pairing sum of integral a^T b over psi and p (no conjugation).
inline cplx bilinear(const FieldProfile& a, const FieldProfile& b) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < a.psi.size(); ++k) {
        std::vector<cplx> f(a.psi[k].size());
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = a.psi[k][i][0] * b.psi[k][i][0] + a.psi[k][i][1] * b.psi[k][i][1] + a.p[k][i][0] * b.p[k][i][0] +
                   a.p[k][i][1] * b.p[k][i][1];
        acc += simpson(f, a.grid.dz(k));
    }
    return acc;
}

/// Hermitian product of the psi components only.
inline cplx psi_inner(const FieldProfile& a, const FieldProfile& b) {
    cplx acc = 0.0;
    for (std::size_t k = 0; k < a.psi.size(); ++k) {
        std::vector<cplx> f(a.psi[k].size());
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = std::conj(a.psi[k][i][0]) * b.psi[k][i][0] + std::conj(a.psi[k][i][1]) * b.psi[k][i][1];
        acc += simpson(f, a.grid.dz(k));
    }
    return acc;
}

/// ||psi||^2 only.
inline double psi_norm2(const FieldProfile& a) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.psi.size(); ++k) {
        std::vector<double> f(a.psi[k].size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::norm(a.psi[k][i][0]) + std::norm(a.psi[k][i][1]);
        acc += simpson(f, a.grid.dz(k));
    }
    return acc;
}

} // namespace twm
