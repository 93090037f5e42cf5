#pragma once

#include "twm/laser_model.hpp"

#include <cmath>

namespace twm::presets {

/// Two-section DFB laser with a passive feedback section; the feedback
/// facet is rL = eta exp(i phi). Section 2 is lossless with frozen carriers.
inline LaserConfig fig1(double eta = 0.3, double phi = 0.0, double epsilon = 0.01) {
    LaserConfig cfg;
    SectionParams s1;
    s1.length = 1.0;
    s1.kappa = 3.96;
    s1.d = {-0.275, 0.0};
    s1.alpha_h = 5.0;
    s1.gain_model = GainModel::linear;
    s1.gain_slope = 2.145;
    s1.rho = {0.44, 0.0};
    s1.gamma = {90.0, 0.0};
    s1.omega_r = {-20.0, 0.0};
    s1.current = 6.757e-3;
    s1.tau = 359.0;

    SectionParams s2;
    s2.length = 1.136;
    s2.kappa = 0.0;
    s2.d = {0.0, 0.0};
    s2.alpha_h = 0.0;
    s2.gain_model = GainModel::linear;
    s2.gain_slope = 1.0;
    s2.rho = {0.0, 0.0};
    s2.gamma = {90.0, 0.0};
    s2.omega_r = {0.0, 0.0};
    s2.frozen = true;

    cfg.sections = {s1, s2};
    cfg.r0 = {1e-5, 0.0};
    cfg.rL = std::polar(eta, phi);
    cfg.epsilon = epsilon;
    return cfg;
}

/// Single Fabry-Perot section without grating or gain dispersion.
inline LaserConfig fabry_perot(double r0 = 0.5, double rL = 0.5, double d = 0.5, double alpha_h = 0.0) {
    LaserConfig cfg;
    SectionParams s;
    s.kappa = 0.0;
    s.d = {d, 0.0};
    s.alpha_h = alpha_h;
    s.rho = {0.0, 0.0};
    cfg.sections = {s};
    cfg.r0 = {r0, 0.0};
    cfg.rL = {rL, 0.0};
    return cfg;
}

} // namespace twm::presets
