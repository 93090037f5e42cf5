#include "catch_amalgamated.hpp"

#include "twm/presets.hpp"
#include "twm/spectrum.hpp"

#include <random>

using namespace twm;
using Catch::Approx;

TEST_CASE("growth rates", "[spectrum]") {
    auto cfg = presets::fig1(0.3, 0.0);
    const auto r = growth_rates(cfg, {1.0, 1.0});
    CHECK(r.R_psi == Approx((-0.165 + 0.5 * std::log(3e-6)) / 2.136).epsilon(1e-14));
    CHECK(r.R_psi == Approx(-3.05).margin(0.01));
    CHECK(r.R_p == -90.0);
    CHECK(r.R_inf == r.R_psi);

    cfg.r0 = 0.0;
    const auto z = growth_rates(cfg, {1.0, 1.0});
    CHECK(std::isinf(z.R_psi));
    CHECK(z.R_psi < 0.0);
    CHECK(z.R_inf == z.R_p);
}

TEST_CASE("eigenvalue upper bound", "[spectrum]") {
    auto fp = presets::fabry_perot(0.5, 0.5, 1.0);
    CHECK(lambda_upper_bound(fp, {1.0}) == Approx(-1.0));
    auto cfg = presets::fig1();
    cfg.sections.resize(1);
    CHECK(lambda_upper_bound(cfg, {1.0}) == Approx(0.715).epsilon(1e-14));
    CHECK(lambda_upper_bound(cfg, {-10.0}) < 0.0);
}

TEST_CASE("Fabry-Perot closed-form spectrum", "[spectrum]") {
    const auto cfg = presets::fabry_perot(0.4, 0.7, 0.5, 2.0);
    const double nu = 1.1;
    const cplx b = beta(cfg.sections[0], nu);
    const Window w{-3.0, 1.0, -12.0, 12.0};
    const auto sp = find_eigenvalues(cfg, {nu}, w);
    int expected = 0;
    for (int j = -20; j <= 20; ++j) {
        const cplx lam = 0.5 * std::log(cfg.r0 * cfg.rL) + cplx(0.0, j * kPi) + b;
        if (!w.contains(lam)) continue;
        ++expected;
        bool found = false;
        for (const auto& e : sp.eigenvalues) found = found || std::abs(e.lambda - lam) < 1e-10;
        CHECK(found);
    }
    CHECK(static_cast<int>(sp.eigenvalues.size()) == expected);
    CHECK(sp.winding == expected);
}

TEST_CASE("fixed-point seeds converge for gain dispersion", "[spectrum]") {
    auto cfg = presets::fabry_perot(0.5, 0.5, 0.5);
    cfg.sections[0].rho = {0.3, 0.0};
    cfg.sections[0].omega_r = {2.0, 0.0};
    const CarrierVector n{1.8};
    const auto rates = growth_rates(cfg, n);
    REQUIRE(rates.R_psi > -1.0);
    const auto sp = find_eigenvalues(cfg, n);
    const auto seeds = fixed_point_seeds(cfg, n, sp.window);
    int matched = 0;
    for (const auto& s : seeds) {
        if (!sp.window.contains(s)) continue;
        CHECK(std::abs(char_fn(cfg, n, s).full()) < 1e-9);
        for (const auto& e : sp.eigenvalues)
            if (std::abs(e.lambda - s) < 1e-8) ++matched;
        CHECK(s.real() > rates.R_psi);
    }
    CHECK(matched > 0);
}

TEST_CASE("feedback laser spectrum properties", "[spectrum]") {
    const auto cfg = presets::fig1();
    for (double n1 : {0.8, 1.0, 1.2}) {
        const CarrierVector n{n1, 1.0};
        const auto sp = find_eigenvalues(cfg, n);
        CHECK(sp.harvested == sp.winding);
        CHECK(!sp.eigenvalues.empty());
        for (const auto& e : sp.eigenvalues) {
            CHECK(e.residual < 1e-9);
            CHECK(e.lambda.real() < sp.Lambda_u);
            CHECK(e.multiplicity == 1);
        }
        for (std::size_t i = 1; i < sp.eigenvalues.size(); ++i)
            CHECK(sp.eigenvalues[i - 1].lambda.real() >= sp.eigenvalues[i].lambda.real());
    }
}

TEST_CASE("eigenvalues survive section splitting", "[spectrum]") {
    const auto cfg = presets::fig1(0.25, 2.0);
    auto split = cfg;
    split.sections[0].length = 0.5;
    split.sections.insert(split.sections.begin(), split.sections[0]);
    const auto a = find_eigenvalues(cfg, {1.1, 1.0});
    const auto b = find_eigenvalues(split, {1.1, 1.1, 1.0}, a.window);
    REQUIRE(a.eigenvalues.size() == b.eigenvalues.size());
    for (std::size_t i = 0; i < a.eigenvalues.size(); ++i)
        CHECK(std::abs(a.eigenvalues[i].lambda - b.eigenvalues[i].lambda) < 1e-9);
}

TEST_CASE("small-kappa continuity", "[spectrum]") {
    auto cfg = presets::fabry_perot(0.5, 0.6, 0.5);
    cfg.sections[0].kappa = 1e-6;
    const Window w{-2.0, 1.0, -10.0, 10.0};
    const auto sp = find_eigenvalues(cfg, {1.0}, w);
    const cplx b = beta(cfg.sections[0], 1.0);
    for (const auto& e : sp.eigenvalues) {
        const cplx base = e.lambda - b - 0.5 * std::log(cfg.r0 * cfg.rL);
        const double j = base.imag() / kPi;
        CHECK(std::abs(base - cplx(0.0, std::round(j) * kPi)) < 1e-4);
    }
}

TEST_CASE("winding number counts roots", "[spectrum]") {
    const auto cfg = presets::fabry_perot(0.5, 0.5, 0.5);
    // Roots at -0.693 + b + j pi i; windows with known counts.
    const double re = 0.5 * std::log(0.25) - 0.5;
    CHECK(winding_number(cfg, {1.0}, {re - 0.5, re + 0.5, -1.0, 1.0}) == 1);
    CHECK(winding_number(cfg, {1.0}, {re - 0.5, re + 0.5, -1.0, 4.0}) == 2);
    CHECK(winding_number(cfg, {1.0}, {re + 0.2, re + 1.0, -1.0, 4.0}) == 0);
    CHECK(winding_circle(cfg, {1.0}, cplx(re, kPi), 1e-4) == 1);
}

TEST_CASE("random configurations pass the count audit", "[spectrum]") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        LaserConfig cfg;
        const int m = 1 + trial % 3;
        for (int k = 0; k < m; ++k) {
            SectionParams s;
            s.length = 0.4 + u(rng);
            s.kappa = 4.0 * u(rng);
            s.d = {0.2 + u(rng), 0.0};
            s.alpha_h = 4.0 * u(rng);
            s.gain_slope = 1.0 + u(rng);
            s.rho = {0.5 * u(rng), 0.0};
            s.gamma = {80.0, 0.0};
            s.omega_r = {-20.0 + 40.0 * u(rng), 0.0};
            cfg.sections.push_back(s);
        }
        cfg.r0 = std::polar(0.6 * u(rng), 6.28 * u(rng));
        cfg.rL = std::polar(0.6 * u(rng), 6.28 * u(rng));
        CarrierVector n;
        for (int k = 0; k < m; ++k) n.push_back(0.8 + 0.4 * u(rng));
        const auto sp = find_eigenvalues(cfg, n);
        CHECK(sp.harvested == sp.winding);
    }
}
