#include "catch_amalgamated.hpp"

#include "twm/laser_model.hpp"
#include "twm/presets.hpp"

#include <random>

using namespace twm;
using Catch::Approx;

TEST_CASE("gain models", "[laser_model]") {
    SectionParams s;
    s.gain_slope = 2.145;
    CHECK(gain(s, 1.0) == 0.0);
    CHECK(gain(s, 2.0) == Approx(2.145));
    s.gain_model = GainModel::log;
    s.gain_slope = 1.0;
    CHECK(gain(s, std::exp(1.0)) == Approx(1.0));
    CHECK_THROWS_AS(gain(s, 0.0), DomainError);
    CHECK_THROWS_AS(gain(s, -1.0), DomainError);
}

TEST_CASE("gain is strictly increasing", "[laser_model]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(1e-3, 5.0);
    for (auto model : {GainModel::linear, GainModel::log}) {
        SectionParams s;
        s.gain_model = model;
        s.gain_slope = 1.7;
        for (int i = 0; i < 1000; ++i) {
            double a = u(rng), b = u(rng);
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            CHECK(gain(s, b) > gain(s, a));
        }
    }
}

TEST_CASE("beta values", "[laser_model]") {
    const auto cfg = presets::fig1();
    const cplx b = beta(cfg.sections[0], 1.0);
    CHECK(b.real() == Approx(-0.165).margin(1e-15));
    CHECK(b.imag() == Approx(0.0).margin(1e-15));
    SectionParams s;
    s.d = 0.0;
    CHECK(beta(s, 1.0) == cplx(0.0, 0.0));
    s.gain_model = GainModel::log;
    s.d = 1.0;
    CHECK(std::abs(beta(s, std::exp(1.0))) < 1e-15);
}

TEST_CASE("beta index coupling", "[laser_model]") {
    auto s = presets::fig1().sections[0];
    for (double nu : {0.3, 0.9, 1.2, 2.5}) {
        const cplx diff = beta(s, nu) - beta(s, 1.0);
        CHECK(diff.imag() == Approx(s.alpha_h * gain(s, nu)).margin(1e-14));
    }
}

TEST_CASE("chi values and symmetry", "[laser_model]") {
    auto s = presets::fig1().sections[0];
    const cplx c = chi(s, 1.0, 0.0);
    const cplx expect = 0.44 * 90.0 / cplx(90.0, 20.0);
    CHECK(std::abs(c - expect) < 1e-15);
    CHECK(std::abs(chi(s, 1.0, 1e9)) < 1e-6);
    SectionParams z;
    CHECK(chi(z, 1.0, cplx(3.0, 1.0)) == cplx(0.0, 0.0));
    CHECK_THROWS_AS(chi(s, 1.0, chi_pole(s, 1.0)), PoleError);

    auto s_neg = s;
    s_neg.omega_r = {20.0, 0.0};
    for (cplx lam : {cplx(0.3, 1.1), cplx(-2.0, -7.0), cplx(5.0, 30.0)})
        CHECK(std::abs(chi(s_neg, 1.0, std::conj(lam)) - std::conj(chi(s, 1.0, lam))) < 1e-15);

    const cplx lam(0.2, -0.4);
    const double h = 1e-6;
    const cplx fd = (chi(s, 1.0, lam + h) - chi(s, 1.0, lam - h)) / (2.0 * h);
    CHECK(std::abs(fd - chi_derivative(s, 1.0, lam)) < 1e-8);
}

TEST_CASE("validate diagnostics", "[laser_model]") {
    auto cfg = presets::fabry_perot();
    CHECK(validate(cfg).empty());

    cfg.r0 = 1.5;
    auto d = validate(cfg);
    REQUIRE(!d.empty());
    CHECK(d.front().is_error());
    CHECK_THROWS_AS(require_valid(cfg), ConfigError);

    auto bad_len = presets::fabry_perot();
    bad_len.sections[0].length = 0.0;
    CHECK_THROWS_AS(require_valid(bad_len), ConfigError);
    auto bad_slope = presets::fabry_perot();
    bad_slope.sections[0].gain_slope = 0.0;
    CHECK_THROWS_AS(require_valid(bad_slope), ConfigError);

    const auto fig = validate(presets::fig1());
    REQUIRE(fig.size() == 1);
    CHECK(!fig[0].is_error());
    CHECK(fig[0].message.find("Re d") != std::string::npos);

    auto low_gamma = presets::fabry_perot();
    low_gamma.sections[0].gamma = {0.5, 0.0};
    const auto g = validate(low_gamma);
    REQUIRE(g.size() == 1);
    CHECK(!g[0].is_error());

    LaserConfig empty;
    const auto e = validate(empty);
    REQUIRE(!e.empty());
    CHECK(e[0].message == "no sections defined");
}

TEST_CASE("epsilon family keeps F fixed", "[laser_model]") {
    auto cfg = presets::fig1();
    auto other = cfg.with_epsilon(cfg.epsilon / 4.0);
    const auto& a = cfg.sections[0];
    const auto& b = other.sections[0];
    for (double nu : {0.5, 1.0, 2.0})
        CHECK((a.current - nu / a.tau) / cfg.epsilon == Approx((b.current - nu / b.tau) / other.epsilon));
    CHECK(other.P() == other.epsilon);
}
