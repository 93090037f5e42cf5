#include "catch_amalgamated.hpp"

#include "twm/oracle/semigroup.hpp"
#include "twm/presets.hpp"
#include "twm/simulator.hpp"

#include <random>

using namespace twm;
using Catch::Approx;
using namespace std::complex_literals;

namespace {

// Passive single section with every source coefficient zero.
LaserConfig passive(cplx r0, cplx rL, double length = 1.0) {
    LaserConfig cfg;
    SectionParams s;
    s.length = length;
    s.kappa = 0.0;
    s.d = 0.0;
    s.rho = {0.0, 0.0};
    cfg.sections = {s};
    cfg.r0 = r0;
    cfg.rL = rL;
    return cfg;
}

FieldState sampled(const LaserConfig& cfg, const SimGrid& g, const std::function<cplx(double)>& f1,
                   const std::function<cplx(double)>& f2) {
    auto s = initial_state(cfg, g, 0.0);
    for (int j = 0; j < g.nodes(); ++j) s.psi[j] = {f1(g.z(j)), f2(g.z(j))};
    return s;
}

} // namespace

TEST_CASE("box profile translates exactly", "[simulator]") {
    const auto cfg = passive(0.0, 0.0);
    const auto g = SimGrid::make(cfg, 100);
    auto box = [](double z) { return (z > 0.1 && z < 0.3) ? cplx(1.0, 0.5) : cplx(0.0); };
    auto s = sampled(cfg, g, box, [](double) { return cplx(0.0); });
    const auto initial = s.psi;
    const StepOptions frozen{true};
    for (int i = 0; i < 40; ++i) step_inplace(s, cfg, {}, frozen);
    for (int j = 0; j < g.nodes(); ++j) {
        const cplx expect = j >= 40 ? initial[j - 40][0] : cplx(0.0);
        CHECK(s.psi[j][0] == expect);
    }
}

TEST_CASE("facet reflection matches the explicit semigroup", "[simulator][oracle]") {
    const auto cfg = passive(0.5, 0.0);
    const auto g = SimGrid::make(cfg, 200);
    auto f2 = [](double z) {
        const double x = (z - 0.05) / 0.15;
        return (x > 0.0 && x < 1.0) ? cplx(0.0, std::pow(std::sin(kPi * x), 4)) : cplx(0.0);
    };
    auto zero = [](double) { return cplx(0.0); };
    auto s = sampled(cfg, g, zero, f2);
    const oracle::TransportSemigroup sg(cfg.r0, cfg.rL, 1.0, zero, f2);
    const StepOptions frozen{true};
    for (int i = 0; i < 100; ++i) step_inplace(s, cfg, {}, frozen);
    double err = 0.0;
    bool reflected = false;
    for (int j = 1; j < g.nodes(); ++j) {
        err = std::max(err, std::abs(s.psi[j][0] - sg.psi1(s.t, g.z(j))));
        reflected = reflected || std::abs(s.psi[j][0]) > 0.49;
    }
    CHECK(err < 1e-12);
    CHECK(reflected);
}

TEST_CASE("smooth data over several round trips", "[simulator][oracle]") {
    const auto cfg = passive(0.7, -0.4 + 0.3i);
    const auto g = SimGrid::make(cfg, 256);
    auto f1 = [](double z) { return cplx(std::sin(3.0 * z), std::cos(2.0 * z)); };
    auto f2 = [](double z) { return cplx(std::exp(-z), 0.3 * z); };
    auto s = sampled(cfg, g, f1, f2);
    // Make the initial data consistent at the facets.
    apply_boundary(s, cfg, 0.0);
    auto g1 = [&](double z) { return z == 0.0 ? cfg.r0 * f2(0.0) : f1(z); };
    auto g2 = [&](double z) { return z == 1.0 ? cfg.rL * f1(1.0) : f2(z); };
    const oracle::TransportSemigroup sg(cfg.r0, cfg.rL, 1.0, g1, g2);
    const StepOptions frozen{true};
    double err = 0.0;
    for (int i = 0; i < 3 * 256; ++i) {
        step_inplace(s, cfg, {}, frozen);
        if (i % 17 == 0)
            for (int j = 0; j < g.nodes(); ++j) {
                err = std::max(err, std::abs(s.psi[j][0] - sg.psi1(s.t, g.z(j))));
                err = std::max(err, std::abs(s.psi[j][1] - sg.psi2(s.t, g.z(j))));
            }
    }
    CHECK(err < 1e-12);
}

TEST_CASE("field flushes out through open facets", "[simulator]") {
    auto cfg = passive(0.0, 0.0);
    cfg.sections[0].d = 1.0;
    const auto g = SimGrid::make(cfg, 64);
    auto s = initial_state(cfg, g, cplx(0.3, 0.1));
    const StepOptions frozen{true};
    double prev = section_integrals(s).A[0];
    for (int i = 0; i < 2 * 64; ++i) {
        step_inplace(s, cfg, {}, frozen);
        const double e = section_integrals(s).A[0];
        CHECK(e <= prev + 1e-15);
        prev = e;
    }
    CHECK(prev == 0.0);
}

TEST_CASE("boundary identity holds with injection", "[simulator]") {
    auto cfg = presets::fig1(0.3, 1.0);
    const auto g = SimGrid::with_first_section(cfg, 50);
    const InjectionSignal sig({0.0, 0.37, 0.81}, {cplx(0.01, 0.0), cplx(0.0, -0.02), cplx(0.005, 0.005)});
    auto s = initial_state(cfg, g, 1e-2, std::nullopt, sig);
    for (int i = 0; i < 200; ++i) {
        step_inplace(s, cfg, sig);
        CHECK(std::abs(s.psi.front()[0] - cfg.r0 * s.psi.front()[1] - sig(s.t)) < 1e-12);
        CHECK(std::abs(s.psi.back()[1] - cfg.rL * s.psi.back()[0]) < 1e-12);
    }
}

TEST_CASE("carrier right-hand side", "[simulator]") {
    auto cfg = presets::fig1();
    const auto g = SimGrid::with_first_section(cfg, 40);
    auto s = initial_state(cfg, g, 0.0, CarrierVector{1.3, 1.0});
    auto f = carrier_rhs(cfg, s.n, s);
    CHECK(f[0] == Approx(cfg.sections[0].current - 1.3 / cfg.sections[0].tau));
    CHECK(f[1] == 0.0);

    LaserConfig one;
    SectionParams sec;
    sec.rho = {0.0, 0.0};
    one.sections = {sec};
    one.epsilon = 0.01;
    const auto g1 = SimGrid::make(one, 32);
    auto s1 = initial_state(one, g1, 1.0);
    for (auto& v : s1.psi) v = {1.0, 0.0};
    CHECK(carrier_rhs(one, {1.0}, s1)[0] == Approx(sec.current - 1.0 / sec.tau));
}

TEST_CASE("carrier quadrature converges", "[simulator][oracle]") {
    auto cfg = presets::fig1();
    cfg.sections.resize(1);
    auto fn1 = [](double z) { return cplx(0.2 * std::cos(2.0 * z), 0.1 * z); };
    auto fn2 = [](double z) { return cplx(0.05, 0.3 * std::sin(z)); };
    // Fine Simpson reference of the section integral with p = 0.8 psi + 0.1i.
    const int M = 20000;
    double ref = 0.0;
    const double rho = 0.44, G = gain(cfg.sections[0], 1.1);
    for (int i = 0; i <= M; ++i) {
        const double z = static_cast<double>(i) / M;
        const double w = (i == 0 || i == M) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const cplx a = fn1(z), b = fn2(z);
        const cplx pa = 0.8 * a + 0.1i, pb = 0.8 * b + 0.1i;
        const double integrand = (G - rho) * (std::norm(a) + std::norm(b)) +
                                 rho * std::real(std::conj(a) * pa + std::conj(b) * pb);
        ref += w * integrand;
    }
    ref /= 3.0 * M;
    std::vector<double> errs;
    for (int N : {50, 100, 200}) {
        const auto g = SimGrid::make(cfg, N);
        auto s = initial_state(cfg, g, 0.0, CarrierVector{1.1});
        for (int j = 0; j < g.nodes(); ++j) s.psi[j] = {fn1(g.z(j)), fn2(g.z(j))};
        for (int c = 0; c < N; ++c) {
            const double z = (c + 0.5) * g.dz;
            s.p[c] = {0.8 * fn1(z) + 0.1i, 0.8 * fn2(z) + 0.1i};
        }
        const double f = carrier_rhs(cfg, s.n, s)[0];
        const double lhs = (cfg.sections[0].current - 1.1 / cfg.sections[0].tau - f) / cfg.P();
        errs.push_back(std::abs(lhs - ref));
    }
    CHECK(errs[0] < 1e-3);
    CHECK(errs[1] < errs[0] / 3.0);
    CHECK(errs[2] < errs[1] / 3.0);
}

TEST_CASE("Lyapunov function values", "[simulator]") {
    auto cfg = presets::fabry_perot();
    const auto g = SimGrid::make(cfg, 16);
    auto s = initial_state(cfg, g, 0.0, CarrierVector{0.7});
    CHECK(lyapunov_D(cfg, s, 0.7) == 0.0);
    s.n = {2.7};
    CHECK(lyapunov_D(cfg, s, 0.7) == Approx(2.0));
}

TEST_CASE("run sampling and horizon zero", "[simulator]") {
    const auto cfg = presets::fig1();
    const auto g = SimGrid::with_first_section(cfg, 25);
    const auto s = initial_state(cfg, g);
    const auto out0 = run(cfg, s, {}, 0.0);
    REQUIRE(out0.samples.size() == 1);
    CHECK(out0.samples[0].t == 0.0);
    RunOptions o;
    o.stride = 5;
    o.snapshot_times = {0.5};
    const auto out = run(cfg, s, {}, 1.0, o);
    CHECK(out.samples.size() == 6);
    for (std::size_t i = 1; i < out.samples.size(); ++i) CHECK(out.samples[i].t > out.samples[i - 1].t);
    REQUIRE(out.snapshots.size() == 1);
    CHECK(out.snapshots[0].t >= 0.5);
    const auto again = run(cfg, s, {}, 1.0, o);
    CHECK(again.samples.back().outL == out.samples.back().outL);
}

TEST_CASE("second-order convergence on smooth data", "[simulator][oracle]") {
    auto cfg = presets::fig1(0.3, 0.5);
    cfg.sections[1].d = {0.2, 0.1};
    // Smooth bumps supported away from the facets for the whole run.
    auto bump = [](double z, double a, double b) {
        const double x = (z - a) / (b - a);
        return (x > 0.0 && x < 1.0) ? std::pow(std::sin(kPi * x), 4) : 0.0;
    };
    auto f1 = [&](double z) { return cplx(0.1, 0.05) * bump(z, 0.6, 1.4); };
    auto f2 = [&](double z) { return cplx(-0.03, 0.08) * bump(z, 0.7, 1.6); };
    auto final_field = [&](int cells_first) {
        const auto g = SimGrid::with_first_section(cfg, cells_first);
        auto s = initial_state(cfg, g, 0.0, CarrierVector{1.05, 1.0});
        for (int j = 0; j < g.nodes(); ++j) s.psi[j] = {f1(g.z(j)), f2(g.z(j))};
        for (int c = 0; c < g.total_cells(); ++c) {
            const auto& sec = cfg.sections[g.section_of_cell(c)];
            const cplx r = sec.gamma(1.0) / cplx(sec.gamma(1.0), -sec.omega_r(1.0));
            const double z = (c + 0.5) * g.dz;
            s.p[c] = {r * f1(z), r * f2(z)};
        }
        const long steps = std::lround(0.5 / g.dz);
        for (long i = 0; i < steps; ++i) step_inplace(s, cfg, {});
        std::vector<Vec2> coarse;
        const int stride = cells_first / 125;
        for (int j = 0; j < g.nodes(); j += stride) coarse.push_back(s.psi[j]);
        return std::make_pair(coarse, s.n[0]);
    };
    auto dist = [](const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
        double m = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j)
            m = std::max({m, std::abs(a[j][0] - b[j][0]), std::abs(a[j][1] - b[j][1])});
        return m;
    };
    // 125, 250, 500, 1000 cells keep both sections commensurate.
    const auto a = final_field(125), b = final_field(250), c = final_field(500), d = final_field(1000);
    const double e1 = dist(a.first, b.first), e2 = dist(b.first, c.first), e3 = dist(c.first, d.first);
    CHECK(std::log2(e1 / e2) > 1.8);
    CHECK(std::log2(e2 / e3) > 1.8);
    const double n1 = std::abs(a.second - b.second), n2 = std::abs(b.second - c.second), n3 = std::abs(c.second - d.second);
    CHECK(std::log2(n1 / n2) > 1.8);
    CHECK(std::log2(n2 / n3) > 1.8);
}

TEST_CASE("detuning shifts the optical frequency", "[simulator]") {
    auto cfg = presets::fabry_perot(0.6, 0.6, 0.1);
    cfg.sections[0].kappa = 1.0;
    const double w = 0.7;
    auto shifted = cfg;
    shifted.sections[0].d += cplx(0.0, w);
    const auto g = SimGrid::make(cfg, 64);
    const StepOptions frozen{true};
    auto a = initial_state(cfg, g, 0.01);
    auto b = initial_state(shifted, g, 0.01);
    for (int i = 0; i < 640; ++i) {
        step_inplace(a, cfg, {}, frozen);
        step_inplace(b, shifted, {}, frozen);
        const cplx expect = a.psi.front()[1] * std::exp(cplx(0.0, -w * a.t));
        CHECK(std::abs(b.psi.front()[1] - expect) < 1e-12 * std::max(1.0, std::abs(expect)) + 1e-15);
    }
}

TEST_CASE("carrier floor breach aborts with the time", "[simulator]") {
    auto cfg = presets::fabry_perot();
    cfg.sections[0].gain_model = GainModel::log;
    cfg.sections[0].current = 1e-3;
    cfg.sections[0].tau = 0.001;
    cfg.epsilon = 0.01;
    const auto g = SimGrid::make(cfg, 16);
    auto s = initial_state(cfg, g, 0.0, CarrierVector{0.05});
    try {
        for (int i = 0; i < 100; ++i) step_inplace(s, cfg, {});
        FAIL("no error raised");
    } catch (const SimulationError& e) {
        CHECK(e.time() >= 0.0);
        CHECK(std::string(e.what()).find("section 1") != std::string::npos);
    }
}
