// Acceptance runs AC1..AC10: one PASS/FAIL line per criterion, including its
// runtime budget. Pass criterion ids as arguments to run a subset.

#include "twm/io/tasks.hpp"
#include "twm/presets.hpp"
#include "twm/verify.hpp"

#include <cstdio>
#include <iostream>
#include <set>
#include <thread>

using namespace twm;
using verify::Check;
using verify::sci;

namespace {

std::string fixed(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << std::fixed << v;
    return os.str();
}

ModeBasis fig1_basis(const LaserConfig& cfg, const CriticalResult& crit) {
    const ValidityBox box{{crit.n[0] - 0.03, crit.n[1]}, {crit.n[0] + 0.06, crit.n[1]}};
    return build_basis(cfg, crit.n, crit.spectrum.gap.q, box);
}

Check ac7() {
    return verify::timed_check("AC7", "slow-fast convergence", [](Check& c) {
        const auto base = presets::fig1(0.3, 0.0, 0.01);
        const auto crit = critical_density_search(base, {1.0, 1.0}, 0);
        if (!crit.gap_confirmed) throw NumericalError("no gap at the critical density");
        std::vector<double> sups;
        for (double eps : {1e-2, 5e-3, 2.5e-3}) {
            const auto cfg = base.with_epsilon(eps);
            const auto basis = fig1_basis(cfg, crit);
            CompareOptions o;
            o.cells_first = 250;
            o.sample_dt = 1.0;
            const auto rep = compare_full_vs_reduced(cfg, basis, ReducedState{{2.0}, crit.n, 0.0}, 10.0 / eps, o);
            sups.push_back(rep.sup_dn);
        }
        const double q1 = sups[0] / sups[1], q2 = sups[1] / sups[2];
        const bool linear = q1 >= 1.6 && q1 <= 2.4 && q2 >= 1.6 && q2 <= 2.4;

        const auto basis = fig1_basis(base, crit);
        CompareOptions o;
        o.cells_first = 250;
        o.sample_dt = 0.5;
        o.stable_delta = 0.5;
        const auto rep = compare_full_vs_reduced(base, basis, ReducedState{{2.0}, crit.n, 0.0}, 200.0, o);
        const double rate = rep.decay_rate ? *rep.decay_rate : 0.0;
        const bool decays = rep.decay_rate && rate >= 0.8 * rep.xi;

        c.pass = linear && decays;
        c.detail = "sup|dn| " + sci(sups[0]) + " / " + sci(sups[1]) + " / " + sci(sups[2]) + ", ratios " + fixed(q1, 3) +
                   ", " + fixed(q2, 3) + "; stable decay " + fixed(rate) + " vs 0.8 xi = " + fixed(0.8 * rep.xi);
    });
}

Check ac8() {
    return verify::timed_check("AC8", "reduced-model structure", [](Check& c) {
        const auto cfg = presets::fig1(0.3, 0.0, 0.01);
        const auto crit = critical_density_search(cfg, {1.0, 1.0}, 0);
        const auto basis = fig1_basis(cfg, crit);
        const auto coef = basis.coefficients(crit.n);

        // Rotational equivariance on 100 random phases.
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> u(0.0, 2.0 * kPi), a(-3.0, 3.0);
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            const std::vector<cplx> E{cplx(a(rng), a(rng))};
            const cplx rot = std::polar(1.0, u(rng));
            const auto r0 = reduced_rhs(cfg, coef, E);
            const auto r = reduced_rhs(cfg, coef, {E[0] * rot});
            worst = std::max(worst, std::abs(r.dEc[0] - rot * r0.dEc[0]) / std::max(1.0, std::abs(r0.dEc[0])));
            for (std::size_t k = 0; k < cfg.size(); ++k)
                worst = std::max(worst, std::abs(r.dn[k] - r0.dn[k]) / std::max(1.0, std::abs(r0.dn[k])));
        }

        // Zero-field invariance over 10/eps. Without field the feedback laser carriers
        // leave the validity box, so this runs on a Fabry-Perot basis whose
        // unlasing equilibrium n = I tau lies inside its box.
        const auto fp = presets::fabry_perot(0.5, 0.5, 0.5, 2.0);
        BasisOptions bo;
        bo.require_critical = false;
        bo.check_gap = false;
        bo.seeds = {beta(fp.sections[0], 1.0) + 0.5 * std::log(fp.r0 * fp.rL) / fp.sections[0].length + 0.1};
        const ModeBasis fpb(fp, {1.0}, 1, ValidityBox{{0.5}, {1.5}}, bo);
        const auto z = integrate_reduced(fpb, fp, ReducedState{{0.0}, {1.3}, 0.0}, 10.0 / fp.epsilon);
        double zmax = 0.0;
        for (const auto& s : z.samples) zmax = std::max(zmax, std::abs(s.Ec[0]));

        // epsilon = 0: reduced and full carriers stay put bit for bit.
        auto cfg0 = cfg;
        cfg0.epsilon = 0.0;
        ReducedOptions ro;
        ro.sample_dt = 1.0;
        const auto f0 = integrate_reduced(basis, cfg0, ReducedState{{2.0}, crit.n, 0.0}, 100.0, ro);
        bool frozen = true;
        for (const auto& s : f0.samples) frozen = frozen && s.n == crit.n;
        const auto g = SimGrid::with_first_section(cfg0, 125);
        auto st = full_state_from_reduced(basis, cfg0, g, ReducedState{{2.0}, crit.n, 0.0}, std::nullopt, 0.0);
        for (int i = 0; i < 5000; ++i) step_inplace(st, cfg0, {}, StepOptions{true});
        frozen = frozen && st.n == crit.n;

        c.pass = worst < 1e-13 && zmax < 1e-12 && z.samples.back().t >= 10.0 / fp.epsilon - 1e-9 && frozen;
        c.detail = "equivariance " + sci(worst) + ", zero-field sup|Ec| " + sci(zmax) + " over t = " +
                   fixed(z.samples.back().t, 0) + ", eps = 0 " + (frozen ? "freezes n" : "moves n");
    });
}

Check ac9() {
    return verify::timed_check("AC9", "boundedness diagnostic", [](Check& c) {
        // Two active sections, positive losses everywhere.
        auto cfg = presets::fig1(0.3, 1.0, 0.01);
        cfg.sections[0].d = {0.5, 0.0};
        auto& s2 = cfg.sections[1];
        s2.frozen = false;
        s2.d = {0.3, 0.0};
        s2.rho = {0.2, 0.0};
        s2.gain_slope = 1.0;
        s2.current = 4e-3;
        s2.tau = 250.0;
        require_valid(cfg);
        double tau_max = 0.0;
        for (const auto& s : cfg.sections) tau_max = std::max(tau_max, s.tau);

        // Piecewise-constant injection, |alpha| <= 0.2.
        std::vector<double> times;
        std::vector<cplx> vals;
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double t = 0.0; t < 50.0 * tau_max; t += 100.0) {
            times.push_back(t);
            vals.push_back(std::polar(0.2 * u(rng), 2.0 * kPi * u(rng)));
        }
        const InjectionSignal sig(times, vals);

        const auto g = SimGrid::with_first_section(cfg, 60);
        const auto init = initial_state(cfg, g, 0.05, CarrierVector{1.0, 1.0}, sig);
        RunOptions o;
        o.stride = 60;
        const auto out = run(cfg, init, sig, 50.0 * tau_max, o);

        // n_* must bound every density from below along the run.
        double n_star = 1.0;
        bool finite = true;
        for (const auto& x : out.samples)
            for (std::size_t k = 0; k < cfg.size(); ++k) {
                n_star = std::min(n_star, x.n[k]);
                finite = finite && std::isfinite(x.n[k]) && std::isfinite(x.power[k]);
            }
        const double D0 = lyapunov_D(cfg, init, n_star);
        const double bound = boundedness_bound(cfg, D0, sig.sup_abs(), n_star);
        double Dmax = -1e300;
        for (const auto& x : out.samples) {
            double D = 0.0;
            for (std::size_t k = 0; k < cfg.size(); ++k)
                D += 0.5 * cfg.P() * x.power[k] + cfg.sections[k].length * (x.n[k] - n_star);
            Dmax = std::max(Dmax, D);
        }
        c.pass = finite && Dmax <= bound;
        c.detail = "max D " + fixed(Dmax) + " <= bound " + fixed(bound) + " over t = " + fixed(out.samples.back().t, 0) +
                   " (n_* = " + fixed(n_star) + ")";
    });
}

Check ac10() {
    return verify::timed_check("AC10", "feedback laser regime map", [](Check& c) {
        const auto parsed = io::parse_config(std::string(TWM_CONFIG_DIR) + "/fig1.cfg");
        auto sc = *parsed.scenario;
        sc.threads = std::max(1u, std::thread::hardware_concurrency());
        const auto out = std::filesystem::temp_directory_path() / "twm-acceptance-ac10";
        const auto r = io::task_sweep(parsed.config, sc, out);
        const auto& reg = r.summary["regimes"];
        const int steady = reg.value("steady", 0), osc = reg.value("oscillating", 0);
        c.pass = steady > 0 && osc > 0;
        c.detail = "";
        for (auto it = reg.begin(); it != reg.end(); ++it)
            c.detail += (c.detail.empty() ? "" : ", ") + it.key() + " " + std::to_string(it.value().get<int>());
        c.detail += "; " + std::to_string(r.summary["failed"].get<int>()) + " failed points; map in " + (out / "sweep.csv").string();
    });
}

const std::map<std::string, double> budget{{"AC1", 1.0}, {"AC2", 10.0}, {"AC3", 60.0}, {"AC4", 60.0},
                                           {"AC6", 30.0}, {"AC7", 600.0}, {"AC9", 120.0}, {"AC10", 900.0}};

void report(Check& c) {
    if (auto it = budget.find(c.id); it != budget.end() && c.seconds > it->second) {
        c.pass = false;
        c.detail += "; over the " + fixed(it->second, 0) + " s budget";
    }
    std::printf("%s %-5s %-30s %8.2fs  %s\n", c.pass ? "PASS" : "FAIL", c.id.c_str(), c.name.c_str(), c.seconds,
                c.detail.c_str());
    std::fflush(stdout);
}

} // namespace

int main(int argc, char** argv) {
    std::set<std::string> only(argv + 1, argv + argc);
    auto want = [&](const std::string& id) { return only.empty() || only.count(id); };
    bool ok = true;
    std::vector<Check> checks;

    if (want("AC1") || want("AC2") || want("AC3") || want("AC4") || want("AC5") || want("AC6"))
        for (auto& c : verify::oracle_battery(1))
            if (want(c.id)) checks.push_back(c);
    std::sort(checks.begin(), checks.end(), [](const Check& a, const Check& b) { return a.id < b.id; });
    for (auto& c : checks) {
        report(c);
        ok = ok && c.pass;
    }
    for (auto [id, fn] : std::vector<std::pair<std::string, Check (*)()>>{{"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10}}) {
        if (!want(id)) continue;
        auto c = fn();
        report(c);
        ok = ok && c.pass;
    }
    return ok ? 0 : 1;
}
