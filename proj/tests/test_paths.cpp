#include "doctest.h"
#include "lapdual/paths.hpp"

#include <cmath>
#include <sstream>

using namespace lapdual;
using doctest::Approx;

namespace {

JumpMeasure atoms(std::vector<Atom> a) { return JumpMeasure{std::move(a), std::nullopt}; }

struct Moments {
    double mean = 0.0;
    double se = 0.0;
};

template <class F>
Moments moments(const std::vector<PathState>& v, F f) {
    double s = 0.0, s2 = 0.0;
    for (const auto& p : v) {
        const double x = f(p);
        s += x;
        s2 += x * x;
    }
    const double n = static_cast<double>(v.size());
    const double m = s / n;
    return {m, std::sqrt(std::max(s2 / n - m * m, 0.0) / n)};
}

Moments value_moments(const std::vector<PathState>& v) {
    return moments(v, [](const PathState& p) { return p.value; });
}

SimConfig config(double h, double horizon, long paths, std::uint64_t seed = 1) {
    SimConfig c;
    c.step = h;
    c.horizon = horizon;
    c.paths = paths;
    c.seed = seed;
    return c;
}

bool all_alive_equal(const std::vector<PathState>& v, double x) {
    for (const auto& p : v)
        if (p.value != x) return false;
    return true;
}

}  // namespace

TEST_CASE("step_cb examples") {
    // Zero-noise growth: every path is the Euler product (1+h)^{T/h}.
    const auto pure = run_paths(CbSpec{SpLpMechanism({}, 0, 1, 0)}, 1.0, config(1e-3, 1.0, 1000));
    const double euler = std::pow(1.001, 1000);
    for (const auto& p : pure) CHECK(p.value == Approx(euler).epsilon(1e-12));
    CHECK(std::fabs(euler - std::exp(1.0)) <= std::exp(1.0) * 1e-3);

    CHECK(all_alive_equal(run_paths(CbSpec{SpLpMechanism()}, 3.0, config(1e-2, 1.0, 100)), 3.0));

    Philox rng(5, 0);
    PathState s{0.7, PathStatus::Alive, 0.0, kInf};
    CHECK(step_cb(s, SpLpMechanism(), 0.1, rng).value == 0.7);

    // Feller martingale
    const auto feller = run_paths(CbSpec{SpLpMechanism({}, 1, 0, 0)}, 1.0, config(1e-3, 1.0, 100000));
    const auto m = value_moments(feller);
    CHECK(std::fabs(m.mean - 1.0) <= 3 * m.se);
}

TEST_CASE("compensated jumps and stable parts keep the CB martingale") {
    const SpLpMechanism psi(JumpMeasure{{{0.3, 2.0}, {0.8, 1.0}}, StableDensity{1.4, 0.5}}, 0.2, 0, 0);
    const auto v = run_paths(CbSpec{psi}, 1.0, config(1e-2, 1.0, 40000));
    const auto m = value_moments(v);
    CHECK(std::fabs(m.mean - 1.0) <= 3 * m.se);
    // jumps above 1 are not compensated: the mean grows like exp(t * int_{>1} u nu)
    const SpLpMechanism big(atoms({{2.0, 0.5}}), 0, 0, 0);
    const auto w = run_paths(CbSpec{big}, 1.0, config(1e-2, 1.0, 40000));
    const auto mw = value_moments(w);
    CHECK(std::fabs(mw.mean - std::pow(1.01, 100)) <= 3 * mw.se);
}

TEST_CASE("step_cbc examples") {
    // logistic ODE
    const auto v = run_paths(CbcSpec{SpLpMechanism(), NotUpMechanism({}, 0, 1)}, 1.0, config(1e-4, 1.0, 4));
    for (const auto& p : v) CHECK(std::fabs(p.value - 0.5) <= 1e-3);

    // Sigma = 0 consumes the same randomness as the CB step
    const SpLpMechanism psi(atoms({{0.5, 1.0}, {2.0, 0.3}}), 0.5, 0.2, 0);
    for (std::uint64_t i = 0; i < 20; ++i) {
        Philox r1(9, i), r2(9, i);
        PathState s{1.3, PathStatus::Alive, 0.0, kInf};
        PathState a = s, b = s;
        for (int k = 0; k < 50; ++k) {
            a = step_cb(a, psi, 1e-2, r1);
            b = step_cbc(b, psi, NotUpMechanism(), 1e-2, r2);
        }
        CHECK(a.value == b.value);
    }

    const auto g = run_paths(CbcSpec{SpLpMechanism(), NotUpMechanism({}, 1, 0)}, 1.0, config(1e-2, 1.0, 40000));
    const auto m = value_moments(g);
    CHECK(std::fabs(m.mean - 1.0) <= 3 * m.se);

    // collision jumps are fully compensated
    const auto j = run_paths(CbcSpec{SpLpMechanism(), NotUpMechanism(atoms({{0.2, 1.0}}), 0, 0)}, 1.0,
                             config(1e-2, 1.0, 40000));
    const auto mj = value_moments(j);
    CHECK(std::fabs(mj.mean - 1.0) <= 3 * mj.se);
}

TEST_CASE("step_cbci examples") {
    const auto v = run_paths(CbciSpec{SpLpMechanism(), NotUpMechanism(), SubordinatorMechanism({}, 1, 0)}, 0.4,
                             config(1e-3, 1.0, 10));
    for (const auto& p : v) CHECK(p.value == Approx(1.4).epsilon(1e-12));

    const auto c = run_paths(CbciSpec{SpLpMechanism(), NotUpMechanism(), SubordinatorMechanism(atoms({{1, 2}}), 0, 0)},
                             0.0, config(1e-2, 1.5, 20000));
    const auto m = value_moments(c);  // jump count, unit jumps
    CHECK(std::fabs(m.mean - 3.0) <= 3 * m.se);

    // 0 is left immediately under immigration
    const auto z = run_paths(CbciSpec{SpLpMechanism({}, 1, 0, 0), NotUpMechanism(), SubordinatorMechanism({}, 0.5, 0)},
                             0.0, config(1e-2, 0.5, 10));
    for (const auto& p : z) CHECK(p.value > 0.0);
}

TEST_CASE("constant-rate killing") {
    for (double k : {0.5, 2.0}) {
        const auto v = run_paths(CbciSpec{SpLpMechanism(), NotUpMechanism(), SubordinatorMechanism({}, 0, k)}, 1.0,
                                 config(1e-2, 1.0, 40000));
        const auto m = moments(v, [](const PathState& p) { return p.status == PathStatus::Alive ? 1.0 : 0.0; });
        // Euler clock on a grid: killed iff E <= k * (steps) * h exactly at grid points
        CHECK(std::fabs(m.mean - std::exp(-k)) <= 3 * m.se);
        for (const auto& p : v) CHECK((p.status == PathStatus::Alive ? p.value == 1.0 : std::isinf(p.value)));
    }
}

TEST_CASE("step_cbre examples") {
    const auto m1 = value_moments(
        run_paths(CbreSpec{SpLpMechanism(), EnvMechanism(atoms({{1.0, 0.7}}), 0, 0, 0)}, 2.0, config(1e-2, 1.0, 40000)));
    CHECK(std::fabs(m1.mean - 2.0) <= 3 * m1.se);

    const SpLpMechanism psi(atoms({{0.5, 1.0}}), 0.5, 0.2, 0);
    for (std::uint64_t i = 0; i < 20; ++i) {
        Philox r1(3, i), r2(3, i);
        PathState a{1.0, PathStatus::Alive, 0.0, kInf}, b = a;
        for (int k = 0; k < 50; ++k) {
            a = step_cb(a, psi, 1e-2, r1);
            b = step_cbre(b, psi, EnvMechanism(), 1e-2, r2);
        }
        CHECK(a.value == b.value);
    }

    // deterministic environment S_t = b t
    for (double b : {0.7, -1.2}) {
        const auto v = run_paths(CbreSpec{SpLpMechanism(), EnvMechanism({}, 0, b, 0)}, 1.5, config(1e-3, 1.0, 3));
        for (const auto& p : v) CHECK(p.value == Approx(1.5 * std::exp(b)).epsilon(1e-3));
    }

    // Gaussian and negative multiplicative jumps, still a martingale
    const auto m2 = value_moments(run_paths(
        CbreSpec{SpLpMechanism({}, 1, 0, 0), EnvMechanism(atoms({{-0.5, 1.0}, {0.4, 0.5}}), 0.3, 0, 0)}, 1.0,
        config(1e-2, 1.0, 40000)));
    CHECK(std::fabs(m2.mean - 1.0) <= 3 * m2.se);

    // the dual side drifts by -Psi and shares the environment terms
    const auto d = run_paths(CbreDualSpec{SpLpMechanism({}, 1, 0, 0), EnvMechanism({}, 0, 0, 0)}, 1.0,
                             config(1e-4, 1.0, 2));
    for (const auto& p : d) CHECK(std::fabs(p.value - 0.5) <= 1e-3);
}

TEST_CASE("step_decomposable examples") {
    // First jump time at the frozen rate PhiHat(1) = 1 - e^{-1}.
    const DecomposableSpec first{{}, {PhiPair{SubordinatorMechanism(atoms({{1, 1}}), 0, 0),
                                              SubordinatorMechanism(atoms({{1, 1}}), 0, 0)}}};
    SimConfig cfg = config(1e-3, 40.0, 1);
    double s = 0.0, s2 = 0.0;
    const int n = 6000;
    for (int i = 0; i < n; ++i) {
        double hit = cfg.horizon;
        simulate_path(first, 1.0, cfg, 77, static_cast<std::uint64_t>(i), [&](double t, const PathState& p) {
            if (p.value != 1.0) {
                hit = t;
                return false;
            }
            return true;
        });
        s += hit;
        s2 += hit * hit;
    }
    const double mean = s / n, se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::fabs(mean - 1.0 / (1.0 - std::exp(-1.0))) <= 3 * se);
    CHECK(1.0 / (1.0 - std::exp(-1.0)) == Approx(1.5819767).epsilon(1e-7));

    CHECK(all_alive_equal(run_paths(DecomposableSpec{}, 2.5, config(1e-2, 1.0, 50)), 2.5));

    // rate x matches the CB process with the same fully compensated jumps
    const NotUpMechanism law(atoms({{0.5, 2.0}, {0.9, 1.0}}), 0, 0);
    const DecomposableSpec dec{{SigmaPair{NotUpMechanism({}, 0, 1), law}}, {}};
    const CbSpec cb{SpLpMechanism(law.measure(), 0, 0, 0)};
    const SimConfig c2 = config(1e-2, 1.0, 40000);
    const auto a = run_paths_at(dec, 1.0, c2, {1.0}, 1)[0];
    const auto b = run_paths_at(cb, 1.0, c2, {1.0}, 2)[0];
    const auto same = run_paths_at(cb, 1.0, c2, {1.0}, 1)[0];
    for (double y : {0.5, 2.0}) {
        auto f = [y](const PathState& p) { return std::exp(-p.value * y); };
        const auto ma = moments(a, f), mb = moments(b, f);
        CHECK(std::fabs(ma.mean - mb.mean) <= 3 * std::hypot(ma.se, mb.se));
    }
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].value == same[i].value);
}

TEST_CASE("killed flow dual examples") {
    const SimConfig c = config(1e-2, 1.0, 100000);
    auto survival = [](const std::vector<PathState>& v) {
        return moments(v, [](const PathState& p) { return p.status == PathStatus::AbsorbedInf ? 0.0 : 1.0; });
    };
    const auto m1 = survival(run_paths(KilledFlowSpec{SpLpMechanism(), SubordinatorMechanism({}, 1, 0)}, 1.0, c));
    CHECK(std::fabs(m1.mean - std::exp(-1.0)) <= 3 * m1.se);
    const auto m2 =
        survival(run_paths(KilledFlowSpec{SpLpMechanism({}, 0, 1, 0), SubordinatorMechanism({}, 1, 0)}, 1.0, c));
    CHECK(std::fabs(m2.mean - 0.1793741) <= 3 * m2.se);
    const auto never = run_paths(KilledFlowSpec{SpLpMechanism({}, 1, 0, 0), SubordinatorMechanism()}, 1.0, c);
    for (const auto& p : never) REQUIRE(p.value == Approx(0.5).epsilon(1e-9));

    // the single-path trajectory agrees with the batch table
    Philox rng(1, 0);
    const auto tr = simulate_dual_killed_flow(SpLpMechanism({}, 1, 0, 0), SubordinatorMechanism(), 1.0, 1.0, 0.1, rng);
    CHECK(tr.back().t == Approx(1.0));
    CHECK(tr.back().state.value == Approx(0.5).epsilon(1e-9));
    CHECK(tr.size() == 11);

    // subordinator dual: frozen value, constant rate
    const auto kc = run_paths(KilledConstantSpec{SubordinatorMechanism({}, 1, 0)}, 2.0, c);
    const auto m3 = survival(kc);
    CHECK(std::fabs(m3.mean - std::exp(-2.0)) <= 3 * m3.se);
    for (const auto& p : kc) CHECK((p.status == PathStatus::Alive ? p.value == 2.0 : std::isinf(p.value)));
}

TEST_CASE("diffusion dual examples") {
    Philox rng(2, 0);
    const SpLpMechanism psi(atoms({{0.5, 1}}), 0.6, 0.1, 0);
    const auto tr = simulate_diffusion_dual(NotUpMechanism(), psi, 1.0, 1.0, 1e-4, rng);
    CHECK(std::fabs(tr.back().state.value - cb_flow(psi, 1.0, 1.0).u) <= 1e-3);

    const auto v = run_paths(DiffusionDualSpec{NotUpMechanism({}, 1, 0), SpLpMechanism()}, 1.0,
                             config(1e-2, 1.0, 40000));
    const auto m = value_moments(v);
    CHECK(std::fabs(m.mean - 1.0) <= 3 * m.se);

    const auto at = run_paths_at(DiffusionDualSpec{NotUpMechanism({}, 0, 1), SpLpMechanism({}, 0, -1, 0)}, 1.0,
                                 config(1e-3, 4.0, 20000), {1.0, 2.0, 4.0}, 3);
    double prev = -1.0;
    for (const auto& v : at) {
        const auto z = moments(v, [](const PathState& p) { return p.status == PathStatus::AbsorbedZero ? 1.0 : 0.0; });
        CHECK(z.mean > prev);
        prev = z.mean;
    }
}

TEST_CASE("run_paths examples and boundaries") {
    CHECK(all_alive_equal(run_paths(SubordinatorSpec{SubordinatorMechanism({}, 1, 0)}, 0.0, config(1e-3, 1.0, 100)),
                          1.0));
    for (const auto& p : run_paths(CbSpec{SpLpMechanism({}, 1, 0, 0)}, kInf, config(1e-2, 1.0, 10)))
        CHECK((std::isinf(p.value) && p.status == PathStatus::AbsorbedInf));
    for (const auto& p : run_paths(CbSpec{SpLpMechanism({}, 1, 0, 0)}, 0.0, config(1e-2, 1.0, 10)))
        CHECK((p.value == 0.0 && p.status == PathStatus::AbsorbedZero));
    // subordinator: exact Laplace transform of the increment
    const SubordinatorMechanism phi(atoms({{1, 0.5}, {2, 0.3}}), 0.2, 0);
    const auto v = run_paths(SubordinatorSpec{phi}, 0.0, config(1e-3, 1.0, 40000));
    const auto m = moments(v, [](const PathState& p) { return std::exp(-p.value); });
    CHECK(std::fabs(m.mean - std::exp(-phi(1.0))) <= 3 * m.se);
    // the explosion cap sends paths to infinity
    SimConfig capped = config(1e-2, 3.0, 20);
    capped.explosion_cap = 5.0;
    for (const auto& p : run_paths(CbSpec{SpLpMechanism({}, 0, 1, 0)}, 1.0, capped))
        CHECK(p.status == PathStatus::AbsorbedInf);
}

TEST_CASE("strong absorption, comparison and determinism") {
    const SpLpMechanism feller({}, 2, 0, 0);
    const auto at = run_paths_at(CbSpec{feller}, 0.3, config(1e-2, 3.0, 2000), {0.5, 1.0, 2.0, 3.0}, 4);
    for (std::size_t i = 0; i < at[0].size(); ++i)
        for (std::size_t k = 1; k < at.size(); ++k) {
            if (at[k - 1][i].status == PathStatus::AbsorbedZero) CHECK(at[k][i].value == 0.0);
            if (at[k - 1][i].status == PathStatus::AbsorbedInf) CHECK(std::isinf(at[k][i].value));
        }

    const std::vector<ProcessSpec> specs{
        CbSpec{SpLpMechanism(atoms({{0.5, 1}, {1.5, 0.5}}), 0, 0.2, 0)},
        CbcSpec{SpLpMechanism(atoms({{0.5, 1}}), 0, 0, 0), NotUpMechanism(atoms({{0.3, 0.5}}), 0, 0)},
        CbciSpec{SpLpMechanism(atoms({{0.5, 1}}), 0, 0, 0), NotUpMechanism(atoms({{0.3, 0.5}}), 0, 0),
                 SubordinatorMechanism(atoms({{1, 1}}), 0.1, 0)},
        SubordinatorSpec{SubordinatorMechanism(atoms({{1, 1}}), 0.1, 0)},
        DecomposableSpec{{SigmaPair{NotUpMechanism(atoms({{1, 1}}), 0, 0), NotUpMechanism(atoms({{0.5, 1}}), 0, 0)}},
                         {PhiPair{SubordinatorMechanism(atoms({{1, 1}}), 0, 0),
                                  SubordinatorMechanism(atoms({{1, 0.5}}), 0, 0)}}},
    };
    const SimConfig c = config(1e-2, 1.0, 500);
    for (const auto& spec : specs) {
        std::vector<double> prev(500, 0.0);
        for (double x0 : {0.25, 0.5, 1.0, 2.0}) {
            const auto v = run_paths(spec, x0, c);
            for (std::size_t i = 0; i < v.size(); ++i) {
                CHECK(v[i].value >= prev[i]);
                prev[i] = v[i].value;
            }
        }
    }

    SimConfig one = config(1e-2, 1.0, 3000);
    one.threads = 1;
    SimConfig four = one;
    four.threads = 4;
    const ProcessSpec spec = CbciSpec{SpLpMechanism({}, 1, 0, 0), NotUpMechanism({}, 0.5, 0),
                                      SubordinatorMechanism(atoms({{1, 1}}), 0, 0)};
    const auto r1 = run_paths(spec, 1.0, one), r2 = run_paths(spec, 1.0, four), r3 = run_paths(spec, 1.0, one);
    for (std::size_t i = 0; i < r1.size(); ++i) {
        REQUIRE(r1[i].value == r2[i].value);
        REQUIRE(r1[i].value == r3[i].value);
    }
}

TEST_CASE("spec helpers") {
    const ProcessSpec a = CbSpec{SpLpMechanism({}, 1, 0, 0)};
    const ProcessSpec b = DeterministicFlowSpec{SpLpMechanism({}, 1, 0, 0)};
    CHECK(kind_name(a) == "cb");
    CHECK(kind_name(b) == "deterministic_flow");
    CHECK(fingerprint(a) != fingerprint(b));
    CHECK(fingerprint(a) == fingerprint(ProcessSpec{CbSpec{SpLpMechanism({}, 1, 0, 0)}}));
    CHECK(fingerprint(a) != fingerprint(ProcessSpec{CbSpec{SpLpMechanism({}, 1.0000001, 0, 0)}}));

    // symbols of dual kinds are the duals of the forward symbols
    const SpLpMechanism psi(atoms({{0.5, 1}}), 0.3, 0.1, 0);
    const SubordinatorMechanism phi(atoms({{1, 0.5}}), 0.2, 0);
    const LdsSymbol fwd = symbol_of(CbciSpec{psi, NotUpMechanism({}, 1, 0), phi});
    const LdsSymbol bwd = symbol_of(CbciDualSpec{NotUpMechanism({}, 1, 0), psi, phi});
    for (double x : {0.3, 1.0, 2.0})
        for (double y : {0.5, 1.5}) CHECK(eval_lds(fwd, x, y) == Approx(eval_lds(bwd, y, x)).epsilon(1e-12));

    const DecomposableSpec d{{SigmaPair{NotUpMechanism(atoms({{1, 1}}), 0, 0), NotUpMechanism(atoms({{0.5, 2}}), 0, 0)}},
                             {PhiPair{SubordinatorMechanism(atoms({{1, 1}}), 0, 0),
                                      SubordinatorMechanism(atoms({{2, 0.5}}), 0, 0)}}};
    const LdsSymbol sd = symbol_of(d), sh = symbol_of(hat_swap(d));
    const NotUpMechanism sh1(atoms({{1, 1}}), 0, 0), s1(atoms({{0.5, 2}}), 0, 0);
    const SubordinatorMechanism ph1(atoms({{1, 1}}), 0, 0), p1(atoms({{2, 0.5}}), 0, 0);
    for (double x : {0.3, 1.0, 2.0})
        for (double y : {0.5, 1.5}) {
            CHECK(eval_lds(sd, x, y) == Approx(sh1(x) * s1(y) - ph1(x) * p1(y)).epsilon(1e-12));
            CHECK(eval_lds(sh, y, x) == Approx(eval_lds(sd, x, y)).epsilon(1e-12));
        }
}

TEST_CASE("trajectory CSV") {
    std::ostringstream os;
    write_trajectories(os, KilledConstantSpec{SubordinatorMechanism({}, 50, 0)}, 1.0, config(0.25, 1.0, 1), 2);
    const std::string text = os.str();
    CHECK(text.rfind("path_id,t,value,status\n0,0,1,alive\n", 0) == 0);
    CHECK(text.find(",inf,inf\n") != std::string::npos);
}

TEST_CASE("spec and config validation") {
    CHECK_THROWS_AS(validate_spec(CbreSpec{SpLpMechanism(), EnvMechanism({}, 0, 0, 0.5)}), ValidationError);
    CHECK_THROWS_AS(validate_spec(CbreDualSpec{SpLpMechanism(), EnvMechanism(atoms({{-1.0, 1}}), 0, 0, 0)}),
                    ValidationError);
    CHECK_THROWS_AS(validate_spec(DecomposableSpec{{SigmaPair{NotUpMechanism(), NotUpMechanism({}, 1, 0)}}, {}}),
                    ValidationError);
    CHECK_THROWS_AS(validate_spec(DecomposableSpec{
                        {}, {PhiPair{SubordinatorMechanism(), SubordinatorMechanism(JumpMeasure{{}, StableDensity{0.5, 1}}, 0, 0)}}}),
                    ValidationError);
    CHECK_THROWS_AS(hat_swap(DecomposableSpec{{SigmaPair{NotUpMechanism({}, 0, 1), NotUpMechanism(atoms({{1, 1}}), 0, 0)}}, {}}),
                    ValidationError);
    CHECK_THROWS_AS(run_paths(CbreSpec{SpLpMechanism(), EnvMechanism({}, 0, 0, 0.5)}, 1.0, config(1e-2, 1, 1)),
                    ValidationError);
    CHECK_THROWS_AS(config(1.0, 1.0, 1).validate(), ValidationError);
    SimConfig bad = config(1e-2, 1.0, 1);
    bad.small_jump_cut = 2.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = config(1e-2, 1.0, 0);
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THROWS_AS(run_paths(CbSpec{}, -1.0, config(1e-2, 1, 1)), ValidationError);
}
