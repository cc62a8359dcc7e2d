#include "doctest.h"
#include "lapdual/duality.hpp"

#include <cmath>
#include <sstream>

using namespace lapdual;
using doctest::Approx;

namespace {

JumpMeasure atoms(std::vector<Atom> a) { return JumpMeasure{std::move(a), std::nullopt}; }

const ConventionPair kPlusPlus{ZeroInf::ZeroPlusInf, InfZero::InfZeroPlus};
const ConventionPair kPlusMinus{ZeroInf::ZeroPlusInf, InfZero::InfMinusZero};
const ConventionPair kMinusPlus{ZeroInf::ZeroInfMinus, InfZero::InfZeroPlus};
const ConventionPair kMinusMinus{ZeroInf::ZeroInfMinus, InfZero::InfMinusZero};

SimConfig config(double h, long paths, std::uint64_t seed = 1) {
    SimConfig c;
    c.step = h;
    c.horizon = 1.0;
    c.paths = paths;
    c.seed = seed;
    return c;
}

std::vector<GridPoint> grid_of(const std::vector<double>& xs, const std::vector<double>& ys,
                               const std::vector<double>& ts) {
    std::vector<GridPoint> g;
    for (double x : xs)
        for (double y : ys)
            for (double t : ts) g.push_back({x, y, t});
    return g;
}

const SubordinatorMechanism kPhi(atoms({{1, 0.5}, {2, 0.3}}), 0.2, 0);

}  // namespace

TEST_CASE("mc_laplace examples") {
    const auto drift = mc_laplace(SubordinatorSpec{SubordinatorMechanism({}, 1, 0)}, 0, 1, 1, config(1e-3, 1000),
                                  kPlusPlus);
    CHECK(drift.mean == std::exp(-1.0));
    CHECK(drift.se == 0.0);

    const auto still = mc_laplace(CbSpec{SpLpMechanism()}, 2, 1, 5, config(1e-2, 1000), kPlusPlus);
    CHECK(still.mean == Approx(0.1353353).epsilon(1e-7));
    CHECK(still.se == 0.0);

    const auto feller = mc_laplace(CbSpec{SpLpMechanism({}, 1, 0, 0)}, 1, 1, 1, config(1e-2, 100000), kPlusPlus);
    CHECK(std::fabs(feller.mean - 0.6065307) <= 3 * feller.se);
    CHECK(feller.se <= 0.5 / std::sqrt(100000.0));
    CHECK(feller.frac_zero + feller.frac_inf <= 1.0);
    CHECK(feller.frac_zero > 0.0);
}

TEST_CASE("summarize") {
    const std::vector<PathState> st{{0.0}, {kInf}, {1.0}, {2.0}};
    const auto e = summarize({1.0, 0.0, 0.5, 0.5}, st);
    CHECK(e.mean == 0.5);
    CHECK(e.se == Approx(std::sqrt(0.125 / 4)));
    CHECK(e.frac_zero == 0.25);
    CHECK(e.frac_inf == 0.25);
    CHECK(e.n == 4);
}

TEST_CASE("analytic transforms") {
    const ProcessSpec sub = SubordinatorSpec{kPhi};
    const ProcessSpec dual = KilledConstantSpec{kPhi};
    for (double x : {0.0, 1.0, 2.0})
        for (double y : {0.5, 1.0, 2.0})
            for (double t : {0.5, 1.0}) {
                const double want = std::exp(-x * y - t * kPhi(y));
                CHECK(analytic_transform(sub, x, y, t, kPlusPlus, true) == Approx(want).epsilon(1e-14));
                CHECK(analytic_transform(dual, y, x, t, kPlusPlus, false) == Approx(want).epsilon(1e-14));
            }
    // CB against the flow, CBI against cbi_laplace
    const SpLpMechanism feller({}, 1, 0, 0);
    CHECK(analytic_transform(CbSpec{feller}, 2, 1, 1, kPlusPlus, true) == Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(analytic_transform(DeterministicFlowSpec{feller}, 1, 2, 1, kPlusPlus, false) ==
          Approx(std::exp(-1.0)).epsilon(1e-9));
    const SubordinatorMechanism imm({}, 1, 0);
    const ProcessSpec cbi = CbciSpec{SpLpMechanism({}, 0, 1, 0), NotUpMechanism(), imm};
    CHECK(analytic_transform(cbi, 0, 1, 1, kPlusPlus, true) == Approx(0.1793741).epsilon(1e-6));
    CHECK(analytic_transform(KilledFlowSpec{SpLpMechanism({}, 0, 1, 0), imm}, 1, 0, 1, kPlusPlus, false) ==
          Approx(0.1793741).epsilon(1e-6));
    // boundary arguments through the conventions
    CHECK(analytic_transform(CbSpec{feller}, 1, kInf, 1, kPlusPlus, true) == 0.0);
    CHECK_THROWS_AS(analytic_transform(CbSpec{feller}, 1, kInf, 1, kMinusMinus, true), ContractError);
    CHECK(analytic_transform(CbSpec{feller}, kInf, 0, 1, kPlusPlus, true) == 0.0);
    CHECK(analytic_transform(CbSpec{feller}, kInf, 0, 1, kMinusMinus, true) == 1.0);
    const SubordinatorMechanism killed({}, 0.5, 1.0);
    CHECK(analytic_transform(SubordinatorSpec{killed}, 1, 0, 2, kPlusPlus, true) == Approx(std::exp(-2.0)));
    CHECK(analytic_transform(SubordinatorSpec{killed}, 1, 0, 2, kPlusMinus, true) == 1.0);
    CHECK(analytic_transform(KilledConstantSpec{killed, true}, 0, 3, 2, kPlusPlus, false) == 1.0);
    CHECK_THROWS_AS(analytic_transform(CbcSpec{feller, NotUpMechanism({}, 1, 0)}, 1, 1, 1, kPlusPlus, true),
                    ContractError);
    CHECK(has_analytic_transform(cbi));
    CHECK_FALSE(has_analytic_transform(CbciSpec{feller, NotUpMechanism({}, 1, 0), imm}));
}

TEST_CASE("duality_gap examples") {
    const ProcessSpec x = SubordinatorSpec{kPhi};
    const ProcessSpec y = KilledConstantSpec{kPhi};
    const auto g = grid_of({0, 1, 2}, {0.5, 1, 2}, {0.5, 1});

    const auto exact = duality_gap(x, y, g, config(1e-3, 10), kPlusPlus, true, true);
    for (const auto& r : exact.rows) CHECK(std::fabs(r.gap) <= 1e-14);
    CHECK(exact.worst_abs_z == 0.0);

    const auto mc = duality_gap(x, y, g, config(1e-3, 50000), kPlusPlus, false, true);
    CHECK(mc.rows.size() == 18);
    CHECK(mc.worst_abs_z <= 3.0);
    const auto both = duality_gap(x, y, g, config(1e-3, 50000), kPlusPlus);
    CHECK(both.worst_abs_z <= 3.0);

    const auto zero = duality_gap(CbSpec{SpLpMechanism()}, DeterministicFlowSpec{SpLpMechanism()},
                                  grid_of({0.5, 1, 3}, {0.2, 1}, {1, 4}), config(1e-2, 100), kPlusPlus);
    for (const auto& r : zero.rows) CHECK(r.gap == 0.0);

    const SpLpMechanism lin({}, 0, -1, 0);
    const NotUpMechanism sq({}, 1, 0);
    const auto cbc = duality_gap(CbcSpec{lin, sq}, DiffusionDualSpec{sq, lin}, grid_of({1}, {1}, {0.5, 1}),
                                 config(5e-3, 20000), kPlusPlus);
    CHECK(cbc.worst_abs_z <= 3.0);

    CHECK_THROWS_AS(duality_gap(CbSpec{lin}, KilledConstantSpec{kPhi}, g, config(1e-2, 10), kPlusPlus),
                    ContractError);
    CHECK_THROWS_AS(duality_gap(CbSpec{lin}, DeterministicFlowSpec{SpLpMechanism({}, 1, 0, 0)}, g,
                                config(1e-2, 10), kPlusPlus),
                    ContractError);
    CHECK_THROWS_AS(duality_gap(CbcSpec{lin, sq}, DiffusionDualSpec{sq, lin}, g, config(1e-2, 10), kPlusPlus, true),
                    ContractError);
}

TEST_CASE("recognized pairings") {
    const SpLpMechanism psi(atoms({{0.5, 1}}), 0.5, 0.1, 0);
    const NotUpMechanism sigma({}, 1, 0);
    const SubordinatorMechanism phi(atoms({{1, 1}}), 0.1, 0);
    const EnvMechanism kappa(atoms({{1, 0.5}}), 0, 0, 0);
    CHECK(is_dual_pair(CbSpec{psi}, DeterministicFlowSpec{psi}));
    CHECK(is_dual_pair(DeterministicFlowSpec{psi}, CbSpec{psi}));
    CHECK(is_dual_pair(SubordinatorSpec{phi}, KilledConstantSpec{phi, true}));
    CHECK(is_dual_pair(CbciSpec{psi, sigma, phi}, CbciDualSpec{sigma, psi, phi}));
    CHECK(is_dual_pair(CbciSpec{psi, NotUpMechanism(), phi}, KilledFlowSpec{psi, phi}));
    CHECK_FALSE(is_dual_pair(CbciSpec{psi, sigma, phi}, KilledFlowSpec{psi, phi}));
    CHECK(is_dual_pair(CbreSpec{psi, kappa}, CbreDualSpec{psi, kappa}));
    CHECK_FALSE(is_dual_pair(CbreSpec{psi, kappa}, CbreSpec{psi, kappa}));
    const DecomposableSpec d{{SigmaPair{NotUpMechanism(atoms({{1, 1}}), 0, 0), NotUpMechanism(atoms({{0.5, 1}}), 0, 0)}},
                             {PhiPair{SubordinatorMechanism(atoms({{1, 1}}), 0, 0),
                                      SubordinatorMechanism(atoms({{1, 0.5}}), 0, 0)}}};
    CHECK(is_dual_pair(d, hat_swap(d)));
    CHECK_FALSE(is_dual_pair(d, d));
}

TEST_CASE("transposed harness gives identical z") {
    const SpLpMechanism lin({}, 0, -1, 0);
    const NotUpMechanism sq({}, 1, 0);
    const ProcessSpec x = CbcSpec{lin, sq}, y = DiffusionDualSpec{sq, lin};
    const auto g = grid_of({0.5, 1}, {1, 2}, {0.5});
    std::vector<GridPoint> gt;
    for (const auto& p : g) gt.push_back({p.y, p.x, p.t});
    const auto a = duality_gap(x, y, g, config(1e-2, 4000), kPlusMinus);
    const auto b = duality_gap(y, x, gt, config(1e-2, 4000), transposed(kPlusMinus));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::fabs(a.rows[i].z) == std::fabs(b.rows[i].z));
    CHECK(a.worst_abs_z == b.worst_abs_z);
}

TEST_CASE("Laplace estimates are monotone under shared streams") {
    const ProcessSpec spec = CbSpec{SpLpMechanism(atoms({{0.5, 1}, {2, 0.3}}), 0.5, 0, 0)};
    const SimConfig c = config(1e-2, 5000);
    double prev = 1.0;
    for (double x0 : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        const double m = mc_laplace(spec, x0, 1.0, 1.0, c, kPlusPlus).mean;
        CHECK(m <= prev);
        prev = m;
    }
    prev = 1.0;
    for (double y : {0.0, 0.25, 1.0, 3.0, kInf}) {
        const double m = mc_laplace(spec, 1.0, y, 1.0, c, kPlusPlus).mean;
        CHECK(m <= prev);
        prev = m;
    }
}

TEST_CASE("boundary identities on the killed subordinator pair") {
    const SubordinatorMechanism phi(atoms({{1, 0.5}}), 0.3, 0.4);
    const ProcessSpec x = SubordinatorSpec{phi};
    const ProcessSpec d1 = KilledConstantSpec{phi, false};
    const ProcessSpec d2 = KilledConstantSpec{phi, true};
    const std::vector<double> pts{0, 0.5, 1, 2, kInf};
    const auto g = grid_of(pts, pts, {0.7});
    auto holds = [&](const ProcessSpec& y, ConventionPair conv) {
        return duality_gap(x, y, g, config(1e-2, 10), conv, true, true).worst_abs_z == 0.0;
    };
    CHECK(holds(d1, kPlusPlus));
    CHECK_FALSE(holds(d1, kPlusMinus));
    CHECK_FALSE(holds(d1, kMinusPlus));
    CHECK_FALSE(holds(d1, kMinusMinus));
    CHECK(holds(d2, kPlusMinus));
    CHECK_FALSE(holds(d2, kPlusPlus));
    CHECK_FALSE(holds(d2, kMinusPlus));
    CHECK_FALSE(holds(d2, kMinusMinus));

    // E_0[e^{-X y}] = P^y(Y < inf) and P_x(X < inf) = E^0[e^{-x Y}]
    const SimConfig c = config(1e-2, 40000);
    for (double v : pts) {
        const double e0 = analytic_transform(x, 0, v, 0.7, kPlusPlus, true);
        const double alive = 1.0 - (std::isinf(v) ? 1.0 : -std::expm1(-0.7 * phi(v)));
        CHECK(std::fabs(e0 - alive) <= 1e-12);
        const double px = std::isinf(v) ? 0.0 : std::exp(-0.7 * phi.c());
        CHECK(std::fabs(analytic_transform(d1, 0, v, 0.7, kPlusPlus, false) - px) <= 1e-12);
        const auto mc = mc_laplace(x, 0, v, 0.7, c, kPlusPlus);
        const McEstimate exact{alive};
        CHECK(std::fabs(z_score(mc, exact)) <= 3.0);
    }
}

TEST_CASE("null experiment") {
    const auto rep = null_gap(CbSpec{SpLpMechanism({}, 1, 0, 0)}, grid_of({0.5, 1, 2}, {0.5, 1, 2}, {0.5, 1}),
                              config(1e-2, 4000), kPlusPlus);
    int bad = 0;
    for (const auto& r : rep.rows) bad += std::fabs(r.z) > 3.0;
    CHECK(bad <= 1);
    CHECK(rep.rows[0].left.mean != rep.rows[0].right.mean);
}

TEST_CASE("z_score") {
    CHECK(z_score(McEstimate{0.5}, McEstimate{0.5}) == 0.0);
    CHECK(z_score(McEstimate{0.5}, McEstimate{0.5 + 1e-13}) == 0.0);
    CHECK(std::isinf(z_score(McEstimate{0.6}, McEstimate{0.5})));
    CHECK(z_score(McEstimate{0.6, 0.03}, McEstimate{0.5, 0.04}) == Approx(2.0));
    CHECK(z_score(McEstimate{0.4, 0.03}, McEstimate{0.5, 0.04}) == Approx(-2.0));
}

TEST_CASE("report CSV") {
    const auto rep = duality_gap(SubordinatorSpec{kPhi}, KilledConstantSpec{kPhi}, {{1, kInf, 0.5}},
                                 config(1e-2, 10), kPlusPlus, true, true);
    std::ostringstream os;
    write_report_csv(os, rep);
    CHECK(os.str().rfind("x,y,t,left_mean,left_se,right_mean,right_se,gap,z\n1,inf,0.5,0,0,0,0,0,0\n", 0) == 0);
}

TEST_CASE("cm_check examples") {
    std::vector<std::pair<double, double>> ex, sq;
    for (int i = 0; i <= 10; ++i) {
        const double x = 0.5 * i;
        ex.emplace_back(x, std::exp(-x));
        sq.emplace_back(x, (1 + x) * (1 + x));
    }
    CHECK(cm_check(ex, 4, 0.0).pass);
    const auto bad = cm_check(sq, 4, 0.0);
    CHECK_FALSE(bad.pass);
    REQUIRE(bad.first_violation);
    CHECK(bad.first_violation->order == 1);
    CHECK(bad.first_violation->index == 0);

    // second differences of a concave decreasing function fail at k = 2
    std::vector<std::pair<double, double>> cap;
    for (int i = 0; i <= 10; ++i) cap.emplace_back(0.1 * i, 1 - 0.1 * i * 0.1 * i);
    const auto c2 = cm_check(cap, 3, 0.0);
    CHECK_FALSE(c2.pass);
    CHECK(c2.first_violation->order == 2);
    CHECK(cm_check(cap, 3, 1.0).pass);

    std::vector<std::pair<double, double>> mc;
    double worst = 0.0;
    const SimConfig c = config(1e-2, 20000);
    for (int i = 0; i <= 20; ++i) {
        const auto e = mc_laplace(CbSpec{SpLpMechanism({}, 1, 0, 0)}, 0.25 * i, 1, 1, c, kPlusPlus);
        mc.emplace_back(0.25 * i, e.mean);
        worst = std::max(worst, e.se);
    }
    CHECK(cm_check(mc, 4, 3 * worst).pass);

    CHECK_THROWS_AS(cm_check(ex, 0, 0.0), ValidationError);
    CHECK_THROWS_AS(cm_check({{0, 1}, {0, 1}}, 1, 0.0), ValidationError);
    CHECK_THROWS_AS(cm_check({{0, 1}, {1, 1}}, 2, 0.0), ValidationError);
}

TEST_CASE("generator finite differences") {
    const SpLpMechanism feller({}, 1, 0, 0);
    const auto rows = generator_fd_check(cb_symbol(feller), analytic_semigroup(CbSpec{feller}), 1, 1,
                                         {1e-1, 1e-2, 1e-3, 1e-4});
    CHECK(rows.back().symbol_value == Approx(0.3678794).epsilon(1e-7));
    CHECK(rows.back().abs_gap <= 1e-3);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].abs_gap < rows[i - 1].abs_gap);

    const auto flat = generator_fd_check(cb_symbol(SpLpMechanism()), analytic_semigroup(CbSpec{SpLpMechanism()}), 1,
                                         1, {1e-4});
    CHECK(flat[0].fd_value == 0.0);
    CHECK(flat[0].symbol_value == 0.0);

    const SubordinatorMechanism drift({}, 1, 0);
    const auto sub = generator_fd_check(subordinator_symbol(drift), analytic_semigroup(SubordinatorSpec{drift}), 0, 2,
                                        {1e-2, 1e-4});
    CHECK(sub.back().symbol_value == Approx(-2.0));
    CHECK(sub.back().abs_gap <= 1e-3);

    CHECK_THROWS_AS(generator_fd_check(cb_symbol(feller), analytic_semigroup(CbSpec{feller}), 1, 1, {1e-3, 1e-2}),
                    ValidationError);
    CHECK_THROWS_AS(analytic_semigroup(CbcSpec{feller, NotUpMechanism({}, 1, 0)}), ContractError);
}

TEST_CASE("non-explosion screen") {
    const DecomposableSpec d{{SigmaPair{NotUpMechanism(atoms({{1, 1}}), 0, 0), NotUpMechanism(atoms({{0.5, 1}}), 0, 0)}},
                             {PhiPair{SubordinatorMechanism(atoms({{1, 1}}), 0, 0),
                                      SubordinatorMechanism(atoms({{1, 0.5}}), 0, 0)}}};
    CHECK(non_explosion_screen(d).non_explosive);
    CHECK(non_explosion_screen(hat_swap(d)).non_explosive);
    CHECK(non_explosion_screen(CbSpec{SpLpMechanism({}, 1, 0, 0)}).non_explosive);
    const auto killed = non_explosion_screen(CbSpec{SpLpMechanism({}, 1, 0, 0.5)});
    CHECK_FALSE(killed.non_explosive);
    CHECK_FALSE(killed.reason.empty());
    CHECK_FALSE(non_explosion_screen(KilledConstantSpec{SubordinatorMechanism({}, 1, 0)}).non_explosive);
    CHECK(non_explosion_screen(DiffusionDualSpec{NotUpMechanism({}, 1, 0), SpLpMechanism()}).non_explosive);
}
