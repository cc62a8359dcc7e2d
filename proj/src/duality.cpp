#include "lapdual/duality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>

namespace lapdual {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const char* msg) {
    if (!ok) throw ValidationError(msg);
}

// Start values at or below this are integrated from the flow floor.
constexpr double kFlowFloor = FlowOptions{}.positivity_floor;

constexpr std::uint64_t kSecondStream = 0x9e3779b97f4a7c15ULL;

// Terminal law on [0, inf]: either finitely many atoms, or a Laplace
// transform on (0, inf) with the masses at the two boundaries.
struct Law {
    std::vector<std::pair<double, double>> atoms;  // (weight, value)
    std::function<double(double)> interior;        // E[e^{-aV}; V < inf]
    double p_inf = 0.0;
    std::optional<double> p_zero;
};

Law point(double v) { return Law{{{1.0, v}}, {}, 0.0, std::nullopt}; }

double score(const Law& law, double arg, ConventionPair conv, bool process_first) {
    auto s = [&](double v) { return process_first ? exp_conv(v, arg, conv) : exp_conv(arg, v, conv); };
    if (!law.atoms.empty()) {
        double total = 0.0;
        for (const auto& [w, v] : law.atoms)
            if (w > 0.0) total += w * s(v);
        return total;
    }
    if (arg > 0.0 && std::isfinite(arg)) return law.interior(arg);
    if (arg == 0.0) return (1.0 - law.p_inf) + law.p_inf * s(kInf);
    const double at_zero = s(0.0);
    if (at_zero == 0.0) return 0.0;
    if (!law.p_zero) throw ContractError("analytic transform: probability of the state 0 is not available");
    return *law.p_zero * at_zero;
}

double flow_value(const SpLpMechanism& psi, double y, double t) {
    if (std::isinf(y) || t == 0.0) return y;
    if (y == 0.0) {
        if (psi.c() == 0.0) return 0.0;
        y = kFlowFloor;
    }
    return cb_flow(psi, y, t).u;
}

Law law_of(const ProcessSpec& spec, double start, double t) {
    return std::visit(
        overloaded{
            [&](const SubordinatorSpec& s) -> Law {
                if (std::isinf(start)) return point(kInf);
                const SubordinatorMechanism phi = s.phi;
                Law law;
                law.interior = [phi, start, t](double a) { return std::exp(-start * a - t * phi(a)); };
                law.p_inf = -std::expm1(-phi.c() * t);
                law.p_zero = start == 0.0 ? std::exp(-t * phi(kInf)) : 0.0;
                return law;
            },
            [&](const KilledConstantSpec& s) -> Law {
                if (std::isinf(start)) return point(kInf);
                if (s.zero_absorbing && start == 0.0) return point(0.0);
                const double w = std::exp(-t * s.phi(start));
                return Law{{{w, start}, {1.0 - w, kInf}}, {}, 0.0, std::nullopt};
            },
            [&](const CbSpec& s) -> Law {
                if (std::isinf(start)) return point(kInf);
                if (start == 0.0) return point(0.0);
                const SpLpMechanism psi = s.psi;
                Law law;
                law.interior = [psi, start, t](double a) {
                    const double u = flow_value(psi, a, t);
                    return std::isinf(u) ? 0.0 : std::exp(-start * u);
                };
                law.p_inf = -std::expm1(-start * flow_value(psi, 0.0, t));
                return law;
            },
            [&](const CbciSpec& s) -> Law {
                if (!s.sigma.is_zero()) throw ContractError("analytic transform: cbci needs a zero collision mechanism");
                if (std::isinf(start)) return point(kInf);
                const SpLpMechanism psi = s.psi;
                const SubordinatorMechanism phi = s.phi;
                Law law;
                law.interior = [psi, phi, start, t](double a) {
                    return t == 0.0 ? std::exp(-start * a) : cbi_laplace(psi, phi, start, a, t);
                };
                if (t > 0.0) {
                    const FlowResult r = cbi_flow(psi, phi, kFlowFloor, t);
                    const double u0 = psi.c() == 0.0 ? 0.0 : r.u;
                    law.p_inf = -std::expm1(-start * u0 - r.phi_integral);
                }
                return law;
            },
            [&](const DeterministicFlowSpec& s) -> Law { return point(flow_value(s.psi, start, t)); },
            [&](const KilledFlowSpec& s) -> Law {
                if (std::isinf(start)) return point(kInf);
                if (t == 0.0) return point(start);
                if (start == 0.0 && s.psi.c() == 0.0) {
                    const double w = std::exp(-t * s.phi.c());
                    return Law{{{w, 0.0}, {1.0 - w, kInf}}, {}, 0.0, std::nullopt};
                }
                const FlowResult r = cbi_flow(s.psi, s.phi, start == 0.0 ? kFlowFloor : start, t);
                return Law{{{r.killed_weight, r.u}, {1.0 - r.killed_weight, kInf}}, {}, 0.0, std::nullopt};
            },
            [&](const auto&) -> Law {
                throw ContractError("analytic transform: no closed form for " + std::string(kind_name(spec)));
            },
        },
        spec);
}

std::string label(const ProcessSpec& spec) { return std::string(kind_name(spec)); }

// Estimates for one side, one per grid row.
std::vector<McEstimate> side(const ProcessSpec& spec, const std::vector<GridPoint>& grid, bool x_side,
                             const SimConfig& cfg, ConventionPair conv, bool analytic, std::uint64_t tag) {
    std::vector<McEstimate> out(grid.size());
    auto start_of = [&](const GridPoint& g) { return x_side ? g.x : g.y; };
    auto arg_of = [&](const GridPoint& g) { return x_side ? g.y : g.x; };
    if (analytic) {
        for (std::size_t r = 0; r < grid.size(); ++r)
            out[r].mean = analytic_transform(spec, start_of(grid[r]), arg_of(grid[r]), grid[r].t, conv, x_side);
        return out;
    }
    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < grid.size(); ++r) groups[start_of(grid[r])].push_back(r);
    for (const auto& [start, rows] : groups) {
        std::vector<double> times;
        for (std::size_t r : rows) times.push_back(grid[r].t);
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        const auto states = run_paths_at(spec, start, cfg, times, tag);
        std::vector<double> scores;
        for (std::size_t r : rows) {
            const auto k = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), grid[r].t) -
                                                    times.begin());
            const auto& at = states[k];
            const double arg = arg_of(grid[r]);
            scores.resize(at.size());
            for (std::size_t i = 0; i < at.size(); ++i)
                scores[i] = x_side ? exp_conv(at[i].value, arg, conv) : exp_conv(arg, at[i].value, conv);
            out[r] = summarize(scores, at);
        }
    }
    return out;
}

void check_grid(const std::vector<GridPoint>& grid) {
    require(!grid.empty(), "duality: empty grid");
    for (const auto& g : grid) {
        require(g.x >= 0.0 && g.y >= 0.0, "duality: grid x and y must be in [0, inf]");
        require(std::isfinite(g.t) && g.t >= 0.0, "duality: grid t must be finite and nonnegative");
    }
}

DualityReport assemble(const std::vector<GridPoint>& grid, std::vector<McEstimate> left,
                       std::vector<McEstimate> right, ConventionPair conv) {
    DualityReport rep;
    rep.conv = conv;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        DualityRow row{grid[r].x, grid[r].y, grid[r].t, left[r], right[r], left[r].mean - right[r].mean, 0.0};
        row.z = z_score(row.left, row.right);
        rep.worst_abs_z = std::max(rep.worst_abs_z, std::fabs(row.z));
        rep.rows.push_back(row);
    }
    return rep;
}

void put(std::ostream& out, double v) {
    if (std::isinf(v)) {
        out << (v > 0 ? "inf" : "-inf");
        return;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

}  // namespace

McEstimate summarize(const std::vector<double>& scores, const std::vector<PathState>& states) {
    McEstimate e;
    e.n = static_cast<long>(scores.size());
    if (scores.empty()) return e;
    const double n = static_cast<double>(scores.size());
    long zero = 0, inf = 0;
    for (const auto& s : states) {
        if (s.value == 0.0) ++zero;
        if (std::isinf(s.value)) ++inf;
    }
    e.frac_zero = zero / n;
    e.frac_inf = inf / n;
    if (std::all_of(scores.begin(), scores.end(), [&](double v) { return v == scores.front(); })) {
        e.mean = scores.front();
        return e;
    }
    double sum = 0.0;
    for (double v : scores) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : scores) ss += (v - mean) * (v - mean);
    e.mean = std::clamp(mean, 0.0, 1.0);
    e.se = std::sqrt(ss / n / n);
    return e;
}

McEstimate mc_laplace(const ProcessSpec& spec, double x0, double y, double t, const SimConfig& cfg,
                      ConventionPair conv) {
    require(y >= 0.0, "mc_laplace: y must be in [0, inf]");
    const auto states = run_paths_at(spec, x0, cfg, {t}, fingerprint(spec)).front();
    std::vector<double> scores(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) scores[i] = exp_conv(states[i].value, y, conv);
    return summarize(scores, states);
}

bool has_analytic_transform(const ProcessSpec& spec) {
    return std::visit(overloaded{
                          [](const SubordinatorSpec&) { return true; },
                          [](const KilledConstantSpec&) { return true; },
                          [](const CbSpec&) { return true; },
                          [](const DeterministicFlowSpec&) { return true; },
                          [](const KilledFlowSpec&) { return true; },
                          [](const CbciSpec& s) { return s.sigma.is_zero(); },
                          [](const auto&) { return false; },
                      },
                      spec);
}

double analytic_transform(const ProcessSpec& spec, double start, double arg, double t, ConventionPair conv,
                          bool process_first) {
    validate_spec(spec);
    require(start >= 0.0 && arg >= 0.0, "analytic transform: arguments must be in [0, inf]");
    require(std::isfinite(t) && t >= 0.0, "analytic transform: t must be finite and nonnegative");
    return score(law_of(spec, start, t), arg, conv, process_first);
}

bool is_dual_pair(const ProcessSpec& spec_x, const ProcessSpec& spec_y) {
    auto one_way = [](const ProcessSpec& a, const ProcessSpec& b) {
        return std::visit(
            overloaded{
                [&](const CbSpec& s) {
                    const auto* d = std::get_if<DeterministicFlowSpec>(&b);
                    return d && d->psi == s.psi;
                },
                [&](const SubordinatorSpec& s) {
                    const auto* d = std::get_if<KilledConstantSpec>(&b);
                    return d && d->phi == s.phi;
                },
                [&](const CbcSpec& s) {
                    const auto* d = std::get_if<DiffusionDualSpec>(&b);
                    return d && d->psi == s.psi && d->sigma == s.sigma;
                },
                [&](const CbciSpec& s) {
                    if (const auto* d = std::get_if<CbciDualSpec>(&b))
                        return d->psi == s.psi && d->sigma == s.sigma && d->phi == s.phi;
                    const auto* k = std::get_if<KilledFlowSpec>(&b);
                    return k && s.sigma.is_zero() && k->psi == s.psi && k->phi == s.phi;
                },
                [&](const CbreSpec& s) {
                    const auto* d = std::get_if<CbreDualSpec>(&b);
                    return d && d->psi == s.psi && d->kappa == s.kappa;
                },
                [&](const DecomposableSpec& s) {
                    const auto* d = std::get_if<DecomposableSpec>(&b);
                    if (!d) return false;
                    try {
                        return hat_swap(s) == *d;
                    } catch (const ValidationError&) {
                        return false;
                    }
                },
                [](const auto&) { return false; },
            },
            a);
    };
    return one_way(spec_x, spec_y) || one_way(spec_y, spec_x);
}

double z_score(const McEstimate& left, const McEstimate& right) {
    const double gap = left.mean - right.mean;
    const double se = std::hypot(left.se, right.se);
    if (se > 0.0) return gap / se;
    if (std::fabs(gap) <= 1e-12) return 0.0;
    return std::copysign(kInf, gap);
}

DualityReport duality_gap(const ProcessSpec& spec_x, const ProcessSpec& spec_y, const std::vector<GridPoint>& grid,
                          const SimConfig& cfg, ConventionPair conv, bool analytic_x, bool analytic_y) {
    if (!is_dual_pair(spec_x, spec_y))
        throw ContractError("duality: " + label(spec_x) + " and " + label(spec_y) + " are not a recognized dual pair");
    validate_spec(spec_x);
    validate_spec(spec_y);
    check_grid(grid);
    if (analytic_x && !has_analytic_transform(spec_x))
        throw ContractError("duality: no closed form for " + label(spec_x));
    if (analytic_y && !has_analytic_transform(spec_y))
        throw ContractError("duality: no closed form for " + label(spec_y));
    if (!analytic_x || !analytic_y) cfg.validate();
    const std::uint64_t tag_x = fingerprint(spec_x);
    std::uint64_t tag_y = fingerprint(spec_y);
    if (tag_y == tag_x) tag_y = mix64(tag_y ^ kSecondStream);
    auto left = side(spec_x, grid, true, cfg, conv, analytic_x, tag_x);
    auto right = side(spec_y, grid, false, cfg, conv, analytic_y, tag_y);
    return assemble(grid, std::move(left), std::move(right), conv);
}

DualityReport null_gap(const ProcessSpec& spec, const std::vector<GridPoint>& grid, const SimConfig& cfg,
                       ConventionPair conv) {
    validate_spec(spec);
    check_grid(grid);
    cfg.validate();
    const std::uint64_t tag = fingerprint(spec);
    auto left = side(spec, grid, true, cfg, conv, false, tag);
    auto right = side(spec, grid, true, cfg, conv, false, mix64(tag ^ kSecondStream));
    return assemble(grid, std::move(left), std::move(right), conv);
}

void write_report_csv(std::ostream& out, const DualityReport& report) {
    out << "x,y,t,left_mean,left_se,right_mean,right_se,gap,z\n";
    for (const auto& r : report.rows) {
        for (double v : {r.x, r.y, r.t, r.left.mean, r.left.se, r.right.mean, r.right.se, r.gap}) {
            put(out, v);
            out << ',';
        }
        put(out, r.z);
        out << '\n';
    }
}

CmResult cm_check(const std::vector<std::pair<double, double>>& samples, int order, double noise) {
    require(order >= 1, "cm_check: order must be at least 1");
    require(samples.size() >= static_cast<std::size_t>(order) + 1, "cm_check: need at least order + 1 samples");
    require(std::isfinite(noise) && noise >= 0.0, "cm_check: noise must be finite and nonnegative");
    for (std::size_t i = 1; i < samples.size(); ++i)
        require(samples[i].first > samples[i - 1].first, "cm_check: x must be strictly increasing");
    std::vector<double> d;
    for (const auto& s : samples) d.push_back(s.second);
    CmResult res;
    double sign = 1.0;
    for (int k = 1; k <= order; ++k) {
        sign = -sign;
        for (std::size_t i = 0; i + 1 < d.size(); ++i) d[i] = d[i + 1] - d[i];
        d.pop_back();
        const double tol = noise * std::ldexp(1.0, k);
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (sign * d[i] < -tol) {
                res.pass = false;
                res.first_violation = CmViolation{k, i, sign * d[i], tol};
                return res;
            }
        }
    }
    return res;
}

Semigroup analytic_semigroup(const ProcessSpec& spec) {
    if (!has_analytic_transform(spec)) throw ContractError("analytic semigroup: no closed form for " + label(spec));
    validate_spec(spec);
    return [spec](double x, double y, double h) { return analytic_transform(spec, x, y, h, ConventionPair{}, true); };
}

std::vector<FdRow> generator_fd_check(const LdsSymbol& s, const Semigroup& semigroup, double x, double y,
                                      const std::vector<double>& h_list) {
    require(std::isfinite(x) && x >= 0.0, "generator_fd_check: x must be finite and nonnegative");
    require(std::isfinite(y) && y > 0.0, "generator_fd_check: y must be finite and positive");
    require(!h_list.empty(), "generator_fd_check: empty step list");
    for (std::size_t i = 0; i < h_list.size(); ++i) {
        require(h_list[i] > 0.0, "generator_fd_check: steps must be positive");
        require(i == 0 || h_list[i] < h_list[i - 1], "generator_fd_check: steps must be decreasing");
    }
    const double symbol = pregenerator_apply(s, x, y);
    const double base = std::exp(-x * y);
    std::vector<FdRow> out;
    for (double h : h_list) {
        const double fd = (semigroup(x, y, h) - base) / h;
        out.push_back({h, fd, symbol, std::fabs(fd - symbol)});
    }
    return out;
}

ExplosionScreen non_explosion_screen(const ProcessSpec& spec) {
    auto branching = [](const SpLpMechanism& psi) -> ExplosionScreen {
        if (psi.c() != 0.0) return {false, "branching mechanism kills at rate c > 0"};
        if (!std::isfinite(derivative_at_zero(psi))) return {false, "branching mechanism has Psi'(0) = -inf"};
        return {};
    };
    auto killing = [](const SubordinatorMechanism& phi) -> ExplosionScreen {
        if (!phi.is_zero()) return {false, "killing rate Phi is not identically zero"};
        return {};
    };
    return std::visit(
        overloaded{
            [&](const CbSpec& s) { return branching(s.psi); },
            [&](const CbcSpec& s) { return branching(s.psi); },
            [&](const CbreSpec& s) { return branching(s.psi); },
            [&](const CbciSpec& s) -> ExplosionScreen {
                if (s.phi.c() != 0.0) return {false, "immigration mechanism kills at rate c > 0"};
                return branching(s.psi);
            },
            [&](const SubordinatorSpec& s) -> ExplosionScreen {
                if (s.phi.c() != 0.0) return {false, "subordinator kills at rate c > 0"};
                return {};
            },
            [&](const KilledConstantSpec& s) { return killing(s.phi); },
            [&](const KilledFlowSpec& s) { return killing(s.phi); },
            [&](const CbciDualSpec& s) { return killing(s.phi); },
            [&](const DecomposableSpec& s) -> ExplosionScreen {
                for (const auto& p : s.phi_pairs) {
                    if (p.rate.c() != 0.0 || p.law.c() != 0.0)
                        return {false, "decomposable Phi pair has a killing term"};
                    if (!std::isfinite(derivative_at_zero(p.rate)) || !std::isfinite(derivative_at_zero(p.law)))
                        return {false, "decomposable Phi pair has an infinite derivative at 0"};
                }
                return {};
            },
            [](const auto&) { return ExplosionScreen{}; },
        },
        spec);
}

}  // namespace lapdual
