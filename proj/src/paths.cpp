#include "lapdual/paths.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

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

bool atomic_only(const JumpMeasure& m) { return !m.stable.has_value(); }

bool pure_jump_atomic(const NotUpMechanism& m) { return m.is_pure_jump() && atomic_only(m.measure()); }
bool pure_jump_atomic(const SubordinatorMechanism& m) {
    return m.d() == 0.0 && m.c() == 0.0 && atomic_only(m.measure());
}

// ---- hashing ----

struct Hasher {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    void put(std::uint64_t v) { h = mix64(h ^ v) + 0x9e3779b97f4a7c15ULL; }
    void put(double v) { put(std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v)); }
    void put(const JumpMeasure& m) {
        put(static_cast<std::uint64_t>(m.atoms.size()));
        for (const Atom& a : m.atoms) {
            put(a.location);
            put(a.mass);
        }
        put(static_cast<std::uint64_t>(m.stable.has_value()));
        if (m.stable) {
            put(m.stable->alpha);
            put(m.stable->scale);
        }
    }
    void put(const SpLpMechanism& m) {
        put(m.measure());
        put(m.a());
        put(m.b());
        put(m.c());
    }
    void put(const SubordinatorMechanism& m) {
        put(m.measure());
        put(m.d());
        put(m.c());
    }
    void put(const NotUpMechanism& m) {
        put(m.measure());
        put(m.a());
        put(m.d());
    }
    void put(const EnvMechanism& m) {
        put(m.measure());
        put(m.a());
        put(m.b());
        put(m.c());
    }
};

// ---- jump sampling ----

enum class Comp { None, UpToOne, All };

// Atoms plus the stable part on [eps, 1]; below eps only the mean survives
// (uncompensated) or nothing at all (compensated).
struct Jumps {
    std::vector<Atom> atoms;
    double comp_mean = 0.0;
    double small_drift = 0.0;
    double stable_rate = 0.0;
    double alpha = 1.0;
    double eps_pow = 1.0;

    Jumps() = default;
    Jumps(const JumpMeasure& m, Comp comp, double eps) : atoms(m.atoms) {
        for (const Atom& a : atoms)
            if (comp == Comp::All || (comp == Comp::UpToOne && std::fabs(a.location) <= 1.0))
                comp_mean += a.location * a.mass;
        if (m.stable) {
            alpha = m.stable->alpha;
            eps_pow = std::pow(eps, -alpha);
            stable_rate = m.stable_mass_above(eps);
            if (comp == Comp::None)
                small_drift = m.stable_mean_below(eps);
            else
                comp_mean += m.stable_mean_above(eps);
        }
    }

    bool empty() const { return atoms.empty() && stable_rate == 0.0 && small_drift == 0.0; }

    /// Sum of the jumps over a window of intensity `rate` minus compensation.
    double draw(double rate, Philox& rng) const {
        double s = 0.0;
        for (const Atom& a : atoms) {
            const auto n = rng.poisson(rate * a.mass);
            if (n) s += static_cast<double>(n) * a.location;
        }
        if (stable_rate > 0.0) {
            const auto n = rng.poisson(rate * stable_rate);
            for (std::uint64_t k = 0; k < n; ++k)
                s += std::pow(eps_pow - rng.uniform() * (eps_pow - 1.0), -1.0 / alpha);
        }
        return s + rate * (small_drift - comp_mean);
    }
};

template <class Spec>
constexpr bool is_diffusive_dual =
    std::is_same_v<Spec, DiffusionDualSpec> || std::is_same_v<Spec, CbciDualSpec> || std::is_same_v<Spec, CbreDualSpec>;

}  // namespace

// ---- spec helpers ----

std::string_view kind_name(const ProcessSpec& spec) {
    return std::visit(overloaded{
                          [](const CbSpec&) { return std::string_view("cb"); },
                          [](const SubordinatorSpec&) { return std::string_view("subordinator"); },
                          [](const KilledConstantSpec&) { return std::string_view("killed_constant"); },
                          [](const DeterministicFlowSpec&) { return std::string_view("deterministic_flow"); },
                          [](const KilledFlowSpec&) { return std::string_view("killed_flow"); },
                          [](const CbcSpec&) { return std::string_view("cbc"); },
                          [](const DiffusionDualSpec&) { return std::string_view("diffusion_dual"); },
                          [](const CbciSpec&) { return std::string_view("cbci"); },
                          [](const CbciDualSpec&) { return std::string_view("cbci_dual"); },
                          [](const CbreSpec&) { return std::string_view("cbre"); },
                          [](const CbreDualSpec&) { return std::string_view("cbre_dual"); },
                          [](const DecomposableSpec&) { return std::string_view("decomposable"); },
                      },
                      spec);
}

namespace {

void validate_env(const EnvMechanism& kappa) {
    require(kappa.c() == 0.0, "cbre: environment exponent must have no killing term");
    require(!kappa.has_atom_at_minus_one(), "cbre: environment jumps of size -1 are not supported");
}

}  // namespace

void validate_spec(const ProcessSpec& spec) {
    std::visit(overloaded{
                   [](const CbreSpec& s) { validate_env(s.kappa); },
                   [](const CbreDualSpec& s) { validate_env(s.kappa); },
                   [](const DecomposableSpec& s) {
                       for (const auto& p : s.sigma_pairs)
                           require(pure_jump_atomic(p.law),
                                   "decomposable: sigma jump laws must be pure-jump with atoms only");
                       for (const auto& p : s.phi_pairs)
                           require(pure_jump_atomic(p.law),
                                   "decomposable: phi jump laws must be pure-jump with atoms only");
                   },
                   [](const auto&) {},
               },
               spec);
}

DecomposableSpec hat_swap(const DecomposableSpec& spec) {
    DecomposableSpec out;
    for (const auto& p : spec.sigma_pairs) {
        require(pure_jump_atomic(p.rate), "decomposable dual: sigma rates must be pure-jump with atoms only");
        out.sigma_pairs.push_back({p.law, p.rate});
    }
    for (const auto& p : spec.phi_pairs) {
        require(pure_jump_atomic(p.rate), "decomposable dual: phi rates must be pure-jump with atoms only");
        out.phi_pairs.push_back({p.law, p.rate});
    }
    return out;
}

LdsSymbol symbol_of(const ProcessSpec& spec) {
    return std::visit(
        overloaded{
            [](const CbSpec& s) { return cb_symbol(s.psi); },
            [](const SubordinatorSpec& s) { return subordinator_symbol(s.phi); },
            [](const KilledConstantSpec& s) { return dual_symbol(subordinator_symbol(s.phi)); },
            [](const DeterministicFlowSpec& s) { return dual_symbol(cb_symbol(s.psi)); },
            [](const KilledFlowSpec& s) { return dual_symbol(cbi_symbol(s.psi, s.phi)); },
            [](const CbcSpec& s) { return cbc_symbol(s.psi, s.sigma); },
            [](const DiffusionDualSpec& s) { return dual_symbol(cbc_symbol(s.psi, s.sigma)); },
            [](const CbciSpec& s) { return cbci_symbol(s.psi, s.sigma, s.phi); },
            [](const CbciDualSpec& s) { return dual_symbol(cbci_symbol(s.psi, s.sigma, s.phi)); },
            [](const CbreSpec& s) { return cbre_symbol(s.psi, s.kappa); },
            [](const CbreDualSpec& s) { return dual_symbol(cbre_symbol(s.psi, s.kappa)); },
            [](const DecomposableSpec& s) {
                LdsSymbol out;
                for (const auto& p : s.sigma_pairs) out = add(out, 1.0, simple_sigma_symbol(p.rate, p.law), 1.0);
                for (const auto& p : s.phi_pairs) out = add(out, 1.0, simple_phi_symbol(p.rate, p.law), 1.0);
                return out;
            },
        },
        spec);
}

std::uint64_t fingerprint(const ProcessSpec& spec) {
    Hasher h;
    h.put(static_cast<std::uint64_t>(spec.index()));
    std::visit(overloaded{
                   [&](const CbSpec& s) { h.put(s.psi); },
                   [&](const SubordinatorSpec& s) { h.put(s.phi); },
                   [&](const KilledConstantSpec& s) {
                       h.put(s.phi);
                       h.put(static_cast<std::uint64_t>(s.zero_absorbing));
                   },
                   [&](const DeterministicFlowSpec& s) { h.put(s.psi); },
                   [&](const KilledFlowSpec& s) {
                       h.put(s.psi);
                       h.put(s.phi);
                   },
                   [&](const CbcSpec& s) {
                       h.put(s.psi);
                       h.put(s.sigma);
                   },
                   [&](const DiffusionDualSpec& s) {
                       h.put(s.sigma);
                       h.put(s.psi);
                   },
                   [&](const CbciSpec& s) {
                       h.put(s.psi);
                       h.put(s.sigma);
                       h.put(s.phi);
                   },
                   [&](const CbciDualSpec& s) {
                       h.put(s.sigma);
                       h.put(s.psi);
                       h.put(s.phi);
                   },
                   [&](const CbreSpec& s) {
                       h.put(s.psi);
                       h.put(s.kappa);
                   },
                   [&](const CbreDualSpec& s) {
                       h.put(s.psi);
                       h.put(s.kappa);
                   },
                   [&](const DecomposableSpec& s) {
                       h.put(static_cast<std::uint64_t>(s.sigma_pairs.size()));
                       for (const auto& p : s.sigma_pairs) {
                           h.put(p.rate);
                           h.put(p.law);
                       }
                       h.put(static_cast<std::uint64_t>(s.phi_pairs.size()));
                       for (const auto& p : s.phi_pairs) {
                           h.put(p.rate);
                           h.put(p.law);
                       }
                   },
               },
               spec);
    return h.h;
}

void SimConfig::validate() const {
    require(std::isfinite(step) && step > 0.0, "sim: step must be positive");
    require(std::isfinite(horizon) && horizon > 0.0, "sim: horizon must be positive");
    require(step < horizon, "sim: step must be smaller than the horizon");
    require(paths > 0, "sim: paths must be positive");
    require(explosion_cap > 0.0, "sim: explosion_cap must be positive");
    require(small_jump_cut > 0.0 && small_jump_cut <= 1.0, "sim: small_jump_cut must lie in (0, 1]");
    require(!absorption_floor || (std::isfinite(*absorption_floor) && *absorption_floor >= 0.0),
            "sim: absorption_floor must be nonnegative");
    require(threads >= 0, "sim: threads must be nonnegative");
}

std::string_view status_name(PathStatus s) {
    switch (s) {
        case PathStatus::Alive: return "alive";
        case PathStatus::AbsorbedZero: return "zero";
        case PathStatus::AbsorbedInf: return "inf";
    }
    return "?";
}

// ---- stepper ----

struct Stepper::Impl {
    enum class Mode { Euler, Subordinator, KilledConstant, Flow };
    Mode mode = Mode::Euler;

    double cap = 1e12;
    double floor = 0.0;
    bool trap = false;            // 0 absorbs the dynamics
    double zero_kill_rate = 0.0;  // killing rate while sitting at 0

    // state-proportional branching
    bool branch = false;
    double br_a = 0, br_b = 0, br_c = 0;
    Jumps br_jumps;
    // collisions, rates x^2
    bool collide = false;
    double co_a = 0, co_d = 0;
    Jumps co_jumps;
    // immigration or subordinator increments
    bool immigrate = false;
    double im_d = 0, im_c = 0;
    Jumps im_jumps;
    // multiplicative environment
    bool env = false;
    double en_a = 0, en_b = 0;
    Jumps en_jumps;
    // diffusive duals
    std::optional<SpLpMechanism> dual_psi;
    std::optional<NotUpMechanism> dual_sigma;
    std::optional<SubordinatorMechanism> dual_kill;
    // decomposable
    std::vector<std::pair<NotUpMechanism, Jumps>> dec_sigma;
    std::vector<std::pair<SubordinatorMechanism, Jumps>> dec_phi;
    // exact kinds
    SubordinatorMechanism const_phi;
    SpLpMechanism flow_psi;
    std::optional<SubordinatorMechanism> flow_phi;
    FlowOptions fopt;

    void set_branch(const SpLpMechanism& psi, double eps) {
        branch = !psi.is_zero();
        br_a = psi.a();
        br_b = psi.b();
        br_c = psi.c();
        br_jumps = Jumps(psi.measure(), Comp::UpToOne, eps);
    }
    void set_collision(const NotUpMechanism& sigma, double eps) {
        collide = !sigma.is_zero();
        co_a = sigma.a();
        co_d = sigma.d();
        co_jumps = Jumps(sigma.measure(), Comp::All, eps);
    }
    void set_immigration(const SubordinatorMechanism& phi, double eps) {
        immigrate = !phi.is_zero();
        im_d = phi.d();
        im_c = phi.c();
        im_jumps = Jumps(phi.measure(), Comp::None, eps);
    }
    void set_env(const EnvMechanism& kappa, double eps) {
        env = !kappa.is_zero();
        en_a = kappa.a();
        en_b = kappa.b();
        en_jumps = Jumps(kappa.measure(), Comp::UpToOne, eps);
    }

    void finish(PathState& s, double v) const {
        if (s.kill_clock >= s.kill_threshold || !(v < cap)) {
            s.value = kInf;
            s.status = PathStatus::AbsorbedInf;
            return;
        }
        if (trap && v <= floor) {
            s.value = 0.0;
            if (zero_kill_rate == 0.0) s.status = PathStatus::AbsorbedZero;
            return;
        }
        s.value = std::max(v, 0.0);
    }

    void euler(PathState& s, double dt, Philox& rng) const {
        const double x = s.value;
        double dx = 0.0;
        double kill = 0.0;
        if (branch && x > 0.0) {
            if (br_a > 0.0) dx += std::sqrt(2.0 * br_a * x * dt) * rng.normal();
            dx += br_b * x * dt;
            if (!br_jumps.empty()) dx += br_jumps.draw(x * dt, rng);
            kill += br_c * x;
        }
        if (collide && x > 0.0) {
            if (co_a > 0.0) dx += std::sqrt(2.0 * co_a * dt) * x * rng.normal();
            dx -= co_d * x * x * dt;
            if (!co_jumps.empty()) dx += co_jumps.draw(x * x * dt, rng);
        }
        if (immigrate) {
            dx += im_d * dt;
            if (!im_jumps.empty()) dx += im_jumps.draw(dt, rng);
            kill += im_c;
        }
        if (env && x > 0.0) {
            double ds = en_b * dt;
            if (en_a > 0.0) ds += std::sqrt(2.0 * en_a * dt) * rng.normal();
            if (!en_jumps.empty()) ds += en_jumps.draw(dt, rng);
            dx += x * ds;
        }
        if (dual_sigma && x > 0.0) {
            const double v = (*dual_sigma)(x);
            if (v > 0.0) dx += std::sqrt(2.0 * v * dt) * rng.normal();
        }
        if (dual_psi) dx -= (*dual_psi)(x)*dt;
        if (dual_kill) kill += (*dual_kill)(x);
        for (const auto& [rate, law] : dec_sigma) {
            const double r = rate(x);
            if (r > 0.0) dx += law.draw(r * dt, rng);
        }
        for (const auto& [rate, law] : dec_phi) {
            const double r = rate(x);
            if (r > 0.0) dx += law.draw(r * dt, rng);
        }
        if (x == 0.0) kill = zero_kill_rate;
        s.kill_clock += kill * dt;
        finish(s, x + dx);
    }

    void flow(PathState& s, double dt) const {
        if (s.value == 0.0 && flow_psi.c() == 0.0) {
            s.kill_clock += zero_kill_rate * dt;
            finish(s, 0.0);
            return;
        }
        const double y = s.value == 0.0 ? fopt.positivity_floor : s.value;
        const FlowResult r = flow_phi ? cbi_flow(flow_psi, *flow_phi, y, dt, fopt) : cb_flow(flow_psi, y, dt, fopt);
        s.kill_clock += r.phi_integral;
        finish(s, r.blow_up ? kInf : r.u);
    }
};

Stepper::Stepper(const ProcessSpec& spec, const SimConfig& cfg) : impl_(std::make_unique<Impl>()) {
    validate_spec(spec);
    Impl& m = *impl_;
    const double eps = cfg.small_jump_cut;
    m.cap = cfg.explosion_cap;
    m.fopt.blow_up_cap = cfg.explosion_cap;
    double default_floor = 0.0;
    std::visit(overloaded{
                   [&](const CbSpec& s) {
                       m.set_branch(s.psi, eps);
                       m.trap = true;
                   },
                   [&](const SubordinatorSpec& s) {
                       m.mode = Impl::Mode::Subordinator;
                       m.set_immigration(s.phi, eps);
                   },
                   [&](const KilledConstantSpec& s) {
                       m.mode = Impl::Mode::KilledConstant;
                       m.const_phi = s.phi;
                       m.trap = s.zero_absorbing;
                   },
                   [&](const DeterministicFlowSpec& s) {
                       m.mode = Impl::Mode::Flow;
                       m.flow_psi = s.psi;
                       m.trap = s.psi.c() == 0.0;
                   },
                   [&](const KilledFlowSpec& s) {
                       m.mode = Impl::Mode::Flow;
                       m.flow_psi = s.psi;
                       m.flow_phi = s.phi;
                       m.trap = s.psi.c() == 0.0;
                       m.zero_kill_rate = s.phi.c();
                   },
                   [&](const CbcSpec& s) {
                       m.set_branch(s.psi, eps);
                       m.set_collision(s.sigma, eps);
                       m.trap = true;
                   },
                   [&](const DiffusionDualSpec& s) {
                       m.dual_sigma = s.sigma;
                       m.dual_psi = s.psi;
                       m.trap = s.psi.c() == 0.0;
                       default_floor = 1e-12;
                   },
                   [&](const CbciSpec& s) {
                       m.set_branch(s.psi, eps);
                       m.set_collision(s.sigma, eps);
                       m.set_immigration(s.phi, eps);
                       m.trap = s.phi.measure().empty() && s.phi.d() == 0.0;
                       m.zero_kill_rate = s.phi.c();
                   },
                   [&](const CbciDualSpec& s) {
                       m.dual_sigma = s.sigma;
                       m.dual_psi = s.psi;
                       m.dual_kill = s.phi;
                       m.trap = s.psi.c() == 0.0;
                       m.zero_kill_rate = s.phi.c();
                       default_floor = 1e-12;
                   },
                   [&](const CbreSpec& s) {
                       m.set_branch(s.psi, eps);
                       m.set_env(s.kappa, eps);
                       m.trap = true;
                   },
                   [&](const CbreDualSpec& s) {
                       m.dual_psi = s.psi;
                       m.set_env(s.kappa, eps);
                       m.trap = s.psi.c() == 0.0;
                       default_floor = 1e-12;
                   },
                   [&](const DecomposableSpec& s) {
                       bool at_zero = true;
                       for (const auto& p : s.sigma_pairs)
                           m.dec_sigma.emplace_back(p.rate, Jumps(p.law.measure(), Comp::All, eps));
                       for (const auto& p : s.phi_pairs) {
                           m.dec_phi.emplace_back(p.rate, Jumps(p.law.measure(), Comp::None, eps));
                           at_zero = at_zero && p.rate.c() == 0.0;
                       }
                       m.trap = at_zero;
                   },
               },
               spec);
    m.floor = cfg.absorption_floor.value_or(default_floor);
}

Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

bool Stepper::exact() const { return impl_->mode != Impl::Mode::Euler; }

PathState Stepper::start(double x0, Philox& rng) const {
    require(x0 >= 0.0, "simulation: starting value must be nonnegative");
    PathState s;
    s.kill_threshold = rng.exponential();
    s.value = x0;
    if (std::isinf(x0)) {
        s.status = PathStatus::AbsorbedInf;
    } else if (x0 == 0.0 && impl_->trap && impl_->zero_kill_rate == 0.0) {
        s.status = PathStatus::AbsorbedZero;
    }
    return s;
}

void Stepper::step(PathState& s, double dt, Philox& rng) const {
    if (s.status != PathStatus::Alive || !(dt > 0.0)) return;
    const Impl& m = *impl_;
    switch (m.mode) {
        case Impl::Mode::Euler: m.euler(s, dt, rng); break;
        case Impl::Mode::Subordinator: {
            double dx = m.im_d * dt;
            if (!m.im_jumps.empty()) dx += m.im_jumps.draw(dt, rng);
            s.kill_clock += m.im_c * dt;
            m.finish(s, s.value + dx);
            break;
        }
        case Impl::Mode::KilledConstant:
            s.kill_clock += m.const_phi(s.value) * dt;
            m.finish(s, s.value);
            break;
        case Impl::Mode::Flow: m.flow(s, dt); break;
    }
}

// ---- single-step wrappers ----

PathState step_cb(PathState s, const SpLpMechanism& psi, double h, Philox& rng, const SimConfig& cfg) {
    Stepper(CbSpec{psi}, cfg).step(s, h, rng);
    return s;
}

PathState step_cbc(PathState s, const SpLpMechanism& psi, const NotUpMechanism& sigma, double h, Philox& rng,
                   const SimConfig& cfg) {
    Stepper(CbcSpec{psi, sigma}, cfg).step(s, h, rng);
    return s;
}

PathState step_cbci(PathState s, const SpLpMechanism& psi, const NotUpMechanism& sigma,
                    const SubordinatorMechanism& phi, double h, Philox& rng, const SimConfig& cfg) {
    Stepper(CbciSpec{psi, sigma, phi}, cfg).step(s, h, rng);
    return s;
}

PathState step_cbre(PathState s, const SpLpMechanism& psi, const EnvMechanism& kappa, double h, Philox& rng,
                    const SimConfig& cfg) {
    Stepper(CbreSpec{psi, kappa}, cfg).step(s, h, rng);
    return s;
}

PathState step_decomposable(PathState s, const DecomposableSpec& spec, double h, Philox& rng, const SimConfig& cfg) {
    Stepper(spec, cfg).step(s, h, rng);
    return s;
}

// ---- path drivers ----

namespace {

// Advance s from t to target in steps of at most h (one step for exact kinds).
void advance(const Stepper& stepper, PathState& s, double& t, double target, double h, Philox& rng) {
    if (stepper.exact()) {
        stepper.step(s, target - t, rng);
        t = target;
        return;
    }
    while (t < target && s.status == PathStatus::Alive) {
        double dt = target - t;
        if (dt > h * (1.0 + 1e-9)) dt = h;
        stepper.step(s, dt, rng);
        t = (dt == target - t) ? target : t + dt;
    }
    t = target;
}

void trace(const Stepper& stepper, PathState& s, double horizon, double step, Philox& rng,
           std::vector<TrajectoryPoint>& out) {
    double t = 0.0;
    while (t < horizon && s.status == PathStatus::Alive) {
        const double remaining = horizon - t;
        const double dt = remaining > step * (1.0 + 1e-9) ? step : remaining;
        stepper.step(s, dt, rng);
        t = dt == remaining ? horizon : t + dt;
        out.push_back({t, s});
    }
}

void check_times(const std::vector<double>& times) {
    require(!times.empty(), "simulation: no observation times");
    for (std::size_t k = 0; k < times.size(); ++k) {
        require(std::isfinite(times[k]) && times[k] >= 0.0, "simulation: times must be finite and nonnegative");
        require(k == 0 || times[k] >= times[k - 1], "simulation: times must be sorted");
    }
}

template <class F>
void parallel_for(long n, int threads, F&& body) {
    int nt = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    nt = static_cast<int>(std::min<long>(nt, std::max(1L, n / 256)));
    if (nt <= 1) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    constexpr long kChunk = 512;
    auto worker = [&] {
        try {
            for (;;) {
                const long lo = next.fetch_add(kChunk);
                if (lo >= n) break;
                const long hi = std::min(n, lo + kChunk);
                for (long i = lo; i < hi; ++i) body(i);
            }
        } catch (...) {
            std::lock_guard lock(err_mu);
            if (!err) err = std::current_exception();
            next.store(n);
        }
    };
    std::vector<std::thread> pool;
    for (int k = 0; k < nt; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace

PathState simulate_path(const ProcessSpec& spec, double x0, const SimConfig& cfg, std::uint64_t tag,
                        std::uint64_t index, const PathObserver& observe) {
    cfg.validate();
    const Stepper stepper(spec, cfg);
    Philox rng = path_stream(cfg.seed, tag, index);
    PathState s = stepper.start(x0, rng);
    if (observe && !observe(0.0, s)) return s;
    double t = 0.0;
    while (t < cfg.horizon && s.status == PathStatus::Alive) {
        const double target = std::min(cfg.horizon, t + cfg.step);
        double tt = t;
        advance(stepper, s, tt, target, cfg.step, rng);
        t = target;
        if (observe && !observe(t, s)) break;
    }
    return s;
}

std::vector<TrajectoryPoint> simulate_dual_killed_flow(const SpLpMechanism& psi, const SubordinatorMechanism& phi,
                                                       double y0, double horizon, double step, Philox& rng) {
    SimConfig cfg;
    cfg.step = step;
    cfg.horizon = horizon;
    cfg.validate();
    const Stepper stepper(KilledFlowSpec{psi, phi}, cfg);
    std::vector<TrajectoryPoint> out;
    PathState s = stepper.start(y0, rng);
    out.push_back({0.0, s});
    trace(stepper, s, horizon, step, rng, out);
    return out;
}

std::vector<TrajectoryPoint> simulate_diffusion_dual(const NotUpMechanism& sigma, const SpLpMechanism& psi, double y0,
                                                     double horizon, double step, Philox& rng, const SimConfig& base) {
    SimConfig cfg = base;
    cfg.step = step;
    cfg.horizon = horizon;
    cfg.validate();
    const Stepper stepper(DiffusionDualSpec{sigma, psi}, cfg);
    std::vector<TrajectoryPoint> out;
    PathState s = stepper.start(y0, rng);
    out.push_back({0.0, s});
    trace(stepper, s, horizon, step, rng, out);
    return out;
}

std::vector<std::vector<PathState>> run_paths_at(const ProcessSpec& spec, double x0, const SimConfig& cfg,
                                                 const std::vector<double>& times, std::uint64_t tag) {
    cfg.validate();
    check_times(times);
    require(x0 >= 0.0, "simulation: starting value must be nonnegative");
    const Stepper stepper(spec, cfg);
    const long n = cfg.paths;
    std::vector<std::vector<PathState>> out(times.size(), std::vector<PathState>(static_cast<std::size_t>(n)));

    const bool flow_kind = std::holds_alternative<DeterministicFlowSpec>(spec) ||
                           std::holds_alternative<KilledFlowSpec>(spec);
    if (flow_kind) {
        // One flow for all paths; each path only contributes its Exp(1) threshold.
        Philox dummy(0, 0);
        PathState ref = stepper.start(x0, dummy);
        ref.kill_threshold = kInf;
        std::vector<PathState> table;
        double t = 0.0;
        for (double target : times) {
            advance(stepper, ref, t, target, cfg.step, dummy);
            table.push_back(ref);
        }
        parallel_for(n, cfg.threads, [&](long i) {
            Philox rng = path_stream(cfg.seed, tag, static_cast<std::uint64_t>(i));
            const double e = rng.exponential();
            for (std::size_t k = 0; k < times.size(); ++k) {
                PathState s = table[k];
                s.kill_threshold = e;
                if (s.status != PathStatus::AbsorbedInf && s.kill_clock >= e) {
                    s.value = kInf;
                    s.status = PathStatus::AbsorbedInf;
                }
                out[k][static_cast<std::size_t>(i)] = s;
            }
        });
        return out;
    }

    parallel_for(n, cfg.threads, [&](long i) {
        Philox rng = path_stream(cfg.seed, tag, static_cast<std::uint64_t>(i));
        PathState s = stepper.start(x0, rng);
        double t = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            advance(stepper, s, t, times[k], cfg.step, rng);
            out[k][static_cast<std::size_t>(i)] = s;
        }
    });
    return out;
}

std::vector<PathState> run_paths(const ProcessSpec& spec, double x0, const SimConfig& cfg) {
    return std::move(run_paths_at(spec, x0, cfg, {cfg.horizon}, fingerprint(spec)).front());
}

void write_trajectories(std::ostream& out, const ProcessSpec& spec, double x0, const SimConfig& cfg, long count) {
    out << "path_id,t,value,status\n";
    const std::uint64_t tag = fingerprint(spec);
    char buf[96];
    for (long i = 0; i < count; ++i) {
        simulate_path(spec, x0, cfg, tag, static_cast<std::uint64_t>(i), [&](double t, const PathState& s) {
            if (std::isinf(s.value))
                std::snprintf(buf, sizeof buf, "%ld,%.17g,inf,", i, t);
            else
                std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,", i, t, s.value);
            out << buf << status_name(s.status) << '\n';
            return true;
        });
    }
}

}  // namespace lapdual
