#pragma once

// Euler simulation of the jump-SDE process families and of their deterministic
// or killed duals. Every path owns a Philox stream keyed by (seed, tag, index).

#include "lapdual/flows.hpp"
#include "lapdual/mechanisms.hpp"
#include "lapdual/rng.hpp"
#include "lapdual/symbols.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace lapdual {

// ---- process specifications ----

/// CB: branching mechanism only.
struct CbSpec {
    SpLpMechanism psi;
    friend bool operator==(const CbSpec&, const CbSpec&) = default;
};

/// Possibly killed subordinator started at x0.
struct SubordinatorSpec {
    SubordinatorMechanism phi;
    friend bool operator==(const SubordinatorSpec&, const SubordinatorSpec&) = default;
};

/// Frozen at y0, sent to infinity at rate Phi(y0). With zero_absorbing the
/// point 0 is a trap instead of being killed at rate Phi(0).
struct KilledConstantSpec {
    SubordinatorMechanism phi;
    bool zero_absorbing = false;
    friend bool operator==(const KilledConstantSpec&, const KilledConstantSpec&) = default;
};

/// y0 -> u_t(y0).
struct DeterministicFlowSpec {
    SpLpMechanism psi;
    friend bool operator==(const DeterministicFlowSpec&, const DeterministicFlowSpec&) = default;
};

/// u_t(y0) killed at rate Phi(u_t(y0)).
struct KilledFlowSpec {
    SpLpMechanism psi;
    SubordinatorMechanism phi;
    friend bool operator==(const KilledFlowSpec&, const KilledFlowSpec&) = default;
};

struct CbcSpec {
    SpLpMechanism psi;
    NotUpMechanism sigma;
    friend bool operator==(const CbcSpec&, const CbcSpec&) = default;
};

/// dY = sqrt(2 Sigma(Y)) dW - Psi(Y) dt, absorbed at 0.
struct DiffusionDualSpec {
    NotUpMechanism sigma;
    SpLpMechanism psi;
    friend bool operator==(const DiffusionDualSpec&, const DiffusionDualSpec&) = default;
};

struct CbciSpec {
    SpLpMechanism psi;
    NotUpMechanism sigma;
    SubordinatorMechanism phi;
    friend bool operator==(const CbciSpec&, const CbciSpec&) = default;
};

/// Diffusion dual additionally killed at rate Phi(Y).
struct CbciDualSpec {
    NotUpMechanism sigma;
    SpLpMechanism psi;
    SubordinatorMechanism phi;
    friend bool operator==(const CbciDualSpec&, const CbciDualSpec&) = default;
};

/// CB with multiplicative Levy environment of exponent kappa.
struct CbreSpec {
    SpLpMechanism psi;
    EnvMechanism kappa;
    friend bool operator==(const CbreSpec&, const CbreSpec&) = default;
};

/// dY = -Psi(Y) dt + Y dS.
struct CbreDualSpec {
    SpLpMechanism psi;
    EnvMechanism kappa;
    friend bool operator==(const CbreDualSpec&, const CbreDualSpec&) = default;
};

/// Compensated jumps with law `law` at rate rate(x) * law mass.
struct SigmaPair {
    NotUpMechanism rate;
    NotUpMechanism law;
    friend bool operator==(const SigmaPair&, const SigmaPair&) = default;
};

/// Uncompensated jumps with law `law` at rate rate(x) * law mass.
struct PhiPair {
    SubordinatorMechanism rate;
    SubordinatorMechanism law;
    friend bool operator==(const PhiPair&, const PhiPair&) = default;
};

/// Symbol sum_i rate_i(x) law_i(y) - sum_j rate_j(x) law_j(y).
struct DecomposableSpec {
    std::vector<SigmaPair> sigma_pairs;
    std::vector<PhiPair> phi_pairs;
    friend bool operator==(const DecomposableSpec&, const DecomposableSpec&) = default;
};

using ProcessSpec = std::variant<CbSpec, SubordinatorSpec, KilledConstantSpec, DeterministicFlowSpec, KilledFlowSpec,
                                 CbcSpec, DiffusionDualSpec, CbciSpec, CbciDualSpec, CbreSpec, CbreDualSpec,
                                 DecomposableSpec>;

std::string_view kind_name(const ProcessSpec& spec);

/// Per-kind class constraints. Throws ValidationError.
void validate_spec(const ProcessSpec& spec);

/// Swap rates and laws in every pair. Requires the rates to be pure-jump atomic.
DecomposableSpec hat_swap(const DecomposableSpec& spec);

/// Laplace symbol of the process (restricted to y > 0 it is the generator on exponentials).
LdsSymbol symbol_of(const ProcessSpec& spec);

/// Stable 64-bit hash of the kind and every parameter.
std::uint64_t fingerprint(const ProcessSpec& spec);

// ---- simulation ----

struct SimConfig {
    double step = 1e-3;
    double horizon = 1.0;
    long paths = 10000;
    std::uint64_t seed = 0;
    double explosion_cap = 1e12;
    double small_jump_cut = 1e-3;
    /// Unset: 0 for jump kinds, 1e-12 for the diffusive duals.
    std::optional<double> absorption_floor;
    /// 0 picks the hardware concurrency.
    int threads = 0;

    void validate() const;

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

enum class PathStatus { Alive, AbsorbedZero, AbsorbedInf };

std::string_view status_name(PathStatus s);

struct PathState {
    double value = 0.0;
    PathStatus status = PathStatus::Alive;
    double kill_clock = 0.0;
    double kill_threshold = kInf;
};

/// Prepared per-kind stepper. step() advances an alive state by dt with rates
/// frozen at the left endpoint; exact kinds (subordinator, killed constant,
/// flows) accept any dt.
class Stepper {
  public:
    Stepper(const ProcessSpec& spec, const SimConfig& cfg);
    ~Stepper();
    Stepper(Stepper&&) noexcept;
    Stepper& operator=(Stepper&&) noexcept;

    /// Initial state at x0; draws the Exp(1) killing threshold from rng.
    PathState start(double x0, Philox& rng) const;
    void step(PathState& s, double dt, Philox& rng) const;
    /// True when a step ignores the configured step size.
    bool exact() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Single Euler steps of the individual families (fresh Stepper per call).
PathState step_cb(PathState s, const SpLpMechanism& psi, double h, Philox& rng, const SimConfig& cfg = {});
PathState step_cbc(PathState s, const SpLpMechanism& psi, const NotUpMechanism& sigma, double h, Philox& rng,
                   const SimConfig& cfg = {});
PathState step_cbci(PathState s, const SpLpMechanism& psi, const NotUpMechanism& sigma,
                    const SubordinatorMechanism& phi, double h, Philox& rng, const SimConfig& cfg = {});
PathState step_cbre(PathState s, const SpLpMechanism& psi, const EnvMechanism& kappa, double h, Philox& rng,
                    const SimConfig& cfg = {});
PathState step_decomposable(PathState s, const DecomposableSpec& spec, double h, Philox& rng,
                            const SimConfig& cfg = {});

/// Called with (t, state) at t = 0 and after every step; return false to stop early.
using PathObserver = std::function<bool(double, const PathState&)>;

/// One path on [0, cfg.horizon] driven by path_stream(cfg.seed, tag, index).
PathState simulate_path(const ProcessSpec& spec, double x0, const SimConfig& cfg, std::uint64_t tag,
                        std::uint64_t index, const PathObserver& observe = {});

struct TrajectoryPoint {
    double t;
    PathState state;
};

/// Killed flow dual: u_t(y0) with killing clock int Phi(u_s) ds against rng's Exp(1).
std::vector<TrajectoryPoint> simulate_dual_killed_flow(const SpLpMechanism& psi, const SubordinatorMechanism& phi,
                                                       double y0, double horizon, double step, Philox& rng);
/// Euler-Maruyama for the diffusion dual on a fixed grid.
std::vector<TrajectoryPoint> simulate_diffusion_dual(const NotUpMechanism& sigma, const SpLpMechanism& psi, double y0,
                                                     double horizon, double step, Philox& rng,
                                                     const SimConfig& cfg = {});

/// States at each of `times` (sorted, nonnegative) for cfg.paths paths;
/// result[k][i] is path i at times[k]. Deterministic for any thread count.
std::vector<std::vector<PathState>> run_paths_at(const ProcessSpec& spec, double x0, const SimConfig& cfg,
                                                 const std::vector<double>& times, std::uint64_t tag);

/// Terminal states at cfg.horizon with tag = fingerprint(spec).
std::vector<PathState> run_paths(const ProcessSpec& spec, double x0, const SimConfig& cfg);

/// CSV rows path_id,t,value,status for the first `count` paths.
void write_trajectories(std::ostream& out, const ProcessSpec& spec, double x0, const SimConfig& cfg, long count);

}  // namespace lapdual
