#pragma once

// JSON experiment configs for the command-line runner.
//
// Infinite values are written as the string "inf". Unknown keys are errors.

#include "lapdual/duality.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lapdual {

/// Validation failure located at a config path such as "left.psi.atoms[0]".
class ConfigError : public ValidationError {
  public:
    ConfigError(const std::string& path, const std::string& msg)
        : ValidationError((path.empty() ? std::string("config") : path) + ": " + msg) {}
};

enum class ExperimentKind { Duality, Cm, GeneratorFd, Flow, SymbolCheck, NegativePart };

std::string_view experiment_name(ExperimentKind k);

/// "0+inf", "0inf-", "inf0+", "inf-0".
std::string_view zero_inf_token(ZeroInf z);
std::string_view inf_zero_token(InfZero z);

struct Grid {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> t;
    friend bool operator==(const Grid&, const Grid&) = default;
};

struct Gate {
    double max_abs_z = 3.0;
    double min_pass_fraction = 1.0;
    int replicates = 1;
    double max_frac_inf = 1.0;
    bool require_non_explosive = false;
    /// Absolute tolerance for the deterministic experiments.
    double tolerance = 1e-8;
    friend bool operator==(const Gate&, const Gate&) = default;
};

struct CmParams {
    int order = 4;
    double y = 1.0;
    double noise_factor = 3.0;
    friend bool operator==(const CmParams&, const CmParams&) = default;
};

struct FdCase {
    ProcessSpec spec;
    double x = 1.0;
    double y = 1.0;
    friend bool operator==(const FdCase&, const FdCase&) = default;
};

struct FdParams {
    std::vector<double> h;
    std::vector<FdCase> cases;
    friend bool operator==(const FdParams&, const FdParams&) = default;
};

struct FlowParams {
    std::vector<double> s;
    int random_cases = 0;
    friend bool operator==(const FlowParams&, const FlowParams&) = default;
};

struct NegativePartParams {
    double grid_cap = 10.0;
    int grid_n = 40;
    friend bool operator==(const NegativePartParams&, const NegativePartParams&) = default;
};

struct ExperimentConfig {
    std::string name;
    ExperimentKind experiment = ExperimentKind::Duality;
    std::string description;
    std::optional<ProcessSpec> left;
    std::optional<ProcessSpec> right;
    bool analytic_left = false;
    bool analytic_right = false;
    /// Duality only: both sides simulate `left` on independent streams.
    bool null_experiment = false;
    Grid grid;
    SimConfig sim;
    ConventionPair convention;
    Gate gate;
    CmParams cm;
    FdParams fd;
    FlowParams flow;
    /// Symbol experiments use random_lds_symbol(seed) when set, else symbol_of(left).
    std::optional<std::uint64_t> symbol_seed;
    NegativePartParams negative_part;
    std::string output;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parse, apply "dotted.path=value" overrides to the document, and validate.
/// Override values are read as JSON when they parse, else as strings.
ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Pretty JSON that parse_config reads back to an equal config.
std::string dump_config(const ExperimentConfig& cfg);

/// Experiment-level checks (grid, specs, pairing, gate); throws ConfigError.
void validate_config(const ExperimentConfig& cfg);

}  // namespace lapdual
