#pragma once

// Monte Carlo and closed-form Laplace transforms of simulated processes, the
// two-sided duality comparison, and the complete-monotonicity and generator
// finite-difference checks.

#include "lapdual/paths.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lapdual {

/// A spec pair or request outside what the harness supports.
class ContractError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;  ///< population sd / sqrt(n); 0 for closed forms
    long n = 0;       ///< 0 for closed forms
    double frac_zero = 0.0;
    double frac_inf = 0.0;
};

/// Average of the scores with fractions of terminal values at 0 and infinity.
McEstimate summarize(const std::vector<double>& scores, const std::vector<PathState>& states);

/// E_x0[exp_conv(X_t, y)] from cfg.paths paths tagged by fingerprint(spec).
McEstimate mc_laplace(const ProcessSpec& spec, double x0, double y, double t, const SimConfig& cfg,
                      ConventionPair conv);

/// Closed-form E_start[exp_conv(V_t, arg)] (process_first) or E_start[exp_conv(arg, V_t)].
/// Available for subordinators, killed constants, CB, CBCI with Sigma = 0 and
/// the flow kinds. Throws ContractError otherwise.
double analytic_transform(const ProcessSpec& spec, double start, double arg, double t, ConventionPair conv,
                          bool process_first);

/// Whether analytic_transform covers the spec.
bool has_analytic_transform(const ProcessSpec& spec);

struct GridPoint {
    double x;
    double y;
    double t;
};

struct DualityRow {
    double x = 0, y = 0, t = 0;
    McEstimate left;
    McEstimate right;
    double gap = 0.0;
    double z = 0.0;
};

struct DualityReport {
    std::vector<DualityRow> rows;
    ConventionPair conv;
    double worst_abs_z = 0.0;
};

/// True when spec_y is the dual built for spec_x by the process families.
bool is_dual_pair(const ProcessSpec& spec_x, const ProcessSpec& spec_y);

/// Left E_x[exp_conv(X_t, y)], right E^y[exp_conv(x, Y_t)] per grid point.
/// Rows sharing a start value share paths; the two sides never share streams.
/// Throws ContractError unless is_dual_pair(spec_x, spec_y).
DualityReport duality_gap(const ProcessSpec& spec_x, const ProcessSpec& spec_y, const std::vector<GridPoint>& grid,
                          const SimConfig& cfg, ConventionPair conv, bool analytic_x = false,
                          bool analytic_y = false);

/// Both sides E_x[exp_conv(X_t, y)] from the same spec on independent streams.
DualityReport null_gap(const ProcessSpec& spec, const std::vector<GridPoint>& grid, const SimConfig& cfg,
                       ConventionPair conv);

/// z = gap / sqrt(se_l^2 + se_r^2); with both se zero, 0 for |gap| <= 1e-12 and +-inf otherwise.
double z_score(const McEstimate& left, const McEstimate& right);

void write_report_csv(std::ostream& out, const DualityReport& report);

struct CmViolation {
    int order = 0;       ///< k of the failing difference
    std::size_t index = 0;
    double value = 0.0;  ///< (-1)^k Delta^k f at index
    double tolerance = 0.0;
};

struct CmResult {
    bool pass = true;
    std::optional<CmViolation> first_violation;
};

/// (-1)^k Delta^k f >= -noise 2^k for k = 1..order on strictly increasing samples.
CmResult cm_check(const std::vector<std::pair<double, double>>& samples, int order, double noise);

/// P_h e^{-.y}(x) as a function of (x, y, h).
using Semigroup = std::function<double(double, double, double)>;

/// Closed-form semigroup of a spec with has_analytic_transform.
Semigroup analytic_semigroup(const ProcessSpec& spec);

struct FdRow {
    double h;
    double fd_value;
    double symbol_value;
    double abs_gap;
};

/// (P_h e^{-.y}(x) - e^{-xy}) / h against pregenerator_apply(s, x, y).
std::vector<FdRow> generator_fd_check(const LdsSymbol& s, const Semigroup& semigroup, double x, double y,
                                      const std::vector<double>& h_list);

struct ExplosionScreen {
    bool non_explosive = true;
    std::string reason;
};

/// Sufficient analytic conditions for non-explosion (finite derivatives at 0).
ExplosionScreen non_explosion_screen(const ProcessSpec& spec);

}  // namespace lapdual
