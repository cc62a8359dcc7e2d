#pragma once

// Levy-Khintchine mechanisms on [0, inf).
//
// Four classes are supported, each with a jump measure made of finitely many
// atoms plus at most one one-sided stable density scale * u^{-1-alpha} du
// restricted to (0, 1]:
//
//   SpLpMechanism        Psi(y)   = int (e^{-uy} - 1 + uy 1_{(0,1]}(u)) nu(du) + a y^2 - b y - c
//   SubordinatorMechanism Phi(y)  = int (1 - e^{-uy}) nu(du) + d y + c
//   NotUpMechanism       Sigma(y) = int (e^{-uy} - 1 + uy) nu(du) + a y^2 + d y
//   EnvMechanism         kappa(z) = int (e^{-zm} - 1 + zm 1_{[-1,1]}(m)) nu(dm) + a z^2 - b z - c
//
// All mechanisms are immutable after construction; constructors validate the
// class constraints and throw ValidationError.

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lapdual {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised when a mechanism, symbol, process or config violates its invariants.
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot reach its stated accuracy.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Atom {
    double location;
    double mass;

    friend bool operator==(const Atom&, const Atom&) = default;
};

/// Density scale * u^{-1-alpha} on (0, 1].
struct StableDensity {
    double alpha;
    double scale;

    friend bool operator==(const StableDensity&, const StableDensity&) = default;
};

/// Finite atomic measure plus an optional truncated stable density.
struct JumpMeasure {
    std::vector<Atom> atoms;
    std::optional<StableDensity> stable;

    bool empty() const { return atoms.empty() && !stable; }
    /// Total mass of the atomic part.
    double atom_mass() const;
    /// int u nu(du) over the whole support; +inf when the stable part has alpha >= 1.
    double first_moment() const;
    /// Mass of the stable density on [eps, 1].
    double stable_mass_above(double eps) const;
    /// int_{[eps,1]} u nu_stable(du).
    double stable_mean_above(double eps) const;
    /// int_{(0,eps)} u nu_stable(du); +inf for alpha >= 1.
    double stable_mean_below(double eps) const;

    JumpMeasure scaled(double w) const;

    friend bool operator==(const JumpMeasure&, const JumpMeasure&) = default;
};

/// Checks that atoms sit at or above `floor`, are nonzero, carry positive
/// mass, and that a stable component has alpha in (0, alpha_max).
void validate_measure(const JumpMeasure& m, double floor, double alpha_max,
                      const std::string& what);

class SpLpMechanism {
  public:
    SpLpMechanism() = default;
    SpLpMechanism(JumpMeasure measure, double a, double b, double c);

    const JumpMeasure& measure() const { return measure_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }
    bool is_zero() const { return measure_.empty() && a_ == 0 && b_ == 0 && c_ == 0; }

    double operator()(double y) const;

    friend bool operator==(const SpLpMechanism&, const SpLpMechanism&) = default;

  private:
    JumpMeasure measure_;
    double a_ = 0, b_ = 0, c_ = 0;
};

class SubordinatorMechanism {
  public:
    SubordinatorMechanism() = default;
    SubordinatorMechanism(JumpMeasure measure, double d, double c);

    const JumpMeasure& measure() const { return measure_; }
    double d() const { return d_; }
    double c() const { return c_; }
    bool is_zero() const { return measure_.empty() && d_ == 0 && c_ == 0; }

    double operator()(double y) const;

    friend bool operator==(const SubordinatorMechanism&, const SubordinatorMechanism&) = default;

  private:
    JumpMeasure measure_;
    double d_ = 0, c_ = 0;
};

class NotUpMechanism {
  public:
    NotUpMechanism() = default;
    NotUpMechanism(JumpMeasure measure, double a, double d);

    const JumpMeasure& measure() const { return measure_; }
    double a() const { return a_; }
    double d() const { return d_; }
    bool is_zero() const { return measure_.empty() && a_ == 0 && d_ == 0; }
    /// No Gaussian part, no drift.
    bool is_pure_jump() const { return a_ == 0 && d_ == 0; }

    double operator()(double y) const;

    friend bool operator==(const NotUpMechanism&, const NotUpMechanism&) = default;

  private:
    JumpMeasure measure_;
    double a_ = 0, d_ = 0;
};

class EnvMechanism {
  public:
    EnvMechanism() = default;
    EnvMechanism(JumpMeasure measure, double a, double b, double c);

    const JumpMeasure& measure() const { return measure_; }
    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }
    bool is_zero() const { return measure_.empty() && a_ == 0 && b_ == 0 && c_ == 0; }
    bool has_atom_at_minus_one() const;

    double operator()(double z) const;

    friend bool operator==(const EnvMechanism&, const EnvMechanism&) = default;

  private:
    JumpMeasure measure_;
    double a_ = 0, b_ = 0, c_ = 0;
};

double evaluate(const SpLpMechanism& m, double y);
double evaluate(const SubordinatorMechanism& m, double y);
double evaluate(const NotUpMechanism& m, double y);
double evaluate(const EnvMechanism& m, double z);

/// Right derivative at 0. Divergent moments are returned as +/-inf.
double derivative_at_zero(const SpLpMechanism& m);
double derivative_at_zero(const SubordinatorMechanism& m);
double derivative_at_zero(const NotUpMechanism& m);

// Weighted sums (the cone structure of each class). Adding two stable
// components requires equal alpha.
SpLpMechanism combine(const SpLpMechanism& p, double wp, const SpLpMechanism& q, double wq);
SubordinatorMechanism combine(const SubordinatorMechanism& p, double wp,
                              const SubordinatorMechanism& q, double wq);
NotUpMechanism combine(const NotUpMechanism& p, double wp, const NotUpMechanism& q, double wq);
EnvMechanism combine(const EnvMechanism& p, double wp, const EnvMechanism& q, double wq);

namespace detail {
/// int_0^1 (e^{-uy} - 1 + uy) u^{-1-alpha} du, alpha in (0,2).
double stable_compensated_integral(double alpha, double y);
/// int_0^1 (1 - e^{-uy}) u^{-1-alpha} du, alpha in (0,1).
double stable_subordinator_integral(double alpha, double y);
/// Upper incomplete gamma Gamma(s, x) for real s and x >= 1.
double upper_incomplete_gamma(double s, double x);
/// e^{-z} - 1 + z without cancellation for small z.
double comp_exp(double z);
/// int (e^{-uy} - 1 + uy) nu(du), full compensation, y finite.
double compensated_transform(const JumpMeasure& m, double y);
/// int (1 - e^{-uy}) nu(du), y finite; the stable part needs alpha < 1.
double bernstein_transform(const JumpMeasure& m, double y);
}  // namespace detail

}  // namespace lapdual
