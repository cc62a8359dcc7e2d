#pragma once

// Laplace dual symbols of the seven-term form
//
//   psi(x,y) = x Psi(y) + x^2 Sigma(y) + BigSigma(x,y) - BigPhi(x,y)
//              + SigmaHat(x) y^2 + PsiHat(x) y + kappa(xy)
//
// and the boundary-convention exponential used to score Laplace transforms.

#include "lapdual/mechanisms.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace lapdual {

// ---- boundary conventions ----

enum class ZeroInf { ZeroPlusInf, ZeroInfMinus };
enum class InfZero { InfZeroPlus, InfMinusZero };

struct ConventionPair {
    ZeroInf zero_inf = ZeroInf::ZeroPlusInf;
    InfZero inf_zero = InfZero::InfZeroPlus;

    friend bool operator==(const ConventionPair&, const ConventionPair&) = default;
};

/// e^{-xy} on [0,inf]^2. At (0,inf) the zero_inf choice decides, at (inf,0)
/// the inf_zero choice: the unadorned factor is the value of the product.
double exp_conv(double x, double y, ConventionPair conv);

/// Conventions with exp_conv(x, y, c) == exp_conv(y, x, transposed(c)).
ConventionPair transposed(ConventionPair c);

// ---- bivariate measure terms ----

enum class BivariateRole { Sigma, Phi };

/// Point mass at (v,u). Infinite coordinates are only legal in the Phi role.
struct BivariateAtom {
    double v;
    double u;
    double mass;

    friend bool operator==(const BivariateAtom&, const BivariateAtom&) = default;
};

/// weight * left(dv) right(du).
struct ProductTerm {
    JumpMeasure left;
    JumpMeasure right;
    double weight = 1.0;

    friend bool operator==(const ProductTerm&, const ProductTerm&) = default;
};

enum class MixtureFamily {
    StableSigma,  ///< int_0^1 (xy)^{r+1} dr        (Sigma role)
    StablePhi,    ///< int_0^1 x^r y^{1-r} dr       (Phi role)
    Gamma,        ///< int_0^1 log(1+xr) log(1+y/r) r^gamma dr  (Phi role)
};

/// A mixing integral over r in (0,1), discretized by Gauss-Legendre.
struct Mixture {
    MixtureFamily family = MixtureFamily::Gamma;
    double gamma = 0.0;
    int nodes = 64;
    bool transposed = false;
    double weight = 1.0;

    friend bool operator==(const Mixture&, const Mixture&) = default;
};

class BivariateTerm {
  public:
    explicit BivariateTerm(BivariateRole role = BivariateRole::Sigma) : role_(role) {}
    BivariateTerm(BivariateRole role, std::vector<BivariateAtom> atoms, std::vector<ProductTerm> products = {},
                  std::vector<Mixture> mixtures = {});

    BivariateRole role() const { return role_; }
    const std::vector<BivariateAtom>& atoms() const { return atoms_; }
    const std::vector<ProductTerm>& products() const { return products_; }
    const std::vector<Mixture>& mixtures() const { return mixtures_; }
    bool empty() const { return atoms_.empty() && products_.empty() && mixtures_.empty(); }

    /// Nonnegative value of the term at finite (x,y). Mixtures compare N and 2N
    /// nodes and throw NumericError when they disagree beyond 1e-8 relative.
    double operator()(double x, double y) const;

    /// Swap the coordinates of every component.
    BivariateTerm transposed() const;
    BivariateTerm scaled(double w) const;
    /// True when the term vanishes on both axes (no infinite coordinates).
    bool vanishes_on_axes() const;

    friend bool operator==(const BivariateTerm&, const BivariateTerm&) = default;

  private:
    BivariateRole role_;
    std::vector<BivariateAtom> atoms_;
    std::vector<ProductTerm> products_;
    std::vector<Mixture> mixtures_;
};

BivariateTerm add(const BivariateTerm& p, double wp, const BivariateTerm& q, double wq);

/// int v u nu(dv,du) for a Phi-role term; +inf on infinite coordinates or divergent moments.
double cross_derivative_phi(const BivariateTerm& t);

/// Value of one mixture component at (x,y), n-point rule after r = s^2.
double mixture_value(const Mixture& m, double x, double y, int n);

// ---- the symbol ----

struct LdsSymbol {
    SpLpMechanism psi;
    NotUpMechanism sigma;
    BivariateTerm big_sigma{BivariateRole::Sigma};
    BivariateTerm big_phi{BivariateRole::Phi};
    NotUpMechanism sigma_hat;
    SpLpMechanism psi_hat;
    EnvMechanism kappa;

    /// Role checks on the bivariate terms; mechanisms validate on construction.
    void validate() const;

    friend bool operator==(const LdsSymbol&, const LdsSymbol&) = default;
};

double eval_lds(const LdsSymbol& s, double x, double y);
LdsSymbol dual_symbol(const LdsSymbol& s);
/// wp * p + wq * q.
LdsSymbol add(const LdsSymbol& p, double wp, const LdsSymbol& q, double wq);

double check_symbol_duality(const LdsSymbol& s, const std::vector<std::pair<double, double>>& grid);

/// psi(x,y) e^{-xy} for finite positive x; psi(0,y) at x = 0 and 0 at x = inf.
double pregenerator_apply(const LdsSymbol& s, double x, double y);

struct NegativePartBound {
    double sup_estimate = 0.0;
    bool hypotheses_hold = false;
};

/// Grid probe of sup psi_-(x,y) e^{-xy} on [0,cap]^2 plus the analytic moment hypotheses.
NegativePartBound check_negative_part_bound(const LdsSymbol& s, double grid_cap, int grid_n);

/// Seeded random symbol with every one of the seven terms nonzero, including
/// stable parts, product terms, mixtures and a killing atom at infinity.
LdsSymbol random_lds_symbol(std::uint64_t seed);

// ---- symbols of the simulated process families ----

LdsSymbol cb_symbol(const SpLpMechanism& psi);
LdsSymbol cbi_symbol(const SpLpMechanism& psi, const SubordinatorMechanism& phi);
LdsSymbol cbc_symbol(const SpLpMechanism& psi, const NotUpMechanism& sigma);
LdsSymbol cbci_symbol(const SpLpMechanism& psi, const NotUpMechanism& sigma, const SubordinatorMechanism& phi);
LdsSymbol cbre_symbol(const SpLpMechanism& psi, const EnvMechanism& kappa);
/// x-independent symbol -Phi(y) of a subordinator.
LdsSymbol subordinator_symbol(const SubordinatorMechanism& phi);
/// Simple symbol SigmaHat(x) Sigma(y) expanded into the seven-term form.
LdsSymbol simple_sigma_symbol(const NotUpMechanism& sigma_hat, const NotUpMechanism& sigma);
/// Simple symbol -PhiHat(x) Phi(y) expanded into the seven-term form.
LdsSymbol simple_phi_symbol(const SubordinatorMechanism& phi_hat, const SubordinatorMechanism& phi);

}  // namespace lapdual
