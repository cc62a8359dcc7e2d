#include "lapdual/symbols.hpp"

#include "lapdual/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace lapdual {

double exp_conv(double x, double y, ConventionPair conv) {
    if (x == 0.0 && std::isinf(y)) return conv.zero_inf == ZeroInf::ZeroPlusInf ? 0.0 : 1.0;
    if (std::isinf(x) && y == 0.0) return conv.inf_zero == InfZero::InfZeroPlus ? 0.0 : 1.0;
    return std::exp(-x * y);
}

ConventionPair transposed(ConventionPair c) {
    return {c.inf_zero == InfZero::InfZeroPlus ? ZeroInf::ZeroPlusInf : ZeroInf::ZeroInfMinus,
            c.zero_inf == ZeroInf::ZeroPlusInf ? InfZero::InfZeroPlus : InfZero::InfMinusZero};
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

bool positive_or_inf(double v) { return v > 0.0 && !std::isnan(v); }

// 1 - e^{-xv} 1_{(0,inf)}(v)
double phi_factor(double x, double v) {
    if (std::isinf(v)) return 1.0;
    return -std::expm1(-x * v);
}

double mixture_kernel(MixtureFamily f, double gamma, double x, double y, double r) {
    switch (f) {
        case MixtureFamily::StableSigma: {
            const double z = x * y;
            return z == 0.0 ? 0.0 : std::pow(z, r + 1.0);
        }
        case MixtureFamily::StablePhi:
            if (x == 0.0 || y == 0.0) return 0.0;
            return std::pow(x, r) * std::pow(y, 1.0 - r);
        case MixtureFamily::Gamma:
            return std::log1p(x * r) * std::log1p(y / r) * std::pow(r, gamma);
    }
    return 0.0;
}

double mixture_checked(const Mixture& m, double x, double y) {
    const double v1 = mixture_value(m, x, y, m.nodes);
    const double v2 = mixture_value(m, x, y, 2 * m.nodes);
    if (std::fabs(v1 - v2) > 1e-8 * std::fabs(v2) + 1e-300) {
        std::ostringstream os;
        os << "mixture quadrature did not converge at (" << x << "," << y << ") with " << m.nodes
           << " nodes: " << v1 << " vs " << v2;
        throw NumericError(os.str());
    }
    return m.weight * v2;
}

double moment_above_one(const JumpMeasure& m) {
    double s = 0.0;
    for (const auto& a : m.atoms)
        if (a.location > 1.0) s += a.location * a.mass;
    return s;
}

double moment_up_to_one(const JumpMeasure& m) {
    double s = 0.0;
    for (const auto& a : m.atoms)
        if (a.location <= 1.0) s += a.location * a.mass;
    if (m.stable) s += m.stable->scale / (1.0 - m.stable->alpha);
    return s;
}

JumpMeasure atom_measure(std::vector<Atom> a) { return JumpMeasure{std::move(a), std::nullopt}; }

}  // namespace

double mixture_value(const Mixture& m, double x, double y, int n) {
    const double a = m.transposed ? y : x;
    const double b = m.transposed ? x : y;
    const auto& rule = gauss_legendre01(n);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double t = rule.nodes[i];
        s += rule.weights[i] * 2.0 * t * mixture_kernel(m.family, m.gamma, a, b, t * t);
    }
    return s;
}

BivariateTerm::BivariateTerm(BivariateRole role, std::vector<BivariateAtom> atoms,
                             std::vector<ProductTerm> products, std::vector<Mixture> mixtures)
    : role_(role), atoms_(std::move(atoms)), products_(std::move(products)), mixtures_(std::move(mixtures)) {
    const bool sig = role_ == BivariateRole::Sigma;
    const std::string what = sig ? "bivariate Sigma term" : "bivariate Phi term";
    for (const auto& a : atoms_) {
        if (sig)
            require(std::isfinite(a.v) && std::isfinite(a.u) && a.v > 0 && a.u > 0,
                    what + ": atom coordinates must be finite and positive");
        else
            require(positive_or_inf(a.v) && positive_or_inf(a.u), what + ": atom coordinates must be positive");
        require(std::isfinite(a.mass) && a.mass > 0, what + ": atom mass must be positive");
    }
    for (const auto& p : products_) {
        validate_measure(p.left, 0.0, sig ? 2.0 : 1.0, what + " product");
        validate_measure(p.right, 0.0, sig ? 2.0 : 1.0, what + " product");
        require(std::isfinite(p.weight) && p.weight > 0, what + ": product weight must be positive");
    }
    for (const auto& m : mixtures_) {
        if (sig)
            require(m.family == MixtureFamily::StableSigma, what + ": only the stable Sigma mixture is allowed");
        else
            require(m.family != MixtureFamily::StableSigma, what + ": stable Sigma mixture is not a Phi term");
        if (m.family == MixtureFamily::Gamma) require(m.gamma > -1.0, what + ": gamma must exceed -1");
        require(m.nodes >= 1, what + ": quadrature nodes must be positive");
        require(std::isfinite(m.weight) && m.weight > 0, what + ": mixture weight must be positive");
    }
}

double BivariateTerm::operator()(double x, double y) const {
    double s = 0.0;
    if (role_ == BivariateRole::Sigma) {
        for (const auto& a : atoms_) s += a.mass * (detail::comp_exp(x * a.v) * detail::comp_exp(a.u * y));
        for (const auto& p : products_)
            s += p.weight * (detail::compensated_transform(p.left, x) * detail::compensated_transform(p.right, y));
    } else {
        for (const auto& a : atoms_) s += a.mass * (phi_factor(x, a.v) * phi_factor(y, a.u));
        for (const auto& p : products_)
            s += p.weight * (detail::bernstein_transform(p.left, x) * detail::bernstein_transform(p.right, y));
    }
    for (const auto& m : mixtures_) s += mixture_checked(m, x, y);
    return s;
}

BivariateTerm BivariateTerm::transposed() const {
    BivariateTerm t(role_);
    for (const auto& a : atoms_) t.atoms_.push_back({a.u, a.v, a.mass});
    for (const auto& p : products_) t.products_.push_back({p.right, p.left, p.weight});
    for (auto m : mixtures_) {
        m.transposed = !m.transposed;
        t.mixtures_.push_back(m);
    }
    return t;
}

BivariateTerm BivariateTerm::scaled(double w) const {
    return add(*this, w, BivariateTerm(role_), 0.0);
}

bool BivariateTerm::vanishes_on_axes() const {
    return std::none_of(atoms_.begin(), atoms_.end(),
                        [](const BivariateAtom& a) { return std::isinf(a.v) || std::isinf(a.u); });
}

BivariateTerm add(const BivariateTerm& p, double wp, const BivariateTerm& q, double wq) {
    require(p.role() == q.role(), "cannot add bivariate terms of different roles");
    require(wp >= 0 && wq >= 0 && std::isfinite(wp) && std::isfinite(wq), "weights must be nonnegative");
    std::vector<BivariateAtom> atoms;
    std::vector<ProductTerm> products;
    std::vector<Mixture> mixtures;
    auto take = [&](const BivariateTerm& t, double w) {
        if (w == 0.0) return;
        for (auto a : t.atoms()) {
            a.mass *= w;
            atoms.push_back(a);
        }
        for (auto pr : t.products()) {
            pr.weight *= w;
            products.push_back(pr);
        }
        for (auto m : t.mixtures()) {
            m.weight *= w;
            mixtures.push_back(m);
        }
    };
    take(p, wp);
    take(q, wq);
    return BivariateTerm(p.role(), std::move(atoms), std::move(products), std::move(mixtures));
}

double cross_derivative_phi(const BivariateTerm& t) {
    require(t.role() == BivariateRole::Phi, "cross_derivative_phi needs a Phi-role term");
    double s = 0.0;
    for (const auto& a : t.atoms()) {
        if (std::isinf(a.v) || std::isinf(a.u)) return kInf;
        s += a.v * a.u * a.mass;
    }
    for (const auto& p : t.products()) s += p.weight * p.left.first_moment() * p.right.first_moment();
    for (const auto& m : t.mixtures()) {
        if (m.family != MixtureFamily::Gamma) return kInf;
        // d^2/dxdy log(1+xr) log(1+y/r) at 0 is 1, leaving int r^gamma dr
        auto moment = [&](int n) {
            const auto& rule = gauss_legendre01(n);
            double v = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double u = rule.nodes[i];
                v += rule.weights[i] * 2.0 * u * std::pow(u * u, m.gamma);
            }
            return v;
        };
        const double v1 = moment(m.nodes), v2 = moment(2 * m.nodes);
        if (std::fabs(v1 - v2) > 1e-8 * std::fabs(v2))
            throw NumericError("cross_derivative_phi: mixture moment quadrature did not converge");
        s += m.weight * v2;
    }
    return s;
}

// ---- symbol ----

void LdsSymbol::validate() const {
    require(big_sigma.role() == BivariateRole::Sigma, "big_sigma must be a Sigma-role term");
    require(big_phi.role() == BivariateRole::Phi, "big_phi must be a Phi-role term");
}

double eval_lds(const LdsSymbol& s, double x, double y) {
    if (std::isinf(x) || std::isinf(y)) return 0.0;
    if (std::isnan(x) || std::isnan(y) || x < 0 || y < 0)
        throw ValidationError("eval_lds: arguments must lie in [0, inf]");
    // Terms are grouped in transposition-symmetric pairs so that the dual
    // symbol evaluated at (y,x) reproduces the same floating-point result.
    const double lin = x * s.psi(y) + s.psi_hat(x) * y;
    const double quad = (x * x) * s.sigma(y) + s.sigma_hat(x) * (y * y);
    const double biv = s.big_sigma(x, y) - s.big_phi(x, y);
    return ((lin + quad) + biv) + s.kappa(x * y);
}

LdsSymbol dual_symbol(const LdsSymbol& s) {
    LdsSymbol d;
    d.psi = s.psi_hat;
    d.psi_hat = s.psi;
    d.sigma = s.sigma_hat;
    d.sigma_hat = s.sigma;
    d.big_sigma = s.big_sigma.transposed();
    d.big_phi = s.big_phi.transposed();
    d.kappa = s.kappa;
    return d;
}

LdsSymbol add(const LdsSymbol& p, double wp, const LdsSymbol& q, double wq) {
    LdsSymbol r;
    r.psi = combine(p.psi, wp, q.psi, wq);
    r.sigma = combine(p.sigma, wp, q.sigma, wq);
    r.big_sigma = add(p.big_sigma, wp, q.big_sigma, wq);
    r.big_phi = add(p.big_phi, wp, q.big_phi, wq);
    r.sigma_hat = combine(p.sigma_hat, wp, q.sigma_hat, wq);
    r.psi_hat = combine(p.psi_hat, wp, q.psi_hat, wq);
    r.kappa = combine(p.kappa, wp, q.kappa, wq);
    return r;
}

double check_symbol_duality(const LdsSymbol& s, const std::vector<std::pair<double, double>>& grid) {
    const LdsSymbol d = dual_symbol(s);
    double worst = 0.0;
    for (const auto& [x, y] : grid) worst = std::max(worst, std::fabs(eval_lds(s, x, y) - eval_lds(d, y, x)));
    return worst;
}

double pregenerator_apply(const LdsSymbol& s, double x, double y) {
    if (!(y > 0.0) || std::isinf(y)) throw ValidationError("pregenerator_apply: y must lie in (0, inf)");
    if (std::isinf(x)) return 0.0;
    if (x == 0.0) return eval_lds(s, 0.0, y);
    return eval_lds(s, x, y) * std::exp(-x * y);
}

NegativePartBound check_negative_part_bound(const LdsSymbol& s, double grid_cap, int grid_n) {
    require(grid_cap > 0 && grid_n >= 2, "check_negative_part_bound: need cap > 0 and at least 2 points");
    NegativePartBound out;
    for (int i = 0; i < grid_n; ++i) {
        const double x = grid_cap * i / (grid_n - 1);
        for (int j = 0; j < grid_n; ++j) {
            const double y = grid_cap * j / (grid_n - 1);
            const double v = eval_lds(s, x, y);
            if (v < 0) out.sup_estimate = std::max(out.sup_estimate, -v * std::exp(-x * y));
        }
    }
    out.hypotheses_hold = s.psi(0.0) == 0.0 && s.psi_hat(0.0) == 0.0 && s.big_phi.vanishes_on_axes() &&
                          std::isfinite(derivative_at_zero(s.psi)) &&
                          std::isfinite(derivative_at_zero(s.psi_hat)) &&
                          std::isfinite(cross_derivative_phi(s.big_phi));
    return out;
}

// ---- builders ----

LdsSymbol cb_symbol(const SpLpMechanism& psi) {
    LdsSymbol s;
    s.psi = psi;
    return s;
}

LdsSymbol subordinator_symbol(const SubordinatorMechanism& phi) {
    return simple_phi_symbol(SubordinatorMechanism({}, 0.0, 1.0), phi);
}

LdsSymbol cbi_symbol(const SpLpMechanism& psi, const SubordinatorMechanism& phi) {
    return add(cb_symbol(psi), 1.0, subordinator_symbol(phi), 1.0);
}

LdsSymbol cbc_symbol(const SpLpMechanism& psi, const NotUpMechanism& sigma) {
    LdsSymbol s;
    s.psi = psi;
    s.sigma = sigma;
    return s;
}

LdsSymbol cbci_symbol(const SpLpMechanism& psi, const NotUpMechanism& sigma, const SubordinatorMechanism& phi) {
    return add(cbc_symbol(psi, sigma), 1.0, subordinator_symbol(phi), 1.0);
}

LdsSymbol cbre_symbol(const SpLpMechanism& psi, const EnvMechanism& kappa) {
    LdsSymbol s;
    s.psi = psi;
    s.kappa = kappa;
    return s;
}

LdsSymbol simple_sigma_symbol(const NotUpMechanism& sh, const NotUpMechanism& sg) {
    const JumpMeasure& mh = sh.measure();
    const JumpMeasure& m = sg.measure();
    LdsSymbol s;
    s.kappa = EnvMechanism({}, sh.a() * sg.a(), 0.0, 0.0);
    s.sigma = NotUpMechanism(m.scaled(sh.a()), 0.0, sh.a() * sg.d());
    s.sigma_hat = NotUpMechanism(mh.scaled(sg.a()), 0.0, sg.a() * sh.d());
    s.psi = SpLpMechanism(m.scaled(sh.d()), 0.0, -sh.d() * sg.d() - sh.d() * moment_above_one(m), 0.0);
    s.psi_hat = SpLpMechanism(mh.scaled(sg.d()), 0.0, -sg.d() * moment_above_one(mh), 0.0);
    if (!mh.empty() && !m.empty())
        s.big_sigma = BivariateTerm(BivariateRole::Sigma, {}, {ProductTerm{mh, m, 1.0}});
    return s;
}

LdsSymbol simple_phi_symbol(const SubordinatorMechanism& ph, const SubordinatorMechanism& p) {
    const JumpMeasure& nh = ph.measure();
    const JumpMeasure& n = p.measure();
    LdsSymbol s;
    s.psi = SpLpMechanism(n.scaled(ph.d()), 0.0, ph.d() * p.d() + ph.d() * moment_up_to_one(n), ph.d() * p.c());
    s.psi_hat = SpLpMechanism(nh.scaled(p.d()), 0.0, p.d() * moment_up_to_one(nh), ph.c() * p.d());
    std::vector<BivariateAtom> atoms;
    std::vector<ProductTerm> products;
    if (ph.c() > 0 && p.c() > 0) atoms.push_back({kInf, kInf, ph.c() * p.c()});
    if (ph.c() > 0) {
        require(!n.stable, "a stable jump part against a constant factor is not representable");
        for (const auto& a : n.atoms) atoms.push_back({kInf, a.location, ph.c() * a.mass});
    }
    if (p.c() > 0) {
        require(!nh.stable, "a stable jump part against a constant factor is not representable");
        for (const auto& a : nh.atoms) atoms.push_back({a.location, kInf, p.c() * a.mass});
    }
    if (!nh.empty() && !n.empty()) products.push_back({nh, n, 1.0});
    s.big_phi = BivariateTerm(BivariateRole::Phi, std::move(atoms), std::move(products));
    return s;
}

LdsSymbol random_lds_symbol(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> U(0.1, 2.0);
    LdsSymbol s;
    s.psi = SpLpMechanism(JumpMeasure{{{U(gen) * 0.5, U(gen)}, {1 + U(gen), U(gen)}}, StableDensity{1.5, U(gen)}},
                          U(gen), U(gen) - 1.0, U(gen) * 0.3);
    s.psi_hat = SpLpMechanism(atom_measure({{U(gen), U(gen)}}), U(gen), 1.0 - U(gen), 0.0);
    s.sigma = NotUpMechanism(JumpMeasure{{{U(gen), U(gen)}}, StableDensity{0.7, U(gen)}}, U(gen), U(gen));
    s.sigma_hat = NotUpMechanism(atom_measure({{U(gen), U(gen)}, {U(gen) * 3, U(gen)}}), U(gen), U(gen));
    s.kappa = EnvMechanism(atom_measure({{-0.5 * U(gen) / 2.0, U(gen)}, {U(gen), U(gen)}}), U(gen), U(gen) - 1.0, 0.1);
    s.big_sigma = BivariateTerm(BivariateRole::Sigma, {{U(gen), U(gen), U(gen)}},
                                {ProductTerm{atom_measure({{U(gen), 1}}), JumpMeasure{{}, StableDensity{1.2, 1}}, U(gen)}},
                                {Mixture{MixtureFamily::StableSigma, 0, 48, false, U(gen)}});
    s.big_phi = BivariateTerm(BivariateRole::Phi, {{U(gen), U(gen), U(gen)}, {kInf, U(gen), U(gen)}},
                              {ProductTerm{atom_measure({{U(gen), 1}}), JumpMeasure{{}, StableDensity{0.4, 1}}, U(gen)}},
                              {Mixture{MixtureFamily::Gamma, 0.5, 64, false, U(gen)},
                               Mixture{MixtureFamily::StablePhi, 0, 48, false, U(gen)}});
    return s;
}

}  // namespace lapdual
