#include "lapdual/mechanisms.hpp"

#include <cmath>
#include <sstream>

namespace lapdual {

namespace detail {

double upper_incomplete_gamma(double s, double x) {
    if (!(x >= 1.0)) throw std::domain_error("upper_incomplete_gamma: x must be >= 1");
    if (std::isinf(x)) return 0.0;
    // Modified Lentz evaluation of the Legendre continued fraction.
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) return std::exp(-x + s * std::log(x)) * h;
    }
    throw NumericError("upper_incomplete_gamma: continued fraction did not converge");
}

namespace {

// sum_{k>=2} (-y)^k / (k! (k - alpha)), for 0 <= y <= 1
double compensated_series(double alpha, double y) {
    double term = y * y / 2.0;  // y^k / k! at k = 2
    double sum = 0.0;
    for (int k = 2; k < 200; ++k) {
        const double add = ((k % 2 == 0) ? term : -term) / (k - alpha);
        sum += add;
        if (std::fabs(add) < 1e-18 * std::fabs(sum)) break;
        term *= y / (k + 1);
    }
    return sum;
}

// sum_{k>=1} (-1)^{k+1} y^k / (k! (k - alpha)), for 0 <= y <= 1
double subordinator_series(double alpha, double y) {
    double term = y;
    double sum = 0.0;
    for (int k = 1; k < 200; ++k) {
        const double add = ((k % 2 == 1) ? term : -term) / (k - alpha);
        sum += add;
        if (std::fabs(add) < 1e-18 * std::fabs(sum)) break;
        term *= y / (k + 1);
    }
    return sum;
}

// (y^{1-alpha} - 1) / (1 - alpha), with the log limit at alpha = 1
double power_log(double alpha, double log_y) {
    const double e = 1.0 - alpha;
    if (std::fabs(e * log_y) < 1e-300 || e == 0.0) return log_y;
    return std::expm1(e * log_y) / e;
}

}  // namespace

double stable_compensated_integral(double alpha, double y) {
    if (y <= 0.0) return 0.0;
    if (std::isinf(y)) return kInf;
    if (y <= 1.0) return compensated_series(alpha, y);
    const double ly = std::log(y);
    const double j1 = compensated_series(alpha, 1.0);
    const double gam = upper_incomplete_gamma(-alpha, 1.0) - upper_incomplete_gamma(-alpha, y);
    const double jy = j1 + gam + power_log(alpha, ly) + std::expm1(-alpha * ly) / alpha;
    return std::exp(alpha * ly) * jy;
}

double stable_subordinator_integral(double alpha, double y) {
    if (y <= 0.0) return 0.0;
    if (std::isinf(y)) return kInf;
    if (y <= 1.0) return subordinator_series(alpha, y);
    const double ly = std::log(y);
    const double l1 = subordinator_series(alpha, 1.0);
    const double gam = upper_incomplete_gamma(-alpha, 1.0) - upper_incomplete_gamma(-alpha, y);
    const double ly_total = l1 - std::expm1(-alpha * ly) / alpha - gam;
    return std::exp(alpha * ly) * ly_total;
}

double comp_exp(double z) {
    if (std::fabs(z) < 0.1) {
        // sum_{k>=2} (-z)^k / k!
        double term = z * z / 2.0, sum = 0.0;
        for (int k = 2; k < 14; ++k) {
            sum += (k % 2 == 0) ? term : -term;
            term *= z / (k + 1);
        }
        return sum;
    }
    return std::expm1(-z) + z;
}

double compensated_transform(const JumpMeasure& m, double y) {
    double s = 0.0;
    for (const auto& at : m.atoms) s += at.mass * comp_exp(at.location * y);
    if (m.stable) s += m.stable->scale * stable_compensated_integral(m.stable->alpha, y);
    return s;
}

double bernstein_transform(const JumpMeasure& m, double y) {
    double s = 0.0;
    for (const auto& at : m.atoms) s -= at.mass * std::expm1(-at.location * y);
    if (m.stable) s += m.stable->scale * stable_subordinator_integral(m.stable->alpha, y);
    return s;
}

}  // namespace detail

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

void require_arg(double y, const char* what) {
    if (std::isnan(y) || y < 0.0)
        throw ValidationError(std::string(what) + ": argument must be in [0, inf]");
}

JumpMeasure merge(const JumpMeasure& p, double wp, const JumpMeasure& q, double wq) {
    require(wp >= 0 && wq >= 0 && std::isfinite(wp) && std::isfinite(wq),
            "combine: weights must be finite and nonnegative");
    JumpMeasure out;
    if (wp > 0)
        for (const auto& a : p.atoms) out.atoms.push_back({a.location, a.mass * wp});
    if (wq > 0)
        for (const auto& a : q.atoms) out.atoms.push_back({a.location, a.mass * wq});
    const bool sp = p.stable && wp > 0;
    const bool sq = q.stable && wq > 0;
    if (sp && sq) {
        require(p.stable->alpha == q.stable->alpha,
                "combine: stable components with different alpha cannot be added");
        out.stable = StableDensity{p.stable->alpha, p.stable->scale * wp + q.stable->scale * wq};
    } else if (sp) {
        out.stable = StableDensity{p.stable->alpha, p.stable->scale * wp};
    } else if (sq) {
        out.stable = StableDensity{q.stable->alpha, q.stable->scale * wq};
    }
    return out;
}

}  // namespace

double JumpMeasure::atom_mass() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.mass;
    return s;
}

double JumpMeasure::first_moment() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.location * a.mass;
    if (stable) {
        if (stable->alpha >= 1.0) return kInf;
        s += stable->scale / (1.0 - stable->alpha);
    }
    return s;
}

double JumpMeasure::stable_mass_above(double eps) const {
    if (!stable) return 0.0;
    const double al = stable->alpha;
    return stable->scale * std::expm1(-al * std::log(eps)) / al;
}

double JumpMeasure::stable_mean_above(double eps) const {
    if (!stable) return 0.0;
    const double al = stable->alpha;
    // int_eps^1 u^{-alpha} du
    const double le = std::log(eps);
    if (al == 1.0) return stable->scale * (-le);
    return stable->scale * (-std::expm1((1.0 - al) * le)) / (1.0 - al);
}

double JumpMeasure::stable_mean_below(double eps) const {
    if (!stable) return 0.0;
    const double al = stable->alpha;
    if (al >= 1.0) return kInf;
    return stable->scale * std::pow(eps, 1.0 - al) / (1.0 - al);
}

JumpMeasure JumpMeasure::scaled(double w) const { return merge(*this, w, JumpMeasure{}, 0.0); }

void validate_measure(const JumpMeasure& m, double floor, double alpha_max, const std::string& what) {
    for (const auto& a : m.atoms) {
        require(std::isfinite(a.location), what + ": atom location must be finite");
        require(a.location != 0.0, what + ": atom location must be nonzero");
        if (a.location < floor) {
            std::ostringstream os;
            os << what << ": atom location " << a.location << " below support floor " << floor;
            throw ValidationError(os.str());
        }
        require(std::isfinite(a.mass) && a.mass > 0.0, what + ": atom mass must be positive");
    }
    if (m.stable) {
        const double al = m.stable->alpha;
        std::ostringstream os;
        os << what << ": stable alpha must lie in (0," << alpha_max << ")";
        require(al > 0.0 && al < alpha_max, os.str());
        require(std::isfinite(m.stable->scale) && m.stable->scale > 0.0,
                what + ": stable scale must be positive");
    }
}

// ---- SpLp ----

SpLpMechanism::SpLpMechanism(JumpMeasure measure, double a, double b, double c)
    : measure_(std::move(measure)), a_(a), b_(b), c_(c) {
    validate_measure(measure_, 0.0, 2.0, "spLp mechanism");
    require(std::isfinite(a_) && a_ >= 0.0, "spLp mechanism: a must be nonnegative");
    require(std::isfinite(b_), "spLp mechanism: b must be finite");
    require(std::isfinite(c_) && c_ >= 0.0, "spLp mechanism: c must be nonnegative");
}

double SpLpMechanism::operator()(double y) const {
    require_arg(y, "spLp mechanism");
    if (std::isinf(y)) {
        if (a_ > 0.0 || measure_.stable) return kInf;
        double lin = -b_;
        for (const auto& at : measure_.atoms)
            if (at.location <= 1.0) lin += at.location * at.mass;
        if (lin > 0) return kInf;
        if (lin < 0) return -kInf;
        return -measure_.atom_mass() - c_;
    }
    double s = 0.0;
    for (const auto& at : measure_.atoms) {
        const double uy = at.location * y;
        s += at.mass * (at.location <= 1.0 ? detail::comp_exp(uy) : std::expm1(-uy));
    }
    if (measure_.stable)
        s += measure_.stable->scale * detail::stable_compensated_integral(measure_.stable->alpha, y);
    return s + a_ * y * y - b_ * y - c_;
}

// ---- Subordinator ----

SubordinatorMechanism::SubordinatorMechanism(JumpMeasure measure, double d, double c)
    : measure_(std::move(measure)), d_(d), c_(c) {
    validate_measure(measure_, 0.0, 1.0, "subordinator mechanism");
    require(std::isfinite(d_) && d_ >= 0.0, "subordinator mechanism: d must be nonnegative");
    require(std::isfinite(c_) && c_ >= 0.0, "subordinator mechanism: c must be nonnegative");
}

double SubordinatorMechanism::operator()(double y) const {
    require_arg(y, "subordinator mechanism");
    if (std::isinf(y)) {
        if (d_ > 0.0 || measure_.stable) return kInf;
        return measure_.atom_mass() + c_;
    }
    return detail::bernstein_transform(measure_, y) + d_ * y + c_;
}

// ---- NotUp ----

NotUpMechanism::NotUpMechanism(JumpMeasure measure, double a, double d)
    : measure_(std::move(measure)), a_(a), d_(d) {
    validate_measure(measure_, 0.0, 2.0, "not-drifting-up mechanism");
    require(std::isfinite(a_) && a_ >= 0.0, "not-drifting-up mechanism: a must be nonnegative");
    require(std::isfinite(d_) && d_ >= 0.0, "not-drifting-up mechanism: d must be nonnegative");
}

double NotUpMechanism::operator()(double y) const {
    require_arg(y, "not-drifting-up mechanism");
    if (std::isinf(y)) return is_zero() ? 0.0 : kInf;
    return detail::compensated_transform(measure_, y) + a_ * y * y + d_ * y;
}

// ---- Env ----

EnvMechanism::EnvMechanism(JumpMeasure measure, double a, double b, double c)
    : measure_(std::move(measure)), a_(a), b_(b), c_(c) {
    validate_measure(measure_, -1.0, 2.0, "environment mechanism");
    require(std::isfinite(a_) && a_ >= 0.0, "environment mechanism: a must be nonnegative");
    require(std::isfinite(b_), "environment mechanism: b must be finite");
    require(std::isfinite(c_) && c_ >= 0.0, "environment mechanism: c must be nonnegative");
}

bool EnvMechanism::has_atom_at_minus_one() const {
    for (const auto& at : measure_.atoms)
        if (at.location == -1.0) return true;
    return false;
}

double EnvMechanism::operator()(double z) const {
    require_arg(z, "environment mechanism");
    if (std::isinf(z)) {
        if (a_ > 0.0 || measure_.stable) return kInf;
        double lin = -b_;
        for (const auto& at : measure_.atoms) {
            if (at.location < 0) return kInf;
            if (at.location <= 1.0) lin += at.location * at.mass;
        }
        if (lin > 0) return kInf;
        if (lin < 0) return -kInf;
        return -measure_.atom_mass() - c_;
    }
    double s = 0.0;
    for (const auto& at : measure_.atoms) {
        const double zm = at.location * z;
        s += at.mass * (std::fabs(at.location) <= 1.0 ? detail::comp_exp(zm) : std::expm1(-zm));
    }
    if (measure_.stable)
        s += measure_.stable->scale * detail::stable_compensated_integral(measure_.stable->alpha, z);
    return s + a_ * z * z - b_ * z - c_;
}

double evaluate(const SpLpMechanism& m, double y) { return m(y); }
double evaluate(const SubordinatorMechanism& m, double y) { return m(y); }
double evaluate(const NotUpMechanism& m, double y) { return m(y); }
double evaluate(const EnvMechanism& m, double z) { return m(z); }

double derivative_at_zero(const SpLpMechanism& m) {
    double s = -m.b();
    for (const auto& at : m.measure().atoms)
        if (at.location > 1.0) s -= at.location * at.mass;
    return s;
}

double derivative_at_zero(const SubordinatorMechanism& m) {
    return m.d() + m.measure().first_moment();
}

double derivative_at_zero(const NotUpMechanism& m) { return m.d(); }

SpLpMechanism combine(const SpLpMechanism& p, double wp, const SpLpMechanism& q, double wq) {
    return SpLpMechanism(merge(p.measure(), wp, q.measure(), wq), wp * p.a() + wq * q.a(),
                         wp * p.b() + wq * q.b(), wp * p.c() + wq * q.c());
}

SubordinatorMechanism combine(const SubordinatorMechanism& p, double wp,
                              const SubordinatorMechanism& q, double wq) {
    return SubordinatorMechanism(merge(p.measure(), wp, q.measure(), wq), wp * p.d() + wq * q.d(),
                                 wp * p.c() + wq * q.c());
}

NotUpMechanism combine(const NotUpMechanism& p, double wp, const NotUpMechanism& q, double wq) {
    return NotUpMechanism(merge(p.measure(), wp, q.measure(), wq), wp * p.a() + wq * q.a(),
                          wp * p.d() + wq * q.d());
}

EnvMechanism combine(const EnvMechanism& p, double wp, const EnvMechanism& q, double wq) {
    return EnvMechanism(merge(p.measure(), wp, q.measure(), wq), wp * p.a() + wq * q.a(),
                        wp * p.b() + wq * q.b(), wp * p.c() + wq * q.c());
}

}  // namespace lapdual
