#include "lapdual/flows.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace lapdual {

namespace {

// Dormand-Prince tableau
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

FlowResult integrate(const SpLpMechanism& psi, const SubordinatorMechanism* phi, double y, double t,
                     const FlowOptions& opt) {
    if (!(y > 0.0)) throw ValidationError("flow: starting value must be positive");
    if (!(t >= 0.0) || std::isinf(t)) throw ValidationError("flow: time must be finite and nonnegative");
    if (!(opt.tol > 0.0)) throw ValidationError("flow: tolerance must be positive");
    FlowResult r;
    if (std::isinf(y)) {
        r.u = kInf;
        r.blow_up = true;
        if (phi && t > 0) {
            r.phi_integral = phi->is_zero() ? 0.0 : (*phi)(kInf) * t;
            r.killed_weight = std::exp(-r.phi_integral);
        }
        return r;
    }
    auto f = [&](double u) { return -psi(u); };
    double u = y;
    double s = 0.0;
    double k1 = f(u);
    double h = std::min(t, 1e-3 * std::max(1.0, std::fabs(u) / std::max(std::fabs(k1), 1e-300)));
    h = std::max(h, std::min(t, 1e-8));
    const double h_min = 1e-14 * std::max(1.0, t);
    double integral = 0.0;
    double phi_here = phi ? (*phi)(u) : 0.0;
    while (s < t) {
        if (r.steps_used >= opt.max_steps) throw NumericError("flow: step budget exhausted");
        if (s + h > t) h = t - s;
        const double k2 = f(u + h * a21 * k1);
        const double k3 = f(u + h * (a31 * k1 + a32 * k2));
        const double k4 = f(u + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const double k5 = f(u + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const double k6 = f(u + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        const double un = u + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double k7 = f(un);
        const double err = std::fabs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
        const double scale = opt.tol * std::max({1.0, std::fabs(u), std::fabs(un)});
        const double ratio = std::isfinite(err) && std::isfinite(un) ? err / scale : 1e10;
        if (ratio <= 1.0) {
            if (phi) {
                // Hermite midpoint from the endpoint slopes, then Simpson.
                const double um = std::max(0.5 * (u + un) + h * (k1 - k7) / 8.0, 0.0);
                const double phi_end = (*phi)(std::max(un, 0.0));
                integral += h / 6.0 * (phi_here + 4.0 * (*phi)(um) + phi_end);
                phi_here = phi_end;
            }
            s += h;
            u = std::max(un, opt.positivity_floor);
            k1 = (un == u) ? k7 : f(u);
            ++r.steps_used;
            if (u >= opt.blow_up_cap) {
                r.blow_up = true;
                break;
            }
        }
        const double grow = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
        h *= grow;
        if (s < t && h < h_min) {
            std::ostringstream os;
            os << "flow: step size underflow at s=" << s << ", u=" << u;
            throw NumericError(os.str());
        }
    }
    if (r.blow_up) {
        r.u = kInf;
        // the remaining time is spent at infinity
        if (phi && s < t && !phi->is_zero()) integral += (*phi)(kInf) * (t - s);
    } else {
        r.u = u;
    }
    r.phi_integral = integral;
    r.killed_weight = std::exp(-integral);
    return r;
}

}  // namespace

FlowResult cb_flow(const SpLpMechanism& psi, double y, double t, const FlowOptions& opt) {
    return integrate(psi, nullptr, y, t, opt);
}

FlowResult cb_flow(const SpLpMechanism& psi, double y, double t, double tol) {
    FlowOptions opt;
    opt.tol = tol;
    return integrate(psi, nullptr, y, t, opt);
}

FlowResult cbi_flow(const SpLpMechanism& psi, const SubordinatorMechanism& phi, double y, double t,
                    const FlowOptions& opt) {
    return integrate(psi, &phi, y, t, opt);
}

double cb_laplace(const SpLpMechanism& psi, double x, double y, double t, const FlowOptions& opt) {
    if (x == 0.0) return 1.0;
    const FlowResult r = cb_flow(psi, y, t, opt);
    if (r.blow_up) return 0.0;
    return std::exp(-x * r.u);
}

double cbi_laplace(const SpLpMechanism& psi, const SubordinatorMechanism& phi, double x, double y, double t,
                   const FlowOptions& opt) {
    const FlowResult r = cbi_flow(psi, phi, y, t, opt);
    if (r.blow_up && x > 0.0) return 0.0;
    const double xu = x == 0.0 ? 0.0 : x * r.u;
    return std::exp(-xu - r.phi_integral);
}

double flow_semigroup_gap(const SpLpMechanism& psi, double y, double t, double s, const FlowOptions& opt) {
    const FlowResult direct = cb_flow(psi, y, t + s, opt);
    const FlowResult first = cb_flow(psi, y, s, opt);
    if (first.blow_up) return direct.blow_up ? 0.0 : kInf;
    const FlowResult second = cb_flow(psi, first.u, t, opt);
    if (direct.blow_up && second.blow_up) return 0.0;
    return std::fabs(direct.u - second.u);
}

FlowCase random_flow_case(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    FlowCase c;
    const double u1 = 0.1 + U(gen), m1 = U(gen), u2 = 1 + 2 * U(gen), m2 = U(gen);
    const double alpha = 0.2 + 1.7 * U(gen), scale = U(gen);
    const double a = U(gen), b = 2 * U(gen) - 1, k = 0.5 * U(gen);
    c.psi = SpLpMechanism(JumpMeasure{{{u1, m1}, {u2, m2}}, StableDensity{alpha, scale}}, a, b, k);
    c.y = 0.1 + 3 * U(gen);
    c.t = 2 * U(gen);
    c.s = 2 * U(gen);
    return c;
}

}  // namespace lapdual
