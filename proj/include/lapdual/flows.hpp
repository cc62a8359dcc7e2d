#pragma once

// Deterministic dual flow of a CB process: du/ds = -Psi(u), u_0 = y, and the
// Laplace transforms of CB and CBI semigroups built from it.

#include "lapdual/mechanisms.hpp"

#include <cstdint>

namespace lapdual {

struct FlowOptions {
    double tol = 1e-10;
    double blow_up_cap = 1e12;
    double positivity_floor = 1e-300;
    long max_steps = 10'000'000;
};

struct FlowResult {
    double u = 0.0;               ///< u_t(y); +inf on blow-up
    double killed_weight = 1.0;   ///< exp(-int_0^t Phi(u_s) ds)
    double phi_integral = 0.0;    ///< int_0^t Phi(u_s) ds
    long steps_used = 0;
    bool blow_up = false;
};

/// Dormand-Prince 5(4) with per-step error <= tol * max(1, |u|).
/// Throws NumericError when the step size underflows.
FlowResult cb_flow(const SpLpMechanism& psi, double y, double t, const FlowOptions& opt = {});
FlowResult cb_flow(const SpLpMechanism& psi, double y, double t, double tol);

/// Same flow with the killing integral int Phi(u_s) ds accumulated by Simpson's
/// rule on every accepted step.
FlowResult cbi_flow(const SpLpMechanism& psi, const SubordinatorMechanism& phi, double y, double t,
                    const FlowOptions& opt = {});

/// E_x[e^{-X_t y}] = exp(-x u_t(y)) for a CB process.
double cb_laplace(const SpLpMechanism& psi, double x, double y, double t, const FlowOptions& opt = {});

/// E_x[e^{-X_t y}] = exp(-x u_t(y) - int_0^t Phi(u_s(y)) ds) for a CBI process.
double cbi_laplace(const SpLpMechanism& psi, const SubordinatorMechanism& phi, double x, double y, double t,
                   const FlowOptions& opt = {});

/// |u_{t+s}(y) - u_t(u_s(y))|.
double flow_semigroup_gap(const SpLpMechanism& psi, double y, double t, double s, const FlowOptions& opt = {});

struct FlowCase {
    SpLpMechanism psi;
    double y;
    double t;
    double s;
};

/// Seeded mechanism with two atoms, a stable part, Gaussian, drift and
/// killing terms, with y in (0.1, 3.1) and t, s in (0, 2).
FlowCase random_flow_case(std::uint64_t seed);

}  // namespace lapdual
