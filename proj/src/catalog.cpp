#include "lapdual/runner.hpp"

namespace lapdual {

namespace {

JumpMeasure atoms(std::vector<Atom> a) { return JumpMeasure{std::move(a), std::nullopt}; }

ExperimentConfig base(std::string name, ExperimentKind kind, std::string description) {
    ExperimentConfig c;
    c.output = "out/" + name;
    c.name = std::move(name);
    c.experiment = kind;
    c.description = std::move(description);
    return c;
}

SimConfig sim(double step, double horizon, long paths) {
    SimConfig s;
    s.step = step;
    s.horizon = horizon;
    s.paths = paths;
    s.seed = 20240601;
    return s;
}

std::vector<double> range(double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
    return v;
}

std::vector<ExperimentConfig> build() {
    std::vector<ExperimentConfig> out;
    const SpLpMechanism feller({}, 1, 0, 0);

    {
        auto c = base("subordinator_duality", ExperimentKind::Duality,
                      "killed-constant dual of a subordinator: MC E_x[exp(-X_t y)] against exp(-xy - t Phi(y))");
        const SubordinatorMechanism phi(atoms({{1, 0.5}, {2, 0.3}}), 0.2, 0);
        c.left = SubordinatorSpec{phi};
        c.right = KilledConstantSpec{phi};
        c.analytic_right = true;
        c.grid = {{0, 1, 2}, {0.5, 1, 2}, {0.5, 1}};
        c.sim = sim(1e-3, 1, 100000);
        out.push_back(c);
    }
    {
        auto c = base("cb_feller_duality", ExperimentKind::Duality,
                      "CB example, Feller branching Psi(u) = u^2: MC against exp(-x u_t(y)) from the dual flow");
        c.left = CbSpec{feller};
        c.right = DeterministicFlowSpec{feller};
        c.analytic_right = true;
        c.grid = {{0.5, 1, 2}, {0.5, 1}, {0.5, 1}};
        c.sim = sim(1e-3, 1, 100000);
        out.push_back(c);
    }
    {
        auto c = base("cbi_laplace", ExperimentKind::Duality,
                      "CBI example: MC CBCI with zero collisions against exp(-x u_t(y) - int Phi(u_s(y)) ds)");
        const SpLpMechanism psi({}, 0.5, -0.5, 0);
        const SubordinatorMechanism phi(atoms({{1, 1}}), 0.5, 0);
        c.left = CbciSpec{psi, NotUpMechanism(), phi};
        c.right = KilledFlowSpec{psi, phi};
        c.analytic_right = true;
        c.grid = {{0.5, 1.5}, {0.5, 1}, {0.5, 1}};
        c.sim = sim(1e-3, 1, 100000);
        out.push_back(c);
    }
    {
        auto c = base("cbc_duality", ExperimentKind::Duality,
                      "CB with collisions against its diffusion dual, both sides simulated, (0+inf, inf0+)");
        const SpLpMechanism psi({}, 0, -1, 0);
        const NotUpMechanism sigma({}, 1, 0);
        c.left = CbcSpec{psi, sigma};
        c.right = DiffusionDualSpec{sigma, psi};
        c.grid = {{1}, {1}, {0.5, 1}};
        c.sim = sim(1e-3, 1, 100000);
        out.push_back(c);
    }
    {
        auto c = base("cbre_duality", ExperimentKind::Duality,
                      "CB in a Levy random environment against its environment-driven dual, (0+inf, inf0+)");
        const SpLpMechanism psi({}, 1, 0, 0);
        const EnvMechanism kappa(atoms({{1, 0.5}}), 0, 0, 0);
        c.left = CbreSpec{psi, kappa};
        c.right = CbreDualSpec{psi, kappa};
        c.grid = {{1}, {1}, {0.5}};
        c.sim = sim(1e-3, 0.5, 100000);
        out.push_back(c);
    }
    {
        auto c = base("decomposable_duality", ExperimentKind::Duality,
                      "decomposable symbol against its hat swap, with the finite-derivative non-explosion screen");
        const DecomposableSpec d{
            {SigmaPair{NotUpMechanism(atoms({{1, 1}}), 0, 0), NotUpMechanism(atoms({{0.5, 1}}), 0, 0)}},
            {PhiPair{SubordinatorMechanism(atoms({{1, 1}}), 0, 0), SubordinatorMechanism(atoms({{1, 0.5}}), 0, 0)}}};
        c.left = d;
        c.right = hat_swap(d);
        c.grid = {{1}, {1}, {0.5}};
        c.sim = sim(1e-3, 0.5, 100000);
        c.gate.require_non_explosive = true;
        c.gate.max_frac_inf = 1e-3;
        out.push_back(c);
    }
    {
        auto c = base("symbol_duality", ExperimentKind::SymbolCheck,
                      "random seven-term symbol: psi(x,y) equals its dual at (y,x) on a 20x20 grid");
        c.symbol_seed = 7;
        c.grid.x = range(0, 10, 20);
        c.grid.y = range(0, 10, 20);
        c.gate.tolerance = 1e-12;
        c.sim = sim(1e-3, 1, 1);
        out.push_back(c);
    }
    {
        auto c = base("cb_feller_cm", ExperimentKind::Cm,
                      "complete monotonicity in x of MC Laplace transforms of the Feller CB, order 4");
        c.left = CbSpec{feller};
        c.grid.x = range(0, 5, 21);
        c.grid.t = {1};
        c.cm = CmParams{4, 1.0, 3.0};
        c.sim = sim(1e-2, 1, 20000);
        out.push_back(c);
    }
    {
        auto c = base("flow_semigroup", ExperimentKind::Flow,
                      "flow law u_{t+s} = u_t o u_s on a Feller grid and 50 random mechanisms");
        c.left = CbSpec{feller};
        c.grid.y = {0.5, 1, 2};
        c.grid.t = {0.5, 1};
        c.flow = FlowParams{{0.25, 1}, 50};
        c.gate.tolerance = 1e-8;
        c.sim = sim(1e-3, 1, 1);
        out.push_back(c);
    }
    {
        auto c = base("generator_fd", ExperimentKind::GeneratorFd,
                      "finite differences of closed-form semigroups against psi(x,y) exp(-xy)");
        c.fd.h = {1e-1, 1e-2, 1e-3, 1e-4};
        c.fd.cases = {FdCase{CbSpec{feller}, 1, 1}, FdCase{SubordinatorSpec{SubordinatorMechanism({}, 1, 0)}, 0, 2}};
        c.gate.tolerance = 1e-3;
        c.sim = sim(1e-3, 1, 1);
        out.push_back(c);
    }
    {
        auto c = base("boundary_conventions", ExperimentKind::Duality,
                      "killed subordinator on [0,inf]^2 including the boundary points, (0+inf, inf0+)");
        const SubordinatorMechanism phi(atoms({{1, 0.5}}), 0.3, 0.4);
        c.left = SubordinatorSpec{phi};
        c.right = KilledConstantSpec{phi};
        c.analytic_right = true;
        const std::vector<double> pts{0, 0.5, 1, 2, kInf};
        c.grid = {pts, pts, {0.7}};
        c.sim = sim(1e-3, 1, 100000);
        out.push_back(c);
    }
    {
        auto c = base("null_calibration", ExperimentKind::Duality,
                      "null experiment: the Feller CB against itself on independent streams over 20 seeds");
        c.left = CbSpec{feller};
        c.null_experiment = true;
        c.grid = {{0.5, 1, 1.5, 2, 3}, {0.25, 0.5, 1, 2, 4}, {0.5, 1}};
        c.sim = sim(1e-2, 1, 5000);
        c.gate.replicates = 20;
        c.gate.min_pass_fraction = 0.99;
        out.push_back(c);
    }
    return out;
}

}  // namespace

const std::vector<ExperimentConfig>& catalog() {
    static const std::vector<ExperimentConfig> entries = build();
    return entries;
}

const ExperimentConfig* find_in_catalog(const std::string& name) {
    for (const auto& c : catalog())
        if (c.name == name) return &c;
    return nullptr;
}

}  // namespace lapdual
