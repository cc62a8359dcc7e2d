#include "lapdual/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace lapdual {

using json = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

// Object reader that tracks which keys were consumed.
class Obj {
  public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    const json& at(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(join(path_, key), "missing required key");
        seen_.insert(key);
        return j_.at(key);
    }
    std::string path(const std::string& key) const { return join(path_, key); }
    const std::string& path() const { return path_; }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw ConfigError(join(path_, k), "unknown key");
    }

  private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

double num(const json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string() && v.get<std::string>() == "inf") return kInf;
    throw ConfigError(path, "expected a number or \"inf\"");
}

json put(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}

std::int64_t integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    return v.get<std::int64_t>();
}

std::uint64_t unsigned_integer(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(path, "expected a nonnegative integer");
}

bool boolean(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
    return v.get<bool>();
}

std::string text(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(num(v[i], index(path, i)));
    return out;
}

json put(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(put(x));
    return a;
}

// ---- mechanisms ----

enum class MechClass { SpLp, Subordinator, NotUp, Env };

std::string_view class_name(MechClass c) {
    switch (c) {
        case MechClass::SpLp: return "splp";
        case MechClass::Subordinator: return "subordinator";
        case MechClass::NotUp: return "notup";
        case MechClass::Env: return "env";
    }
    return "";
}

JumpMeasure read_measure(Obj& o) {
    JumpMeasure m;
    if (o.has("atoms")) {
        const json& a = o.at("atoms");
        const std::string p = o.path("atoms");
        if (!a.is_array()) throw ConfigError(p, "expected an array of [location, mass] pairs");
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!a[i].is_array() || a[i].size() != 2)
                throw ConfigError(index(p, i), "expected a [location, mass] pair");
            m.atoms.push_back({num(a[i][0], index(p, i)), num(a[i][1], index(p, i))});
        }
    }
    if (o.has("stable")) {
        Obj s(o.at("stable"), o.path("stable"));
        m.stable = StableDensity{num(s.at("alpha"), s.path("alpha")), num(s.at("scale"), s.path("scale"))};
        s.finish();
    }
    return m;
}

template <class M>
M read_mechanism(const json& j, const std::string& path, MechClass expected) {
    Obj o(j, path);
    if (o.has("class")) {
        const std::string c = text(o.at("class"), o.path("class"));
        if (c != "splp" && c != "subordinator" && c != "notup" && c != "env")
            throw ConfigError(o.path("class"), "unknown mechanism class \"" + c + "\"");
        if (c != class_name(expected))
            throw ConfigError(o.path("class"), "expected a " + std::string(class_name(expected)) +
                                                   " mechanism, got \"" + c + "\"");
    }
    JumpMeasure m = read_measure(o);
    auto coef = [&](const char* key) { return o.has(key) ? num(o.at(key), o.path(key)) : 0.0; };
    try {
        if constexpr (std::is_same_v<M, SpLpMechanism>) {
            const double a = coef("a"), b = coef("b"), c = coef("c");
            o.finish();
            return SpLpMechanism(std::move(m), a, b, c);
        } else if constexpr (std::is_same_v<M, SubordinatorMechanism>) {
            const double d = coef("d"), c = coef("c");
            o.finish();
            return SubordinatorMechanism(std::move(m), d, c);
        } else if constexpr (std::is_same_v<M, NotUpMechanism>) {
            const double a = coef("a"), d = coef("d");
            o.finish();
            return NotUpMechanism(std::move(m), a, d);
        } else {
            const double a = coef("a"), b = coef("b"), c = coef("c");
            o.finish();
            return EnvMechanism(std::move(m), a, b, c);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const ValidationError& e) {
        throw ConfigError(path, e.what());
    }
}

json write_measure(const JumpMeasure& m, MechClass c) {
    json o = json::object();
    o["class"] = class_name(c);
    if (!m.atoms.empty()) {
        json a = json::array();
        for (const auto& at : m.atoms) a.push_back(json::array({put(at.location), put(at.mass)}));
        o["atoms"] = a;
    }
    if (m.stable) o["stable"] = json{{"alpha", put(m.stable->alpha)}, {"scale", put(m.stable->scale)}};
    return o;
}

json write(const SpLpMechanism& m) {
    json o = write_measure(m.measure(), MechClass::SpLp);
    o["a"] = put(m.a());
    o["b"] = put(m.b());
    o["c"] = put(m.c());
    return o;
}
json write(const SubordinatorMechanism& m) {
    json o = write_measure(m.measure(), MechClass::Subordinator);
    o["d"] = put(m.d());
    o["c"] = put(m.c());
    return o;
}
json write(const NotUpMechanism& m) {
    json o = write_measure(m.measure(), MechClass::NotUp);
    o["a"] = put(m.a());
    o["d"] = put(m.d());
    return o;
}
json write(const EnvMechanism& m) {
    json o = write_measure(m.measure(), MechClass::Env);
    o["a"] = put(m.a());
    o["b"] = put(m.b());
    o["c"] = put(m.c());
    return o;
}

// ---- process specs ----

ProcessSpec read_spec(const json& j, const std::string& path) {
    Obj o(j, path);
    const std::string kind = text(o.at("kind"), o.path("kind"));
    auto psi = [&] { return read_mechanism<SpLpMechanism>(o.at("psi"), o.path("psi"), MechClass::SpLp); };
    auto phi = [&] {
        return read_mechanism<SubordinatorMechanism>(o.at("phi"), o.path("phi"), MechClass::Subordinator);
    };
    auto sigma = [&] { return read_mechanism<NotUpMechanism>(o.at("sigma"), o.path("sigma"), MechClass::NotUp); };
    auto kappa = [&] { return read_mechanism<EnvMechanism>(o.at("kappa"), o.path("kappa"), MechClass::Env); };
    ProcessSpec spec;
    if (kind == "cb") {
        spec = CbSpec{psi()};
    } else if (kind == "subordinator") {
        spec = SubordinatorSpec{phi()};
    } else if (kind == "killed_constant") {
        KilledConstantSpec k{phi()};
        if (o.has("zero_absorbing")) k.zero_absorbing = boolean(o.at("zero_absorbing"), o.path("zero_absorbing"));
        spec = k;
    } else if (kind == "deterministic_flow") {
        spec = DeterministicFlowSpec{psi()};
    } else if (kind == "killed_flow") {
        spec = KilledFlowSpec{psi(), phi()};
    } else if (kind == "cbc") {
        spec = CbcSpec{psi(), sigma()};
    } else if (kind == "diffusion_dual") {
        spec = DiffusionDualSpec{sigma(), psi()};
    } else if (kind == "cbci") {
        spec = CbciSpec{psi(), sigma(), phi()};
    } else if (kind == "cbci_dual") {
        spec = CbciDualSpec{sigma(), psi(), phi()};
    } else if (kind == "cbre") {
        spec = CbreSpec{psi(), kappa()};
    } else if (kind == "cbre_dual") {
        spec = CbreDualSpec{psi(), kappa()};
    } else if (kind == "decomposable") {
        DecomposableSpec d;
        if (o.has("sigma_pairs")) {
            const json& a = o.at("sigma_pairs");
            const std::string p = o.path("sigma_pairs");
            if (!a.is_array()) throw ConfigError(p, "expected an array");
            for (std::size_t i = 0; i < a.size(); ++i) {
                Obj q(a[i], index(p, i));
                d.sigma_pairs.push_back({read_mechanism<NotUpMechanism>(q.at("rate"), q.path("rate"), MechClass::NotUp),
                                         read_mechanism<NotUpMechanism>(q.at("law"), q.path("law"), MechClass::NotUp)});
                q.finish();
            }
        }
        if (o.has("phi_pairs")) {
            const json& a = o.at("phi_pairs");
            const std::string p = o.path("phi_pairs");
            if (!a.is_array()) throw ConfigError(p, "expected an array");
            for (std::size_t i = 0; i < a.size(); ++i) {
                Obj q(a[i], index(p, i));
                d.phi_pairs.push_back(
                    {read_mechanism<SubordinatorMechanism>(q.at("rate"), q.path("rate"), MechClass::Subordinator),
                     read_mechanism<SubordinatorMechanism>(q.at("law"), q.path("law"), MechClass::Subordinator)});
                q.finish();
            }
        }
        spec = d;
    } else {
        throw ConfigError(o.path("kind"), "unknown process kind \"" + kind + "\"");
    }
    o.finish();
    try {
        validate_spec(spec);
    } catch (const ValidationError& e) {
        throw ConfigError(path, e.what());
    }
    return spec;
}

json write_spec(const ProcessSpec& spec) {
    json o = json::object();
    o["kind"] = std::string(kind_name(spec));
    std::visit(overloaded{
                   [&](const CbSpec& s) { o["psi"] = write(s.psi); },
                   [&](const SubordinatorSpec& s) { o["phi"] = write(s.phi); },
                   [&](const KilledConstantSpec& s) {
                       o["phi"] = write(s.phi);
                       o["zero_absorbing"] = s.zero_absorbing;
                   },
                   [&](const DeterministicFlowSpec& s) { o["psi"] = write(s.psi); },
                   [&](const KilledFlowSpec& s) {
                       o["psi"] = write(s.psi);
                       o["phi"] = write(s.phi);
                   },
                   [&](const CbcSpec& s) {
                       o["psi"] = write(s.psi);
                       o["sigma"] = write(s.sigma);
                   },
                   [&](const DiffusionDualSpec& s) {
                       o["sigma"] = write(s.sigma);
                       o["psi"] = write(s.psi);
                   },
                   [&](const CbciSpec& s) {
                       o["psi"] = write(s.psi);
                       o["sigma"] = write(s.sigma);
                       o["phi"] = write(s.phi);
                   },
                   [&](const CbciDualSpec& s) {
                       o["sigma"] = write(s.sigma);
                       o["psi"] = write(s.psi);
                       o["phi"] = write(s.phi);
                   },
                   [&](const CbreSpec& s) {
                       o["psi"] = write(s.psi);
                       o["kappa"] = write(s.kappa);
                   },
                   [&](const CbreDualSpec& s) {
                       o["psi"] = write(s.psi);
                       o["kappa"] = write(s.kappa);
                   },
                   [&](const DecomposableSpec& s) {
                       json sp = json::array(), pp = json::array();
                       for (const auto& p : s.sigma_pairs) sp.push_back(json{{"rate", write(p.rate)}, {"law", write(p.law)}});
                       for (const auto& p : s.phi_pairs) pp.push_back(json{{"rate", write(p.rate)}, {"law", write(p.law)}});
                       o["sigma_pairs"] = sp;
                       o["phi_pairs"] = pp;
                   },
               },
               spec);
    return o;
}

// ---- top level ----

ExperimentKind read_kind(const json& v, const std::string& path) {
    const std::string s = text(v, path);
    for (auto k : {ExperimentKind::Duality, ExperimentKind::Cm, ExperimentKind::GeneratorFd, ExperimentKind::Flow,
                   ExperimentKind::SymbolCheck, ExperimentKind::NegativePart})
        if (experiment_name(k) == s) return k;
    throw ConfigError(path, "unknown experiment \"" + s + "\"");
}

ConventionPair read_convention(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected two convention tokens");
    std::optional<ZeroInf> zi;
    std::optional<InfZero> iz;
    for (std::size_t i = 0; i < 2; ++i) {
        const std::string tok = text(v[i], index(path, i));
        if (tok == "0+inf" || tok == "0inf-") {
            if (zi) throw ConfigError(index(path, i), "two tokens for 0 * inf");
            zi = tok == "0+inf" ? ZeroInf::ZeroPlusInf : ZeroInf::ZeroInfMinus;
        } else if (tok == "inf0+" || tok == "inf-0") {
            if (iz) throw ConfigError(index(path, i), "two tokens for inf * 0");
            iz = tok == "inf0+" ? InfZero::InfZeroPlus : InfZero::InfMinusZero;
        } else {
            throw ConfigError(index(path, i), "unknown convention token \"" + tok + "\"");
        }
    }
    return {*zi, *iz};
}

SimConfig read_sim(const json& j, const std::string& path) {
    Obj o(j, path);
    SimConfig s;
    s.seed = unsigned_integer(o.at("seed"), o.path("seed"));
    if (o.has("step")) s.step = num(o.at("step"), o.path("step"));
    if (o.has("horizon")) s.horizon = num(o.at("horizon"), o.path("horizon"));
    if (o.has("paths")) s.paths = static_cast<long>(integer(o.at("paths"), o.path("paths")));
    if (o.has("explosion_cap")) s.explosion_cap = num(o.at("explosion_cap"), o.path("explosion_cap"));
    if (o.has("small_jump_cut")) s.small_jump_cut = num(o.at("small_jump_cut"), o.path("small_jump_cut"));
    if (o.has("absorption_floor")) s.absorption_floor = num(o.at("absorption_floor"), o.path("absorption_floor"));
    if (o.has("threads")) s.threads = static_cast<int>(integer(o.at("threads"), o.path("threads")));
    o.finish();
    return s;
}

json write_sim(const SimConfig& s) {
    json o = json::object();
    o["seed"] = s.seed;
    o["step"] = put(s.step);
    o["horizon"] = put(s.horizon);
    o["paths"] = s.paths;
    o["explosion_cap"] = put(s.explosion_cap);
    o["small_jump_cut"] = put(s.small_jump_cut);
    if (s.absorption_floor) o["absorption_floor"] = put(*s.absorption_floor);
    o["threads"] = s.threads;
    return o;
}

Gate read_gate(const json& j, const std::string& path) {
    Obj o(j, path);
    Gate g;
    if (o.has("max_abs_z")) g.max_abs_z = num(o.at("max_abs_z"), o.path("max_abs_z"));
    if (o.has("min_pass_fraction")) g.min_pass_fraction = num(o.at("min_pass_fraction"), o.path("min_pass_fraction"));
    if (o.has("replicates")) g.replicates = static_cast<int>(integer(o.at("replicates"), o.path("replicates")));
    if (o.has("max_frac_inf")) g.max_frac_inf = num(o.at("max_frac_inf"), o.path("max_frac_inf"));
    if (o.has("require_non_explosive"))
        g.require_non_explosive = boolean(o.at("require_non_explosive"), o.path("require_non_explosive"));
    if (o.has("tolerance")) g.tolerance = num(o.at("tolerance"), o.path("tolerance"));
    o.finish();
    return g;
}

json write_gate(const Gate& g) {
    return json{{"max_abs_z", put(g.max_abs_z)},
                {"min_pass_fraction", put(g.min_pass_fraction)},
                {"replicates", g.replicates},
                {"max_frac_inf", put(g.max_frac_inf)},
                {"require_non_explosive", g.require_non_explosive},
                {"tolerance", put(g.tolerance)}};
}

ExperimentConfig read_config(const json& j) {
    Obj o(j, "");
    ExperimentConfig c;
    c.name = text(o.at("name"), "name");
    c.experiment = read_kind(o.at("experiment"), "experiment");
    if (o.has("description")) c.description = text(o.at("description"), "description");
    if (o.has("left")) c.left = read_spec(o.at("left"), "left");
    if (o.has("right")) c.right = read_spec(o.at("right"), "right");
    if (o.has("analytic")) {
        Obj a(o.at("analytic"), "analytic");
        if (a.has("left")) c.analytic_left = boolean(a.at("left"), "analytic.left");
        if (a.has("right")) c.analytic_right = boolean(a.at("right"), "analytic.right");
        a.finish();
    }
    if (o.has("null")) c.null_experiment = boolean(o.at("null"), "null");
    if (o.has("grid")) {
        Obj g(o.at("grid"), "grid");
        if (g.has("x")) c.grid.x = numbers(g.at("x"), "grid.x");
        if (g.has("y")) c.grid.y = numbers(g.at("y"), "grid.y");
        if (g.has("t")) c.grid.t = numbers(g.at("t"), "grid.t");
        g.finish();
    }
    c.sim = read_sim(o.at("sim"), "sim");
    if (o.has("convention")) c.convention = read_convention(o.at("convention"), "convention");
    if (o.has("gate")) c.gate = read_gate(o.at("gate"), "gate");
    if (o.has("cm")) {
        Obj m(o.at("cm"), "cm");
        if (m.has("order")) c.cm.order = static_cast<int>(integer(m.at("order"), "cm.order"));
        if (m.has("y")) c.cm.y = num(m.at("y"), "cm.y");
        if (m.has("noise_factor")) c.cm.noise_factor = num(m.at("noise_factor"), "cm.noise_factor");
        m.finish();
    }
    if (o.has("fd")) {
        Obj f(o.at("fd"), "fd");
        if (f.has("h")) c.fd.h = numbers(f.at("h"), "fd.h");
        if (f.has("cases")) {
            const json& a = f.at("cases");
            if (!a.is_array()) throw ConfigError("fd.cases", "expected an array");
            for (std::size_t i = 0; i < a.size(); ++i) {
                const std::string p = index("fd.cases", i);
                Obj q(a[i], p);
                FdCase fc{read_spec(q.at("spec"), q.path("spec"))};
                if (q.has("x")) fc.x = num(q.at("x"), q.path("x"));
                if (q.has("y")) fc.y = num(q.at("y"), q.path("y"));
                q.finish();
                c.fd.cases.push_back(std::move(fc));
            }
        }
        f.finish();
    }
    if (o.has("flow")) {
        Obj f(o.at("flow"), "flow");
        if (f.has("s")) c.flow.s = numbers(f.at("s"), "flow.s");
        if (f.has("random_cases"))
            c.flow.random_cases = static_cast<int>(integer(f.at("random_cases"), "flow.random_cases"));
        f.finish();
    }
    if (o.has("symbol")) {
        Obj s(o.at("symbol"), "symbol");
        if (s.has("random_seed")) c.symbol_seed = unsigned_integer(s.at("random_seed"), "symbol.random_seed");
        s.finish();
    }
    if (o.has("negative_part")) {
        Obj n(o.at("negative_part"), "negative_part");
        if (n.has("grid_cap")) c.negative_part.grid_cap = num(n.at("grid_cap"), "negative_part.grid_cap");
        if (n.has("grid_n")) c.negative_part.grid_n = static_cast<int>(integer(n.at("grid_n"), "negative_part.grid_n"));
        n.finish();
    }
    if (o.has("output")) c.output = text(o.at("output"), "output");
    o.finish();
    return c;
}

void set_path(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set", "expected key=value, got \"" + assignment + "\"");
    const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    json* node = &doc;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::string& p = parts[i];
        if (p.empty()) throw ConfigError("--set", "empty segment in \"" + key + "\"");
        const bool last = i + 1 == parts.size();
        if (node->is_array()) {
            if (!std::all_of(p.begin(), p.end(), ::isdigit) || std::stoul(p) >= node->size())
                throw ConfigError("--set", "bad array index \"" + p + "\" in \"" + key + "\"");
            node = &(*node)[std::stoul(p)];
        } else {
            if (node->is_null()) *node = json::object();
            if (!node->is_object()) throw ConfigError("--set", "\"" + key + "\" descends into a non-object");
            node = &(*node)[p];
        }
        if (last) *node = value;
    }
}

}  // namespace

std::string_view experiment_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Duality: return "duality";
        case ExperimentKind::Cm: return "cm";
        case ExperimentKind::GeneratorFd: return "generator_fd";
        case ExperimentKind::Flow: return "flow";
        case ExperimentKind::SymbolCheck: return "symbol_check";
        case ExperimentKind::NegativePart: return "negative_part";
    }
    return "";
}

std::string_view zero_inf_token(ZeroInf z) { return z == ZeroInf::ZeroPlusInf ? "0+inf" : "0inf-"; }
std::string_view inf_zero_token(InfZero z) { return z == InfZero::InfZeroPlus ? "inf0+" : "inf-0"; }

ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
    json doc = json::parse(text.begin(), text.end(), nullptr, false);
    if (doc.is_discarded()) throw ConfigError("", "not valid JSON");
    for (const auto& o : overrides) set_path(doc, o);
    ExperimentConfig c = read_config(doc);
    validate_config(c);
    return c;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

std::string dump_config(const ExperimentConfig& c) {
    json o = json::object();
    o["name"] = c.name;
    o["experiment"] = std::string(experiment_name(c.experiment));
    if (!c.description.empty()) o["description"] = c.description;
    if (c.left) o["left"] = write_spec(*c.left);
    if (c.right) o["right"] = write_spec(*c.right);
    if (c.analytic_left || c.analytic_right) o["analytic"] = json{{"left", c.analytic_left}, {"right", c.analytic_right}};
    if (c.null_experiment) o["null"] = true;
    json g = json::object();
    if (!c.grid.x.empty()) g["x"] = put(c.grid.x);
    if (!c.grid.y.empty()) g["y"] = put(c.grid.y);
    if (!c.grid.t.empty()) g["t"] = put(c.grid.t);
    if (!g.empty()) o["grid"] = g;
    o["sim"] = write_sim(c.sim);
    o["convention"] = json::array({std::string(zero_inf_token(c.convention.zero_inf)),
                                   std::string(inf_zero_token(c.convention.inf_zero))});
    o["gate"] = write_gate(c.gate);
    if (c.experiment == ExperimentKind::Cm || c.cm != CmParams{})
        o["cm"] = json{{"order", c.cm.order}, {"y", put(c.cm.y)}, {"noise_factor", put(c.cm.noise_factor)}};
    if (c.experiment == ExperimentKind::GeneratorFd || c.fd != FdParams{}) {
        json cases = json::array();
        for (const auto& fc : c.fd.cases) cases.push_back(json{{"spec", write_spec(fc.spec)}, {"x", put(fc.x)}, {"y", put(fc.y)}});
        o["fd"] = json{{"h", put(c.fd.h)}, {"cases", cases}};
    }
    if (c.experiment == ExperimentKind::Flow || c.flow != FlowParams{})
        o["flow"] = json{{"s", put(c.flow.s)}, {"random_cases", c.flow.random_cases}};
    if (c.symbol_seed) o["symbol"] = json{{"random_seed", *c.symbol_seed}};
    if (c.experiment == ExperimentKind::NegativePart || c.negative_part != NegativePartParams{})
        o["negative_part"] = json{{"grid_cap", put(c.negative_part.grid_cap)}, {"grid_n", c.negative_part.grid_n}};
    if (!c.output.empty()) o["output"] = c.output;
    return o.dump(2) + "\n";
}

void validate_config(const ExperimentConfig& c) {
    auto need = [](bool ok, const std::string& path, const std::string& msg) {
        if (!ok) throw ConfigError(path, msg);
    };
    auto nonneg = [&](const std::vector<double>& v, const std::string& path) {
        need(!v.empty(), path, "must not be empty");
        for (std::size_t i = 0; i < v.size(); ++i) need(v[i] >= 0.0, index(path, i), "must be in [0, inf]");
    };
    auto times = [&](const std::vector<double>& v, const std::string& path) {
        nonneg(v, path);
        for (std::size_t i = 0; i < v.size(); ++i) need(std::isfinite(v[i]), index(path, i), "must be finite");
    };
    need(!c.name.empty(), "name", "must not be empty");
    try {
        c.sim.validate();
    } catch (const ValidationError& e) {
        throw ConfigError("sim", e.what());
    }
    need(c.gate.max_abs_z > 0.0, "gate.max_abs_z", "must be positive");
    need(c.gate.min_pass_fraction >= 0.0 && c.gate.min_pass_fraction <= 1.0, "gate.min_pass_fraction",
         "must be in [0, 1]");
    need(c.gate.replicates >= 1, "gate.replicates", "must be at least 1");
    need(c.gate.max_frac_inf >= 0.0 && c.gate.max_frac_inf <= 1.0, "gate.max_frac_inf", "must be in [0, 1]");
    need(c.gate.tolerance >= 0.0, "gate.tolerance", "must be nonnegative");

    switch (c.experiment) {
        case ExperimentKind::Duality:
            need(c.left.has_value(), "left", "missing process spec");
            if (c.null_experiment) {
                need(!c.right, "right", "a null experiment takes no right spec");
                need(!c.analytic_left && !c.analytic_right, "analytic", "a null experiment is simulated on both sides");
            } else {
                need(c.right.has_value(), "right", "missing process spec");
                need(is_dual_pair(*c.left, *c.right), "right",
                     std::string(kind_name(*c.left)) + " and " + std::string(kind_name(*c.right)) +
                         " are not a recognized dual pair");
                need(!c.analytic_right || has_analytic_transform(*c.right), "analytic.right",
                     "no closed form for " + std::string(kind_name(*c.right)));
            }
            need(!c.analytic_left || has_analytic_transform(*c.left), "analytic.left",
                 "no closed form for " + std::string(kind_name(*c.left)));
            nonneg(c.grid.x, "grid.x");
            nonneg(c.grid.y, "grid.y");
            times(c.grid.t, "grid.t");
            break;
        case ExperimentKind::Cm:
            need(c.left.has_value(), "left", "missing process spec");
            need(c.cm.order >= 1, "cm.order", "must be at least 1");
            need(c.cm.y >= 0.0, "cm.y", "must be in [0, inf]");
            need(c.cm.noise_factor >= 0.0 && std::isfinite(c.cm.noise_factor), "cm.noise_factor",
                 "must be finite and nonnegative");
            nonneg(c.grid.x, "grid.x");
            need(c.grid.x.size() >= static_cast<std::size_t>(c.cm.order) + 1, "grid.x", "needs at least order + 1 points");
            for (std::size_t i = 1; i < c.grid.x.size(); ++i)
                need(c.grid.x[i] > c.grid.x[i - 1] && std::isfinite(c.grid.x[i]), index("grid.x", i),
                     "must be finite and strictly increasing");
            times(c.grid.t, "grid.t");
            break;
        case ExperimentKind::GeneratorFd:
            need(!c.fd.cases.empty(), "fd.cases", "must not be empty");
            need(!c.fd.h.empty(), "fd.h", "must not be empty");
            for (std::size_t i = 0; i < c.fd.h.size(); ++i)
                need(c.fd.h[i] > 0.0 && std::isfinite(c.fd.h[i]) && (i == 0 || c.fd.h[i] < c.fd.h[i - 1]),
                     index("fd.h", i), "steps must be positive and decreasing");
            for (std::size_t i = 0; i < c.fd.cases.size(); ++i) {
                const auto& fc = c.fd.cases[i];
                const std::string p = index("fd.cases", i);
                need(has_analytic_transform(fc.spec), p + ".spec", "no closed form for " + std::string(kind_name(fc.spec)));
                need(fc.x >= 0.0 && std::isfinite(fc.x), p + ".x", "must be finite and nonnegative");
                need(fc.y > 0.0 && std::isfinite(fc.y), p + ".y", "must be finite and positive");
            }
            break;
        case ExperimentKind::Flow:
            need(c.left && (std::holds_alternative<CbSpec>(*c.left) ||
                            std::holds_alternative<DeterministicFlowSpec>(*c.left)),
                 "left", "flow experiments take a cb or deterministic_flow spec");
            need(c.flow.random_cases >= 0, "flow.random_cases", "must be nonnegative");
            if (!c.grid.y.empty() || c.flow.random_cases == 0) {
                nonneg(c.grid.y, "grid.y");
                for (std::size_t i = 0; i < c.grid.y.size(); ++i)
                    need(c.grid.y[i] > 0.0 && std::isfinite(c.grid.y[i]), index("grid.y", i), "must be finite and positive");
                times(c.grid.t, "grid.t");
                times(c.flow.s, "flow.s");
            }
            break;
        case ExperimentKind::SymbolCheck:
            need(c.symbol_seed || c.left, "symbol", "needs symbol.random_seed or a left spec");
            nonneg(c.grid.x, "grid.x");
            nonneg(c.grid.y, "grid.y");
            break;
        case ExperimentKind::NegativePart:
            need(c.symbol_seed || c.left, "symbol", "needs symbol.random_seed or a left spec");
            need(c.negative_part.grid_cap > 0.0 && std::isfinite(c.negative_part.grid_cap), "negative_part.grid_cap",
                 "must be finite and positive");
            need(c.negative_part.grid_n >= 2, "negative_part.grid_n", "must be at least 2");
            break;
    }
}

}  // namespace lapdual
