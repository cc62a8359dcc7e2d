#include "lapdual/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lapdual {

namespace {

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

// Minimal line chart; non-finite points are dropped.
std::string svg_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series, std::optional<double> hline = std::nullopt) {
    const double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
    double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
    for (const auto& s : series)
        for (auto [x, y] : s.points)
            if (std::isfinite(x) && std::isfinite(y)) {
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, y);
                y1 = std::max(y1, y);
            }
    if (hline) {
        y0 = std::min(y0, *hline);
        y1 = std::max(y1, *hline);
    }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
        o << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
          << short_fmt(xv) << "</text>\n";
        o << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
          << short_fmt(yv) << "</text>\n";
    }
    o << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
      << "</text>\n";
    o << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
      << H / 2 << ")\">" << ylabel << "</text>\n";
    if (hline)
        o << "<line x1=\"" << L << "\" y1=\"" << py(*hline) << "\" x2=\"" << W - R << "\" y2=\"" << py(*hline)
          << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* c = colors[k % 6];
        std::ostringstream pts;
        for (auto [x, y] : series[k].points)
            if (std::isfinite(x) && std::isfinite(y)) pts << px(x) << ',' << py(y) << ' ';
        o << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"" << pts.str() << "\"/>\n";
        for (auto [x, y] : series[k].points)
            if (std::isfinite(x) && std::isfinite(y))
                o << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\"" << c << "\"/>\n";
        o << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (k + 1) << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
          << c << "\">" << series[k].label << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::vector<GridPoint> grid_points(const Grid& g) {
    std::vector<GridPoint> out;
    for (double x : g.x)
        for (double y : g.y)
            for (double t : g.t) out.push_back({x, y, t});
    return out;
}

LdsSymbol symbol_for(const ExperimentConfig& c) {
    return c.symbol_seed ? random_lds_symbol(*c.symbol_seed) : symbol_of(*c.left);
}

void line(std::ostringstream& s, const std::string& k, const std::string& v) { s << k << '=' << v << '\n'; }

RunOutcome run_duality(const ExperimentConfig& c, bool plot) {
    RunOutcome out;
    std::ostringstream csv, sum;
    const auto grid = grid_points(c.grid);
    long total = 0, ok = 0;
    double worst = 0.0, frac_inf = 0.0;
    Series zs{"|z|", {}};
    for (int r = 0; r < c.gate.replicates; ++r) {
        SimConfig sim = c.sim;
        sim.seed = c.sim.seed + static_cast<std::uint64_t>(r);
        const DualityReport rep = c.null_experiment
                                      ? null_gap(*c.left, grid, sim, c.convention)
                                      : duality_gap(*c.left, *c.right, grid, sim, c.convention, c.analytic_left,
                                                    c.analytic_right);
        std::ostringstream part;
        write_report_csv(part, rep);
        std::string body = part.str();
        if (r > 0) body = body.substr(body.find('\n') + 1);
        csv << body;
        for (const auto& row : rep.rows) {
            ++total;
            ok += std::fabs(row.z) <= c.gate.max_abs_z;
            frac_inf = std::max({frac_inf, row.left.frac_inf, row.right.frac_inf});
            zs.points.emplace_back(static_cast<double>(zs.points.size()), std::min(std::fabs(row.z), 1e3));
        }
        worst = std::max(worst, rep.worst_abs_z);
    }
    const double fraction = static_cast<double>(ok) / static_cast<double>(total);
    bool pass = fraction >= c.gate.min_pass_fraction && frac_inf <= c.gate.max_frac_inf;
    line(sum, "name", c.name);
    line(sum, "experiment", "duality");
    line(sum, "convention", std::string(zero_inf_token(c.convention.zero_inf)) + "," +
                                std::string(inf_zero_token(c.convention.inf_zero)));
    line(sum, "replicates", std::to_string(c.gate.replicates));
    line(sum, "rows_per_replicate", std::to_string(grid.size()));
    line(sum, "worst_abs_z", short_fmt(worst));
    line(sum, "pass_fraction", short_fmt(fraction));
    line(sum, "max_frac_inf", short_fmt(frac_inf));
    if (c.gate.require_non_explosive) {
        const std::pair<const char*, const ProcessSpec*> sides[] = {{"left", &*c.left},
                                                                    {"right", c.right ? &*c.right : nullptr}};
        for (const auto& [side, spec] : sides) {
            if (!spec) continue;
            const auto screen = non_explosion_screen(*spec);
            line(sum, std::string("non_explosive_") + side,
                 screen.non_explosive ? "true" : "false (" + screen.reason + ")");
            pass = pass && screen.non_explosive;
        }
    }
    line(sum, "result", pass ? "pass" : "fail");
    out.pass = pass;
    out.summary = sum.str();
    out.report_csv = csv.str();
    if (plot) out.plot_svg = svg_chart(c.name + ": |z| per cell", "cell", "|z|", {zs}, c.gate.max_abs_z);
    return out;
}

RunOutcome run_cm(const ExperimentConfig& c, bool plot) {
    RunOutcome out;
    std::ostringstream csv, sum;
    csv << "t,x,mean,se\n";
    bool pass = true;
    std::string violation;
    std::vector<Series> series;
    for (double t : c.grid.t) {
        std::vector<std::pair<double, double>> samples;
        double worst_se = 0.0;
        Series s{"t=" + short_fmt(t), {}};
        for (double x : c.grid.x) {
            const McEstimate e = mc_laplace(*c.left, x, c.cm.y, t, c.sim, c.convention);
            samples.emplace_back(x, e.mean);
            worst_se = std::max(worst_se, e.se);
            csv << fmt(t) << ',' << fmt(x) << ',' << fmt(e.mean) << ',' << fmt(e.se) << '\n';
            s.points.emplace_back(x, e.mean);
        }
        series.push_back(std::move(s));
        const CmResult r = cm_check(samples, c.cm.order, c.cm.noise_factor * worst_se);
        if (!r.pass && violation.empty()) {
            const auto& v = *r.first_violation;
            violation = "t=" + short_fmt(t) + ",k=" + std::to_string(v.order) + ",index=" + std::to_string(v.index) +
                        ",value=" + short_fmt(v.value) + ",tolerance=" + short_fmt(v.tolerance);
        }
        pass = pass && r.pass;
    }
    line(sum, "name", c.name);
    line(sum, "experiment", "cm");
    line(sum, "order", std::to_string(c.cm.order));
    line(sum, "first_violation", violation);
    line(sum, "result", pass ? "pass" : "fail");
    out.pass = pass;
    out.summary = sum.str();
    out.report_csv = csv.str();
    if (plot) out.plot_svg = svg_chart(c.name + ": Laplace transform in x", "x", "E_x[exp(-X_t y)]", series);
    return out;
}

RunOutcome run_fd(const ExperimentConfig& c, bool plot) {
    RunOutcome out;
    std::ostringstream csv, sum;
    csv << "case,x,y,h,fd_value,symbol_value,abs_gap\n";
    bool pass = true;
    double worst = 0.0;
    std::vector<Series> series;
    for (std::size_t i = 0; i < c.fd.cases.size(); ++i) {
        const FdCase& fc = c.fd.cases[i];
        const auto rows = generator_fd_check(symbol_of(fc.spec), analytic_semigroup(fc.spec), fc.x, fc.y, c.fd.h);
        Series s{std::string(kind_name(fc.spec)), {}};
        for (const auto& r : rows) {
            csv << i << ',' << fmt(fc.x) << ',' << fmt(fc.y) << ',' << fmt(r.h) << ',' << fmt(r.fd_value) << ','
                << fmt(r.symbol_value) << ',' << fmt(r.abs_gap) << '\n';
            s.points.emplace_back(std::log10(r.h), r.abs_gap > 0 ? std::log10(r.abs_gap) : -17.0);
        }
        series.push_back(std::move(s));
        worst = std::max(worst, rows.back().abs_gap);
        pass = pass && rows.back().abs_gap <= c.gate.tolerance;
    }
    line(sum, "name", c.name);
    line(sum, "experiment", "generator_fd");
    line(sum, "worst_final_gap", short_fmt(worst));
    line(sum, "tolerance", short_fmt(c.gate.tolerance));
    line(sum, "result", pass ? "pass" : "fail");
    out.pass = pass;
    out.summary = sum.str();
    out.report_csv = csv.str();
    if (plot) out.plot_svg = svg_chart(c.name + ": finite-difference gap", "log10 h", "log10 |fd - symbol|", series);
    return out;
}

RunOutcome run_flow(const ExperimentConfig& c, bool plot) {
    RunOutcome out;
    std::ostringstream csv, sum;
    csv << "case,y,t,s,u,semigroup_gap\n";
    const SpLpMechanism psi = std::holds_alternative<CbSpec>(*c.left) ? std::get<CbSpec>(*c.left).psi
                                                                      : std::get<DeterministicFlowSpec>(*c.left).psi;
    double worst = 0.0;
    std::vector<Series> series;
    for (double y : c.grid.y) {
        Series curve{"y=" + short_fmt(y), {{0.0, y}}};
        for (double t : c.grid.t) {
            const double u = cb_flow(psi, y, t).u;
            curve.points.emplace_back(t, u);
            for (double s : c.flow.s) {
                const double gap = flow_semigroup_gap(psi, y, t, s);
                worst = std::max(worst, gap);
                csv << "grid," << fmt(y) << ',' << fmt(t) << ',' << fmt(s) << ',' << fmt(u) << ',' << fmt(gap) << '\n';
            }
        }
        series.push_back(std::move(curve));
    }
    for (int i = 0; i < c.flow.random_cases; ++i) {
        const FlowCase fc = random_flow_case(c.sim.seed + static_cast<std::uint64_t>(i));
        const double gap = flow_semigroup_gap(fc.psi, fc.y, fc.t, fc.s);
        worst = std::max(worst, gap);
        csv << "random_" << i << ',' << fmt(fc.y) << ',' << fmt(fc.t) << ',' << fmt(fc.s) << ','
            << fmt(cb_flow(fc.psi, fc.y, fc.t).u) << ',' << fmt(gap) << '\n';
    }
    const bool pass = worst <= c.gate.tolerance;
    line(sum, "name", c.name);
    line(sum, "experiment", "flow");
    line(sum, "worst_semigroup_gap", short_fmt(worst));
    line(sum, "tolerance", short_fmt(c.gate.tolerance));
    line(sum, "result", pass ? "pass" : "fail");
    out.pass = pass;
    out.summary = sum.str();
    out.report_csv = csv.str();
    if (plot) out.plot_svg = svg_chart(c.name + ": flow u_t(y)", "t", "u_t(y)", series);
    return out;
}

RunOutcome run_symbol(const ExperimentConfig& c, bool plot) {
    RunOutcome out;
    std::ostringstream csv, sum;
    csv << "x,y,symbol,dual_transposed,abs_gap\n";
    const LdsSymbol s = symbol_for(c);
    const LdsSymbol d = dual_symbol(s);
    double worst = 0.0;
    Series gaps{"gap", {}};
    for (double x : c.grid.x)
        for (double y : c.grid.y) {
            const double a = eval_lds(s, x, y), b = eval_lds(d, y, x);
            const double gap = a == b ? 0.0 : std::fabs(a - b);
            worst = std::max(worst, gap);
            csv << fmt(x) << ',' << fmt(y) << ',' << fmt(a) << ',' << fmt(b) << ',' << fmt(gap) << '\n';
            gaps.points.emplace_back(static_cast<double>(gaps.points.size()), gap);
        }
    const bool pass = worst <= c.gate.tolerance;
    line(sum, "name", c.name);
    line(sum, "experiment", "symbol_check");
    line(sum, "max_abs_gap", short_fmt(worst));
    line(sum, "tolerance", short_fmt(c.gate.tolerance));
    line(sum, "result", pass ? "pass" : "fail");
    out.pass = pass;
    out.summary = sum.str();
    out.report_csv = csv.str();
    if (plot) out.plot_svg = svg_chart(c.name + ": symbol duality gap", "grid pair", "gap", {gaps});
    return out;
}

RunOutcome run_negative_part(const ExperimentConfig& c, bool) {
    RunOutcome out;
    const auto b = check_negative_part_bound(symbol_for(c), c.negative_part.grid_cap, c.negative_part.grid_n);
    out.report_csv = "sup_estimate,hypotheses_hold\n" + fmt(b.sup_estimate) + ',' + (b.hypotheses_hold ? "true" : "false") + '\n';
    std::ostringstream sum;
    line(sum, "name", c.name);
    line(sum, "experiment", "negative_part");
    line(sum, "sup_estimate", short_fmt(b.sup_estimate));
    line(sum, "hypotheses_hold", b.hypotheses_hold ? "true" : "false");
    line(sum, "result", b.hypotheses_hold ? "pass" : "fail");
    out.pass = b.hypotheses_hold;
    out.summary = sum.str();
    return out;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, bool plot) {
    validate_config(cfg);
    switch (cfg.experiment) {
        case ExperimentKind::Duality: return run_duality(cfg, plot);
        case ExperimentKind::Cm: return run_cm(cfg, plot);
        case ExperimentKind::GeneratorFd: return run_fd(cfg, plot);
        case ExperimentKind::Flow: return run_flow(cfg, plot);
        case ExperimentKind::SymbolCheck: return run_symbol(cfg, plot);
        case ExperimentKind::NegativePart: return run_negative_part(cfg, plot);
    }
    return {};
}

std::vector<std::string> write_outcome(const ExperimentConfig& cfg, const RunOutcome& outcome) {
    const std::string prefix = cfg.output.empty() ? cfg.name : cfg.output;
    const std::filesystem::path parent = std::filesystem::path(prefix).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::vector<std::pair<std::string, const std::string*>> files{{prefix + "_report.csv", &outcome.report_csv},
                                                                  {prefix + "_summary.txt", &outcome.summary}};
    if (!outcome.plot_svg.empty()) files.emplace_back(prefix + "_plot.svg", &outcome.plot_svg);
    std::vector<std::string> written;
    for (const auto& [path, body] : files) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << *body;
        written.push_back(path);
    }
    return written;
}

}  // namespace lapdual
