// qmc: command-line front end to the library.

#include <algorithm>
#include "qmc/io.hpp"
#include "qmc/qmc.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace qmc;

enum ExitCode { ok = 0, usage = 1, file_missing = 2, schema = 3, numerical = 4, internal = 5 };

/// Parses "1.2", "-0.5i", "1+0.5i" or "1-2i".
Complex parse_complex(const std::string& text) {
    std::string s;
    for (char ch : text)
        if (ch != ' ') s += ch;
    if (s.empty()) throw SchemaError("empty complex number");
    try {
        if (s.back() != 'i') {
            std::size_t used = 0;
            const double re = std::stod(s, &used);
            if (used != s.size()) throw SchemaError("");
            return {re, 0.0};
        }
        const std::string body = s.substr(0, s.size() - 1);
        std::size_t split = std::string::npos;
        for (std::size_t k = body.size(); k-- > 1;) {
            if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
                split = k;
                break;
            }
        }
        auto imag_of = [](const std::string& t) {
            if (t.empty() || t == "+") return 1.0;
            if (t == "-") return -1.0;
            std::size_t used = 0;
            const double v = std::stod(t, &used);
            if (used != t.size()) throw SchemaError("");
            return v;
        };
        if (split == std::string::npos) return {0.0, imag_of(body)};
        std::size_t used = 0;
        const std::string re_part = body.substr(0, split);
        const double re = std::stod(re_part, &used);
        if (used != re_part.size()) throw SchemaError("");
        return {re, imag_of(body.substr(split))};
    } catch (const std::exception&) {
        throw SchemaError("cannot parse complex number '" + text + "'");
    }
}

// Parts below 1e-12 of the largest entry are round-off and are printed as zero.
double chop(double x, double scale) { return std::abs(x) <= 1e-12 * std::max(scale, 1.0) ? 0.0 : x; }

Json out_complex(Complex z) {
    const double scale = std::abs(z);
    return complex_to_json({chop(z.real(), scale), chop(z.imag(), scale)});
}

Json out_matrix(const CMatrix& m) {
    const double scale = m.size() > 0 ? m.cwiseAbs().maxCoeff() : 0.0;
    CMatrix c = m;
    for (Eigen::Index k = 0; k < c.size(); ++k) c(k) = {chop(m(k).real(), scale), chop(m(k).imag(), scale)};
    return matrix_to_json(c);
}

void print_json(const Json& j) { std::cout << dump_pretty(j) << '\n'; }

Json ladder_json(const std::vector<std::pair<double, double>>& ladder) {
    Json out = Json::array();
    for (const auto& [x, y] : ladder) out.push_back(Json::array({rounded(x), rounded(y)}));
    return out;
}

struct Common {
    std::string model_path;
    std::optional<int> window;
    QmcModel model() const { return load_model(model_path); }
};

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_validate(const Common& c, const std::optional<std::string>& density) {
    const QmcModel m = c.model();
    Json cols = Json::array();
    double worst = 0.0;
    for (const auto& col : m.columns()) {
        Json e;
        e["site"] = col.site ? Json(*col.site) : Json("bulk");
        e["defect"] = rounded(col.defect);
        e["leaks"] = col.leaks;
        e["gains"] = col.gains;
        cols.push_back(e);
        worst = std::max(worst, col.defect);
    }
    Json warnings = Json::array();
    for (const auto& col : m.undeclared_leaks()) {
        const std::string where = col.site ? "site " + std::to_string(*col.site) : "the homogeneous bulk";
        warnings.push_back("column at " + where + " loses trace but the model is not declared substochastic");
    }
    for (const auto& col : m.columns())
        if (col.gains) warnings.push_back("column at " + (col.site ? "site " + std::to_string(*col.site) : std::string("the bulk")) + " gains trace");
    Json out;
    out["valid"] = true;
    out["topology"] = m.topology().name();
    if (m.topology().finite()) out["num_sites"] = m.topology().num_sites();
    out["dim"] = m.dim();
    out["mode"] = to_string(m.mode());
    out["copies"] = m.copies();
    out["oqw"] = m.is_oqw();
    out["trace_preserving"] = m.trace_preserving();
    out["declared_substochastic"] = m.declared_substochastic();
    out["tp_defect"] = rounded(worst);
    out["columns"] = cols;
    out["warnings"] = warnings;
    if (density) {
        const Density rho = load_density(*density);
        if (rho.dim() != m.dim()) throw SchemaError("density dimension does not match the model");
        out["density"] = "valid";
    }
    for (const auto& w : warnings) std::cerr << "qmc: warning: " << w.get<std::string>() << '\n';
    print_json(out);
    return ok;
}

int run_evolve(const Common& c, int site, const std::string& density, int steps, const std::string& format) {
    const QmcModel m = c.model();
    const Density rho = load_density(density);
    LatticeState st = LatticeState::point(m, site, rho);
    if (format == "csv") {
        std::cout << "step,site,trace\n";
        for (int n = 0; n <= steps; ++n) {
            if (n > 0) st = evolve(m, st, 1);
            for (const auto& [x, v] : st.blocks()) std::cout << n << ',' << x << ',' << format_number(st.trace_at(x)) << '\n';
        }
        return ok;
    }
    st = evolve(m, st, steps);
    Json sites = Json::array();
    for (const auto& [x, v] : st.blocks()) {
        Json e{{"site", x}, {"trace", rounded(st.trace_at(x))}};
        if (m.copies() == 1) e["state"] = out_matrix(st.matrix_at(x));
        sites.push_back(e);
    }
    print_json(Json{{"steps", steps}, {"total_trace", rounded(st.total_trace())}, {"sites", sites}});
    return ok;
}

int run_prob(const Common& c, int from, int to, int steps, const std::string& density, const std::string& format) {
    const QmcModel m = c.model();
    const double p = site_prob(m, from, to, load_density(density), steps);
    if (format == "json") print_json(Json{{"from", from}, {"to", to}, {"steps", steps}, {"probability", rounded(p)}});
    else std::cout << format_number(p) << '\n';
    return ok;
}

int run_spectrum(const Common& c, const std::string& format, bool details) {
    QmcModel m = c.model();
    if (!m.topology().finite()) {
        if (m.topology().kind() != TopologyKind::half_line || !c.window)
            throw SchemaError("spectrum needs a segment, or a half-line together with --window");
        m = m.with_topology(Topology::segment(*c.window + 1));
    }
    const int last = m.topology().num_sites() - 1;
    if (format == "csv") {
        // raw eigenvalues, one row each: no clustering, so degenerate nodes split by round-off still plot
        const TruncatedOperator t = truncate(m, 0, last);
        Eigen::ComplexEigenSolver<CMatrix> es(t.matrix, false);
        if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation did not converge");
        std::vector<Complex> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
        const double scale = std::max(1.0, t.matrix.cwiseAbs().maxCoeff());
        for (auto& z : ev) z = {chop(z.real(), scale), chop(z.imag(), scale)};
        std::sort(ev.begin(), ev.end(), [](Complex a, Complex b) { return std::abs(a.real() - b.real()) > 1e-9 ? a.real() < b.real() : a.imag() < b.imag(); });
        std::cout << "re,im,multiplicity\n";
        for (const auto& z : ev) std::cout << format_number(z.real()) << ',' << format_number(z.imag()) << ",1\n";
        return ok;
    }
    const bool symmetric = last == 0 || find_symmetrizer(m, last).success;
    Json out;
    out["symmetrizable"] = symmetric;
    out["semiorthogonal"] = !symmetric;
    DiscreteWeight w;
    if (symmetric) {
        w = finite_spectrum_weights(m);
    } else {
        const SemiOrthogonalSystem s = nonsym_finite_weights(m);
        w = s.weight;
        out["max_semiorthogonal_residual"] = rounded(s.worst_residual());
    }
    Json pts = Json::array();
    for (const auto& p : w.points)
        pts.push_back(Json{{"node", out_complex(p.node)}, {"multiplicity", p.multiplicity}, {"weight", out_matrix(p.weight)}});
    if (!details) {
        print_json(pts);
        return ok;
    }
    out["points"] = pts;
    out["total_weight"] = out_matrix(w.total());
    print_json(out);
    return ok;
}

EvaluatorPtr make_evaluator(const QmcModel& m, int site, const std::string& method, Complex z, std::optional<int> window) {
    auto homogeneous = [&](HomogeneousMethod hm) -> EvaluatorPtr {
        if (m.topology().kind() != TopologyKind::half_line || site != 0)
            throw SchemaError("method '" + method + "' needs a half-line model at site 0");
        HomogeneousOptions opt;
        opt.method = hm;
        return std::make_shared<HalfLineStieltjes>(m, opt);
    };
    if (method == "truncated") return std::make_shared<TruncatedStieltjes>(m, site, window);
    if (method == "generating_function") return std::make_shared<SiteTransform>(m, site);
    if (method == "fixed_point") return homogeneous(HomogeneousMethod::fixed_point);
    if (method == "cyclic_reduction") return homogeneous(HomogeneousMethod::cyclic_reduction);
    if (method == "continuation") return homogeneous(HomogeneousMethod::continuation);
    if (method == "folded") {
        if (m.topology().kind() != TopologyKind::line) throw SchemaError("method 'folded' needs a line model");
        return std::make_shared<LineStieltjes>(m, site);
    }
    if (method != "auto") throw SchemaError("unknown method '" + method + "'");
    if (m.topology().finite()) return std::make_shared<TruncatedStieltjes>(m, site);
    const auto& h = m.homogeneous();
    if (m.topology().kind() == TopologyKind::half_line && site == 0 && h.A && h.C)
        return homogeneous(z.imag() == 0.0 ? HomogeneousMethod::cyclic_reduction : HomogeneousMethod::continuation);
    return std::make_shared<SiteTransform>(m, site);
}

int run_stieltjes(const Common& c, const std::string& z_text, int site, const std::string& method) {
    const QmcModel m = c.model();
    const Complex z = parse_complex(z_text);
    const EvaluatorPtr ev = make_evaluator(m, site, method, z, c.window);
    const StieltjesValue v = ev->evaluate(z);
    print_json(Json{{"z", out_complex(z)}, {"site", site}, {"value", out_matrix(v.value)},
                    {"residual", rounded(v.residual)}, {"method", ev->method()}});
    return ok;
}

int run_recurrence(const Common& c, int site, const std::string& density, const std::string& method) {
    const QmcModel m = c.model();
    const Density rho = load_density(density);
    const EvaluatorPtr ev = make_evaluator(m, site, method == "auto" ? "generating_function" : method, Complex(1.01), c.window);
    const Classification cl = classify_recurrence(m, *ev, rho);
    Json out{{"site", site}, {"verdict", to_string(cl.verdict)}, {"method", ev->method()}, {"evidence", ladder_json(cl.evidence)}};
    if (cl.limit) out["limit"] = rounded(*cl.limit);
    print_json(out);
    return ok;
}

int run_first_passage(const Common& c, int from, int to, const std::optional<std::string>& density, const std::optional<double>& s) {
    const QmcModel m = c.model();
    if (s) {
        const CMatrix f = first_passage_gf(m, to, from, *s);
        Json out{{"from", from}, {"to", to}, {"s", rounded(*s)}, {"value", out_matrix(f)}};
        if (density) out["probability"] = rounded(density_trace(m, f, load_density(*density)));
        print_json(out);
        return ok;
    }
    if (!density) throw SchemaError("first-passage needs --density unless --s is given");
    const PassageResult r = reach_probability(m, from, to, load_density(*density));
    print_json(Json{{"from", from}, {"to", to}, {"probability", rounded(r.probability)}, {"ladder", ladder_json(r.ladder)}});
    return ok;
}

int run_fold(const Common& c, const std::string& output, std::optional<int> sites) {
    const QmcModel line = c.model();
    const FoldedModel fm = fold_model(line, sites);
    write_json_file(output, model_to_json(fm.folded));
    Json map = Json::array();
    const int shown = sites.value_or(std::max(8, c.window.value_or(8)));
    for (int k = 0; k < shown; ++k) {
        const auto [up, down] = FoldedModel::original_sites(k);
        map.push_back(Json{{"folded", k}, {"copy1", up}, {"copy2", down}});
    }
    const std::string sidecar = output + ".index.json";
    write_json_file(sidecar, Json{{"rule", "folded site k holds line site k as copy 1 and line site -k-1 as copy 2"},
                                  {"copies", 2},
                                  {"sites", map}});
    print_json(Json{{"model", output}, {"index", sidecar}, {"topology", fm.folded.topology().name()},
                    {"block_dim", fm.folded.block_dim()}});
    return ok;
}

int run_poly(const Common& c, const std::string& x_text, int n, const std::string& family, int k, int alpha) {
    const QmcModel m = c.model();
    const Complex x = parse_complex(x_text);
    Json polys = Json::array();
    Json out{{"x", out_complex(x)}, {"family", family}};
    if (family == "main") {
        const auto q = eval_main(m, x, n);
        for (int i = 0; i <= n; ++i) polys.push_back(Json{{"n", i}, {"matrix", out_matrix(q[static_cast<std::size_t>(i)])}});
        out["residual"] = rounded(main_recurrence_residual(m, x, q));
    } else if (family == "associated") {
        const auto q = eval_associated(m, k, x, n);
        for (int i = 0; i <= n; ++i) polys.push_back(Json{{"n", i}, {"matrix", out_matrix(q[static_cast<std::size_t>(i)])}});
        out["k"] = k;
    } else if (family == "two-sided") {
        for (const auto& [i, q] : eval_two_sided(m, alpha, x, -n - 1, n)) polys.push_back(Json{{"n", i}, {"matrix", out_matrix(q)}});
        out["alpha"] = alpha;
    } else if (family == "folded") {
        const auto q = eval_folded(m, x, n);
        for (int i = 0; i <= n; ++i) polys.push_back(Json{{"n", i}, {"matrix", out_matrix(q[static_cast<std::size_t>(i)])}});
    } else {
        throw SchemaError("unknown polynomial family '" + family + "'");
    }
    out["polynomials"] = polys;
    print_json(out);
    return ok;
}

int run_simulate(const Common& c, int trajectories, int steps, std::uint64_t seed, int site, const std::string& density) {
    TrajectoryConfig cfg{c.model(), site, load_density(density), steps, trajectories, seed, std::nullopt};
    const OccupationEstimate est = estimate_site_prob(cfg);
    std::cout << "step,site,mean,stderr\n";
    for (int n = 0; n <= steps; ++n) {
        for (int x = site - n; x <= site + n; ++x) {
            if (!cfg.model.topology().contains(x)) continue;
            const Estimate e = est.at(x, n);
            std::cout << n << ',' << x << ',' << format_number(e.mean) << ',' << format_number(e.std_error) << '\n';
        }
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qmc: spectral and probabilistic analysis of quantum Markov chains on Z, Z>=0 and finite segments"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--window", common.window, "Truncation radius L for truncated computations")->check(CLI::PositiveNumber);

    auto model_arg = [&](CLI::App* sub) { sub->add_option("model", common.model_path, "Model file (JSON)")->required(); };

    std::optional<std::string> density_opt;
    std::string density;
    int site = 0, from = 0, to = 0, steps = 0, n = 4, k = 0, alpha = 1, trajectories = 100000;
    std::uint64_t seed = 0;
    bool spectrum_details = false;
    std::string evolve_format, prob_format, spectrum_format, method = "auto", z_text, x_text, family = "main", output;
    std::optional<int> fold_sites;
    std::optional<double> s_value;

    auto* validate = app.add_subcommand("validate", "Check a model file and report trace defects per column");
    model_arg(validate);
    validate->add_option("--density", density_opt, "Also validate a density file");

    auto* evolve_cmd = app.add_subcommand("evolve", "Evolve a point state and report site traces");
    model_arg(evolve_cmd);
    evolve_cmd->add_option("--site", site, "Initial site");
    evolve_cmd->add_option("--density", density, "Initial density file")->required();
    evolve_cmd->add_option("--steps", steps, "Number of steps")->required()->check(CLI::NonNegativeNumber);
    evolve_cmd->add_option("--format", evolve_format, "json or csv")->check(CLI::IsMember({"json", "csv"}))->default_val("json");

    auto* prob = app.add_subcommand("prob", "Probability of being at --to after --steps steps from --from");
    model_arg(prob);
    prob->add_option("--from", from, "Initial site")->required();
    prob->add_option("--to", to, "Target site")->required();
    prob->add_option("--steps", steps, "Number of steps")->required()->check(CLI::NonNegativeNumber);
    prob->add_option("--density", density, "Initial density file")->required();
    prob->add_option("--format", prob_format, "text or json")->check(CLI::IsMember({"text", "json"}))->default_val("text");

    auto* spectrum = app.add_subcommand("spectrum", "Nodes and weights of a finite model");
    model_arg(spectrum);
    spectrum->add_option("--format", spectrum_format, "json or csv (eigenvalue cloud)")->check(CLI::IsMember({"json", "csv"}))->default_val("json");
    spectrum->add_flag("--details", spectrum_details, "Wrap the points with the weight total and symmetry diagnostics");

    const auto methods = CLI::IsMember({"auto", "truncated", "fixed_point", "cyclic_reduction", "continuation", "generating_function", "folded"});
    auto* stieltjes = app.add_subcommand("stieltjes", "Stieltjes transform of the weight at a site");
    model_arg(stieltjes);
    stieltjes->add_option("--z", z_text, "Point z, e.g. 1.2 or 1+0.5i")->required();
    stieltjes->add_option("--site", site, "Site (0 or -1 for folded line transforms)");
    stieltjes->add_option("--method", method, "Evaluator")->check(methods);

    auto* recurrence = app.add_subcommand("recurrence", "Classify a site as recurrent or transient for a density");
    model_arg(recurrence);
    recurrence->add_option("--site", site, "Site");
    recurrence->add_option("--density", density, "Density file")->required();
    recurrence->add_option("--method", method, "Evaluator")->check(methods);

    auto* passage = app.add_subcommand("first-passage", "First-passage generating function or reach probability");
    model_arg(passage);
    passage->add_option("--from", from, "Initial site")->required();
    passage->add_option("--to", to, "Target site")->required();
    passage->add_option("--density", density_opt, "Density file");
    passage->add_option("--s", s_value, "Evaluate F(s) at this s instead of the reach probability");

    auto* fold = app.add_subcommand("fold", "Fold a line model onto the half-line");
    model_arg(fold);
    fold->add_option("--output,-o", output, "Output model file; the index map goes to OUTPUT.index.json")->required();
    fold->add_option("--sites", fold_sites, "Cut the folded model to this many sites")->check(CLI::PositiveNumber);

    auto* poly = app.add_subcommand("poly", "Evaluate matrix polynomials");
    model_arg(poly);
    poly->add_option("--x", x_text, "Point x, e.g. 0.5 or 0.5+0.1i")->required();
    poly->add_option("--n", n, "Highest degree")->check(CLI::NonNegativeNumber);
    poly->add_option("--family", family, "main, associated, two-sided or folded")
        ->check(CLI::IsMember({"main", "associated", "two-sided", "folded"}));
    poly->add_option("--k", k, "Index of the associated family")->check(CLI::NonNegativeNumber);
    poly->add_option("--alpha", alpha, "Two-sided family, 1 or 2")->check(CLI::IsMember({1, 2}));

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo quantum trajectories; CSV of site occupations");
    model_arg(simulate);
    simulate->add_option("--trajectories", trajectories, "Number of trajectories")->check(CLI::Range(100, 1000000000));
    simulate->add_option("--steps", steps, "Number of steps")->required()->check(CLI::NonNegativeNumber);
    simulate->add_option("--seed", seed, "Seed (default 0)");
    simulate->add_option("--site", site, "Initial site");
    simulate->add_option("--density", density, "Initial density file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : usage;
    }

    try {
        if (*validate) return run_validate(common, density_opt);
        if (*evolve_cmd) return run_evolve(common, site, density, steps, evolve_format);
        if (*prob) return run_prob(common, from, to, steps, density, prob_format);
        if (*spectrum) return run_spectrum(common, spectrum_format, spectrum_details);
        if (*stieltjes) return run_stieltjes(common, z_text, site, method);
        if (*recurrence) return run_recurrence(common, site, density, method);
        if (*passage) return run_first_passage(common, from, to, density_opt, s_value);
        if (*fold) return run_fold(common, output, fold_sites);
        if (*poly) return run_poly(common, x_text, n, family, k, alpha);
        if (*simulate) return run_simulate(common, trajectories, steps, seed, site, density);
    } catch (const FileError& e) {
        std::cerr << "qmc: error: " << e.what() << '\n';
        return file_missing;
    } catch (const SchemaError& e) {
        std::cerr << "qmc: schema error: " << e.what() << '\n';
        return schema;
    } catch (const NumericalError& e) {
        std::cerr << "qmc: numerical failure: " << e.what() << '\n';
        return numerical;
    } catch (const std::exception& e) {
        std::cerr << "qmc: internal error: " << e.what() << '\n';
        return internal;
    }
    return usage;
}
