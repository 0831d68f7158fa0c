#include "freeconv/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "freeconv/measures.hpp"
#include "freeconv/rect_conv.hpp"
#include "freeconv/regularity.hpp"
#include "freeconv/rmt_oracle.hpp"
#include "freeconv/square_conv.hpp"

namespace freeconv {

using ojson = nlohmann::ordered_json;

std::vector<double> parse_grid(const std::string& text) {
    double lo = 0.0, hi = 0.0;
    long n = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%ld%c", &lo, &hi, &n, &tail) != 3)
        throw DomainError("grid must look like lo:hi:points, got '" + text + "'");
    if (!(lo < hi) || n < 2) throw DomainError("grid needs lo < hi and points >= 2");
    std::vector<double> g(n);
    for (long k = 0; k < n; ++k) g[k] = lo + (hi - lo) * static_cast<double>(k) / (n - 1);
    return g;
}

namespace {

/// "@path" reads the spec from a file; anything else is an inline spec.
MeasurePtr load_measure(const std::string& text) {
    if (!text.empty() && text[0] == '@') {
        std::ifstream in(text.substr(1));
        if (!in) throw DomainError("cannot read measure file '" + text.substr(1) + "'");
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_measure_spec(ss.str());
    }
    return parse_measure_spec(text);
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DomainError("cannot write '" + path + "'");
    f << content;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", v);
    return buf;
}

double ratio_of(const Measure& m) {
    if (m.is<RectStable>()) return m.as<RectStable>().lambda;
    if (m.is<RectIDLaw>()) return m.as<RectIDLaw>().lambda;
    return -1.0;
}

/// --lambda if given, else the ratio carried by mu.
double resolve_lambda(double given, const Measure& mu) {
    const double l = given > 0.0 ? given : ratio_of(mu);
    if (!(l > 0.0 && l <= 1.0)) throw DomainError("ratio lambda must lie in (0, 1]; pass --lambda");
    return l;
}

struct Common {
    std::string mu, nu, grid, out, json;
    double lambda = -1.0;
    double tol = 1e-12;
    int max_iter = 10000;
    int workers = 0;

    SolverSettings settings() const {
        SolverSettings s;
        s.tol = tol;
        s.max_iter = max_iter;
        return s;
    }
};

void add_tolerances(CLI::App* c, Common& o) {
    c->add_option("--tol", o.tol, "Fixed-point tolerance")->capture_default_str();
    c->add_option("--max-iter", o.max_iter, "Iteration cap")->capture_default_str();
    c->add_option("--workers", o.workers, "Worker threads (overrides FREECONV_WORKERS)");
}

int curve_exit(const DensityCurve& c) { return c.fully_converged() ? kExitOk : kExitPartial; }

int cmd_convolve_square(const Common& o, std::ostream& out, std::ostream& err) {
    const MeasurePtr mu = load_measure(o.mu), nu = load_measure(o.nu);
    if (!is_square_id(*mu)) throw DomainError("--mu must be infinitely divisible (ID form)");
    SquareConvHandle h(mu, nu, o.settings());
    const DensityCurve c = density_curve_square(h, parse_grid(o.grid));
    emit(o.out, c.to_csv(), out);
    if (!o.json.empty()) emit(o.json, c.sidecar_json() + "\n", out);
    if (!c.fully_converged()) err << "warning: some grid points did not converge\n";
    return curve_exit(c);
}

int cmd_convolve_rect(const Common& o, std::ostream& out, std::ostream& err) {
    const MeasurePtr mu = load_measure(o.mu), nu = load_measure(o.nu);
    RectConvHandle h(mu, nu, resolve_lambda(o.lambda, *mu), o.settings());
    const DensityCurve c = rect_density_curve(h, parse_grid(o.grid));
    emit(o.out, c.to_csv(), out);
    if (!o.json.empty()) emit(o.json, c.sidecar_json() + "\n", out);
    if (!c.fully_converged()) err << "warning: some grid points did not converge\n";
    return curve_exit(c);
}

int cmd_atoms(const Common& o, std::ostream& out, std::ostream&) {
    const MeasurePtr mu = load_measure(o.mu), nu = load_measure(o.nu);
    ojson j;
    int code = kExitOk;
    if (o.lambda > 0.0 || ratio_of(*mu) > 0.0) {
        RectConvHandle h(mu, nu, resolve_lambda(o.lambda, *mu), o.settings());
        const AtomAtZero a = atom_at_zero(h);
        j["model"] = "rectangular";
        j["lambda"] = h.lambda();
        j["atoms"] = ojson::array();
        if (a.mass > 1e-6) j["atoms"].push_back({{"position", 0.0}, {"mass", a.mass}});
        j["atom_at_zero"] = a.mass;
        j["limit"] = a.limit;
        j["converged"] = a.converged;
        if (a.cross_check >= 0.0) j["cross_check"] = a.cross_check;
        j["ladder"] = ojson::array();
        for (cplx v : a.ladder) j["ladder"].push_back({v.real(), v.imag()});
        if (!a.converged) code = kExitPartial;
    } else {
        if (!is_square_id(*mu)) throw DomainError("--mu must be infinitely divisible (ID form)");
        SquareConvHandle h(mu, nu, o.settings());
        const DensityCurve c = density_curve_square(h, parse_grid(o.grid.empty() ? "-10:10:2001" : o.grid));
        j["model"] = "square";
        j["atoms"] = ojson::array();
        for (const auto& a : c.atoms) j["atoms"].push_back({{"position", a.position}, {"mass", a.mass}});
        code = curve_exit(c);
    }
    emit(o.out, j.dump(2) + "\n", out);
    return code;
}

int cmd_hole(const Common& o, double resolution, double threshold, std::ostream& out, std::ostream&) {
    const MeasurePtr mu = load_measure(o.mu), nu = load_measure(o.nu);
    RectConvHandle h(mu, nu, resolve_lambda(o.lambda, *mu), o.settings());
    const HoleReport r = hole_detect(h, resolution, threshold);
    ojson j;
    j["lambda"] = h.lambda();
    j["has_hole"] = r.has_hole;
    j["hole_radius"] = r.hole_radius_estimate;
    j["atom_at_zero"] = r.atom_at_zero;
    j["decided"] = r.decided;
    j["resolution"] = resolution;
    j["threshold"] = threshold;
    j["scan"] = ojson::array();
    for (const auto& [x, d] : r.scan) j["scan"].push_back({x, d});
    emit(o.out, j.dump(2) + "\n", out);
    return r.decided ? kExitOk : kExitPartial;
}

struct RmtOptions {
    std::string model = "square";
    int N = 1000, trials = 10;
    std::uint64_t seed = 1;
    double ks_threshold = 0.02;
    std::string spectrum_out;
};

int cmd_rmt_verify(const Common& o, const RmtOptions& r, std::ostream& out, std::ostream& err) {
    MeasurePtr a = load_measure(o.mu), b = load_measure(o.nu);
    EmpiricalSpectrum e;
    DensityCurve target;
    const auto auto_grid = [&](const EmpiricalSpectrum& s) {
        return o.grid.empty() ? covering_grid(s, 1601) : parse_grid(o.grid);
    };
    if (r.model == "square") {
        // the solver needs an ID first argument; the model itself is symmetric in (A, B)
        MeasurePtr id = a, other = b;
        if (!is_square_id(*id)) std::swap(id, other);
        if (!is_square_id(*id)) throw DomainError("one of --muA/--muB must be infinitely divisible");
        e = square_model_spectrum(a, b, r.N, r.trials, r.seed);
        target = density_curve_square(SquareConvHandle(id, other, o.settings()), auto_grid(e));
    } else if (r.model == "rect") {
        const double lam = resolve_lambda(o.lambda, *a);
        e = rect_model_spectrum(a, b, r.N, rect_columns(r.N, lam), r.trials, r.seed);
        target = rect_density_curve(RectConvHandle(a, b, lam, o.settings()), auto_grid(e));
        const double drift = static_cast<double>(e.N) / e.M - lam;
        if (drift != 0.0) err << "note: induced ratio N/M differs from lambda by " << num(drift) << "\n";
    } else {
        throw DomainError("--model must be square or rect");
    }
    const double ks = ks_distance(e, target);
    const bool pass = ks < r.ks_threshold;
    char line[160];
    std::snprintf(line, sizeof line, "ks=%.6f threshold=%.6g %s\n", ks, r.ks_threshold, pass ? "PASS" : "FAIL");
    out << line;
    if (!o.json.empty()) emit(o.json, spectrum_summary_json(e, ks) + "\n", out);
    if (!r.spectrum_out.empty()) emit(r.spectrum_out, e.to_csv(), out);
    if (!o.out.empty()) emit(o.out, target.to_csv(), out);
    return pass ? kExitOk : kExitPartial;
}

int cmd_classify(const Common& o, std::ostream& out, std::ostream&) {
    const MeasurePtr mu = load_measure(o.mu), nu = load_measure(o.nu);
    const RegularityReport rep =
        property_H_probe(mu, {{serialize_measure(*nu), nu}}, parse_grid(o.grid.empty() ? "-3:3:601" : o.grid));
    const ObstructionReport ob = finite_variance_obstruction(mu);
    ojson j;
    j["regularity"] = ojson::parse(rep.to_json());
    j["obstruction"] = ojson::parse(ob.to_json());
    emit(o.out, j.dump(2) + "\n", out);
    for (const auto& c : rep.cells)
        if (!c.solved) return kExitPartial;
    return kExitOk;
}

int cmd_stable_density(double alpha, double t, double lambda, const std::string& grid,
                       const std::string& path, std::ostream& out) {
    if (alpha != 1.0 && alpha != 2.0) throw DomainError("closed forms exist for alpha = 1 and alpha = 2");
    const MeasurePtr m = rect_stable(alpha, t, lambda);
    std::string csv = "x,density\n";
    for (double x : parse_grid(grid)) csv += num(x) + "," + num(density(*m, x)) + "\n";
    emit(path, csv, out);
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Numerical free and rectangular free convolution"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every command");

    Common o;
    RmtOptions rmt;
    double resolution = 0.01, threshold = 1e-6;
    double alpha = 1.0, t = 1.0;

    auto measures = [&](CLI::App* c, const char* a = "--mu", const char* b = "--nu") {
        c->add_option(a, o.mu, "Measure spec (or @file)")->required();
        c->add_option(b, o.nu, "Measure spec (or @file)")->required();
    };

    auto* sq = app.add_subcommand("convolve-square", "Density of mu boxplus nu (mu infinitely divisible)");
    measures(sq);
    sq->add_option("--grid", o.grid, "lo:hi:points")->required();
    sq->add_option("--out", o.out, "CSV path (default stdout)");
    sq->add_option("--json", o.json, "Sidecar JSON path (atoms, support)");
    add_tolerances(sq, o);

    auto* rc = app.add_subcommand("convolve-rect", "Symmetric density of mu boxplus_lambda nu");
    measures(rc);
    rc->add_option("--lambda", o.lambda, "Ratio in (0, 1]; defaults to the ratio of mu");
    rc->add_option("--grid", o.grid, "lo:hi:points")->required();
    rc->add_option("--out", o.out, "CSV path (default stdout)");
    rc->add_option("--json", o.json, "Sidecar JSON path (atoms, support)");
    add_tolerances(rc, o);

    auto* at = app.add_subcommand("atoms", "Atoms of the convolution (rectangular when a ratio is known)");
    measures(at);
    at->add_option("--lambda", o.lambda, "Ratio; selects the rectangular model");
    at->add_option("--grid", o.grid, "Square model scan grid (default -10:10:2001)");
    at->add_option("--out", o.out, "JSON path (default stdout)");
    add_tolerances(at, o);

    auto* ho = app.add_subcommand("hole", "Hole around 0 of mu boxplus_lambda nu");
    measures(ho);
    ho->add_option("--lambda", o.lambda, "Ratio; defaults to the ratio of mu");
    ho->add_option("--resolution", resolution, "Scan step")->capture_default_str();
    ho->add_option("--threshold", threshold, "Density regarded as zero")->capture_default_str();
    ho->add_option("--out", o.out, "JSON path (default stdout)");
    add_tolerances(ho, o);

    auto* rv = app.add_subcommand("rmt-verify", "KS distance between a random-matrix spectrum and the solver");
    rv->add_option("--model", rmt.model, "square | rect")->capture_default_str();
    measures(rv, "--muA", "--muB");
    rv->add_option("--N", rmt.N, "Matrix size")->capture_default_str();
    rv->add_option("--trials", rmt.trials, "Independent matrices")->capture_default_str();
    rv->add_option("--seed", rmt.seed, "RNG seed")->capture_default_str();
    rv->add_option("--lambda", o.lambda, "Ratio for --model rect (default: ratio of muA)");
    rv->add_option("--ks-threshold", rmt.ks_threshold, "Pass threshold")->capture_default_str();
    rv->add_option("--grid", o.grid, "Solver grid (default: bulk of the spectrum, 1601 points)");
    rv->add_option("--json", o.json, "Summary JSON path");
    rv->add_option("--spectrum-out", rmt.spectrum_out, "CSV of sorted samples");
    rv->add_option("--out", o.out, "CSV of the solver density");
    add_tolerances(rv, o);

    auto* cl = app.add_subcommand("classify", "Origin regime, cusp fit, hypotheses and obstruction report");
    measures(cl);
    cl->add_option("--grid", o.grid, "Probe grid (default -3:3:601)");
    cl->add_option("--out", o.out, "JSON path (default stdout)");
    add_tolerances(cl, o);

    auto* st = app.add_subcommand("stable-density", "Closed-form rectangular stable density (alpha 1 or 2)");
    st->add_option("--alpha", alpha, "1 or 2")->capture_default_str();
    st->add_option("--t", t, "Scale")->capture_default_str();
    st->add_option("--lambda", o.lambda, "Ratio in (0, 1]")->required();
    st->add_option("--grid", o.grid, "lo:hi:points")->required();
    st->add_option("--out", o.out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (o.workers > 0) setenv("FREECONV_WORKERS", std::to_string(o.workers).c_str(), 1);
    try {
        if (sq->parsed()) return cmd_convolve_square(o, out, err);
        if (rc->parsed()) return cmd_convolve_rect(o, out, err);
        if (at->parsed()) return cmd_atoms(o, out, err);
        if (ho->parsed()) return cmd_hole(o, resolution, threshold, out, err);
        if (rv->parsed()) return cmd_rmt_verify(o, rmt, out, err);
        if (cl->parsed()) return cmd_classify(o, out, err);
        if (st->parsed()) return cmd_stable_density(alpha, t, o.lambda, o.grid, o.out, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitPartial;
    }
    return kExitConfig;
}

}  // namespace freeconv
