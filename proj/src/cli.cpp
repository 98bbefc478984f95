#include "invgen/cli.hpp"

#include <cstdio>
#include <fstream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "invgen/dirac.hpp"
#include "invgen/errors.hpp"
#include "invgen/problem.hpp"
#include "invgen/sampling.hpp"

namespace invgen {

namespace {

using Json = nlohmann::ordered_json;

struct Options {
    std::string command;
    std::string problem_path;
    std::optional<double> tol;
    std::optional<double> ode_step;
    std::optional<double> quad_step;
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> seed;
    bool dump_intermediates = false;
    std::string output;
};

struct Settings {
    double tol = kDefaultTol;
    std::optional<double> ode_step;
    std::optional<double> quad_step;
    std::size_t random_samples = 32;
    std::uint64_t seed = 0;

    FoliatedNumerics foliated() const { return {tol, ode_step, quad_step}; }
};

Settings resolve(const Options& o, const ProblemNumerics& p) {
    Settings s;
    s.tol = o.tol.value_or(p.tol.value_or(kDefaultTol));
    s.ode_step = o.ode_step ? o.ode_step : p.ode_step;
    s.quad_step = o.quad_step ? o.quad_step : p.quad_step;
    s.random_samples = o.samples.value_or(p.samples.value_or(32));
    s.seed = o.seed.value_or(p.seed.value_or(0));
    if (!(s.tol > 0.0)) throw InvalidInput("--tol must be positive");
    return s;
}

Json point_json(const Point& p) { return Json(p); }

Json matrix_json(const Eigen::MatrixXd& m) {
    // column-major: one array per column
    Json cols = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        Json col = Json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) col.push_back(m(r, c));
        cols.push_back(std::move(col));
    }
    return cols;
}

Json vector_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

std::string format_point(const Point& p) {
    std::string s = "(";
    char buf[32];
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6g", p[i]);
        s += (i ? ", " : "") + std::string(buf);
    }
    return s + ")";
}

/// Collects human and machine output for one command run.
class Sink {
public:
    Sink(std::ostream& out, std::string path) : out_(out), path_(std::move(path)) {}

    void record(Json j) { lines_.push_back(j.dump()); }

    void check(const CheckRecord& c) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "worst %.3e  tol %.1e", c.worst_residual, c.tolerance);
        out_ << "  " << (c.passed ? "PASS" : "FAIL") << "  " << c.id << "  [" << c.anchor << "]  " << buf;
        if (!c.detail.empty()) out_ << "  " << c.detail;
        out_ << "\n";
        if (!c.passed && c.failing_point) out_ << "        at " << format_point(*c.failing_point) << "\n";
        for (const auto& w : c.witnesses) out_ << "        witness " << format_point(w) << "\n";

        Json j;
        j["type"] = "check";
        j["id"] = c.id;
        j["anchor"] = c.anchor;
        j["worst_residual"] = c.worst_residual;
        j["tolerance"] = c.tolerance;
        j["passed"] = c.passed;
        j["failing_point"] = c.failing_point ? point_json(*c.failing_point) : Json(nullptr);
        Json w = Json::array();
        for (const auto& p : c.witnesses) w.push_back(point_json(p));
        j["witnesses"] = std::move(w);
        j["detail"] = c.detail;
        record(std::move(j));
    }

    void report(const Report& r) {
        for (const auto& c : r.checks) check(c);
    }

    std::ostream& text() { return out_; }

    /// Writes the JSONL file; false if it cannot be opened.
    bool flush() {
        if (path_.empty()) return true;
        std::ofstream f(path_, std::ios::binary | std::ios::trunc);
        if (!f) return false;
        for (const auto& l : lines_) f << l << '\n';
        return static_cast<bool>(f);
    }

private:
    std::ostream& out_;
    std::string path_;
    std::vector<std::string> lines_;
};

DiracStructure dirac_of(const Problem& p) {
    if (p.dirac && p.poisson) throw InvalidInput("give either 'dirac' or 'poisson', not both");
    if (p.dirac) return DiracStructure(p.chart, p.section_list(*p.dirac));
    if (p.poisson) return graph_of_poisson(*p.poisson);
    throw InvalidInput("the problem declares neither 'dirac' nor 'poisson'");
}

/// Form components along the leaf directions, which must vanish.
CheckRecord leaf_annihilation(const Problem& p, const std::vector<Point>& samples, double tol) {
    ResidualScan scan("input.leaf_annihilation", "input", tol);
    const std::size_t k = p.chart->leaf_count();
    auto scan_list = [&](const std::string& list) {
        const auto& sections = p.section_list(list);
        for (std::size_t i = 0; i < sections.size(); ++i)
            for (const auto& m : samples) {
                double worst = 0.0;
                std::string detail;
                for (std::size_t j = 0; j < k; ++j) {
                    const double v = std::abs(sections[i].form()[j].eval(m));
                    if (v > worst) {
                        worst = v;
                        detail = list + "[" + std::to_string(i) + "] has a nonzero d" + p.chart->names()[j] + " component";
                    }
                }
                scan.observe(worst, m, detail);
            }
    };
    if (p.distribution) scan_list(*p.distribution);
    if (p.extra) scan_list(*p.extra);
    return std::move(scan).finish();
}

int verdict(Sink& sink, const Report& r) {
    const bool ok = r.passed();
    const int code = ok ? kExitPass : kExitVerificationFailure;
    sink.text() << "verdict: " << (ok ? "PASS" : "FAIL") << " (exit " << code << ")\n";
    Json j;
    j["type"] = "verdict";
    j["passed"] = ok;
    j["exit_code"] = code;
    sink.record(std::move(j));
    return code;
}

int cmd_check(const Problem& p, const Settings& s, const std::vector<Point>& samples, Sink& sink) {
    Report r;
    if (p.distribution) {
        const CheckRecord leaf = leaf_annihilation(p, samples, s.tol);
        r.add(leaf);
        if (leaf.passed) {
            const GeneralizedDistribution d(p.chart, p.section_list(*p.distribution));
            std::optional<PontryaginSection> extra;
            if (p.extra) extra = p.section_list(*p.extra).front();
            const auto h = check_bracket_hypothesis(d, leaf_theta(p.chart), extra, samples, s.tol);
            r.add(h.leaf_bracket);
            if (h.extra_bracket) r.add(*h.extra_bracket);
        }
    }
    std::optional<DiracStructure> dirac;
    if (p.dirac || p.poisson) {
        if (p.poisson) r.add(p.poisson->antisymmetry(samples, s.tol));
        if (r.passed()) {
            dirac = dirac_of(p);
            const Report lag = certify_lagrangian(*dirac, samples, s.tol);
            r.append(lag);
            if (lag.passed()) r.add(is_closed(*dirac, samples, s.tol));
        }
    }
    if (p.action) {
        if (p.action->has_structure_constants()) r.add(p.action->structure_check(samples, s.tol));
        if (dirac) r.add(constant_rank_scan(*dirac, *p.action, samples));
        if (p.quotient) r.append(p.quotient->validate(*p.action, samples, s.tol));
    }
    if (r.checks.empty()) throw InvalidInput("the problem declares nothing to check");
    sink.report(r);
    return verdict(sink, r);
}

int cmd_invariant_generators(const Problem& p, const Settings& s, const std::vector<Point>& samples, bool dump,
                             Sink& sink) {
    if (!p.distribution) throw InvalidInput("invariant-generators needs a 'distribution'");
    const CheckRecord leaf = leaf_annihilation(p, samples, s.tol);
    if (!leaf.passed) {
        Report r;
        r.add(leaf);
        sink.report(r);
        return verdict(sink, r);
    }
    std::optional<PontryaginSection> extra;
    if (p.extra) extra = p.section_list(*p.extra).front();
    const FoliatedProblem problem(GeneralizedDistribution(p.chart, p.section_list(*p.distribution)), extra,
                                  s.foliated());
    const InvariantFrameResult result = run(problem, samples);

    for (const auto& m : samples) {
        Json j;
        j["type"] = "frame";
        j["point"] = point_json(m);
        j["columns"] = matrix_json(result.frame(m));
        if (extra) {
            j["correction"] = vector_json(result.correction(m));
            j["combined"] = vector_json(result.combined(m));
        }
        sink.record(std::move(j));
        if (dump) {
            Json d;
            d["type"] = "intermediate";
            d["point"] = point_json(m);
            d["H"] = matrix_json(result.H(m));
            d["B"] = matrix_json(result.B(m));
            if (extra) d["Pi"] = vector_json(result.Pi(m));
            sink.record(std::move(d));
        }
    }
    if (!samples.empty()) {
        const Point& m = samples.front();
        const Eigen::MatrixXd f = result.frame(m);
        sink.text() << "  frame at " << format_point(m) << ":\n";
        for (Eigen::Index c = 0; c < f.cols(); ++c) {
            Point col(f.col(c).data(), f.col(c).data() + f.rows());
            sink.text() << "    " << format_point(col) << "\n";
        }
        if (extra) {
            const Eigen::VectorXd pi = result.Pi(m);
            sink.text() << "  Pi at " << format_point(m) << ": "
                        << format_point(Point(pi.data(), pi.data() + pi.size())) << "\n";
        }
    }
    sink.report(result.report);
    return verdict(sink, result.report);
}

int cmd_dirac_reduce(const Problem& p, const Settings& s, const std::vector<Point>& samples, Sink& sink) {
    if (!p.action) throw InvalidInput("dirac-reduce needs an 'action'");
    if (!p.quotient) throw InvalidInput("dirac-reduce needs a 'quotient'");
    if (!p.intersection) throw InvalidInput("dirac-reduce needs an 'intersection' family");
    Report r;
    auto stage_ok = [&](const Report& part) {
        sink.report(part);
        r.append(part);
        return part.passed();
    };
    auto single = [](CheckRecord c) {
        Report one;
        one.add(std::move(c));
        return one;
    };

    if (p.poisson && !stage_ok(single(p.poisson->antisymmetry(samples, s.tol)))) return verdict(sink, r);
    const DiracStructure d = dirac_of(p);
    if (!stage_ok(certify_lagrangian(d, samples, s.tol))) return verdict(sink, r);
    const CheckRecord closed = is_closed(d, samples, s.tol);
    stage_ok(single(closed));
    if (p.action->has_structure_constants() && !stage_ok(single(p.action->structure_check(samples, s.tol))))
        return verdict(sink, r);
    if (!stage_ok(p.quotient->validate(*p.action, samples, s.tol))) return verdict(sink, r);
    if (!stage_ok(single(constant_rank_scan(d, *p.action, samples)))) return verdict(sink, r);

    const GeneralizedDistribution family(p.chart, p.section_list(*p.intersection));
    const InvariantFrameResult frame = descending_generators(d, *p.action, family, samples, s.foliated());
    if (!stage_ok(frame.report)) return verdict(sink, r);

    PushforwardOptions opts;
    opts.tol = s.tol;
    opts.check_closed = closed.passed;
    stage_ok(pushforward_check(d, *p.action, *p.quotient, frame, samples, opts));
    return verdict(sink, r);
}

Json provenance(const Options& o, const Problem& p, const Settings& s, std::size_t sample_count) {
    Json j;
    j["type"] = "provenance";
    j["command"] = o.command;
    j["format_version"] = p.format_version;
    j["input_hash"] = "fnv1a64:" + p.input_hash;
    j["seed"] = s.seed;
    j["tol"] = s.tol;
    j["ode_step"] = s.ode_step ? Json(*s.ode_step) : Json("default");
    j["quad_step"] = s.quad_step ? Json(*s.quad_step) : Json("default");
    j["random_samples"] = s.random_samples;
    j["sample_count"] = sample_count;
    return j;
}

int error_exit(Sink& sink, std::ostream& err, int code, const std::string& message, const std::string& stage = {},
               const std::vector<double>* point = nullptr) {
    err << "error: " << message;
    if (point && !point->empty()) err << " at " << format_point(*point);
    err << "\n";
    Json j;
    j["type"] = "error";
    j["exit_code"] = code;
    j["stage"] = stage;
    j["point"] = point ? point_json(*point) : Json(nullptr);
    j["message"] = message;
    sink.record(std::move(j));
    Json v;
    v["type"] = "verdict";
    v["passed"] = false;
    v["exit_code"] = code;
    sink.record(std::move(v));
    return code;
}

int dispatch(const Options& o, std::ostream& out, std::ostream& err) {
    Sink sink(out, o.output);
    int code = kExitPass;
    try {
        const Problem p = load_problem_file(o.problem_path);
        const Settings s = resolve(o, p.numerics);
        const auto samples = default_samples(*p.chart, s.random_samples, s.seed);
        sink.record(provenance(o, p, s, samples.size()));
        out << "invgen " << o.command << " " << o.problem_path << "\n";
        if (o.command == "check") code = cmd_check(p, s, samples, sink);
        else if (o.command == "invariant-generators")
            code = cmd_invariant_generators(p, s, samples, o.dump_intermediates, sink);
        else code = cmd_dirac_reduce(p, s, samples, sink);
    } catch (const HypothesisViolated& e) {
        code = error_exit(sink, err, kExitVerificationFailure, e.what(), e.stage(), &e.point());
    } catch (const StageError& e) {
        code = error_exit(sink, err, kExitNumericalBreakdown, e.what(), e.stage(), &e.point());
    } catch (const Error& e) {
        code = error_exit(sink, err, kExitInputError, e.what());
    }
    if (!sink.flush()) {
        err << "error: cannot write '" << o.output << "'\n";
        return kExitInputError;
    }
    return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Invariant generators and Dirac reduction checks", "invgen"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&o](CLI::App* sub) {
        sub->add_option("problem", o.problem_path, "Problem file (JSON)")->required();
        sub->add_option("--tol", o.tol, "Verification tolerance");
        sub->add_option("--ode-step", o.ode_step, "RK4 step (absolute)");
        sub->add_option("--quad-step", o.quad_step, "Simpson panel width (absolute)");
        sub->add_option("--samples", o.samples, "Number of random sample points added to the grid");
        sub->add_option("--seed", o.seed, "Seed of the random sample points");
        sub->add_option("--output", o.output, "Write machine-readable JSONL records to this path");
    };
    CLI::App* check = app.add_subcommand("check", "Validate inputs and hypotheses");
    CLI::App* inv = app.add_subcommand("invariant-generators", "Build the invariant frame and correction");
    CLI::App* red = app.add_subcommand("dirac-reduce", "Run the reduction pipeline");
    for (CLI::App* sub : {check, inv, red}) add_common(sub);
    inv->add_flag("--dump-intermediates", o.dump_intermediates, "Also emit H, B and Pi at every sample");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    for (CLI::App* sub : {check, inv, red})
        if (sub->parsed()) o.command = sub->get_name();
    return dispatch(o, out, err);
}

}  // namespace invgen
