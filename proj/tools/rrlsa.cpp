// rrlsa: command-line front end.
//
//   rrlsa check      --model M.json
//   rrlsa analyze    --model M.json [--out report.json] [--echo-model copy.json]
//   rrlsa simulate   --model M.json --alpha A --n N [--n0 K] [--seed S] [--estimator E]
//                    [--trace-stride K] [--expand L] [--out DIR]
//   rrlsa experiment (--experiment X.json | --preset fig1) [--threads T|auto]
//                    [--seed S] [--set key=value]... [--out DIR]
//
// Exit codes: 0 success, 1 usage error, 2 assumption/validation failure,
// 3 numerical failure at run time.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rrlsa/config.hpp"
#include "rrlsa/expansion.hpp"
#include "rrlsa/harness.hpp"
#include "rrlsa/lsa.hpp"
#include "rrlsa/report.hpp"

#ifndef RRLSA_PRESET_DIR
#define RRLSA_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;
using namespace rrlsa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NumericalDivergence:
    case ErrorKind::TruncationFailure:
        return kExitNumerical;
    default:
        return kExitValidation;
    }
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path default_output_dir() {
    if (const char* env = std::getenv("RRLSA_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return ".";
}

fs::path preset_dir() {
    if (const char* env = std::getenv("RRLSA_PRESET_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return RRLSA_PRESET_DIR;
}

void require_file(const fs::path& p, const char* what) {
    if (!fs::is_regular_file(p)) {
        throw UsageError(std::string(what) + " not found: " + p.string());
    }
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw UsageError("cannot write " + path.string());
    }
    return out;
}

unsigned parse_threads(const std::string& s) {
    if (s == "auto") {
        return 0;
    }
    try {
        const int t = std::stoi(s);
        if (t < 1) {
            throw UsageError("--threads must be >= 1 or auto");
        }
        return static_cast<unsigned>(t);
    } catch (const std::logic_error&) {
        throw UsageError("--threads must be an integer or auto");
    }
}

// ---------------------------------------------------------------------------

int cmd_check(const fs::path& model_path) {
    require_file(model_path, "model file");
    const Audit audit = audit_model(load_model_spec(model_path));
    for (const auto& item : audit.items) {
        std::cout << (item.pass ? "PASS " : "FAIL ") << item.name << "  " << item.measured << '\n';
    }
    if (const AuditItem* f = audit.first_failure()) {
        std::cerr << "error: " << to_string(f->failure) << ": " << f->name << '\n';
        return kExitValidation;
    }
    return kExitOk;
}

LsaModel load_checked_model(const fs::path& model_path, ModelSpec* spec_out = nullptr) {
    require_file(model_path, "model file");
    ModelSpec spec = load_model_spec(model_path);
    if (spec_out != nullptr) {
        *spec_out = spec;
    }
    Audit audit = audit_model(spec);
    if (const AuditItem* f = audit.first_failure()) {
        throw Error(f->failure, f->name + ": " + f->measured);
    }
    return std::move(*audit.model);
}

int cmd_analyze(const fs::path& model_path, const std::optional<fs::path>& out, const std::optional<fs::path>& echo) {
    ModelSpec spec;
    const LsaModel model = load_checked_model(model_path, &spec);
    const Json report = analysis_report_json(model);
    if (out) {
        open_output(*out) << report.dump(2) << '\n';
    } else {
        std::cout << report.dump(2) << '\n';
    }
    if (echo) {
        open_output(*echo) << model_spec_to_json(spec).dump(2) << '\n';
    }
    return kExitOk;
}

struct SimulateOptions {
    fs::path model;
    double alpha = 0.0;
    std::int64_t n = 0;
    std::optional<std::int64_t> n0;
    std::uint64_t seed = 0;
    std::string estimator = "all";
    std::string start = "stationary";
    std::int64_t trace_stride = 0;
    std::optional<int> expand;
    std::string noise_window = "aligned";
    std::optional<fs::path> out;
};

int cmd_simulate(const SimulateOptions& o) {
    ModelSpec spec;
    const LsaModel model = load_checked_model(o.model, &spec);
    const fs::path dir = o.out.value_or(default_output_dir());

    LsaRunConfig cfg;
    cfg.alpha = o.alpha;
    cfg.n = o.n;
    cfg.n0 = o.n0;
    cfg.seed = o.seed;
    cfg.theta0 = spec.theta0.value_or(model.theta_star());
    cfg.noise_window = parse_noise_window(o.noise_window);
    if (o.start == "stationary") {
        cfg.start = ChainStart::from_stationary();
    } else {
        try {
            cfg.start = ChainStart::at(std::stoi(o.start));
        } catch (const std::logic_error&) {
            throw UsageError("--start must be 'stationary' or a state index");
        }
    }
    cfg.validate(model.dim());

    const StabilityConstants sc = stability_constants(model);
    if (2.0 * cfg.alpha >= sc.alpha_inf) {
        std::cerr << "warning: 2*alpha=" << 2.0 * cfg.alpha << " is not below alpha_inf=" << sc.alpha_inf << '\n';
    }

    const RrOutput rr = rr_run(model, cfg);
    {
        std::ofstream csv = open_output(dir / "simulate.csv");
        csv << "estimator,component,value\n";
        auto emit = [&](const char* name, const Vector& v) {
            if (o.estimator != "all" && o.estimator != name) {
                return;
            }
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                csv << name << ',' << i << ',' << detail::fmt_double(v(i)) << '\n';
            }
        };
        emit("PR", rr.pr_alpha);
        emit("PR2", rr.pr_2alpha);
        emit("RR", rr.rr);
        emit("last", rr.last_alpha);
        emit("last2", rr.last_2alpha);
        emit("noise_mean", rr.noise_mean);
    }

    if (o.trace_stride > 0) {
        LsaRunConfig traced = cfg;
        traced.trace_stride = o.trace_stride;
        const LsaResult run = lsa_run(model, traced);
        std::ofstream csv = open_output(dir / "trace.csv");
        csv << "k";
        for (int i = 0; i < model.dim(); ++i) {
            csv << ",theta" << i;
        }
        csv << '\n';
        for (const auto& tp : run.trace) {
            csv << tp.k;
            for (Eigen::Index i = 0; i < tp.theta.size(); ++i) {
                csv << ',' << detail::fmt_double(tp.theta(i));
            }
            csv << '\n';
        }
    }

    if (o.expand) {
        const int level = *o.expand;
        const std::int64_t stride = std::max<std::int64_t>(o.trace_stride, 1);
        std::ofstream csv = open_output(dir / "expansion.csv");
        csv << "k";
        for (int l = 0; l <= level; ++l) {
            csv << ",J" << l << "_norm";
        }
        csv << ",H" << level << "_norm,transient_norm,residual\n";
        ExpansionOptions opts;
        opts.observer = [&](const ExpansionState& s) {
            if (s.step % stride != 0 && s.step != cfg.n) {
                return;
            }
            csv << s.step;
            for (const auto& jl : s.j) {
                csv << ',' << detail::fmt_double(jl.norm());
            }
            csv << ',' << detail::fmt_double(s.h.norm()) << ',' << detail::fmt_double(s.transient.norm()) << ','
                << detail::fmt_double(s.reconstruction_error()) << '\n';
        };
        const ExpansionResult res = expansion_run(model, cfg, level, opts);
        std::cout << "max reconstruction residual " << detail::fmt_double(res.max_reconstruction_error) << '\n';
    }
    std::cout << "wrote " << (dir / "simulate.csv").string() << '\n';
    return kExitOk;
}

struct ExperimentOptions {
    std::optional<fs::path> experiment;
    std::string preset;
    std::string threads = "auto";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    std::optional<fs::path> out;
};

int cmd_experiment(const ExperimentOptions& o) {
    fs::path path;
    if (!o.preset.empty()) {
        if (o.preset != "fig1") {
            throw UsageError("unknown preset " + o.preset);
        }
        path = preset_dir() / "fig1_experiment.json";
    } else if (o.experiment) {
        path = *o.experiment;
    } else {
        throw UsageError("experiment needs --experiment or --preset");
    }
    require_file(path, "experiment file");

    std::vector<std::string> overrides = o.overrides;
    if (o.seed) {
        overrides.push_back("base_seed=" + std::to_string(*o.seed));
    }
    ExperimentFile file = load_experiment(path, overrides);
    file.config.threads = parse_threads(o.threads);
    const LsaModel model = load_checked_model(file.model_path);
    const fs::path dir = o.out.value_or(default_output_dir());

    const ExperimentResult result = run_experiment(model, file.config);
    for (Statistic s : file.config.statistics) {
        std::ofstream csv = open_output(dir / (std::string(to_string(s)) + ".csv"));
        write_statistic_csv(csv, result, s);
    }

    Json meta;
    meta["experiment"] = path.string();
    meta["base_seed"] = result.base_seed;
    meta["n_traj"] = result.n_traj;
    meta["config_hash"] = result.config_hash;
    Json points = Json::array();
    Json failures = Json::array();
    for (const auto& p : result.points) {
        points.push_back({{"alpha", p.point.alpha}, {"n", p.point.n}, {"wall_seconds", p.wall_seconds}});
        if (p.failed) {
            failures.push_back(p.failure);
        }
    }
    meta["points"] = std::move(points);
    meta["failures"] = failures;

    // Slopes and the leading-term ratio are derived from the same result and
    // are as deterministic as the statistic files.
    try {
        std::ofstream csv = open_output(dir / "scaling.csv");
        csv << "beta,estimator,slope,half_width,target\n";
        for (Estimator e : {Estimator::RR, Estimator::PR}) {
            for (const auto& f : remainder_scaling(result, e)) {
                csv << detail::fmt_double(f.beta) << ',' << to_string(e) << ',' << detail::fmt_double(f.fit.slope) << ','
                    << detail::fmt_double(f.fit.half_width) << ',' << detail::fmt_double(f.beta - 2.0) << '\n';
            }
        }
    } catch (const Error& e) {
        meta["scaling"] = e.what();
    }
    {
        const Matrix sigma = noise_covariance(model);
        std::ofstream csv = open_output(dir / "leading_term.csv");
        csv << "point,alpha,n,window_ratio,stderr,full_ratio,full_target\n";
        for (std::size_t i = 0; i < result.points.size(); ++i) {
            const auto& p = result.points[i];
            if (p.failed || !p.point.has_beta() || std::abs(p.point.beta - 0.5) > 1e-12) {
                continue;
            }
            const LeadingTermCheck lt = leading_term_check(p, sigma);
            csv << i << ',' << detail::fmt_double(p.point.alpha) << ',' << p.point.n << ','
                << detail::fmt_double(lt.window_ratio) << ',' << detail::fmt_double(lt.window_ratio_se) << ','
                << detail::fmt_double(lt.full_ratio) << ',' << detail::fmt_double(lt.full_target) << '\n';
        }
    }
    open_output(dir / "metadata.json") << meta.dump(2) << '\n';

    if (result.any_failed()) {
        for (const auto& f : failures) {
            std::cerr << "error: NumericalDivergence: " << f.get<std::string>() << '\n';
        }
        return kExitNumerical;
    }
    std::cout << "wrote " << result.points.size() << " grid points to " << dir.string() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constant-step linear stochastic approximation under Markov noise: analytics and Monte-Carlo"};
    app.require_subcommand(1);

    fs::path model_path;

    auto* check = app.add_subcommand("check", "audit the modelling assumptions of a model file");
    check->add_option("--model,-m", model_path, "model JSON file")->required();

    std::optional<fs::path> analyze_out, echo;
    auto* analyze = app.add_subcommand("analyze", "closed-form analytic report (JSON)");
    analyze->add_option("--model,-m", model_path, "model JSON file")->required();
    analyze->add_option("--out,-o", analyze_out, "report path (default: stdout)");
    analyze->add_option("--echo-model", echo, "also write the parsed model back out");

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "run one trajectory (PR, 2-alpha PR, RR)");
    simulate->add_option("--model,-m", sim.model, "model JSON file")->required();
    simulate->add_option("--alpha", sim.alpha, "step size")->required();
    simulate->add_option("--n", sim.n, "number of iterations")->required();
    simulate->add_option("--n0", sim.n0, "burn-in (default n/2)");
    simulate->add_option("--seed", sim.seed, "64-bit seed");
    simulate->add_option("--estimator", sim.estimator, "PR, PR2, RR, last, last2, noise_mean or all")
        ->check(CLI::IsMember({"all", "PR", "PR2", "RR", "last", "last2", "noise_mean"}));
    simulate->add_option("--start", sim.start, "'stationary' or a state index");
    simulate->add_option("--trace-stride", sim.trace_stride, "write every k-th iterate to trace.csv");
    simulate->add_option("--expand", sim.expand, "expansion level L; writes expansion.csv")
        ->check(CLI::Range(0, kMaxExpansionLevel));
    simulate->add_option("--noise-window", sim.noise_window, "aligned or full")
        ->check(CLI::IsMember({"aligned", "full"}));
    simulate->add_option("--out,-o", sim.out, "output directory (default $RRLSA_OUTPUT_DIR or .)");

    ExperimentOptions exp;
    auto* experiment = app.add_subcommand("experiment", "multi-trajectory Monte-Carlo sweep");
    experiment->add_option("--experiment,-x", exp.experiment, "experiment JSON file");
    experiment->add_option("--preset", exp.preset, "bundled experiment (fig1)");
    experiment->add_option("--threads", exp.threads, "worker threads or 'auto'");
    experiment->add_option("--seed", exp.seed, "override base_seed");
    experiment->add_option("--set", exp.overrides, "key=value override (n_traj, base_seed, n, ...)");
    experiment->add_option("--out,-o", exp.out, "output directory (default $RRLSA_OUTPUT_DIR or .)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*check) {
            return cmd_check(model_path);
        }
        if (*analyze) {
            return cmd_analyze(model_path, analyze_out, echo);
        }
        if (*simulate) {
            return cmd_simulate(sim);
        }
        if (*experiment) {
            return cmd_experiment(exp);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    }
    return kExitUsage;
}
