#include <npmix/npmix.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace npmix;

namespace {

const std::string& require(const std::optional<std::string>& v, const char* flag,
                           const char* what) {
    if (!v) throw SchemaError(std::string(what) + ": missing --" + flag);
    return *v;
}

SolverConfig solver_config_from(const RunConfig& cfg) {
    SolverConfig sc;
    if (cfg.tol) sc.tol = *cfg.tol;
    if (cfg.max_iter) sc.max_iter = *cfg.max_iter;
    if (cfg.trace) sc.trace = *cfg.trace;
    return sc;
}

SolverId solver_id_from(const RunConfig& cfg) {
    return solver_from_name(cfg.solver.value_or("em"));
}

GridSpec grid_spec_from(const RunConfig& cfg, std::size_t dim, const char* what) {
    GridSpec spec;
    spec.per_dim_counts =
        cfg.grid ? parse_grid_counts(*cfg.grid) : std::vector<int>(dim, 30);
    if (spec.per_dim_counts.size() != dim)
        throw SchemaError(std::string(what) + ": grid has " +
                          std::to_string(spec.per_dim_counts.size()) + " counts, kernel needs " +
                          std::to_string(dim));
    spec.bounds_mode = bounds_mode_from_name(cfg.bounds_mode.value_or("box"));
    return spec;
}

void emit_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_fit(const RunConfig& cfg) {
    const KernelId kernel = kernel_from_name(require(cfg.kernel, "kernel", "fit"));
    const std::string output = require(cfg.output, "output", "fit");
    const std::vector<Observation> data =
        load_observations_csv(kernel, require(cfg.input, "input", "fit"));

    const GridSpec spec = grid_spec_from(cfg, kernel_dim(kernel), "fit");
    std::vector<std::string> warnings;
    const std::vector<Atom> cloud = mle_cloud(kernel, data, &warnings);
    const Grid grid = regular_grid(cloud, spec, &warnings);
    emit_warnings(warnings);

    const LogLikelihoodMatrix L = log_likelihood_matrix(kernel, data, grid);
    const FitResult fit = solve(L, solver_id_from(cfg), solver_config_from(cfg));
    for (const IterRecord& r : fit.trace)
        std::cerr << r.iter << ',' << r.neg_log_lik << ',' << r.kkt_gap << "\n";

    FitFile f;
    f.kernel = kernel;
    f.grid = grid;
    f.per_dim_counts = spec.per_dim_counts;
    f.fit = fit;
    f.seed = cfg.seed ? resolve_seed(cfg.seed, "fit") : 0;
    save_fit_json(f, output);

    std::cout << "fit: kernel " << kernel_name(kernel) << ", p " << data.size() << ", q "
              << grid.size() << ", neg_log_lik " << fit.neg_log_lik << ", kkt_gap " << fit.kkt_gap
              << ", iterations " << fit.iterations << ", converged "
              << (fit.converged ? "yes" : "no") << "\n";
    return fit.converged ? 0 : 2;
}

int cmd_posterior(const RunConfig& cfg) {
    const FitFile f = load_fit_json(require(cfg.fit, "fit", "posterior"));
    const std::vector<Observation> data =
        load_observations_csv(f.kernel, require(cfg.input, "input", "posterior"));
    const LogLikelihoodMatrix L = log_likelihood_matrix(f.kernel, data, f.grid);
    std::vector<std::size_t> dims;
    if (cfg.dims) {
        dims = parse_dim_list(*cfg.dims, f.grid.dim());
    } else {
        for (std::size_t d = 0; d < f.grid.dim(); ++d) dims.push_back(d);
    }
    detail::write_file(require(cfg.output, "output", "posterior"),
                       posterior_csv(L, f.grid, f.fit.weights, dims));
    return 0;
}

int cmd_simulate(const RunConfig& cfg) {
    SimStudyConfig sc;
    sc.sim.reps = cfg.reps.value_or(2);
    sc.sim.p = cfg.p.value_or(1000);
    sc.sim.n = cfg.n.value_or(16);
    sc.sim.mixing = mixing_from_name(cfg.mixing.value_or("dist1"));
    sc.sim.seed = resolve_seed(cfg.seed, "simulate");
    const std::vector<int> counts = parse_grid_counts(cfg.grid.value_or("30x30"));
    if (counts.size() != 2) throw SchemaError("simulate: grid must be q1xq2");
    sc.q1 = counts[0];
    sc.q2 = counts[1];
    sc.solver = solver_config_from(cfg);

    const SimStudy study = run_sim_study(sc);
    detail::write_file(require(cfg.output, "output", "simulate"), sim_report_csv(study));
    std::cout << sim_report_text(study);
    return 0;
}

int cmd_baseball(const RunConfig& cfg) {
    const std::vector<BaseballRecord> records =
        load_baseball_csv(require(cfg.input, "input", "baseball"));
    BaseballConfig bc;
    const std::vector<int> counts = parse_grid_counts(cfg.grid.value_or("30x30"));
    if (counts.size() != 2) throw SchemaError("baseball: grid must be q1xq2");
    bc.q1 = counts[0];
    bc.q2 = counts[1];
    bc.solver = solver_id_from(cfg);
    bc.solver_config = solver_config_from(cfg);
    if (cfg.min_at_bats) bc.min_at_bats = *cfg.min_at_bats;

    const BaseballStudy study = baseball_pipeline(records, bc);
    for (const BaseballResult& r : study.cohorts) emit_warnings(r.warnings);
    detail::write_file(require(cfg.output, "output", "baseball"), baseball_report_csv(study));
    std::cout << baseball_report_text(study);
    return 0;
}

int cmd_classify(const RunConfig& cfg) {
    const MatrixCsv train = load_matrix_csv(require(cfg.train, "train", "classify"));
    if (train.values.cols() < 2)
        throw SchemaError("classify: training matrix needs a label column plus features");
    const Eigen::Index p = train.values.cols() - 1;
    std::vector<int> labels(static_cast<std::size_t>(train.values.rows()));
    for (Eigen::Index i = 0; i < train.values.rows(); ++i) {
        const double l = train.values(i, 0);
        if (l != 0.0 && l != 1.0)
            throw SchemaError("classify: training labels must be 0 or 1 in the first column");
        labels[static_cast<std::size_t>(i)] = static_cast<int>(l);
    }

    ClassifierConfig cc;
    const std::vector<int> counts = parse_grid_counts(cfg.grid.value_or("30x30"));
    if (counts.size() != 2) throw SchemaError("classify: grid must be q1xq2");
    cc.q1 = counts[0];
    cc.q2 = counts[1];
    if (cfg.independent) cc.independent = *cfg.independent;
    cc.solver = solver_id_from(cfg);
    cc.solver_config = solver_config_from(cfg);

    const ClassifierModel model = fit_classifier(train.values.rightCols(p), labels, cc);
    emit_warnings(model.warnings);

    const MatrixCsv test = load_matrix_csv(require(cfg.test, "test", "classify"));
    Eigen::MatrixXd X;
    std::vector<int> truth;
    if (test.values.cols() == p + 1) {
        for (Eigen::Index i = 0; i < test.values.rows(); ++i) {
            const double l = test.values(i, 0);
            if (l != 0.0 && l != 1.0)
                throw SchemaError("classify: test labels must be 0 or 1 in the first column");
            truth.push_back(static_cast<int>(l));
        }
        X = test.values.rightCols(p);
    } else if (test.values.cols() == p) {
        X = test.values;
    } else {
        throw SchemaError("classify: test matrix has " + std::to_string(test.values.cols()) +
                          " columns, expected " + std::to_string(p) + " or " +
                          std::to_string(p + 1));
    }

    std::vector<double> scores;
    const std::vector<int> predicted = classify_matrix(model, X, &scores);
    std::string out = "observation,score,predicted,label\n";
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        out += std::to_string(i) + ',' + detail::fmt_g17(scores[i]) + ',' +
               std::to_string(predicted[i]) + ',';
        if (!truth.empty()) out += std::to_string(truth[i]);
        out += '\n';
    }
    detail::write_file(require(cfg.output, "output", "classify"), out);

    std::cout << "classifier: " << (model.joint ? "joint" : "independent") << " prior over "
              << model.feature_index.size() << " features, trained on " << model.n0 << "+"
              << model.n1 << " subjects\n";
    if (!truth.empty()) {
        const ConfusionCounts c = confusion(predicted, truth);
        std::cout << "confusion: true0 " << c.true0 << ", false1 " << c.false1 << ", false0 "
                  << c.false0 << ", true1 " << c.true1 << "\n"
                  << "errors: " << c.errors() << " of " << c.total() << " (rate "
                  << c.error_rate() << ")\n";
    } else {
        std::cout << "confusion: n/a (unlabeled test matrix)\n";
    }
    return 0;
}

int cmd_glucose(const RunConfig& cfg) {
    const std::vector<GlucoseSubject> subjects =
        load_glucose_csv(require(cfg.input, "input", "glucose"));
    const GlucoseModel model = glucose_model_from_name(require(cfg.model, "model", "glucose"));
    GlucoseConfig gc;
    if (cfg.grid) gc.grid_counts = parse_grid_counts(*cfg.grid);
    gc.solver = solver_id_from(cfg);
    gc.solver_config = solver_config_from(cfg);

    const GlucoseStudy study = glucose_study(subjects, model, gc);
    for (const GlucoseResult& r : study.modes) emit_warnings(r.warnings);
    detail::write_file(require(cfg.output, "output", "glucose"), glucose_report_csv(study));
    std::cout << glucose_report_text(study);
    return 0;
}

int cmd_sample(const RunConfig& cfg) {
    const FitFile f = load_fit_json(require(cfg.fit, "fit", "sample"));
    const long draws = cfg.draws.value_or(0);
    if (draws < 1) throw SchemaError("sample: need --draws >= 1");
    SampleSpec spec;
    if (cfg.replicates) {
        if (*cfg.replicates < 2) throw SchemaError("sample: need --replicates >= 2");
        spec.replicates = static_cast<std::size_t>(*cfg.replicates);
    }
    const std::vector<Observation> data =
        sample_mixture(f.kernel, f.grid, f.fit.weights, static_cast<std::size_t>(draws),
                       resolve_seed(cfg.seed, "sample"), spec);
    save_observations_csv(f.kernel, data, require(cfg.output, "output", "sample"));
    return 0;
}

int cmd_marginal(const RunConfig& cfg) {
    const FitFile f = load_fit_json(require(cfg.fit, "fit", "marginal"));
    const long dim = cfg.dim.value_or(0);
    if (dim < 0 || static_cast<std::size_t>(dim) >= f.grid.dim())
        throw SchemaError("marginal: --dim out of range for a " + std::to_string(f.grid.dim()) +
                          "-dimensional grid");
    detail::write_file(
        require(cfg.output, "output", "marginal"),
        marginal_csv(f.grid, f.fit.weights, static_cast<std::size_t>(dim)));
    return 0;
}

struct SubcommandFlags {
    RunConfig flags;
    std::optional<std::string> config_path;
    bool trace = false;
    bool independent = false;
    CLI::App* app = nullptr;
};

void add_common(CLI::App* sub, SubcommandFlags* f) {
    f->app = sub;
    sub->add_option("--kernel", f->flags.kernel, "mixture kernel name");
    sub->add_option("--grid", f->flags.grid, "grid counts, e.g. 30x30");
    sub->add_option("--bounds-mode", f->flags.bounds_mode, "box or hull");
    sub->add_option("--solver", f->flags.solver, "em or fw");
    sub->add_option("--tol", f->flags.tol, "relative objective-change tolerance");
    sub->add_option("--max-iter", f->flags.max_iter, "iteration cap, 0 for the default");
    sub->add_option("--seed", f->flags.seed, "integer seed or 'auto'");
    sub->add_option("--input", f->flags.input, "input csv path");
    sub->add_option("--output", f->flags.output, "output file path");
    sub->add_option("--config", f->config_path, "json config file; flags override it");
}

RunConfig effective(const SubcommandFlags& f, const RunConfig& defaults) {
    RunConfig flags = f.flags;
    const CLI::Option* tr = f.app->get_option_no_throw("--trace");
    if (tr && tr->count()) flags.trace = f.trace;
    const CLI::Option* ind = f.app->get_option_no_throw("--independent");
    if (ind && ind->count()) flags.independent = f.independent;
    const RunConfig file = f.config_path ? load_config_file(*f.config_path) : RunConfig{};
    return merge(merge(defaults, file), flags);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grid-based nonparametric maximum-likelihood mixture fitting"};
    app.require_subcommand(1);

    SubcommandFlags fit_f, post_f, sim_f, base_f, cls_f, glu_f, samp_f, marg_f;

    CLI::App* fit = app.add_subcommand("fit", "fit a mixing distribution to observations");
    add_common(fit, &fit_f);
    fit->add_flag("--trace", fit_f.trace, "stream iteration records to stderr");

    CLI::App* post = app.add_subcommand("posterior", "per-observation posterior means");
    add_common(post, &post_f);
    post->add_option("--fit", post_f.flags.fit, "fit json path");
    post->add_option("--dims", post_f.flags.dims, "coordinates, e.g. 0,1");

    CLI::App* sim = app.add_subcommand("simulate", "replicated estimator comparison");
    add_common(sim, &sim_f);
    sim->add_option("--reps", sim_f.flags.reps, "number of replications");
    sim->add_option("--p", sim_f.flags.p, "observations per replication");
    sim->add_option("--n", sim_f.flags.n, "replicates per observation");
    sim->add_option("--mixing", sim_f.flags.mixing, "dist1 or dist2");

    CLI::App* base = app.add_subcommand("baseball", "batting-average shrinkage study");
    add_common(base, &base_f);
    base->add_option("--min-at-bats", base_f.flags.min_at_bats,
                     "train/evaluate only above this many at-bats");

    CLI::App* cls = app.add_subcommand("classify", "two-class feature-mixture classifier");
    add_common(cls, &cls_f);
    cls->add_option("--train", cls_f.flags.train, "training matrix csv, first column labels");
    cls->add_option("--test", cls_f.flags.test, "test matrix csv, labels optional");
    cls->add_flag("--independent", cls_f.independent, "fit per-class priors independently");

    CLI::App* glu = app.add_subcommand("glucose", "sensor-calibration prediction study");
    add_common(glu, &glu_f);
    glu->add_option("--model", glu_f.flags.model, "lm or ss");

    CLI::App* samp = app.add_subcommand("sample", "draw observations from a fitted mixture");
    add_common(samp, &samp_f);
    samp->add_option("--fit", samp_f.flags.fit, "fit json path");
    samp->add_option("--draws", samp_f.flags.draws, "number of observations");
    samp->add_option("--replicates", samp_f.flags.replicates, "replicates per draw");

    CLI::App* marg = app.add_subcommand("marginal", "one-dimensional marginal of a fit");
    add_common(marg, &marg_f);
    marg->add_option("--fit", marg_f.flags.fit, "fit json path");
    marg->add_option("--dim", marg_f.flags.dim, "coordinate to marginalize onto");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fit->parsed()) return cmd_fit(effective(fit_f, {}));
        if (post->parsed()) return cmd_posterior(effective(post_f, {}));
        if (sim->parsed()) return cmd_simulate(effective(sim_f, {}));
        if (base->parsed()) return cmd_baseball(effective(base_f, {}));
        if (cls->parsed()) return cmd_classify(effective(cls_f, {}));
        if (glu->parsed()) return cmd_glucose(effective(glu_f, {}));
        if (samp->parsed()) return cmd_sample(effective(samp_f, {}));
        if (marg->parsed()) return cmd_marginal(effective(marg_f, {}));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
