#pragma once

// Subject-level glucose prediction. Each subject carries a training half and
// a test half of paired (FS, ISIG) measurements plus an optional baseline
// prediction column. Two models relate FS to ISIG: a linear regression with
// subject parameters (mu, beta, log sigma), and a local-level state space
// model with parameters (log tau, log sigma) where the regression weight
// follows a random walk. Each model fits three ways: Combined (one parameter
// for everyone), Individual (per-subject MLEs), and Npmle (the mixture over
// subjects with posterior-mean or posterior-weighted prediction). Test-half
// predictions use only information available before each test point; scores
// are pooled MSEs, reported relative to the baseline column when present.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <npmix/core.hpp>
#include <npmix/grid.hpp>
#include <npmix/kernels.hpp>
#include <npmix/posterior.hpp>
#include <npmix/solvers.hpp>

namespace npmix {

struct GlucoseSubject {
    std::string id;
    SeriesObs train;
    std::vector<double> test_fs, test_isig;
    std::vector<double> test_cgm;  // empty, or one baseline prediction per test point

    GlucoseSubject() = default;
    GlucoseSubject(std::string id_, SeriesObs train_, std::vector<double> fs,
                   std::vector<double> isig, std::vector<double> cgm = {})
        : id(std::move(id_)),
          train(std::move(train_)),
          test_fs(std::move(fs)),
          test_isig(std::move(isig)),
          test_cgm(std::move(cgm)) {
        if (test_fs.size() != test_isig.size())
            throw std::invalid_argument("GlucoseSubject: test fs/isig size mismatch");
        if (!test_cgm.empty() && test_cgm.size() != test_fs.size())
            throw std::invalid_argument("GlucoseSubject: test cgm size mismatch");
        for (std::size_t i = 0; i < test_fs.size(); ++i) {
            if (!std::isfinite(test_fs[i]) || !std::isfinite(test_isig[i]))
                throw NonFiniteError("GlucoseSubject: non-finite test value");
            if (test_isig[i] == 0.0)
                throw std::invalid_argument("GlucoseSubject: test ISIG must be nonzero");
        }
        for (double c : test_cgm)
            if (!std::isfinite(c)) throw NonFiniteError("GlucoseSubject: non-finite cgm value");
    }

    std::size_t n_test() const { return test_fs.size(); }
};

enum class GlucoseModel { Lm, Ss };
enum class GlucoseMode { Combined, Individual, Npmle };

inline const char* glucose_model_name(GlucoseModel m) {
    return m == GlucoseModel::Lm ? "lm" : "ss";
}

inline GlucoseModel glucose_model_from_name(const std::string& name) {
    if (name == "lm") return GlucoseModel::Lm;
    if (name == "ss") return GlucoseModel::Ss;
    throw std::invalid_argument("unknown glucose model '" + name + "' (expected lm or ss)");
}

inline const char* glucose_mode_name(GlucoseMode m) {
    switch (m) {
        case GlucoseMode::Combined: return "combined";
        case GlucoseMode::Individual: return "individual";
        case GlucoseMode::Npmle: return "npmle";
    }
    throw std::invalid_argument("glucose_mode_name: unknown mode");
}

inline GlucoseMode glucose_mode_from_name(const std::string& name) {
    if (name == "combined") return GlucoseMode::Combined;
    if (name == "individual") return GlucoseMode::Individual;
    if (name == "npmle") return GlucoseMode::Npmle;
    throw std::invalid_argument("unknown glucose mode '" + name +
                                "' (expected combined, individual, or npmle)");
}

struct GlucoseConfig {
    std::vector<int> grid_counts;  // empty selects 30 per mixing dimension
    SolverId solver = SolverId::Em;
    SolverConfig solver_config;
};

namespace detail {

inline bool glucose_eligible(const GlucoseSubject& s, GlucoseModel model, std::string* why) {
    if (s.n_test() == 0) {
        *why = "no test points";
        return false;
    }
    if (model == GlucoseModel::Lm) {
        if (s.train.n() < 4) {
            *why = "needs at least 4 training points";
            return false;
        }
        bool varies = false;
        for (double c : s.train.covariates)
            if (c != s.train.covariates.front()) varies = true;
        if (!varies) {
            *why = "constant training ISIG";
            return false;
        }
    } else if (s.train.n() < 3) {
        *why = "needs at least 3 training points";
        return false;
    }
    return true;
}

}  // namespace detail

// Training and test halves joined back into one series, training first.
inline SeriesObs concat_series(const GlucoseSubject& s) {
    std::vector<double> y = s.train.values;
    std::vector<double> c = s.train.covariates;
    y.insert(y.end(), s.test_fs.begin(), s.test_fs.end());
    c.insert(c.end(), s.test_isig.begin(), s.test_isig.end());
    return SeriesObs(std::move(y), std::move(c));
}

inline std::vector<double> lm_predict_test(const GlucoseSubject& s, double mu, double beta) {
    std::vector<double> out;
    out.reserve(s.n_test());
    for (double c : s.test_isig) out.push_back(lm_predict(Atom{mu, beta}, c));
    return out;
}

// One-step-ahead Kalman prediction under a single parameter atom: the filter
// runs over the joined series, and each test point is predicted by the
// filtered state from the previous time step times the current ISIG, so only
// observations strictly before the test point inform its prediction.
inline std::vector<double> ss_predict_test(const GlucoseSubject& s, const Atom& atom) {
    const SsFilterResult f = ss_filter(concat_series(s), atom);
    const std::size_t offset = s.train.n();
    std::vector<double> out(s.n_test());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = f.filtered_means[offset + i - 1] * s.test_isig[i];
    return out;
}

// Posterior-weighted Kalman prediction: single-atom predictions averaged
// under the subject's posterior row over the grid atoms.
inline std::vector<double> ss_predict_test_mixture(const GlucoseSubject& s, const Grid& grid,
                                                   const PosteriorRow& row) {
    if (row.size() != grid.size())
        throw IncompatibleError("ss_predict_test_mixture: posterior row has " +
                                std::to_string(row.size()) + " entries for " +
                                std::to_string(grid.size()) + " atoms");
    std::vector<double> out(s.n_test(), 0.0);
    const SeriesObs all = concat_series(s);
    const std::size_t offset = s.train.n();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double r = row[k];
        if (r == 0.0) continue;
        const SsFilterResult f = ss_filter(all, grid.atom(k));
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] += r * f.filtered_means[offset + i - 1] * s.test_isig[i];
    }
    return out;
}

struct GlucoseSubjectResult {
    std::string id;
    std::vector<double> predicted;
    double mse = 0.0;
};

struct GlucoseResult {
    GlucoseModel model = GlucoseModel::Lm;
    GlucoseMode mode = GlucoseMode::Combined;
    std::vector<GlucoseSubjectResult> subjects;
    std::size_t n_excluded = 0;
    double mse = 0.0;                    // pooled over every test point
    std::optional<double> cgm_mse;       // pooled baseline MSE when every subject has one
    std::optional<double> relative_mse;  // mse / cgm_mse
    std::optional<Atom> combined_atom;
    std::optional<Grid> grid;  // Npmle artifacts
    std::optional<FitResult> fit;
    std::vector<std::string> warnings;
};

inline GlucoseResult glucose_run(const std::vector<GlucoseSubject>& subjects,
                                 GlucoseModel model, GlucoseMode mode,
                                 const GlucoseConfig& cfg = {}) {
    GlucoseResult out;
    out.model = model;
    out.mode = mode;

    std::vector<const GlucoseSubject*> kept;
    for (const GlucoseSubject& s : subjects) {
        std::string why;
        if (detail::glucose_eligible(s, model, &why)) {
            kept.push_back(&s);
        } else {
            out.warnings.push_back("subject " + s.id + ": " + why + ", excluded");
            out.n_excluded += 1;
        }
    }
    if (kept.empty()) throw EmptyCohortError("glucose_run: no usable subjects");

    const KernelId kernel = model == GlucoseModel::Lm ? KernelId::LinearRegression
                                                      : KernelId::LocalLevelStateSpace;
    const std::size_t d = kernel_dim(kernel);
    std::vector<std::vector<double>> preds(kept.size());

    if (mode == GlucoseMode::Combined) {
        Atom atom;
        if (model == GlucoseModel::Lm) {
            std::vector<double> y, x;
            for (const GlucoseSubject* s : kept) {
                y.insert(y.end(), s->train.values.begin(), s->train.values.end());
                x.insert(x.end(), s->train.covariates.begin(), s->train.covariates.end());
            }
            const MleResult m =
                mle(kernel, Observation(RegressionObs(std::move(y), std::move(x))));
            if (m.boundary) out.warnings.push_back("combined fit: boundary MLE");
            atom = m.atom;
        } else {
            const MleResult m = detail::maximize_log_pair([&](double a0, double a1) {
                const double tau2 = std::exp(2.0 * a0), sigma2 = std::exp(2.0 * a1);
                double total = 0.0;
                for (const GlucoseSubject* s : kept)
                    total += detail::ss_cond_loglik(s->train.values, s->train.covariates,
                                                    tau2, sigma2);
                return total;
            });
            if (m.boundary) out.warnings.push_back("combined fit: boundary MLE");
            atom = m.atom;
        }
        out.combined_atom = atom;
        for (std::size_t i = 0; i < kept.size(); ++i)
            preds[i] = model == GlucoseModel::Lm
                           ? lm_predict_test(*kept[i], atom[0], atom[1])
                           : ss_predict_test(*kept[i], atom);
    } else if (mode == GlucoseMode::Individual) {
        for (std::size_t i = 0; i < kept.size(); ++i) {
            const GlucoseSubject* s = kept[i];
            const Observation obs =
                model == GlucoseModel::Lm
                    ? Observation(RegressionObs(s->train.values, s->train.covariates))
                    : Observation(s->train);
            const MleResult m = mle(kernel, obs);
            if (m.boundary) out.warnings.push_back("subject " + s->id + ": boundary MLE");
            preds[i] = model == GlucoseModel::Lm ? lm_predict_test(*s, m.atom[0], m.atom[1])
                                                 : ss_predict_test(*s, m.atom);
        }
    } else {
        std::vector<Observation> obs;
        obs.reserve(kept.size());
        for (const GlucoseSubject* s : kept) {
            if (model == GlucoseModel::Lm)
                obs.emplace_back(RegressionObs(s->train.values, s->train.covariates));
            else
                obs.emplace_back(s->train);
        }
        GridSpec spec;
        if (cfg.grid_counts.empty())
            spec.per_dim_counts.assign(d, 30);
        else
            spec.per_dim_counts = cfg.grid_counts;
        const Grid grid = regular_grid(mle_cloud(kernel, obs, &out.warnings), spec,
                                       &out.warnings);
        const LogLikelihoodMatrix L = log_likelihood_matrix(kernel, obs, grid);
        const FitResult fit = solve(L, cfg.solver, cfg.solver_config);
        if (model == GlucoseModel::Lm) {
            const std::vector<double> mu_hat = posterior_means(L, grid, fit.weights, 0);
            const std::vector<double> beta_hat = posterior_means(L, grid, fit.weights, 1);
            for (std::size_t i = 0; i < kept.size(); ++i)
                preds[i] = lm_predict_test(*kept[i], mu_hat[i], beta_hat[i]);
        } else {
            for (std::size_t i = 0; i < kept.size(); ++i)
                preds[i] = ss_predict_test_mixture(*kept[i], grid,
                                                   posterior_row(L, i, fit.weights));
        }
        out.grid = grid;
        out.fit = fit;
    }

    double se = 0.0, cgm_se = 0.0;
    std::size_t points = 0;
    bool have_cgm = true;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const GlucoseSubject* s = kept[i];
        GlucoseSubjectResult sr;
        sr.id = s->id;
        sr.predicted = preds[i];
        double sub_se = 0.0;
        for (std::size_t t = 0; t < s->n_test(); ++t) {
            const double e = preds[i][t] - s->test_fs[t];
            sub_se += e * e;
        }
        sr.mse = sub_se / static_cast<double>(s->n_test());
        se += sub_se;
        points += s->n_test();
        if (s->test_cgm.empty()) {
            have_cgm = false;
        } else {
            for (std::size_t t = 0; t < s->n_test(); ++t) {
                const double e = s->test_cgm[t] - s->test_fs[t];
                cgm_se += e * e;
            }
        }
        out.subjects.push_back(std::move(sr));
    }
    out.mse = se / static_cast<double>(points);
    if (have_cgm) {
        out.cgm_mse = cgm_se / static_cast<double>(points);
        out.relative_mse = out.mse / *out.cgm_mse;
    }
    return out;
}

struct GlucoseStudy {
    std::vector<GlucoseResult> modes;  // combined, individual, npmle
};

inline GlucoseStudy glucose_study(const std::vector<GlucoseSubject>& subjects,
                                  GlucoseModel model, const GlucoseConfig& cfg = {}) {
    GlucoseStudy study;
    for (GlucoseMode mode :
         {GlucoseMode::Combined, GlucoseMode::Individual, GlucoseMode::Npmle})
        study.modes.push_back(glucose_run(subjects, model, mode, cfg));
    return study;
}

inline std::string glucose_report_csv(const GlucoseStudy& study) {
    std::string out = "model,mode,n_subjects,n_excluded,mse,cgm_mse,relative_mse\n";
    char buf[256];
    for (const GlucoseResult& r : study.modes) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%zu,%zu,%.10g,", glucose_model_name(r.model),
                      glucose_mode_name(r.mode), r.subjects.size(), r.n_excluded, r.mse);
        out += buf;
        if (r.cgm_mse) {
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g\n", *r.cgm_mse, *r.relative_mse);
            out += buf;
        } else {
            out += ",\n";
        }
    }
    return out;
}

inline std::string glucose_report_text(const GlucoseStudy& study) {
    char buf[256];
    std::string out;
    if (study.modes.empty()) return out;
    std::snprintf(buf, sizeof(buf), "%s model, %zu subjects\n",
                  glucose_model_name(study.modes.front().model),
                  study.modes.front().subjects.size());
    out += buf;
    std::snprintf(buf, sizeof(buf), "%-12s %14s %14s\n", "mode", "mse", "relative_mse");
    out += buf;
    for (const GlucoseResult& r : study.modes) {
        if (r.relative_mse)
            std::snprintf(buf, sizeof(buf), "%-12s %14.4f %14.4f\n", glucose_mode_name(r.mode),
                          r.mse, *r.relative_mse);
        else
            std::snprintf(buf, sizeof(buf), "%-12s %14.4f %14s\n", glucose_mode_name(r.mode),
                          r.mse, "n/a");
        out += buf;
    }
    return out;
}

struct GlucoseSimConfig {
    long subjects = 40;
    long train_points = 30;
    long test_points = 15;
    std::vector<Atom> atoms = {Atom{std::log(0.5), std::log(3.0)},
                               Atom{std::log(0.05), std::log(10.0)}};
    std::vector<double> probs = {0.5, 0.5};
    double isig_lo = 3.0, isig_hi = 8.0;
    double alpha0 = 20.0;  // starting level of every subject's state walk
    double cgm_sd = 0.0;   // > 0 adds a noisy baseline column on the test half
    std::uint64_t seed = 0;
};

// Heterogeneous subjects from the local-level state space model: each draws
// (log tau, log sigma) from the finite mixing distribution, then a random
// walk state and noisy observations with uniform ISIG covariates.
inline std::vector<GlucoseSubject> sample_glucose(const GlucoseSimConfig& cfg,
                                                  std::vector<std::size_t>* component = nullptr) {
    if (cfg.subjects < 1)
        throw std::invalid_argument("sample_glucose: subjects must be >= 1");
    if (cfg.train_points < 2)
        throw std::invalid_argument("sample_glucose: need at least 2 training points");
    if (cfg.test_points < 0)
        throw std::invalid_argument("sample_glucose: negative test_points");
    if (cfg.atoms.empty() || cfg.atoms.size() != cfg.probs.size())
        throw std::invalid_argument("sample_glucose: atoms/probs size mismatch or empty");
    for (const Atom& a : cfg.atoms)
        if (a.dim() != 2) throw IncompatibleError("sample_glucose: atoms must be 2-D");
    double total = 0.0;
    for (double p : cfg.probs) {
        if (!(p >= 0.0)) throw std::invalid_argument("sample_glucose: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-8)
        throw std::invalid_argument("sample_glucose: probabilities must sum to 1");
    if (!(cfg.isig_lo > 0.0 && cfg.isig_hi >= cfg.isig_lo))
        throw std::invalid_argument("sample_glucose: need 0 < isig_lo <= isig_hi");
    if (!std::isfinite(cfg.alpha0) || !(cfg.cgm_sd >= 0.0))
        throw std::invalid_argument("sample_glucose: bad alpha0 or cgm_sd");

    std::vector<double> cum(cfg.probs.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < cfg.probs.size(); ++k) {
        acc += cfg.probs[k];
        cum[k] = acc;
    }
    cum.back() = 1.0;

    std::mt19937_64 rng(detail::splitmix64(cfg.seed));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_real_distribution<double> isig_dist(cfg.isig_lo, cfg.isig_hi);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<GlucoseSubject> subjects;
    subjects.reserve(static_cast<std::size_t>(cfg.subjects));
    if (component) component->clear();
    for (long j = 0; j < cfg.subjects; ++j) {
        const std::size_t k = std::min(
            static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), unif(rng)) -
                                     cum.begin()),
            cfg.atoms.size() - 1);
        if (component) component->push_back(k);
        const double tau = std::exp(cfg.atoms[k][0]);
        const double sigma = std::exp(cfg.atoms[k][1]);

        const long n = cfg.train_points + cfg.test_points;
        std::vector<double> fs(static_cast<std::size_t>(n)), isig(static_cast<std::size_t>(n));
        double alpha = cfg.alpha0;
        for (long t = 0; t < n; ++t) {
            if (t > 0) alpha += tau * gauss(rng);
            isig[static_cast<std::size_t>(t)] = isig_dist(rng);
            fs[static_cast<std::size_t>(t)] =
                alpha * isig[static_cast<std::size_t>(t)] + sigma * gauss(rng);
        }
        const std::size_t cut = static_cast<std::size_t>(cfg.train_points);
        std::vector<double> train_fs(fs.begin(), fs.begin() + cut);
        std::vector<double> train_isig(isig.begin(), isig.begin() + cut);
        std::vector<double> test_fs(fs.begin() + cut, fs.end());
        std::vector<double> test_isig(isig.begin() + cut, isig.end());
        std::vector<double> cgm;
        if (cfg.cgm_sd > 0.0)
            for (double v : test_fs) cgm.push_back(v + cfg.cgm_sd * gauss(rng));
        subjects.emplace_back("s" + std::to_string(j),
                              SeriesObs(std::move(train_fs), std::move(train_isig)),
                              std::move(test_fs), std::move(test_isig), std::move(cgm));
    }
    return subjects;
}

}  // namespace npmix
