#pragma once

// Naive Bayes classification for high-dimensional two-class data. Each
// feature j carries a pair of class means (mu_j0, mu_j1) drawn from a shared
// bivariate mixing distribution; measurements are unit-variance Gaussian
// around the class mean (inputs are assumed standardized upstream). Fitting
// computes the bivariate NPMLE of the mixing distribution from the training
// matrix; classification plugs the fit into the Bayes rule, scoring a new
// subject by posterior-predictive log-density ratios summed over features
// plus the training log prior odds. An independent variant fits each class's
// mean distribution separately with univariate NPMLEs, which is what the
// joint model reduces to when mu_j0 and mu_j1 are independent.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <npmix/core.hpp>
#include <npmix/grid.hpp>
#include <npmix/kernels.hpp>
#include <npmix/posterior.hpp>
#include <npmix/solvers.hpp>

namespace npmix {

struct ClassifierConfig {
    int q1 = 30, q2 = 30;  // grid counts: dimensions of the joint grid, or
                           // per-class counts for the independent variant
    bool independent = false;
    SolverId solver = SolverId::Em;
    SolverConfig solver_config;
};

struct ClassifierModel {
    bool joint = true;
    double log_prior_odds = 0.0;  // log(n1 / n0) from the training labels
    long n0 = 0, n1 = 0;
    std::vector<std::size_t> feature_index;  // training columns kept, in order

    // joint model: one 2-D grid over (mu0, mu1), one weight vector, and a
    // per-feature posterior row over the atoms
    Grid grid;
    FitResult fit;
    Eigen::VectorXd atom0, atom1;   // atom coordinates split by class
    Eigen::MatrixXd log_posterior;  // kept features x atoms, log scale

    // independent variant: one univariate fit per class
    struct PerClass {
        Grid grid;
        FitResult fit;
        Eigen::VectorXd atom;
        Eigen::MatrixXd log_posterior;
    };
    std::vector<PerClass> per_class;

    std::vector<std::string> warnings;
};

namespace detail {

inline Eigen::ArrayXd rowwise_logsumexp(const Eigen::ArrayXXd& b) {
    const Eigen::ArrayXd m = b.rowwise().maxCoeff();
    const Eigen::ArrayXd s = (b.colwise() - m).exp().rowwise().sum();
    return m + s.log();
}

// log posterior-predictive density per feature for one class: row j gives
// log sum_k exp(log_posterior(j,k) - (x_j - atom_k)^2 / 2), dropping the
// shared Gaussian constant (it cancels in class-difference scores).
inline Eigen::ArrayXd class_predictive(const Eigen::MatrixXd& log_posterior,
                                       const Eigen::VectorXd& atoms,
                                       const Eigen::VectorXd& x) {
    const Eigen::ArrayXXd sq =
        (x.rowwise().replicate(atoms.size()) - atoms.transpose().colwise().replicate(x.size()))
            .array()
            .square();
    return rowwise_logsumexp(log_posterior.array() - 0.5 * sq);
}

inline Eigen::MatrixXd log_posterior_rows(const LogLikelihoodMatrix& L,
                                          const MixingWeights& w) {
    Eigen::MatrixXd out(L.rows(), L.cols());
    for (Eigen::Index j = 0; j < L.rows(); ++j) {
        const PosteriorRow r = posterior_row(L, static_cast<std::size_t>(j), w);
        for (Eigen::Index k = 0; k < L.cols(); ++k)
            out(j, k) = r.weights[k] > 0.0 ? std::log(r.weights[k]) : neg_inf;
    }
    return out;
}

}  // namespace detail

// Fit from a training matrix (subjects x features) and 0/1 labels. Features
// containing non-finite values are excluded with a warning; both classes
// must be present.
inline ClassifierModel fit_classifier(const Eigen::MatrixXd& values,
                                      const std::vector<int>& labels,
                                      const ClassifierConfig& cfg = {}) {
    const Eigen::Index n = values.rows(), p = values.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw IncompatibleError("fit_classifier: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(n) + " training rows");
    long n0 = 0, n1 = 0;
    for (int l : labels) {
        if (l != 0 && l != 1)
            throw std::invalid_argument("fit_classifier: labels must be 0 or 1");
        (l == 0 ? n0 : n1) += 1;
    }
    if (n0 == 0 || n1 == 0)
        throw std::invalid_argument("fit_classifier: both classes must appear in training data");

    ClassifierModel model;
    model.joint = !cfg.independent;
    model.n0 = n0;
    model.n1 = n1;
    model.log_prior_odds = std::log(static_cast<double>(n1) / static_cast<double>(n0));

    for (Eigen::Index j = 0; j < p; ++j) {
        if (values.col(j).allFinite())
            model.feature_index.push_back(static_cast<std::size_t>(j));
        else
            model.warnings.push_back("feature " + std::to_string(j) +
                                     ": non-finite values, excluded");
    }
    if (model.feature_index.empty())
        throw std::invalid_argument("fit_classifier: no usable features");
    const std::size_t kept = model.feature_index.size();

    if (model.joint) {
        std::vector<Observation> obs;
        obs.reserve(kept);
        for (std::size_t jj : model.feature_index) {
            std::vector<double> v(static_cast<std::size_t>(n));
            for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = values(i, jj);
            obs.emplace_back(TwoClassObs(std::move(v), labels));
        }
        GridSpec spec;
        spec.per_dim_counts = {cfg.q1, cfg.q2};
        model.grid =
            regular_grid(mle_cloud(KernelId::TwoClassGaussian, obs, &model.warnings), spec,
                         &model.warnings);
        const LogLikelihoodMatrix L =
            log_likelihood_matrix(KernelId::TwoClassGaussian, obs, model.grid);
        model.fit = solve(L, cfg.solver, cfg.solver_config);

        const Eigen::Index q = static_cast<Eigen::Index>(model.grid.size());
        model.atom0.resize(q);
        model.atom1.resize(q);
        for (Eigen::Index k = 0; k < q; ++k) {
            model.atom0(k) = model.grid.atom(static_cast<std::size_t>(k))[0];
            model.atom1(k) = model.grid.atom(static_cast<std::size_t>(k))[1];
        }
        model.log_posterior = detail::log_posterior_rows(L, model.fit.weights);
        return model;
    }

    // independent variant: univariate NPMLE per class on the class means,
    // whose sampling variance is 1/n_c
    const int counts[2] = {cfg.q1, cfg.q2};
    for (int c = 0; c < 2; ++c) {
        const double nc = static_cast<double>(c == 0 ? n0 : n1);
        std::vector<Observation> obs;
        obs.reserve(kept);
        for (std::size_t jj : model.feature_index) {
            double sum = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (labels[static_cast<std::size_t>(i)] == c) sum += values(i, jj);
            obs.emplace_back(KnownVarObs(sum / nc, 1.0 / nc));
        }
        ClassifierModel::PerClass pc;
        GridSpec spec;
        spec.per_dim_counts = {counts[c]};
        pc.grid = regular_grid(mle_cloud(KernelId::GaussianLocation, obs, &model.warnings),
                               spec, &model.warnings);
        const LogLikelihoodMatrix L =
            log_likelihood_matrix(KernelId::GaussianLocation, obs, pc.grid);
        pc.fit = solve(L, cfg.solver, cfg.solver_config);
        pc.atom.resize(static_cast<Eigen::Index>(pc.grid.size()));
        for (Eigen::Index k = 0; k < pc.atom.size(); ++k)
            pc.atom(k) = pc.grid.atom(static_cast<std::size_t>(k))[0];
        pc.log_posterior = detail::log_posterior_rows(L, pc.fit.weights);
        model.per_class.push_back(std::move(pc));
    }
    return model;
}

// Score one subject: sum over kept features of the class-1 minus class-0
// posterior-predictive log densities, plus the log prior odds. Positive
// scores favor class 1.
inline double classify_score(const ClassifierModel& model, const Eigen::VectorXd& x) {
    const std::size_t kept = model.feature_index.size();
    if (kept == 0) throw std::invalid_argument("classify_score: model has no features");
    Eigen::VectorXd xs(static_cast<Eigen::Index>(kept));
    for (std::size_t j = 0; j < kept; ++j) {
        const std::size_t src = model.feature_index[j];
        if (src >= static_cast<std::size_t>(x.size()))
            throw IncompatibleError("classify_score: subject has " + std::to_string(x.size()) +
                                    " features, model needs index " + std::to_string(src));
        const double v = x(static_cast<Eigen::Index>(src));
        if (!std::isfinite(v)) throw NonFiniteError("classify_score: non-finite feature value");
        xs(static_cast<Eigen::Index>(j)) = v;
    }

    Eigen::ArrayXd log1, log0;
    if (model.joint) {
        log1 = detail::class_predictive(model.log_posterior, model.atom1, xs);
        log0 = detail::class_predictive(model.log_posterior, model.atom0, xs);
    } else {
        if (model.per_class.size() != 2)
            throw std::invalid_argument("classify_score: independent model is incomplete");
        log1 = detail::class_predictive(model.per_class[1].log_posterior,
                                        model.per_class[1].atom, xs);
        log0 = detail::class_predictive(model.per_class[0].log_posterior,
                                        model.per_class[0].atom, xs);
    }
    return (log1 - log0).sum() + model.log_prior_odds;
}

inline int classify(const ClassifierModel& model, const Eigen::VectorXd& x) {
    return classify_score(model, x) >= 0.0 ? 1 : 0;
}

// Classify every row of a test matrix.
inline std::vector<int> classify_matrix(const ClassifierModel& model, const Eigen::MatrixXd& X,
                                        std::vector<double>* scores = nullptr) {
    std::vector<int> labels;
    labels.reserve(static_cast<std::size_t>(X.rows()));
    if (scores) scores->clear();
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double s = classify_score(model, X.row(i).transpose());
        if (scores) scores->push_back(s);
        labels.push_back(s >= 0.0 ? 1 : 0);
    }
    return labels;
}

struct ConfusionCounts {
    long true0 = 0, true1 = 0, false0 = 0, false1 = 0;  // false1 = predicted 1, truth 0

    long errors() const { return false0 + false1; }
    long total() const { return true0 + true1 + false0 + false1; }
    double error_rate() const {
        return total() == 0 ? 0.0 : static_cast<double>(errors()) / static_cast<double>(total());
    }
};

inline ConfusionCounts confusion(const std::vector<int>& predicted,
                                 const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        throw IncompatibleError("confusion: prediction/label length mismatch");
    ConfusionCounts c;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (truth[i] == 0)
            (predicted[i] == 0 ? c.true0 : c.false1) += 1;
        else
            (predicted[i] == 1 ? c.true1 : c.false0) += 1;
    }
    return c;
}

struct ClassifierSimConfig {
    long features = 500;
    long train_subjects = 60;
    long test_subjects = 100;
    double shift = 2.0;         // class-1 mean offset on informative features
    double shifted_frac = 0.1;  // fraction of informative features
    double base_sd = 1.0;       // spread of the shared baseline means
    std::uint64_t seed = 0;
};

struct ClassifierSim {
    Eigen::MatrixXd train_values;  // subjects x features
    std::vector<int> train_labels;
    Eigen::MatrixXd test_values;
    std::vector<int> test_labels;
    std::vector<bool> informative;  // per feature
    std::vector<double> mu0, mu1;   // true class means per feature
};

// Correlated-mean two-class design: every feature has a baseline mean shared
// by both classes; an informative fraction adds a fixed shift for class 1.
// Subjects are split evenly between classes in both halves.
inline ClassifierSim sample_two_class(const ClassifierSimConfig& cfg) {
    if (cfg.features < 1)
        throw std::invalid_argument("sample_two_class: features must be >= 1");
    if (cfg.train_subjects < 2)
        throw std::invalid_argument("sample_two_class: need at least 2 training subjects");
    if (cfg.test_subjects < 1)
        throw std::invalid_argument("sample_two_class: need at least 1 test subject");
    if (!(cfg.shifted_frac >= 0.0 && cfg.shifted_frac <= 1.0))
        throw std::invalid_argument("sample_two_class: shifted_frac outside [0, 1]");
    if (!std::isfinite(cfg.shift) || !(cfg.base_sd >= 0.0))
        throw std::invalid_argument("sample_two_class: bad shift or base_sd");

    std::mt19937_64 rng(detail::splitmix64(cfg.seed));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    ClassifierSim sim;
    const Eigen::Index p = static_cast<Eigen::Index>(cfg.features);
    sim.informative.resize(static_cast<std::size_t>(p));
    sim.mu0.resize(static_cast<std::size_t>(p));
    sim.mu1.resize(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        const double base = cfg.base_sd * gauss(rng);
        const bool hot = unif(rng) < cfg.shifted_frac;
        sim.informative[static_cast<std::size_t>(j)] = hot;
        sim.mu0[static_cast<std::size_t>(j)] = base;
        sim.mu1[static_cast<std::size_t>(j)] = base + (hot ? cfg.shift : 0.0);
    }

    const auto fill = [&](Eigen::MatrixXd& M, std::vector<int>& labels, long subjects) {
        M.resize(static_cast<Eigen::Index>(subjects), p);
        labels.resize(static_cast<std::size_t>(subjects));
        for (Eigen::Index i = 0; i < M.rows(); ++i) {
            const int label = i % 2 == 0 ? 0 : 1;
            labels[static_cast<std::size_t>(i)] = label;
            for (Eigen::Index j = 0; j < p; ++j) {
                const double mu = label == 0 ? sim.mu0[static_cast<std::size_t>(j)]
                                             : sim.mu1[static_cast<std::size_t>(j)];
                M(i, j) = mu + gauss(rng);
            }
        }
    };
    fill(sim.train_values, sim.train_labels, cfg.train_subjects);
    fill(sim.test_values, sim.test_labels, cfg.test_subjects);
    return sim;
}

}  // namespace npmix
