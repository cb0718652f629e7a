#pragma once

// Season-splitting analysis of paired count data. Fit the Poisson-binomial
// NPMLE of the (lambda, pi) mixing distribution on first-half (at-bats, hits)
// counts, estimate each player's rate by the posterior mean of pi, and score
// the arcsin-root transformed estimates against second-half outcomes,
// relative to the fixed-parameter MLE.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <npmix/core.hpp>
#include <npmix/grid.hpp>
#include <npmix/kernels.hpp>
#include <npmix/metrics.hpp>
#include <npmix/posterior.hpp>
#include <npmix/solvers.hpp>

namespace npmix {

struct BaseballRecord {
    std::string player_id;
    bool is_pitcher = false;
    long ab1 = 0, h1 = 0, ab2 = 0, h2 = 0;

    BaseballRecord() = default;
    BaseballRecord(std::string id, bool pitcher, long a1, long hh1, long a2, long hh2)
        : player_id(std::move(id)), is_pitcher(pitcher), ab1(a1), h1(hh1), ab2(a2), h2(hh2) {
        if (ab1 < 0 || h1 < 0 || h1 > ab1 || ab2 < 0 || h2 < 0 || h2 > ab2)
            throw std::invalid_argument("BaseballRecord: need 0 <= hits <= at_bats in each half");
    }
};

enum class Cohort { All, Pitchers, NonPitchers };

inline const char* cohort_name(Cohort c) {
    switch (c) {
        case Cohort::All: return "all";
        case Cohort::Pitchers: return "pitchers";
        case Cohort::NonPitchers: return "non-pitchers";
    }
    throw std::invalid_argument("cohort_name: unknown cohort");
}

inline Cohort cohort_from_name(const std::string& name) {
    if (name == "all") return Cohort::All;
    if (name == "pitchers") return Cohort::Pitchers;
    if (name == "non-pitchers") return Cohort::NonPitchers;
    throw std::invalid_argument("unknown cohort '" + name +
                                "' (expected all, pitchers, or non-pitchers)");
}

struct BaseballConfig {
    int q1 = 30, q2 = 30;
    SolverId solver = SolverId::Em;
    SolverConfig solver_config;
    long min_at_bats = 10;  // strict: train on ab1 > this, evaluate on ab2 > this
};

// One cohort's fit and evaluation. Estimates are reported on the arcsin-root
// scale so every method is scored by the same corrected total squared error.
struct BaseballResult {
    Cohort cohort = Cohort::All;
    std::size_t n_train = 0, n_eval = 0;
    Grid grid;
    FitResult fit;
    std::vector<std::string> eval_ids;
    std::vector<double> pi_hat;    // posterior-mean rate, probability scale
    std::vector<double> mu_npmle;  // arcsin sqrt(pi_hat)
    std::vector<double> mu_mle;    // first-half stabilized rate W_j
    double grand_mean = 0.0;       // training average of W_j, shared estimate
    double tse_mle = 0.0, tse_grand = 0.0, tse_npmle = 0.0;
    double rel_grand = 0.0, rel_npmle = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

inline bool in_cohort(const BaseballRecord& r, Cohort c) {
    if (c == Cohort::Pitchers) return r.is_pitcher;
    if (c == Cohort::NonPitchers) return !r.is_pitcher;
    return true;
}

}  // namespace detail

// Fit and score a single cohort. Training keeps players with ab1 > min;
// evaluation keeps the trained players that also have ab2 > min. The grid
// spans [min A, max A] x [min H/A, max H/A] over the training counts, with
// the rate interval clamped inside (0, 1) by half the resolution of the
// largest at-bat count so every atom stays in the kernel's domain.
inline BaseballResult baseball_fit_cohort(const std::vector<BaseballRecord>& records,
                                          Cohort cohort, const BaseballConfig& cfg = {}) {
    BaseballResult out;
    out.cohort = cohort;

    std::vector<const BaseballRecord*> train;
    for (const BaseballRecord& r : records)
        if (detail::in_cohort(r, cohort) && r.ab1 > cfg.min_at_bats) train.push_back(&r);
    if (train.empty())
        throw EmptyCohortError(std::string("baseball_fit_cohort: cohort '") +
                               cohort_name(cohort) + "' has no players with first-half at-bats > " +
                               std::to_string(cfg.min_at_bats));
    out.n_train = train.size();

    double lam_lo = static_cast<double>(train.front()->ab1);
    double lam_hi = lam_lo, rate_lo = 1.0, rate_hi = 0.0;
    for (const BaseballRecord* r : train) {
        const double a = static_cast<double>(r->ab1);
        const double rate = static_cast<double>(r->h1) / a;
        lam_lo = std::min(lam_lo, a);
        lam_hi = std::max(lam_hi, a);
        rate_lo = std::min(rate_lo, rate);
        rate_hi = std::max(rate_hi, rate);
    }
    const double eps = 0.5 / lam_hi;
    const double clamped_lo = std::max(rate_lo, eps);
    const double clamped_hi = std::min(rate_hi, 1.0 - eps);
    double lo = clamped_lo, hi = clamped_hi;
    if (lo > hi) {
        // every observed rate sits outside the representable interior; pin a
        // single interior rate nearest the data
        lo = hi = rate_hi < eps ? eps : 1.0 - eps;
        out.warnings.push_back("rate grid collapsed to a single interior point");
    }

    GridSpec spec;
    spec.per_dim_counts = {cfg.q1, cfg.q2};
    spec.explicit_bounds = {std::pair<double, double>{lam_lo, lam_hi},
                            std::pair<double, double>{lo, hi}};
    std::vector<Atom> cloud;
    for (const BaseballRecord* r : train)
        cloud.push_back(Atom{static_cast<double>(r->ab1),
                             std::min(std::max(static_cast<double>(r->h1) /
                                                   static_cast<double>(r->ab1),
                                               lo),
                                      hi)});
    out.grid = regular_grid(cloud, spec, &out.warnings);

    std::vector<Observation> obs;
    obs.reserve(train.size());
    for (const BaseballRecord* r : train) obs.emplace_back(CountPairObs(r->ab1, r->h1));
    const LogLikelihoodMatrix L =
        log_likelihood_matrix(KernelId::PoissonBinomial, obs, out.grid);
    out.fit = solve(L, cfg.solver, cfg.solver_config);

    const std::vector<double> post_pi = posterior_means(L, out.grid, out.fit.weights, 1);

    double w_sum = 0.0;
    for (const BaseballRecord* r : train) w_sum += stabilized_rate(r->ab1, r->h1);
    out.grand_mean = w_sum / static_cast<double>(train.size());

    std::vector<CountPairObs> second_half;
    std::vector<double> mu_grand;
    for (std::size_t j = 0; j < train.size(); ++j) {
        const BaseballRecord* r = train[j];
        if (r->ab2 <= cfg.min_at_bats) continue;
        out.eval_ids.push_back(r->player_id);
        out.pi_hat.push_back(post_pi[j]);
        out.mu_npmle.push_back(std::asin(std::sqrt(post_pi[j])));
        out.mu_mle.push_back(stabilized_rate(r->ab1, r->h1));
        mu_grand.push_back(out.grand_mean);
        second_half.emplace_back(r->ab2, r->h2);
    }
    if (second_half.empty())
        throw EmptyCohortError(std::string("baseball_fit_cohort: cohort '") +
                               cohort_name(cohort) +
                               "' has no trained players with second-half at-bats > " +
                               std::to_string(cfg.min_at_bats));
    out.n_eval = second_half.size();

    out.tse_mle = baseball_tse(out.mu_mle, second_half);
    out.tse_grand = baseball_tse(mu_grand, second_half);
    out.tse_npmle = baseball_tse(out.mu_npmle, second_half);
    out.rel_grand = out.tse_grand / out.tse_mle;
    out.rel_npmle = out.tse_npmle / out.tse_mle;
    return out;
}

struct BaseballStudy {
    std::vector<BaseballResult> cohorts;  // all, pitchers, non-pitchers
};

// Three separate fits, one per cohort. Any empty cohort aborts the study.
inline BaseballStudy baseball_pipeline(const std::vector<BaseballRecord>& records,
                                       const BaseballConfig& cfg = {}) {
    BaseballStudy study;
    for (Cohort c : {Cohort::All, Cohort::Pitchers, Cohort::NonPitchers})
        study.cohorts.push_back(baseball_fit_cohort(records, c, cfg));
    return study;
}

inline std::string baseball_report_csv(const BaseballStudy& study) {
    std::string out = "cohort,n_train,n_eval,method,tse,relative_tse\n";
    char buf[256];
    for (const BaseballResult& r : study.cohorts) {
        const char* c = cohort_name(r.cohort);
        std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,mle,%.10g,1\n", c, r.n_train, r.n_eval,
                      r.tse_mle);
        out += buf;
        std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,grand-mean,%.10g,%.10g\n", c, r.n_train,
                      r.n_eval, r.tse_grand, r.rel_grand);
        out += buf;
        std::snprintf(buf, sizeof(buf), "%s,%zu,%zu,npmle,%.10g,%.10g\n", c, r.n_train, r.n_eval,
                      r.tse_npmle, r.rel_npmle);
        out += buf;
    }
    return out;
}

inline std::string baseball_report_text(const BaseballStudy& study) {
    char buf[256];
    std::string out = "relative TSE (second half, arcsin-root scale)\n";
    std::snprintf(buf, sizeof(buf), "%-12s", "method");
    out += buf;
    for (const BaseballResult& r : study.cohorts) {
        std::snprintf(buf, sizeof(buf), " %14s", cohort_name(r.cohort));
        out += buf;
    }
    out += '\n';
    const auto row = [&](const char* name, double BaseballResult::*field) {
        std::snprintf(buf, sizeof(buf), "%-12s", name);
        out += buf;
        for (const BaseballResult& r : study.cohorts) {
            std::snprintf(buf, sizeof(buf), " %14.4f", r.*field);
            out += buf;
        }
        out += '\n';
    };
    const auto one = [&](const char* name) {
        std::snprintf(buf, sizeof(buf), "%-12s", name);
        out += buf;
        for (std::size_t i = 0; i < study.cohorts.size(); ++i) {
            std::snprintf(buf, sizeof(buf), " %14.4f", 1.0);
            out += buf;
        }
        out += '\n';
    };
    one("mle");
    row("grand-mean", &BaseballResult::rel_grand);
    row("npmle", &BaseballResult::rel_npmle);
    std::snprintf(buf, sizeof(buf), "%-12s", "n_train");
    out += buf;
    for (const BaseballResult& r : study.cohorts) {
        std::snprintf(buf, sizeof(buf), " %14zu", r.n_train);
        out += buf;
    }
    out += '\n';
    std::snprintf(buf, sizeof(buf), "%-12s", "n_eval");
    out += buf;
    for (const BaseballResult& r : study.cohorts) {
        std::snprintf(buf, sizeof(buf), " %14zu", r.n_eval);
        out += buf;
    }
    out += '\n';
    return out;
}

struct BaseballSimConfig {
    long players = 400;
    std::vector<Atom> atoms = {Atom{30.0, 0.2}, Atom{60.0, 0.35}};
    std::vector<double> probs = {0.5, 0.5};
    double pitcher_prob = 0.35;
    std::uint64_t seed = 0;
};

// Paired-season draws: each player gets one (lambda, pi) from the two-point
// (or general finite) mixing distribution, then independent Poisson-binomial
// counts for each half. Pitcher labels are independent coin flips so every
// cohort inherits the same mixture. `component` receives each player's
// mixing-atom index when non-null.
inline std::vector<BaseballRecord> sample_baseball(const BaseballSimConfig& cfg,
                                                   std::vector<std::size_t>* component = nullptr) {
    if (cfg.players < 1)
        throw std::invalid_argument("sample_baseball: players must be >= 1");
    if (cfg.atoms.empty() || cfg.atoms.size() != cfg.probs.size())
        throw std::invalid_argument("sample_baseball: atoms/probs size mismatch or empty");
    if (!(cfg.pitcher_prob >= 0.0 && cfg.pitcher_prob <= 1.0))
        throw std::invalid_argument("sample_baseball: pitcher_prob outside [0, 1]");
    double total = 0.0;
    for (double p : cfg.probs) {
        if (!(p >= 0.0)) throw std::invalid_argument("sample_baseball: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-8)
        throw std::invalid_argument("sample_baseball: probabilities must sum to 1");
    for (const Atom& a : cfg.atoms) detail::check_atom(KernelId::PoissonBinomial, a);

    std::vector<double> cum(cfg.probs.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < cfg.probs.size(); ++k) {
        acc += cfg.probs[k];
        cum[k] = acc;
    }
    cum.back() = 1.0;

    std::mt19937_64 rng(detail::splitmix64(cfg.seed));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::bernoulli_distribution pitcher(cfg.pitcher_prob);

    std::vector<BaseballRecord> records;
    records.reserve(static_cast<std::size_t>(cfg.players));
    if (component) component->clear();
    for (long j = 0; j < cfg.players; ++j) {
        const std::size_t k = static_cast<std::size_t>(
            std::upper_bound(cum.begin(), cum.end(), unif(rng)) - cum.begin());
        const std::size_t kk = std::min(k, cfg.atoms.size() - 1);
        if (component) component->push_back(kk);
        const double lambda = cfg.atoms[kk][0], pi = cfg.atoms[kk][1];
        const bool is_pitcher = pitcher(rng);
        std::poisson_distribution<long> pois(lambda);
        long half[2][2];
        for (int h = 0; h < 2; ++h) {
            const long ab = pois(rng);
            long hits = 0;
            if (ab > 0) {
                std::binomial_distribution<long> bin(ab, pi);
                hits = bin(rng);
            }
            half[h][0] = ab;
            half[h][1] = hits;
        }
        records.emplace_back("p" + std::to_string(j), is_pitcher, half[0][0], half[0][1],
                             half[1][0], half[1][1]);
    }
    return records;
}

}  // namespace npmix
