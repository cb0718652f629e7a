#pragma once

// Gaussian location-scale simulation study: two-point mixing distributions,
// the estimator benchmark (MLE, oracle soft threshold, univariate and
// bivariate NPMLEs), and report tables.

#include <npmix/core.hpp>
#include <npmix/grid.hpp>
#include <npmix/kernels.hpp>
#include <npmix/metrics.hpp>
#include <npmix/posterior.hpp>
#include <npmix/solvers.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace npmix {

// Dist1: P(mu=0) = P(mu=5) = 1/2, sigma fixed at 4.
// Dist2: P(mu=0, sigma=5) = P(mu=5, sigma=3) = 1/2.
enum class MixingId { Dist1, Dist2 };

inline const char* mixing_name(MixingId id) {
    return id == MixingId::Dist1 ? "dist1" : "dist2";
}

inline MixingId mixing_from_name(const std::string& name) {
    if (name == "dist1") return MixingId::Dist1;
    if (name == "dist2") return MixingId::Dist2;
    throw std::invalid_argument("unknown mixing distribution: " + name);
}

struct SimConfig {
    long p = 1000;
    long n = 16;
    MixingId mixing = MixingId::Dist1;
    long reps = 1;
    std::uint64_t seed = 0;
};

namespace detail {

inline void check_sim_config(const SimConfig& cfg) {
    if (cfg.p < 1) throw std::invalid_argument("SimConfig: p must be >= 1");
    if (cfg.n < 2) throw std::invalid_argument("SimConfig: n must be >= 2");
    if (cfg.reps < 1) throw std::invalid_argument("SimConfig: reps must be >= 1");
}

}  // namespace detail

struct SimDraw {
    std::vector<Observation> data;  // ReplicateObs per feature
    std::vector<double> truth_mu;
    std::vector<double> truth_sigma;
};

inline SimDraw simulate_gls(const SimConfig& cfg) {
    detail::check_sim_config(cfg);
    std::mt19937_64 rng(detail::splitmix64(cfg.seed));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SimDraw draw;
    draw.data.reserve(static_cast<std::size_t>(cfg.p));
    draw.truth_mu.reserve(static_cast<std::size_t>(cfg.p));
    draw.truth_sigma.reserve(static_cast<std::size_t>(cfg.p));
    for (long j = 0; j < cfg.p; ++j) {
        const bool second = unif(rng) < 0.5;
        double mu, sigma;
        if (cfg.mixing == MixingId::Dist1) {
            mu = second ? 5.0 : 0.0;
            sigma = 4.0;
        } else {
            mu = second ? 5.0 : 0.0;
            sigma = second ? 3.0 : 5.0;
        }
        std::vector<double> values(static_cast<std::size_t>(cfg.n));
        for (double& v : values) v = mu + sigma * gauss(rng);
        draw.data.emplace_back(ReplicateObs(std::move(values)));
        draw.truth_mu.push_back(mu);
        draw.truth_sigma.push_back(sigma);
    }
    return draw;
}

struct SimStudyConfig {
    SimConfig sim;
    long q1 = 30;  // bivariate grid counts
    long q2 = 30;
    long uni_count = 300;
    SolverConfig solver;
    bool run_fw = true;
    bool run_univariate = true;
    bool certify = false;  // warm EM continuation at tol 1e-10, records the extra drop
};

struct SimRepResult {
    long rep = 0;
    std::uint64_t seed = 0;
    double tse_fixed_mle = 0.0;
    double tse_soft_oracle = 0.0;
    double soft_t = 0.0;
    std::optional<double> tse_uni_known;  // Dist1 only
    std::optional<double> tse_uni_plugin;
    double tse_biv_em = 0.0;
    std::optional<double> tse_biv_fw;
    std::optional<double> delta_fw;  // per-observation, vs the EM fit
    double em_kkt = 0.0;
    std::optional<double> fw_kkt;
    double em_seconds = 0.0;
    std::optional<double> fw_seconds;
    bool em_converged = false;
    long em_iterations = 0;
    std::optional<double> em_refine_drop;  // objective drop of the tol-1e-10 continuation
};

struct SimStudy {
    SimStudyConfig cfg;
    std::vector<SimRepResult> reps;
};

namespace detail {

struct GlsSummaries {
    std::vector<double> muhat;
    std::vector<double> sigma2hat;  // MLE variance css/n
};

inline GlsSummaries gls_summaries(const std::vector<Observation>& data) {
    GlsSummaries s;
    s.muhat.reserve(data.size());
    s.sigma2hat.reserve(data.size());
    for (const auto& obs : data) {
        const auto& rep = std::get<ReplicateObs>(obs);
        const MeanCss mc = mean_css(rep.values);
        s.muhat.push_back(mc.mean);
        s.sigma2hat.push_back(mc.css / mc.n);
    }
    return s;
}

// Univariate NPMLE of the location mixing distribution from per-feature
// means with the given known variances.
inline double univariate_tse(const std::vector<double>& muhat,
                             const std::vector<double>& variances, long q,
                             const SolverConfig& solver, const std::vector<double>& truth) {
    std::vector<Observation> obs;
    obs.reserve(muhat.size());
    for (std::size_t j = 0; j < muhat.size(); ++j)
        obs.emplace_back(KnownVarObs(muhat[j], variances[j]));
    GridSpec spec;
    spec.per_dim_counts = {static_cast<int>(q)};
    const Grid grid = regular_grid(mle_cloud(KernelId::GaussianLocation, obs), spec);
    const LogLikelihoodMatrix L =
        log_likelihood_matrix(KernelId::GaussianLocation, obs, grid);
    const FitResult r = solve_em(L, solver);
    return tse(posterior_means(L, grid, r.weights, 0), truth);
}

}  // namespace detail

inline SimRepResult run_sim_rep(const SimStudyConfig& cfg, long rep) {
    SimRepResult out;
    out.rep = rep;
    out.seed = cfg.sim.seed + static_cast<std::uint64_t>(rep);

    SimConfig one = cfg.sim;
    one.reps = 1;
    one.seed = out.seed;
    const SimDraw draw = simulate_gls(one);
    const detail::GlsSummaries sum = detail::gls_summaries(draw.data);

    out.tse_fixed_mle = tse(sum.muhat, draw.truth_mu);
    const SoftThresholdOracle oracle = soft_threshold_oracle(sum.muhat, draw.truth_mu);
    out.tse_soft_oracle = oracle.tse;
    out.soft_t = oracle.t;

    if (cfg.run_univariate) {
        const double n = static_cast<double>(cfg.sim.n);
        std::vector<double> plugin_var(sum.muhat.size());
        for (std::size_t j = 0; j < plugin_var.size(); ++j)
            plugin_var[j] = sum.sigma2hat[j] / n;
        out.tse_uni_plugin = detail::univariate_tse(sum.muhat, plugin_var, cfg.uni_count,
                                                    cfg.solver, draw.truth_mu);
        if (cfg.sim.mixing == MixingId::Dist1) {
            const std::vector<double> known_var(sum.muhat.size(), 16.0 / n);
            out.tse_uni_known = detail::univariate_tse(sum.muhat, known_var, cfg.uni_count,
                                                       cfg.solver, draw.truth_mu);
        }
    }

    GridSpec spec;
    spec.per_dim_counts = {static_cast<int>(cfg.q1), static_cast<int>(cfg.q2)};
    const Grid grid =
        regular_grid(mle_cloud(KernelId::GaussianLocationScale, draw.data), spec);
    const LogLikelihoodMatrix L =
        log_likelihood_matrix(KernelId::GaussianLocationScale, draw.data, grid);

    const FitResult em = solve_em(L, cfg.solver);
    out.tse_biv_em = tse(posterior_means(L, grid, em.weights, 0), draw.truth_mu);
    out.em_kkt = em.kkt_gap;
    out.em_seconds = em.seconds;
    out.em_converged = em.converged;
    out.em_iterations = em.iterations;

    if (cfg.run_fw) {
        const FitResult fw = solve_frank_wolfe(L, cfg.solver);
        out.tse_biv_fw = tse(posterior_means(L, grid, fw.weights, 0), draw.truth_mu);
        out.delta_fw = delta_log_lik(fw, em);
        out.fw_kkt = fw.kkt_gap;
        out.fw_seconds = fw.seconds;
    }

    if (cfg.certify) {
        SolverConfig tight = cfg.solver;
        tight.tol = 1e-10;
        tight.max_iter = 0;
        tight.init = em.weights;
        const FitResult refined = solve_em(L, tight);
        out.em_refine_drop = em.neg_log_lik - refined.neg_log_lik;
    }
    return out;
}

// Fail-fast study driver: any error aborts with the replication index attached.
inline SimStudy run_sim_study(const SimStudyConfig& cfg) {
    detail::check_sim_config(cfg.sim);
    if (cfg.q1 < 1 || cfg.q2 < 1 || cfg.uni_count < 1)
        throw std::invalid_argument("SimStudyConfig: grid counts must be >= 1");
    SimStudy study;
    study.cfg = cfg;
    study.reps.reserve(static_cast<std::size_t>(cfg.sim.reps));
    for (long rep = 0; rep < cfg.sim.reps; ++rep) {
        try {
            study.reps.push_back(run_sim_rep(cfg, rep));
        } catch (const std::exception& e) {
            throw Error("replication " + std::to_string(rep) + ": " + e.what());
        }
    }
    return study;
}

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t count = 0;
};

template <class Getter>
MeanSd summarize(const std::vector<SimRepResult>& reps, Getter&& get) {
    MeanSd out;
    double s = 0.0;
    for (const SimRepResult& r : reps) {
        const std::optional<double> v = get(r);
        if (!v) continue;
        s += *v;
        ++out.count;
    }
    if (out.count == 0) return out;
    out.mean = s / static_cast<double>(out.count);
    double ss = 0.0;
    for (const SimRepResult& r : reps) {
        const std::optional<double> v = get(r);
        if (!v) continue;
        const double d = *v - out.mean;
        ss += d * d;
    }
    out.sd = out.count > 1 ? std::sqrt(ss / static_cast<double>(out.count - 1)) : 0.0;
    return out;
}

namespace detail {

struct SimReportRow {
    std::string method;
    bool available = true;
    MeanSd tse;
    MeanSd delta;
    MeanSd seconds;
    bool has_delta = false;
    bool has_seconds = false;
};

inline std::vector<SimReportRow> sim_report_rows(const SimStudy& study) {
    const auto& reps = study.reps;
    auto row = [&](const std::string& name, auto&& get) {
        SimReportRow r;
        r.method = name;
        r.tse = summarize(reps, get);
        r.available = r.tse.count > 0;
        return r;
    };
    std::vector<SimReportRow> rows;
    rows.push_back(row("fixed_mle",
                       [](const SimRepResult& r) { return std::optional<double>(r.tse_fixed_mle); }));
    rows.push_back(row("soft_threshold_oracle", [](const SimRepResult& r) {
        return std::optional<double>(r.tse_soft_oracle);
    }));
    SimReportRow js;
    js.method = "james_stein";
    js.available = false;
    rows.push_back(js);
    SimReportRow sure;
    sure.method = "sure";
    sure.available = false;
    rows.push_back(sure);
    rows.push_back(
        row("univariate_known", [](const SimRepResult& r) { return r.tse_uni_known; }));
    rows.push_back(
        row("univariate_plugin", [](const SimRepResult& r) { return r.tse_uni_plugin; }));

    SimReportRow em = row("bivariate_em", [](const SimRepResult& r) {
        return std::optional<double>(r.tse_biv_em);
    });
    em.delta = MeanSd{0.0, 0.0, reps.size()};
    em.has_delta = true;
    em.seconds =
        summarize(reps, [](const SimRepResult& r) { return std::optional<double>(r.em_seconds); });
    em.has_seconds = true;
    rows.push_back(em);

    SimReportRow fw = row("bivariate_fw", [](const SimRepResult& r) { return r.tse_biv_fw; });
    if (fw.available) {
        fw.delta = summarize(reps, [](const SimRepResult& r) { return r.delta_fw; });
        fw.has_delta = true;
        fw.seconds = summarize(reps, [](const SimRepResult& r) { return r.fw_seconds; });
        fw.has_seconds = true;
    }
    rows.push_back(fw);
    return rows;
}

}  // namespace detail

// CSV report: one row per estimator with mean/sd columns. delta_log_lik is
// per observation; delta_sum_x1e4 is the p-scaled value matching the
// customary reporting convention.
inline std::string sim_report_csv(const SimStudy& study) {
    const auto rows = detail::sim_report_rows(study);
    const double p = static_cast<double>(study.cfg.sim.p);
    std::ostringstream os;
    os.precision(10);
    os << "method,available,reps,mean_tse,sd_tse,mean_delta_per_obs,sd_delta_per_obs,"
          "delta_sum_x1e4,mean_seconds,sd_seconds\n";
    for (const auto& r : rows) {
        os << r.method << ',' << (r.available ? 1 : 0) << ',' << r.tse.count << ',';
        if (r.available)
            os << r.tse.mean << ',' << r.tse.sd << ',';
        else
            os << ",,";
        if (r.available && r.has_delta)
            os << r.delta.mean << ',' << r.delta.sd << ',' << r.delta.mean * p * 1e4 << ',';
        else
            os << ",,,";
        if (r.available && r.has_seconds)
            os << r.seconds.mean << ',' << r.seconds.sd;
        else
            os << ',';
        os << '\n';
    }
    return os.str();
}

inline std::string sim_report_text(const SimStudy& study) {
    const auto rows = detail::sim_report_rows(study);
    const double p = static_cast<double>(study.cfg.sim.p);
    std::ostringstream os;
    os << "simulation study: mixing " << mixing_name(study.cfg.sim.mixing) << ", p "
       << study.cfg.sim.p << ", n " << study.cfg.sim.n << ", reps " << study.reps.size()
       << ", grid " << study.cfg.q1 << "x" << study.cfg.q2 << ", seed " << study.cfg.sim.seed
       << "\n\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s %-18s %-18s %-10s\n", "method", "TSE",
                  "delta(ll) x1e4", "secs");
    os << buf;
    os << std::string(72, '-') << '\n';
    for (const auto& r : rows) {
        if (!r.available) {
            std::snprintf(buf, sizeof buf, "%-24s %-18s\n", r.method.c_str(), "unavailable");
            os << buf;
            continue;
        }
        char tse_s[40], delta_s[40] = "", secs_s[40] = "";
        std::snprintf(tse_s, sizeof tse_s, "%.1f (%.1f)", r.tse.mean, r.tse.sd);
        if (r.has_delta)
            std::snprintf(delta_s, sizeof delta_s, "%.0f (%.0f)", r.delta.mean * p * 1e4,
                          r.delta.sd * p * 1e4);
        if (r.has_seconds)
            std::snprintf(secs_s, sizeof secs_s, "%.2f", r.seconds.mean);
        std::snprintf(buf, sizeof buf, "%-24s %-18s %-18s %-10s\n", r.method.c_str(), tse_s,
                      delta_s, secs_s);
        os << buf;
    }
    return os.str();
}

}  // namespace npmix
