#pragma once

// Observation types and component-density kernels: log densities, per
// observation maximum-likelihood estimates, the scalar Kalman filter for the
// local-level state-space kernel, and the p x q log-likelihood matrix fill.

#include <npmix/core.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace npmix {

inline constexpr double log_2pi = 1.8378770664093454836;

enum class KernelId {
    GaussianLocation,       // atom (mu), observation with known variance
    GaussianLocationScale,  // atom (mu, sigma), iid replicates
    PoissonBinomial,        // atom (lambda, pi), count pair
    TwoClassGaussian,       // atom (mu0, mu1), labeled unit-variance values
    LinearRegression,       // atom (mu, beta, log sigma), paired series
    LocalLevelStateSpace,   // atom (log tau, log sigma), time series
};

inline std::size_t kernel_dim(KernelId id) {
    switch (id) {
        case KernelId::GaussianLocation: return 1;
        case KernelId::GaussianLocationScale: return 2;
        case KernelId::PoissonBinomial: return 2;
        case KernelId::TwoClassGaussian: return 2;
        case KernelId::LinearRegression: return 3;
        case KernelId::LocalLevelStateSpace: return 2;
    }
    throw std::invalid_argument("kernel_dim: unknown kernel");
}

inline const char* kernel_name(KernelId id) {
    switch (id) {
        case KernelId::GaussianLocation: return "gaussian-location";
        case KernelId::GaussianLocationScale: return "gaussian-location-scale";
        case KernelId::PoissonBinomial: return "poisson-binomial";
        case KernelId::TwoClassGaussian: return "two-class-gaussian";
        case KernelId::LinearRegression: return "linear-regression";
        case KernelId::LocalLevelStateSpace: return "local-level-ss";
    }
    throw std::invalid_argument("kernel_name: unknown kernel");
}

inline KernelId kernel_from_name(const std::string& name) {
    static const std::pair<const char*, KernelId> table[] = {
        {"gaussian-location", KernelId::GaussianLocation},
        {"gaussian-location-scale", KernelId::GaussianLocationScale},
        {"poisson-binomial", KernelId::PoissonBinomial},
        {"two-class-gaussian", KernelId::TwoClassGaussian},
        {"linear-regression", KernelId::LinearRegression},
        {"local-level-ss", KernelId::LocalLevelStateSpace},
    };
    for (const auto& [s, id] : table)
        if (name == s) return id;
    throw std::invalid_argument(
        "unknown kernel '" + name +
        "' (expected gaussian-location, gaussian-location-scale, poisson-binomial, "
        "two-class-gaussian, linear-regression, or local-level-ss)");
}

// A single value with its own known sampling variance.
struct KnownVarObs {
    double value = 0.0;
    double variance = 1.0;

    KnownVarObs() = default;
    KnownVarObs(double v, double var) : value(v), variance(var) {
        if (!std::isfinite(v) || !std::isfinite(var))
            throw NonFiniteError("KnownVarObs: non-finite field");
        if (var <= 0.0)
            throw std::invalid_argument("KnownVarObs: variance must be positive");
    }
};

// n >= 2 iid replicates of one unit.
struct ReplicateObs {
    std::vector<double> values;

    ReplicateObs() = default;
    explicit ReplicateObs(std::vector<double> v) : values(std::move(v)) {
        if (values.size() < 2)
            throw std::invalid_argument("ReplicateObs: need at least 2 replicates");
        for (double x : values)
            if (!std::isfinite(x)) throw NonFiniteError("ReplicateObs: non-finite value");
    }

    std::size_t n() const { return values.size(); }
};

// Attempt/success counts, e.g. at-bats and hits.
struct CountPairObs {
    long at_bats = 0;
    long hits = 0;

    CountPairObs() = default;
    CountPairObs(long ab, long h) : at_bats(ab), hits(h) {
        if (ab < 0 || h < 0 || h > ab)
            throw std::invalid_argument("CountPairObs: need 0 <= hits <= at_bats");
    }
};

// Unit-variance values each tagged with a class label in {0, 1}.
struct TwoClassObs {
    std::vector<double> values;
    std::vector<int> labels;

    TwoClassObs() = default;
    TwoClassObs(std::vector<double> v, std::vector<int> l)
        : values(std::move(v)), labels(std::move(l)) {
        if (values.empty() || values.size() != labels.size())
            throw std::invalid_argument("TwoClassObs: values/labels size mismatch or empty");
        for (double x : values)
            if (!std::isfinite(x)) throw NonFiniteError("TwoClassObs: non-finite value");
        for (int l2 : labels)
            if (l2 != 0 && l2 != 1)
                throw std::invalid_argument("TwoClassObs: labels must be 0 or 1");
    }

    std::size_t n() const { return values.size(); }
};

// Paired response/covariate series for a simple linear model, n >= 4 so the
// three parameters (intercept, slope, scale) stay identified with slack.
struct RegressionObs {
    std::vector<double> response;
    std::vector<double> covariate;

    RegressionObs() = default;
    RegressionObs(std::vector<double> y, std::vector<double> x)
        : response(std::move(y)), covariate(std::move(x)) {
        if (response.size() != covariate.size() || response.size() < 4)
            throw std::invalid_argument("RegressionObs: need n >= 4 paired values");
        for (std::size_t i = 0; i < response.size(); ++i)
            if (!std::isfinite(response[i]) || !std::isfinite(covariate[i]))
                throw NonFiniteError("RegressionObs: non-finite value");
        const double x0 = covariate.front();
        bool varies = false;
        for (double x : covariate)
            if (x != x0) { varies = true; break; }
        if (!varies)
            throw std::invalid_argument("RegressionObs: covariate values are all equal");
    }

    std::size_t n() const { return response.size(); }
};

// Observed series y_i = alpha_i * c_i + noise with random-walk state alpha.
// Timestamps are carried for provenance but the walk steps per index.
struct SeriesObs {
    std::vector<double> values;
    std::vector<double> covariates;
    std::vector<double> times;

    SeriesObs() = default;
    SeriesObs(std::vector<double> y, std::vector<double> c, std::vector<double> t = {})
        : values(std::move(y)), covariates(std::move(c)), times(std::move(t)) {
        if (values.size() != covariates.size() || values.size() < 2)
            throw std::invalid_argument("SeriesObs: need n >= 2 paired values");
        if (!times.empty() && times.size() != values.size())
            throw std::invalid_argument("SeriesObs: times size mismatch");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i]) || !std::isfinite(covariates[i]))
                throw NonFiniteError("SeriesObs: non-finite value");
            if (covariates[i] == 0.0)
                throw std::invalid_argument("SeriesObs: covariates must be nonzero");
        }
    }

    std::size_t n() const { return values.size(); }
};

using Observation = std::variant<KnownVarObs, ReplicateObs, CountPairObs, TwoClassObs,
                                 RegressionObs, SeriesObs>;

template <class Obs>
std::vector<Observation> as_observations(const std::vector<Obs>& data) {
    std::vector<Observation> out;
    out.reserve(data.size());
    for (const Obs& o : data) out.emplace_back(o);
    return out;
}

struct MleResult {
    Atom atom;
    bool boundary = false;  // estimate sits on the parameter-space boundary
};

struct SsFilterResult {
    std::vector<double> filtered_means;
    std::vector<double> filtered_vars;
    double cond_log_lik = 0.0;
};

namespace detail {

inline void check_atom(KernelId id, const Atom& atom) {
    if (atom.dim() != kernel_dim(id))
        throw IncompatibleError("atom dimension " + std::to_string(atom.dim()) +
                                " does not match kernel " + kernel_name(id));
    switch (id) {
        case KernelId::GaussianLocationScale:
            if (atom[1] <= 0.0) throw DomainError("GaussianLocationScale: sigma <= 0");
            break;
        case KernelId::PoissonBinomial:
            if (atom[0] <= 0.0) throw DomainError("PoissonBinomial: lambda <= 0");
            if (atom[1] <= 0.0 || atom[1] >= 1.0)
                throw DomainError("PoissonBinomial: pi outside (0,1)");
            break;
        default:
            break;  // remaining kernels take any finite atom
    }
}

struct MeanCss {
    double n = 0.0;
    double mean = 0.0;
    double css = 0.0;  // sum of squared deviations from the mean
};

inline MeanCss mean_css(const std::vector<double>& v) {
    MeanCss s;
    s.n = static_cast<double>(v.size());
    for (double x : v) s.mean += x;
    s.mean /= s.n;
    for (double x : v) s.css += (x - s.mean) * (x - s.mean);
    return s;
}

// Kalman objective only, no per-step storage.
inline double ss_cond_loglik(const std::vector<double>& y, const std::vector<double>& c,
                             double tau2, double sigma2) {
    double a = y[0] / c[0];
    double P = sigma2 / (c[0] * c[0]);
    double ll = 0.0;
    for (std::size_t i = 1; i < y.size(); ++i) {
        const double Ppred = P + tau2;
        const double S = c[i] * c[i] * Ppred + sigma2;
        const double v = y[i] - c[i] * a;
        ll -= 0.5 * (std::log(S) + log_2pi + v * v / S);
        const double K = Ppred * c[i] / S;
        a += K * v;
        P = Ppred * sigma2 / S;
    }
    return ll;
}

// Iterated grid refinement of a 2-D objective over [-8,4]^2: a 41 x 41 sweep
// (step 0.3) followed by four 25-point refinements shrinking the step by 10
// each time, ending near 3e-5. Deterministic ties: first maximum in scan
// order wins.
template <class F>
MleResult maximize_log_pair(F&& f) {
    constexpr double lo = -8.0, hi = 4.0;
    constexpr int coarse = 41, fine = 25, levels = 4;

    double best0 = lo, best1 = lo, best = -std::numeric_limits<double>::infinity();
    double step = (hi - lo) / (coarse - 1);
    for (int i = 0; i < coarse; ++i) {
        const double a0 = lo + i * step;
        for (int j = 0; j < coarse; ++j) {
            const double a1 = lo + j * step;
            const double v = f(a0, a1);
            if (std::isnan(v)) throw NonFiniteError("state-space search: NaN objective");
            if (v > best) { best = v; best0 = a0; best1 = a1; }
        }
    }
    for (int level = 0; level < levels; ++level) {
        const double half = 1.2 * step;
        const double lo0 = std::max(lo, best0 - half), hi0 = std::min(hi, best0 + half);
        const double lo1 = std::max(lo, best1 - half), hi1 = std::min(hi, best1 + half);
        for (int i = 0; i < fine; ++i) {
            const double a0 = lo0 + i * (hi0 - lo0) / (fine - 1);
            for (int j = 0; j < fine; ++j) {
                const double a1 = lo1 + j * (hi1 - lo1) / (fine - 1);
                const double v = f(a0, a1);
                if (std::isnan(v)) throw NonFiniteError("state-space search: NaN objective");
                if (v > best) { best = v; best0 = a0; best1 = a1; }
            }
        }
        step /= 10.0;
    }
    const bool boundary = best0 <= lo + 1e-9 || best0 >= hi - 1e-9 ||
                          best1 <= lo + 1e-9 || best1 >= hi - 1e-9;
    return {Atom{best0, best1}, boundary};
}

template <class Want>
const Want& expect_obs(KernelId id, const Observation& obs, const char* where) {
    const Want* o = std::get_if<Want>(&obs);
    if (!o)
        throw IncompatibleError(std::string(where) + ": observation type does not match kernel " +
                                kernel_name(id));
    return *o;
}

}  // namespace detail

// Scalar Kalman recursion for y_i = alpha_i c_i + sigma eps_i with
// alpha_i = alpha_{i-1} + tau delta_i. The state is initialized by
// conditioning a diffuse prior on the first observation (posterior mean
// y_1/c_1, variance sigma^2/c_1^2); cond_log_lik is the prediction-error
// log density of observations 2..n given the first.
inline SsFilterResult ss_filter(const SeriesObs& obs, const Atom& atom) {
    if (atom.dim() != 2)
        throw IncompatibleError("ss_filter: atom must be (log tau, log sigma)");
    if (obs.n() < 2)
        throw InsufficientSeriesError("ss_filter: need n >= 2");
    const double tau2 = std::exp(2.0 * atom[0]);
    const double sigma2 = std::exp(2.0 * atom[1]);
    const std::vector<double>& y = obs.values;
    const std::vector<double>& c = obs.covariates;

    SsFilterResult r;
    r.filtered_means.resize(y.size());
    r.filtered_vars.resize(y.size());
    double a = y[0] / c[0];
    double P = sigma2 / (c[0] * c[0]);
    r.filtered_means[0] = a;
    r.filtered_vars[0] = P;
    for (std::size_t i = 1; i < y.size(); ++i) {
        const double Ppred = P + tau2;
        const double S = c[i] * c[i] * Ppred + sigma2;
        const double v = y[i] - c[i] * a;
        r.cond_log_lik -= 0.5 * (std::log(S) + log_2pi + v * v / S);
        const double K = Ppred * c[i] / S;
        a += K * v;
        P = Ppred * sigma2 / S;
        r.filtered_means[i] = a;
        r.filtered_vars[i] = P;
    }
    return r;
}

inline double log_density(KernelId id, const Observation& obs, const Atom& atom) {
    detail::check_atom(id, atom);
    switch (id) {
        case KernelId::GaussianLocation: {
            const auto& o = detail::expect_obs<KnownVarObs>(id, obs, "log_density");
            const double r = o.value - atom[0];
            return -0.5 * (std::log(o.variance) + log_2pi + r * r / o.variance);
        }
        case KernelId::GaussianLocationScale: {
            const auto& o = detail::expect_obs<ReplicateObs>(id, obs, "log_density");
            const double mu = atom[0], sigma = atom[1];
            double ss = 0.0;
            for (double x : o.values) ss += (x - mu) * (x - mu);
            const double n = static_cast<double>(o.n());
            return -0.5 * n * log_2pi - n * std::log(sigma) - ss / (2.0 * sigma * sigma);
        }
        case KernelId::PoissonBinomial: {
            const auto& o = detail::expect_obs<CountPairObs>(id, obs, "log_density");
            const double A = static_cast<double>(o.at_bats), H = static_cast<double>(o.hits);
            const double lambda = atom[0], pi = atom[1];
            return A * std::log(lambda) - lambda - std::lgamma(H + 1.0) -
                   std::lgamma(A - H + 1.0) + H * std::log(pi) + (A - H) * std::log1p(-pi);
        }
        case KernelId::TwoClassGaussian: {
            // theta-free constant dropped (shift invariance)
            const auto& o = detail::expect_obs<TwoClassObs>(id, obs, "log_density");
            double ss = 0.0;
            for (std::size_t i = 0; i < o.n(); ++i) {
                const double m = o.labels[i] == 0 ? atom[0] : atom[1];
                ss += (o.values[i] - m) * (o.values[i] - m);
            }
            return -0.5 * ss;
        }
        case KernelId::LinearRegression: {
            // theta-free constant dropped (shift invariance)
            const auto& o = detail::expect_obs<RegressionObs>(id, obs, "log_density");
            const double mu = atom[0], beta = atom[1], logsigma = atom[2];
            double rss = 0.0;
            for (std::size_t i = 0; i < o.n(); ++i) {
                const double r = o.response[i] - mu - beta * o.covariate[i];
                rss += r * r;
            }
            const double n = static_cast<double>(o.n());
            return -n * logsigma - rss / (2.0 * std::exp(2.0 * logsigma));
        }
        case KernelId::LocalLevelStateSpace: {
            const auto& o = detail::expect_obs<SeriesObs>(id, obs, "log_density");
            return detail::ss_cond_loglik(o.values, o.covariates, std::exp(2.0 * atom[0]),
                                          std::exp(2.0 * atom[1]));
        }
    }
    throw std::invalid_argument("log_density: unknown kernel");
}

inline MleResult mle(KernelId id, const Observation& obs) {
    switch (id) {
        case KernelId::GaussianLocation: {
            const auto& o = detail::expect_obs<KnownVarObs>(id, obs, "mle");
            return {Atom{o.value}, false};
        }
        case KernelId::GaussianLocationScale: {
            const auto& o = detail::expect_obs<ReplicateObs>(id, obs, "mle");
            const detail::MeanCss s = detail::mean_css(o.values);
            const double sigma = std::sqrt(s.css / s.n);
            return {Atom{s.mean, sigma}, sigma == 0.0};
        }
        case KernelId::PoissonBinomial: {
            const auto& o = detail::expect_obs<CountPairObs>(id, obs, "mle");
            if (o.at_bats < 1)
                throw std::invalid_argument("mle: PoissonBinomial needs at_bats >= 1");
            const double lambda = static_cast<double>(o.at_bats);
            const double pi = static_cast<double>(o.hits) / lambda;
            return {Atom{lambda, pi}, o.hits == 0 || o.hits == o.at_bats};
        }
        case KernelId::TwoClassGaussian: {
            const auto& o = detail::expect_obs<TwoClassObs>(id, obs, "mle");
            double sum[2] = {0.0, 0.0};
            double cnt[2] = {0.0, 0.0};
            for (std::size_t i = 0; i < o.n(); ++i) {
                sum[o.labels[i]] += o.values[i];
                cnt[o.labels[i]] += 1.0;
            }
            const double overall = (sum[0] + sum[1]) / static_cast<double>(o.n());
            const bool missing = cnt[0] == 0.0 || cnt[1] == 0.0;
            const double m0 = cnt[0] > 0.0 ? sum[0] / cnt[0] : overall;
            const double m1 = cnt[1] > 0.0 ? sum[1] / cnt[1] : overall;
            return {Atom{m0, m1}, missing};
        }
        case KernelId::LinearRegression: {
            const auto& o = detail::expect_obs<RegressionObs>(id, obs, "mle");
            const double n = static_cast<double>(o.n());
            double ybar = 0.0, xbar = 0.0;
            for (std::size_t i = 0; i < o.n(); ++i) {
                ybar += o.response[i];
                xbar += o.covariate[i];
            }
            ybar /= n;
            xbar /= n;
            double sxx = 0.0, sxy = 0.0, syy = 0.0;
            for (std::size_t i = 0; i < o.n(); ++i) {
                const double dx = o.covariate[i] - xbar, dy = o.response[i] - ybar;
                sxx += dx * dx;
                sxy += dx * dy;
                syy += dy * dy;
            }
            const double beta = sxy / sxx;
            const double mu = ybar - beta * xbar;
            const double rss = std::max(syy - beta * sxy, 0.0);
            const bool degenerate = rss <= 0.0;
            const double sigma2 =
                degenerate ? std::numeric_limits<double>::min() : rss / n;
            return {Atom{mu, beta, 0.5 * std::log(sigma2)}, degenerate};
        }
        case KernelId::LocalLevelStateSpace: {
            const auto& o = detail::expect_obs<SeriesObs>(id, obs, "mle");
            if (o.n() < 3)
                throw InsufficientSeriesError(
                    "mle: LocalLevelStateSpace needs n >= 3 to identify (tau, sigma)");
            return detail::maximize_log_pair([&](double a0, double a1) {
                return detail::ss_cond_loglik(o.values, o.covariates, std::exp(2.0 * a0),
                                              std::exp(2.0 * a1));
            });
        }
    }
    throw std::invalid_argument("mle: unknown kernel");
}

// Fitted-line prediction mu + beta * covariate; atom holds (mu, beta, ...).
inline double lm_predict(const Atom& atom, double covariate) {
    if (atom.dim() < 2)
        throw IncompatibleError("lm_predict: atom must carry (mu, beta)");
    if (!std::isfinite(covariate))
        throw NonFiniteError("lm_predict: non-finite covariate");
    return atom[0] + atom[1] * covariate;
}

// Fills the p x q matrix of log f_0(X_j | t_k) and row-shifts it. Sufficient
// statistics make each entry O(1) for every kernel except the state-space
// one, which runs the filter per (j, k).
inline LogLikelihoodMatrix log_likelihood_matrix(KernelId id,
                                                 const std::vector<Observation>& data,
                                                 const Grid& grid) {
    if (data.empty())
        throw std::invalid_argument("log_likelihood_matrix: no observations");
    if (grid.dim() != kernel_dim(id))
        throw IncompatibleError("log_likelihood_matrix: grid dimension does not match kernel");
    const Eigen::Index p = static_cast<Eigen::Index>(data.size());
    const Eigen::Index q = static_cast<Eigen::Index>(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) detail::check_atom(id, grid.atom(k));
    Eigen::MatrixXd raw(p, q);

    switch (id) {
        case KernelId::GaussianLocation: {
            for (Eigen::Index j = 0; j < p; ++j) {
                const auto& o = detail::expect_obs<KnownVarObs>(id, data[j], "log_likelihood_matrix");
                const double cst = -0.5 * (std::log(o.variance) + log_2pi);
                const double inv2v = 0.5 / o.variance;
                for (Eigen::Index k = 0; k < q; ++k) {
                    const double r = o.value - grid.atom(k)[0];
                    raw(j, k) = cst - inv2v * r * r;
                }
            }
            break;
        }
        case KernelId::GaussianLocationScale: {
            std::vector<detail::MeanCss> stats(data.size());
            for (std::size_t j = 0; j < data.size(); ++j)
                stats[j] = detail::mean_css(
                    detail::expect_obs<ReplicateObs>(id, data[j], "log_likelihood_matrix").values);
            for (Eigen::Index k = 0; k < q; ++k) {
                const double mu = grid.atom(k)[0], sigma = grid.atom(k)[1];
                const double logsigma = std::log(sigma);
                const double inv2s2 = 0.5 / (sigma * sigma);
                for (Eigen::Index j = 0; j < p; ++j) {
                    const detail::MeanCss& s = stats[j];
                    const double dm = s.mean - mu;
                    raw(j, k) = -0.5 * s.n * log_2pi - s.n * logsigma -
                                (s.css + s.n * dm * dm) * inv2s2;
                }
            }
            break;
        }
        case KernelId::PoissonBinomial: {
            struct Stats { double A, H, cst; };
            std::vector<Stats> stats(data.size());
            for (std::size_t j = 0; j < data.size(); ++j) {
                const auto& o =
                    detail::expect_obs<CountPairObs>(id, data[j], "log_likelihood_matrix");
                const double A = static_cast<double>(o.at_bats);
                const double H = static_cast<double>(o.hits);
                stats[j] = {A, H, -std::lgamma(H + 1.0) - std::lgamma(A - H + 1.0)};
            }
            for (Eigen::Index k = 0; k < q; ++k) {
                const double lambda = grid.atom(k)[0], pi = grid.atom(k)[1];
                const double ll = std::log(lambda), lp = std::log(pi), l1p = std::log1p(-pi);
                for (Eigen::Index j = 0; j < p; ++j) {
                    const Stats& s = stats[j];
                    raw(j, k) = s.cst + s.A * ll - lambda + s.H * lp + (s.A - s.H) * l1p;
                }
            }
            break;
        }
        case KernelId::TwoClassGaussian: {
            struct Stats { double n0, n1, m0, m1, css; };
            std::vector<Stats> stats(data.size());
            for (std::size_t j = 0; j < data.size(); ++j) {
                const auto& o =
                    detail::expect_obs<TwoClassObs>(id, data[j], "log_likelihood_matrix");
                double sum[2] = {0.0, 0.0}, cnt[2] = {0.0, 0.0};
                for (std::size_t i = 0; i < o.n(); ++i) {
                    sum[o.labels[i]] += o.values[i];
                    cnt[o.labels[i]] += 1.0;
                }
                const double m0 = cnt[0] > 0.0 ? sum[0] / cnt[0] : 0.0;
                const double m1 = cnt[1] > 0.0 ? sum[1] / cnt[1] : 0.0;
                double css = 0.0;
                for (std::size_t i = 0; i < o.n(); ++i) {
                    const double m = o.labels[i] == 0 ? m0 : m1;
                    css += (o.values[i] - m) * (o.values[i] - m);
                }
                stats[j] = {cnt[0], cnt[1], m0, m1, css};
            }
            for (Eigen::Index k = 0; k < q; ++k) {
                const double mu0 = grid.atom(k)[0], mu1 = grid.atom(k)[1];
                for (Eigen::Index j = 0; j < p; ++j) {
                    const Stats& s = stats[j];
                    const double d0 = s.m0 - mu0, d1 = s.m1 - mu1;
                    raw(j, k) = -0.5 * (s.css + s.n0 * d0 * d0 + s.n1 * d1 * d1);
                }
            }
            break;
        }
        case KernelId::LinearRegression: {
            struct Stats { double n, ybar, xbar, sxx, sxy, syy; };
            std::vector<Stats> stats(data.size());
            for (std::size_t j = 0; j < data.size(); ++j) {
                const auto& o =
                    detail::expect_obs<RegressionObs>(id, data[j], "log_likelihood_matrix");
                Stats s{static_cast<double>(o.n()), 0.0, 0.0, 0.0, 0.0, 0.0};
                for (std::size_t i = 0; i < o.n(); ++i) {
                    s.ybar += o.response[i];
                    s.xbar += o.covariate[i];
                }
                s.ybar /= s.n;
                s.xbar /= s.n;
                for (std::size_t i = 0; i < o.n(); ++i) {
                    const double dx = o.covariate[i] - s.xbar, dy = o.response[i] - s.ybar;
                    s.sxx += dx * dx;
                    s.sxy += dx * dy;
                    s.syy += dy * dy;
                }
                stats[j] = s;
            }
            for (Eigen::Index k = 0; k < q; ++k) {
                const double mu = grid.atom(k)[0], beta = grid.atom(k)[1];
                const double logsigma = grid.atom(k)[2];
                const double inv2s2 = 0.5 * std::exp(-2.0 * logsigma);
                for (Eigen::Index j = 0; j < p; ++j) {
                    const Stats& s = stats[j];
                    const double dm = s.ybar - mu - beta * s.xbar;
                    const double rss =
                        std::max(s.syy - 2.0 * beta * s.sxy + beta * beta * s.sxx, 0.0) +
                        s.n * dm * dm;
                    raw(j, k) = -s.n * logsigma - rss * inv2s2;
                }
            }
            break;
        }
        case KernelId::LocalLevelStateSpace: {
            std::vector<const SeriesObs*> series(data.size());
            for (std::size_t j = 0; j < data.size(); ++j)
                series[j] = &detail::expect_obs<SeriesObs>(id, data[j], "log_likelihood_matrix");
            for (Eigen::Index k = 0; k < q; ++k) {
                const double tau2 = std::exp(2.0 * grid.atom(k)[0]);
                const double sigma2 = std::exp(2.0 * grid.atom(k)[1]);
                for (Eigen::Index j = 0; j < p; ++j)
                    raw(j, k) = detail::ss_cond_loglik(series[j]->values, series[j]->covariates,
                                                       tau2, sigma2);
            }
            break;
        }
    }
    return LogLikelihoodMatrix::from_raw(std::move(raw));
}

}  // namespace npmix
