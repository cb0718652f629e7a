#pragma once

// Empirical-Bayes inference under a fitted mixing distribution: per-observation
// posterior weights over atoms, posterior means of functionals, posterior
// predictive densities, marginals, and sampling from the fitted mixture.

#include <npmix/core.hpp>
#include <npmix/grid.hpp>
#include <npmix/kernels.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <utility>
#include <vector>

namespace npmix {

// Posterior probability of each grid atom given one observation. Entries are
// zero exactly where the prior weight is zero.
struct PosteriorRow {
    Eigen::VectorXd weights;

    std::size_t size() const { return static_cast<std::size_t>(weights.size()); }
    double operator[](std::size_t k) const { return weights(static_cast<Eigen::Index>(k)); }
};

namespace detail {

inline PosteriorRow posterior_row_impl(const double* log_dens, std::size_t n,
                                       const MixingWeights& w) {
    if (n != w.size())
        throw IncompatibleError("posterior_row: " + std::to_string(n) + " densities vs " +
                                std::to_string(w.size()) + " weights");
    Eigen::VectorXd t(static_cast<Eigen::Index>(n));
    double m = neg_inf;
    for (std::size_t k = 0; k < n; ++k) {
        const double l = log_dens[k];
        if (std::isnan(l) || (std::isinf(l) && l > 0.0))
            throw NonFiniteError("posterior_row: invalid log density");
        const double v = w[k] > 0.0 ? l + std::log(w[k]) : neg_inf;
        t(static_cast<Eigen::Index>(k)) = v;
        if (v > m) m = v;
    }
    if (m == neg_inf)
        throw DegenerateRowError("posterior_row: mixture density is zero");
    PosteriorRow row;
    row.weights = (t.array() == neg_inf).select(0.0, (t.array() - m).exp()).matrix();
    row.weights /= row.weights.sum();
    return row;
}

}  // namespace detail

inline PosteriorRow posterior_row(const std::vector<double>& log_dens, const MixingWeights& w) {
    return detail::posterior_row_impl(log_dens.data(), log_dens.size(), w);
}

inline PosteriorRow posterior_row(const Eigen::Ref<const Eigen::VectorXd>& log_dens,
                                  const MixingWeights& w) {
    return detail::posterior_row_impl(log_dens.data(), static_cast<std::size_t>(log_dens.size()),
                                      w);
}

// Row j of a shifted matrix; the row shift cancels in the normalization.
inline PosteriorRow posterior_row(const LogLikelihoodMatrix& L, Eigen::Index j,
                                  const MixingWeights& w) {
    if (j < 0 || j >= L.rows())
        throw IncompatibleError("posterior_row: row index out of range");
    const Eigen::VectorXd row = L.entries().row(j).transpose();
    return detail::posterior_row_impl(row.data(), static_cast<std::size_t>(row.size()), w);
}

template <class Coord>
double posterior_mean(const PosteriorRow& row, const Grid& grid, Coord&& coord) {
    if (row.size() != grid.size())
        throw IncompatibleError("posterior_mean: row has " + std::to_string(row.size()) +
                                " entries but grid has " + std::to_string(grid.size()));
    double s = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k)
        if (row[k] > 0.0) s += row[k] * coord(grid.atom(k));
    return s;
}

inline double posterior_mean(const PosteriorRow& row, const Grid& grid, std::size_t dim) {
    if (grid.dim() <= dim)
        throw IncompatibleError("posterior_mean: dim out of range");
    return posterior_mean(row, grid, [dim](const Atom& a) { return a[dim]; });
}

// Posterior mean of coordinate `dim` for every row of a fitted instance.
inline std::vector<double> posterior_means(const LogLikelihoodMatrix& L, const Grid& grid,
                                           const MixingWeights& w, std::size_t dim) {
    std::vector<double> out(static_cast<std::size_t>(L.rows()));
    for (Eigen::Index j = 0; j < L.rows(); ++j)
        out[static_cast<std::size_t>(j)] = posterior_mean(posterior_row(L, j, w), grid, dim);
    return out;
}

namespace detail {

inline double predictive_impl(KernelId kernel, const Grid& grid, const Eigen::VectorXd& mix,
                              const Observation& new_obs) {
    if (static_cast<std::size_t>(mix.size()) != grid.size())
        throw IncompatibleError("predictive_log_density: weight/grid size mismatch");
    double m = neg_inf;
    Eigen::VectorXd t(mix.size());
    for (Eigen::Index k = 0; k < mix.size(); ++k) {
        const double v = mix(k) > 0.0
                             ? log_density(kernel, new_obs, grid.atom(static_cast<std::size_t>(k))) +
                                   std::log(mix(k))
                             : neg_inf;
        t(k) = v;
        if (v > m) m = v;
    }
    if (m == neg_inf)
        throw DegenerateRowError("predictive_log_density: mixture density is zero");
    return log_sum_exp(t);
}

}  // namespace detail

inline double predictive_log_density(KernelId kernel, const Grid& grid, const MixingWeights& w,
                                     const Observation& new_obs) {
    return detail::predictive_impl(kernel, grid, w.values(), new_obs);
}

inline double predictive_log_density(KernelId kernel, const Grid& grid, const PosteriorRow& row,
                                     const Observation& new_obs) {
    return detail::predictive_impl(kernel, grid, row.weights, new_obs);
}

// Marginal distribution of one coordinate: atoms grouped by exact coordinate
// value, weights summed, sorted by value.
inline std::vector<std::pair<double, double>> marginalize(const Grid& grid,
                                                          const MixingWeights& w,
                                                          std::size_t dim) {
    if (w.size() != grid.size())
        throw IncompatibleError("marginalize: weight/grid size mismatch");
    if (dim >= grid.dim())
        throw IncompatibleError("marginalize: dim out of range");
    std::map<double, double> mass;
    for (std::size_t k = 0; k < grid.size(); ++k)
        mass[grid.atom(k)[dim]] += w[k];
    return {mass.begin(), mass.end()};
}

// Per-draw shape parameters for kernels whose observations carry structure
// beyond the atom itself.
struct SampleSpec {
    std::size_t replicates = 2;
    double known_variance = 1.0;
    std::vector<int> labels = {0, 1};
};

inline std::vector<Observation> sample_mixture(KernelId kernel, const Grid& grid,
                                               const MixingWeights& w, std::size_t n_draws,
                                               std::uint64_t seed, const SampleSpec& spec = {}) {
    if (kernel == KernelId::LinearRegression || kernel == KernelId::LocalLevelStateSpace)
        throw UnsupportedError(std::string("sample_mixture: no sampler for ") +
                               kernel_name(kernel));
    if (w.size() != grid.size())
        throw IncompatibleError("sample_mixture: weight/grid size mismatch");
    if (grid.dim() != kernel_dim(kernel))
        throw IncompatibleError("sample_mixture: grid dimension does not match kernel");
    if (n_draws == 0)
        throw std::invalid_argument("sample_mixture: n_draws must be positive");
    if (kernel == KernelId::GaussianLocation && spec.known_variance <= 0.0)
        throw std::invalid_argument("sample_mixture: known_variance must be positive");
    if (kernel == KernelId::GaussianLocationScale && spec.replicates < 2)
        throw std::invalid_argument("sample_mixture: need at least 2 replicates");
    if (kernel == KernelId::TwoClassGaussian && spec.labels.empty())
        throw std::invalid_argument("sample_mixture: labels must be nonempty");

    for (std::size_t k = 0; k < grid.size(); ++k)
        if (w[k] > 0.0) detail::check_atom(kernel, grid.atom(k));

    std::vector<double> cum(w.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        acc += w[k];
        cum[k] = acc;
    }
    cum.back() = 1.0;

    std::mt19937_64 rng(detail::splitmix64(seed));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Observation> out;
    out.reserve(n_draws);
    for (std::size_t i = 0; i < n_draws; ++i) {
        const double u = unif(rng);
        const std::size_t k = static_cast<std::size_t>(
            std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        const Atom& atom = grid.atom(std::min(k, w.size() - 1));
        switch (kernel) {
            case KernelId::GaussianLocation: {
                const double sd = std::sqrt(spec.known_variance);
                out.emplace_back(KnownVarObs(atom[0] + sd * gauss(rng), spec.known_variance));
                break;
            }
            case KernelId::GaussianLocationScale: {
                std::vector<double> values(spec.replicates);
                for (double& v : values) v = atom[0] + atom[1] * gauss(rng);
                out.emplace_back(ReplicateObs(std::move(values)));
                break;
            }
            case KernelId::PoissonBinomial: {
                std::poisson_distribution<long> pois(atom[0]);
                const long ab = pois(rng);
                long h = 0;
                if (ab > 0) {
                    std::binomial_distribution<long> binom(ab, atom[1]);
                    h = binom(rng);
                }
                out.emplace_back(CountPairObs(ab, h));
                break;
            }
            case KernelId::TwoClassGaussian: {
                std::vector<double> values(spec.labels.size());
                for (std::size_t j = 0; j < values.size(); ++j)
                    values[j] = atom[spec.labels[j] == 0 ? 0 : 1] + gauss(rng);
                out.emplace_back(TwoClassObs(std::move(values), spec.labels));
                break;
            }
            default:
                throw UnsupportedError("sample_mixture: unreachable kernel");
        }
    }
    return out;
}

}  // namespace npmix
