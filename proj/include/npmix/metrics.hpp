#pragma once

// Evaluation metrics shared by the study pipelines: squared-error totals,
// the variance-stabilizing transform for binomial rates, and the oracle
// soft-thresholding baseline.

#include <npmix/core.hpp>
#include <npmix/kernels.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace npmix {

inline double tse(const std::vector<double>& estimates, const std::vector<double>& truth) {
    if (estimates.size() != truth.size())
        throw IncompatibleError("tse: " + std::to_string(estimates.size()) + " estimates vs " +
                                std::to_string(truth.size()) + " truths");
    double s = 0.0;
    for (std::size_t j = 0; j < estimates.size(); ++j) {
        const double d = estimates[j] - truth[j];
        s += d * d;
    }
    return s;
}

// W = arcsin sqrt((h + 1/4)/(ab + 1/2)), approximately N(arcsin sqrt(pi), 1/(4ab)).
inline double stabilized_rate(long at_bats, long hits) {
    if (at_bats < 0 || hits < 0 || hits > at_bats)
        throw std::invalid_argument("stabilized_rate: need 0 <= hits <= at_bats");
    return std::asin(std::sqrt((static_cast<double>(hits) + 0.25) /
                               (static_cast<double>(at_bats) + 0.5)));
}

// Total squared error on the stabilized scale with the -1/(4A) noise correction.
// Estimates are on the W scale; may be negative for very accurate estimators.
inline double baseball_tse(const std::vector<double>& estimates,
                           const std::vector<CountPairObs>& second_half) {
    if (estimates.size() != second_half.size())
        throw IncompatibleError("baseball_tse: estimate/record count mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < estimates.size(); ++j) {
        const CountPairObs& r = second_half[j];
        if (r.at_bats <= 0)
            throw DomainError("baseball_tse: second-half at_bats must be positive");
        const double w = stabilized_rate(r.at_bats, r.hits);
        const double d = estimates[j] - w;
        s += d * d - 1.0 / (4.0 * static_cast<double>(r.at_bats));
    }
    return s;
}

inline double soft_threshold(double x, double t) {
    if (t < 0.0) throw std::invalid_argument("soft_threshold: t must be nonnegative");
    const double shrunk = std::abs(x) - t;
    return shrunk > 0.0 ? (x < 0.0 ? -shrunk : shrunk) : 0.0;
}

struct SoftThresholdOracle {
    double t = 0.0;
    double tse = 0.0;
};

// Scans t over 1001 equispaced values in [0, max|muhat|] and returns the
// TSE-minimizing threshold (first minimum in scan order).
inline SoftThresholdOracle soft_threshold_oracle(const std::vector<double>& muhat,
                                                 const std::vector<double>& truth) {
    if (muhat.size() != truth.size())
        throw IncompatibleError("soft_threshold_oracle: length mismatch");
    if (muhat.empty()) throw std::invalid_argument("soft_threshold_oracle: empty input");
    double hi = 0.0;
    for (double x : muhat) hi = std::max(hi, std::abs(x));
    SoftThresholdOracle best;
    best.t = 0.0;
    best.tse = tse(muhat, truth);
    if (hi == 0.0) return best;
    const double step = hi / 1000.0;
    std::vector<double> shrunk(muhat.size());
    for (int i = 1; i <= 1000; ++i) {
        const double t = step * static_cast<double>(i);
        for (std::size_t j = 0; j < muhat.size(); ++j) shrunk[j] = soft_threshold(muhat[j], t);
        const double err = tse(shrunk, truth);
        if (err < best.tse) {
            best.t = t;
            best.tse = err;
        }
    }
    return best;
}

}  // namespace npmix
