#pragma once

// Core types and simplex-objective primitives shared by every grid-based
// mixture fit: atoms, grids, mixing weights, the row-shifted log-likelihood
// matrix, and the objective / gradient / optimality-gap evaluations.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace npmix {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Atom coordinates outside the kernel's parameter domain.
struct DomainError : Error {
    using Error::Error;
};

// An observation whose mixture density is identically zero (all candidate
// log densities -inf, or zero weight on every finite entry of its row).
struct DegenerateRowError : Error {
    using Error::Error;
};

// Mismatched shapes: weights vs grid, matrix vs weights, grids vs each other.
struct IncompatibleError : Error {
    using Error::Error;
};

// NaN or +inf where a finite (or -inf) value is required.
struct NonFiniteError : Error {
    using Error::Error;
};

// Operation not defined for the requested kernel.
struct UnsupportedError : Error {
    using Error::Error;
};

// No default grid resolution for the requested dimension.
struct UnsupportedDefaultError : Error {
    using Error::Error;
};

// Malformed input file; carries the 1-based line number when known.
struct SchemaError : Error {
    long line = 0;
    SchemaError(const std::string& what, long line_no = 0)
        : Error(line_no > 0 ? what + " (line " + std::to_string(line_no) + ")" : what),
          line(line_no) {}
};

// A time series too short for the requested operation.
struct InsufficientSeriesError : Error {
    using Error::Error;
};

// A pipeline cohort with no usable records.
struct EmptyCohortError : Error {
    using Error::Error;
};

// Internal solver invariant violated (e.g. the EM objective increased).
struct SolverError : Error {
    using Error::Error;
};

// A point in parameter space; size is the model dimension d.
struct Atom {
    std::vector<double> coords;

    Atom() = default;
    explicit Atom(std::vector<double> c) : coords(std::move(c)) { validate(); }
    Atom(std::initializer_list<double> c) : coords(c) { validate(); }

    std::size_t dim() const { return coords.size(); }
    double operator[](std::size_t i) const { return coords[i]; }

    void validate() const {
        if (coords.empty())
            throw std::invalid_argument("Atom: empty coordinate vector");
        for (double x : coords)
            if (!std::isfinite(x))
                throw NonFiniteError("Atom: non-finite coordinate");
    }
};

// A fixed candidate support: q atoms of common dimension d.
class Grid {
  public:
    Grid() = default;
    explicit Grid(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
        if (atoms_.empty())
            throw std::invalid_argument("Grid: no atoms");
        dim_ = atoms_.front().dim();
        for (const Atom& a : atoms_)
            if (a.dim() != dim_)
                throw IncompatibleError("Grid: atoms of mixed dimension");
    }

    std::size_t size() const { return atoms_.size(); }
    std::size_t dim() const { return dim_; }
    const Atom& atom(std::size_t k) const { return atoms_[k]; }
    const std::vector<Atom>& atoms() const { return atoms_; }

  private:
    std::vector<Atom> atoms_;
    std::size_t dim_ = 0;
};

// A probability vector over grid atoms. Entries are >= 0 and sum to one;
// the constructor renormalizes exactly after checking the sum is within
// 1e-8 of one. Default-constructed weights are empty placeholders.
class MixingWeights {
  public:
    MixingWeights() = default;

    explicit MixingWeights(Eigen::VectorXd w) : w_(std::move(w)) {
        if (w_.size() == 0)
            throw std::invalid_argument("MixingWeights: empty vector");
        if (!w_.allFinite())
            throw NonFiniteError("MixingWeights: non-finite entry");
        if ((w_.array() < 0.0).any())
            throw std::invalid_argument("MixingWeights: negative entry");
        const double s = w_.sum();
        if (std::abs(s - 1.0) > 1e-8)
            throw std::invalid_argument("MixingWeights: entries sum to " + std::to_string(s));
        w_ /= s;
    }

    static MixingWeights uniform(std::size_t q) {
        if (q == 0)
            throw std::invalid_argument("MixingWeights: q must be positive");
        return MixingWeights(Eigen::VectorXd::Constant(
            static_cast<Eigen::Index>(q), 1.0 / static_cast<double>(q)));
    }

    std::size_t size() const { return static_cast<std::size_t>(w_.size()); }
    double operator[](std::size_t k) const { return w_(static_cast<Eigen::Index>(k)); }
    const Eigen::VectorXd& values() const { return w_; }

    std::size_t support_size(double thresh = 0.0) const {
        return static_cast<std::size_t>((w_.array() > thresh).count());
    }

  private:
    Eigen::VectorXd w_;
};

// Row-shifted log-likelihood matrix. entries()(j, k) is the log density of
// observation j at atom k minus row_shifts()(j), so every stored entry lies
// in [-inf, 0] and each row's maximum is exactly zero. -inf entries mark
// atoms with zero density for that observation.
class LogLikelihoodMatrix {
  public:
    static LogLikelihoodMatrix from_raw(Eigen::MatrixXd raw) {
        const Eigen::Index p = raw.rows(), q = raw.cols();
        if (p == 0 || q == 0)
            throw std::invalid_argument("LogLikelihoodMatrix: empty matrix");
        Eigen::VectorXd shifts(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            double m = neg_inf;
            for (Eigen::Index k = 0; k < q; ++k) {
                const double v = raw(j, k);
                if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
                    throw NonFiniteError("LogLikelihoodMatrix: NaN or +inf at row " +
                                         std::to_string(j));
                if (v > m) m = v;
            }
            if (m == neg_inf)
                throw DegenerateRowError("LogLikelihoodMatrix: row " + std::to_string(j) +
                                         " has zero density at every atom");
            for (Eigen::Index k = 0; k < q; ++k)
                raw(j, k) -= m;
            shifts(j) = m;
        }
        return LogLikelihoodMatrix(std::move(raw), std::move(shifts));
    }

    const Eigen::MatrixXd& entries() const { return entries_; }
    const Eigen::VectorXd& row_shifts() const { return shifts_; }
    Eigen::Index rows() const { return entries_.rows(); }
    Eigen::Index cols() const { return entries_.cols(); }

  private:
    LogLikelihoodMatrix(Eigen::MatrixXd e, Eigen::VectorXd s)
        : entries_(std::move(e)), shifts_(std::move(s)) {}

    Eigen::MatrixXd entries_;
    Eigen::VectorXd shifts_;
};

// Per-iteration solver record.
struct IterRecord {
    long iter = 0;
    double neg_log_lik = 0.0;
    double kkt_gap = 0.0;
};

struct FitResult {
    MixingWeights weights;
    double neg_log_lik = 0.0;
    double kkt_gap = 0.0;
    long iterations = 0;
    bool converged = false;
    std::string solver;
    double seconds = 0.0;
    std::vector<IterRecord> trace;
};

// log(sum_i exp(v_i)), stabilized by the running maximum. Empty input and
// all -inf input both yield -inf. NaN or +inf entries are rejected.
inline double log_sum_exp(const double* v, std::size_t n) {
    double m = neg_inf;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(v[i]) || v[i] == std::numeric_limits<double>::infinity())
            throw NonFiniteError("log_sum_exp: NaN or +inf entry");
        if (v[i] > m) m = v[i];
    }
    if (m == neg_inf) return neg_inf;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += std::exp(v[i] - m);
    return m + std::log(s);
}

inline double log_sum_exp(const std::vector<double>& v) {
    return log_sum_exp(v.data(), v.size());
}

inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
    return log_sum_exp(v.data(), static_cast<std::size_t>(v.size()));
}

namespace detail {

// log of row j's mixture density under the shifted entries (shift excluded):
// log(sum_k exp(entries(j,k)) * w_k), evaluated over the support of w in the
// log domain so that rows whose supported entries are all far below zero do
// not underflow.
inline double shifted_row_log_mix(const Eigen::MatrixXd& entries, const Eigen::VectorXd& logw,
                                  Eigen::Index j) {
    const Eigen::Index q = entries.cols();
    double m = neg_inf;
    for (Eigen::Index k = 0; k < q; ++k) {
        if (logw(k) == neg_inf) continue;
        const double t = entries(j, k) + logw(k);
        if (t > m) m = t;
    }
    if (m == neg_inf) return neg_inf;
    double s = 0.0;
    for (Eigen::Index k = 0; k < q; ++k) {
        if (logw(k) == neg_inf) continue;
        s += std::exp(entries(j, k) + logw(k) - m);
    }
    return m + std::log(s);
}

inline Eigen::VectorXd log_weights(const MixingWeights& w) {
    return w.values().array().log().matrix();
}

// Stateless 64-bit mixer; scrambles user seeds and derives independent
// substreams as splitmix64(base + index).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline void check_shapes(const LogLikelihoodMatrix& L, const MixingWeights& w,
                         const char* where) {
    if (static_cast<std::size_t>(L.cols()) != w.size())
        throw IncompatibleError(std::string(where) + ": matrix has " +
                                std::to_string(L.cols()) + " columns but weights have size " +
                                std::to_string(w.size()));
}

}  // namespace detail

// The simplex objective: -(1/p) * sum_j log(sum_k f(X_j | t_k) w_k), on the
// original density scale (row shifts folded back in).
inline double neg_log_likelihood(const LogLikelihoodMatrix& L, const MixingWeights& w) {
    detail::check_shapes(L, w, "neg_log_likelihood");
    const Eigen::VectorXd logw = detail::log_weights(w);
    const Eigen::Index p = L.rows();
    double acc = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double lse = detail::shifted_row_log_mix(L.entries(), logw, j);
        if (lse == neg_inf)
            throw DegenerateRowError("neg_log_likelihood: observation " + std::to_string(j) +
                                     " has zero mixture density");
        acc += lse + L.row_shifts()(j);
    }
    return -acc / static_cast<double>(p);
}

// Gradient of the objective above: g_k = -(1/p) * sum_j f_jk / (f_j . w),
// computed on the shifted scale where the shifts cancel.
inline Eigen::VectorXd mixture_gradient(const LogLikelihoodMatrix& L, const MixingWeights& w) {
    detail::check_shapes(L, w, "mixture_gradient");
    const Eigen::VectorXd logw = detail::log_weights(w);
    const Eigen::Index p = L.rows(), q = L.cols();
    Eigen::VectorXd row_lse(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        row_lse(j) = detail::shifted_row_log_mix(L.entries(), logw, j);
        if (row_lse(j) == neg_inf)
            throw DegenerateRowError("mixture_gradient: observation " + std::to_string(j) +
                                     " has zero mixture density");
    }
    Eigen::VectorXd g(q);
    for (Eigen::Index k = 0; k < q; ++k) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            const double t = L.entries()(j, k) - row_lse(j);
            if (t != neg_inf) s += std::exp(t);
        }
        g(k) = -s / static_cast<double>(p);
    }
    return g;
}

// First-order optimality gap max_k [(1/p) sum_j f_jk / (f_j . w)] - 1.
// Zero (to rounding) at the constrained optimum, positive elsewhere.
inline double kkt_gap(const LogLikelihoodMatrix& L, const MixingWeights& w) {
    const Eigen::VectorXd g = mixture_gradient(L, w);
    return (-g).maxCoeff() - 1.0;
}

}  // namespace npmix
