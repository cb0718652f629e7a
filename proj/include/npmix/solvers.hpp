#pragma once

// Solvers for the simplex-constrained program: EM fixed-point iteration and
// the Frank-Wolfe vertex-direction method with exact line search. Both stop
// on the relative-objective rule |l(w_K) - l(w_{K-1})| <= tol * |l(w_{K-1})|.

#include <npmix/core.hpp>

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

namespace npmix {

struct SolverConfig {
    double tol = 1e-6;
    long max_iter = 0;  // 0 selects the per-solver default (EM 50000, FW 20000)
    std::optional<MixingWeights> init;  // empty selects Uniform
    bool trace = false;
};

enum class SolverId { Em, FrankWolfe };

inline const char* solver_name(SolverId id) {
    return id == SolverId::Em ? "em" : "fw";
}

inline SolverId solver_from_name(const std::string& name) {
    if (name == "em") return SolverId::Em;
    if (name == "fw") return SolverId::FrankWolfe;
    throw std::invalid_argument("unknown solver '" + name + "' (expected em or fw)");
}

// Signed log-likelihood improvement of `result` over `baseline`: positive
// when `result` attains the smaller negative log-likelihood.
inline double delta_log_lik(const FitResult& result, const FitResult& baseline) {
    if (result.weights.size() != baseline.weights.size())
        throw IncompatibleError("delta_log_lik: results come from different grids");
    return baseline.neg_log_lik - result.neg_log_lik;
}

namespace detail {

inline void check_solver_config(const SolverConfig& cfg) {
    if (!(cfg.tol > 0.0 && cfg.tol < 1.0))
        throw std::invalid_argument("SolverConfig: tol must be in (0, 1)");
    if (cfg.max_iter < 0)
        throw std::invalid_argument("SolverConfig: max_iter must be >= 1, or 0 for the default");
}

struct SolverState {
    Eigen::MatrixXd F;  // exp of the shifted entries; -inf maps to 0
    Eigen::VectorXd w;
    Eigen::VectorXd m;  // F * w, the per-row shifted mixture densities
    double mean_shift = 0.0;
    Eigen::Index p = 0, q = 0;
};

inline double state_objective(const SolverState& st, const char* solver) {
    if (st.m.minCoeff() <= 0.0)
        throw DegenerateRowError(std::string(solver) +
                                 ": an observation has zero mixture density under the "
                                 "current weights");
    const double obj = -st.m.array().log().mean() - st.mean_shift;
    if (!std::isfinite(obj))
        throw NonFiniteError(std::string(solver) + ": non-finite objective");
    return obj;
}

inline SolverState init_state(const LogLikelihoodMatrix& L, const SolverConfig& cfg,
                              const char* solver) {
    SolverState st;
    st.p = L.rows();
    st.q = L.cols();
    // vectorized exp may clamp -inf to a denormal instead of 0; force exact zeros
    st.F = (L.entries().array() == neg_inf).select(0.0, L.entries().array().exp()).matrix();
    st.mean_shift = L.row_shifts().mean();
    if (cfg.init) {
        if (static_cast<Eigen::Index>(cfg.init->size()) != st.q)
            throw IncompatibleError(std::string(solver) + ": init weights size " +
                                    std::to_string(cfg.init->size()) + " does not match q = " +
                                    std::to_string(st.q));
        st.w = cfg.init->values();
    } else {
        st.w = Eigen::VectorXd::Constant(st.q, 1.0 / static_cast<double>(st.q));
    }
    st.m = st.F * st.w;
    return st;
}

// (1/p) F^T (1 / m): the per-atom averaged density ratios. The optimality
// gap at the current iterate is max(s) - 1, and s * w is the EM update.
inline Eigen::VectorXd density_ratios(const SolverState& st) {
    return st.F.transpose() * st.m.cwiseInverse() / static_cast<double>(st.p);
}

// Golden-section minimization of a convex objective on [0, 1] to the given
// interval width.
template <class F>
double golden_section(F&& f, double width) {
    constexpr double invphi = 0.6180339887498948482;
    double a = 0.0, b = 1.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > width) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

inline void finalize(FitResult& r, const LogLikelihoodMatrix& L, const SolverState& st,
                     const char* solver,
                     std::chrono::steady_clock::time_point start) {
    r.weights = MixingWeights(st.w);
    r.neg_log_lik = neg_log_likelihood(L, r.weights);
    r.kkt_gap = kkt_gap(L, r.weights);
    r.solver = solver;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

// EM fixed-point iteration w_k <- w_k * (1/p) sum_j f_jk / (f_j . w). The
// objective is checked to be non-increasing (1e-12 relative slack); a zero
// weight is absorbing, so the default Uniform init keeps all atoms live.
inline FitResult solve_em(const LogLikelihoodMatrix& L, const SolverConfig& cfg = {}) {
    detail::check_solver_config(cfg);
    const long max_iter = cfg.max_iter > 0 ? cfg.max_iter : 50000;
    const auto start = std::chrono::steady_clock::now();

    detail::SolverState st = detail::init_state(L, cfg, "solve_em");
    double obj = detail::state_objective(st, "solve_em");

    FitResult r;
    long iter = 0;
    for (; iter < max_iter;) {
        const Eigen::VectorXd s = detail::density_ratios(st);
        if (cfg.trace) r.trace.push_back({iter, obj, s.maxCoeff() - 1.0});
        ++iter;
        st.w.array() *= s.array();
        st.w /= st.w.sum();
        st.m = st.F * st.w;
        const double obj_new = detail::state_objective(st, "solve_em");
        if (obj_new > obj + 1e-12 * std::abs(obj))
            throw SolverError("solve_em: objective increased from " + std::to_string(obj) +
                              " to " + std::to_string(obj_new));
        const bool converged = std::abs(obj_new - obj) <= cfg.tol * std::abs(obj);
        obj = obj_new;
        if (converged) {
            r.converged = true;
            break;
        }
    }
    r.iterations = iter;
    detail::finalize(r, L, st, "em", start);
    if (cfg.trace) r.trace.push_back({iter, r.neg_log_lik, r.kkt_gap});
    return r;
}

// Frank-Wolfe / vertex direction method: move toward the atom with the most
// negative gradient entry, with the step chosen by exact line search
// (golden section to 1e-10 width; the restricted objective is convex).
inline FitResult solve_frank_wolfe(const LogLikelihoodMatrix& L, const SolverConfig& cfg = {}) {
    detail::check_solver_config(cfg);
    const long max_iter = cfg.max_iter > 0 ? cfg.max_iter : 20000;
    const auto start = std::chrono::steady_clock::now();

    detail::SolverState st = detail::init_state(L, cfg, "solve_frank_wolfe");
    double obj = detail::state_objective(st, "solve_frank_wolfe");

    FitResult r;
    Eigen::VectorXd s = detail::density_ratios(st);
    if (cfg.trace) r.trace.push_back({0, obj, s.maxCoeff() - 1.0});
    if (s.maxCoeff() - 1.0 <= cfg.tol * 1e-2) {
        // already optimal to well below the stopping scale
        r.converged = true;
        r.iterations = 0;
        detail::finalize(r, L, st, "fw", start);
        return r;
    }

    long iter = 0;
    for (; iter < max_iter;) {
        ++iter;
        Eigen::Index kstar = 0;
        double best = s(0);
        for (Eigen::Index k = 1; k < st.q; ++k)
            if (s(k) > best) {
                best = s(k);
                kstar = k;
            }
        const Eigen::VectorXd col = st.F.col(kstar);
        const auto phi = [&](double gamma) {
            const Eigen::ArrayXd mix =
                (1.0 - gamma) * st.m.array() + gamma * col.array();
            if (mix.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
            return -mix.log().mean() - st.mean_shift;
        };
        const double gamma = detail::golden_section(phi, 1e-10);
        st.w *= 1.0 - gamma;
        st.w(kstar) += gamma;
        st.w /= st.w.sum();
        st.m = st.F * st.w;
        const double obj_new = detail::state_objective(st, "solve_frank_wolfe");
        if (obj_new > obj + 1e-12 * std::abs(obj))
            throw SolverError("solve_frank_wolfe: objective increased from " +
                              std::to_string(obj) + " to " + std::to_string(obj_new));
        const bool converged = std::abs(obj_new - obj) <= cfg.tol * std::abs(obj);
        obj = obj_new;
        s = detail::density_ratios(st);
        if (cfg.trace) r.trace.push_back({iter, obj, s.maxCoeff() - 1.0});
        if (converged) {
            r.converged = true;
            break;
        }
    }
    r.iterations = iter;
    detail::finalize(r, L, st, "fw", start);
    return r;
}

inline FitResult solve(const LogLikelihoodMatrix& L, SolverId id, const SolverConfig& cfg = {}) {
    return id == SolverId::Em ? solve_em(L, cfg) : solve_frank_wolfe(L, cfg);
}

}  // namespace npmix
