#include <npmix/solvers.hpp>

#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace npmix;

namespace {

LogLikelihoodMatrix two_row_degenerate() {
    Eigen::MatrixXd raw(2, 2);
    raw << 0.0, neg_inf, neg_inf, 0.0;
    return LogLikelihoodMatrix::from_raw(raw);
}

LogLikelihoodMatrix random_instance(std::mt19937_64& rng, Eigen::Index p, Eigen::Index q) {
    std::uniform_real_distribution<double> unif(-4.0, 0.0);
    Eigen::MatrixXd raw(p, q);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index k = 0; k < q; ++k)
            raw(j, k) = unif(rng);
    return LogLikelihoodMatrix::from_raw(raw);
}

MixingWeights make_weights(std::initializer_list<double> v) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) w(i++) = x;
    return MixingWeights(w);
}

// brute-force minimization over the q = 2 simplex, step 1e-5 on w_1
double brute_force_objective(const LogLikelihoodMatrix& L) {
    double best = std::numeric_limits<double>::infinity();
    for (long t = 0; t <= 100000; ++t) {
        const double w1 = static_cast<double>(t) * 1e-5;
        double acc = 0.0;
        for (Eigen::Index j = 0; j < L.rows(); ++j) {
            const double mix = std::exp(L.entries()(j, 0)) * w1 +
                               std::exp(L.entries()(j, 1)) * (1.0 - w1);
            if (mix <= 0.0) { acc = std::numeric_limits<double>::infinity(); break; }
            acc += std::log(mix) + L.row_shifts()(j);
        }
        best = std::min(best, -acc / static_cast<double>(L.rows()));
    }
    return best;
}

}  // namespace

TEST_CASE("SolverConfig validation") {
    SolverConfig bad;
    bad.tol = 0.0;
    REQUIRE_THROWS_AS(solve_em(two_row_degenerate(), bad), std::invalid_argument);
    bad.tol = 1.5;
    REQUIRE_THROWS_AS(solve_em(two_row_degenerate(), bad), std::invalid_argument);
    bad.tol = 1e-6;
    bad.max_iter = -3;
    REQUIRE_THROWS_AS(solve_frank_wolfe(two_row_degenerate(), bad), std::invalid_argument);

    SolverConfig mismatched;
    mismatched.init = MixingWeights::uniform(3);
    REQUIRE_THROWS_AS(solve_em(two_row_degenerate(), mismatched), IncompatibleError);
}

TEST_CASE("EM fixed point on the symmetric degenerate instance") {
    const FitResult r = solve_em(two_row_degenerate());
    REQUIRE(r.converged);
    REQUIRE(r.iterations == 1);
    REQUIRE(r.weights[0] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(r.weights[1] == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(r.kkt_gap <= 1e-10);
    REQUIRE(r.solver == "em");
}

TEST_CASE("EM reaches the vertex in one update") {
    Eigen::MatrixXd raw(2, 2);
    raw << 0.0, neg_inf, 0.0, neg_inf;
    const LogLikelihoodMatrix L = LogLikelihoodMatrix::from_raw(raw);

    SolverConfig one;
    one.max_iter = 1;
    const FitResult capped = solve_em(L, one);
    REQUIRE(capped.iterations == 1);
    REQUIRE_FALSE(capped.converged);
    REQUIRE(capped.weights[0] == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(capped.weights[1] == Catch::Approx(0.0).margin(1e-15));

    const FitResult full = solve_em(L);
    REQUIRE(full.converged);
    REQUIRE(full.iterations == 2);
    REQUIRE(full.weights[0] == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("EM with a single atom converges immediately") {
    Eigen::MatrixXd raw(3, 1);
    raw << -1.0, -2.0, -0.5;
    const FitResult r = solve_em(LogLikelihoodMatrix::from_raw(raw));
    REQUIRE(r.converged);
    REQUIRE(r.weights[0] == 1.0);
    REQUIRE(r.kkt_gap == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("Frank-Wolfe single step on the skewed instance") {
    SolverConfig cfg;
    cfg.init = make_weights({0.9, 0.1});
    const FitResult r = solve_frank_wolfe(two_row_degenerate(), cfg);
    REQUIRE(r.converged);
    // line-search accuracy is limited to roughly sqrt(machine eps)
    REQUIRE(r.weights[0] == Catch::Approx(0.5).margin(1e-7));
    REQUIRE(r.weights[1] == Catch::Approx(0.5).margin(1e-7));
    REQUIRE(r.kkt_gap <= 1e-7);
    REQUIRE(r.solver == "fw");
}

TEST_CASE("Frank-Wolfe returns immediately at an optimum") {
    SolverConfig cfg;
    cfg.init = make_weights({0.5, 0.5});
    const FitResult r = solve_frank_wolfe(two_row_degenerate(), cfg);
    REQUIRE(r.converged);
    REQUIRE(r.iterations == 0);
    REQUIRE(r.weights[0] == 0.5);

    Eigen::MatrixXd raw(3, 1);
    raw << -1.0, -2.0, -0.5;
    const FitResult single = solve_frank_wolfe(LogLikelihoodMatrix::from_raw(raw));
    REQUIRE(single.converged);
    REQUIRE(single.iterations == 0);
    REQUIRE(single.weights[0] == 1.0);
}

TEST_CASE("degenerate custom init raises DegenerateRow") {
    Eigen::MatrixXd raw(1, 2);
    raw << 0.0, neg_inf;
    const LogLikelihoodMatrix L = LogLikelihoodMatrix::from_raw(raw);
    SolverConfig cfg;
    cfg.init = make_weights({0.0, 1.0});
    REQUIRE_THROWS_AS(solve_em(L, cfg), DegenerateRowError);
    REQUIRE_THROWS_AS(solve_frank_wolfe(L, cfg), DegenerateRowError);
}

TEST_CASE("solvers match the brute-force oracle at q = 2") {
    std::mt19937_64 rng(101);
    SolverConfig tight;
    tight.tol = 1e-10;
    for (int rep = 0; rep < 8; ++rep) {
        const LogLikelihoodMatrix L = random_instance(rng, 1 + rep % 6, 2);
        const double oracle = brute_force_objective(L);
        const FitResult em = solve_em(L, tight);
        const FitResult fw = solve_frank_wolfe(L, tight);
        REQUIRE(em.neg_log_lik == Catch::Approx(oracle).margin(1e-6));
        REQUIRE(fw.neg_log_lik == Catch::Approx(oracle).margin(1e-6));
    }
}

TEST_CASE("EM and Frank-Wolfe certify each other on random instances") {
    // Each solver's KKT gap bounds its own suboptimality: f(w) - f* <= gap(w).
    // The two objectives must therefore bracket each other within those gaps.
    std::mt19937_64 rng(102);
    SolverConfig tight;
    tight.tol = 1e-10;
    tight.max_iter = 200000;
    const double slack = 1e-9;
    for (int rep = 0; rep < 6; ++rep) {
        const Eigen::Index p = 5 + (rep * 9) % 46, q = 2 + (rep * 5) % 19;
        const LogLikelihoodMatrix L = random_instance(rng, p, q);
        const FitResult em = solve_em(L, tight);
        const FitResult fw = solve_frank_wolfe(L, tight);
        REQUIRE(em.neg_log_lik - fw.neg_log_lik <= em.kkt_gap + slack);
        REQUIRE(fw.neg_log_lik - em.neg_log_lik <= fw.kkt_gap + slack);
        REQUIRE(em.kkt_gap <= 1e-4);
        REQUIRE(fw.kkt_gap <= 1e-4);
    }
}

TEST_CASE("EM and Frank-Wolfe agree directly at q = 2") {
    // with two vertices the exact line search leaves no zig-zag tail
    std::mt19937_64 rng(105);
    SolverConfig tight;
    tight.tol = 1e-10;
    tight.max_iter = 200000;
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::Index p = 1 + rep % 8;
        const LogLikelihoodMatrix L = random_instance(rng, p, 2);
        const FitResult em = solve_em(L, tight);
        const FitResult fw = solve_frank_wolfe(L, tight);
        REQUIRE(std::abs(em.neg_log_lik - fw.neg_log_lik) <= 1e-6);
    }
}

TEST_CASE("EM objective is non-increasing along the trace") {
    std::mt19937_64 rng(103);
    const LogLikelihoodMatrix L = random_instance(rng, 40, 12);
    SolverConfig cfg;
    cfg.trace = true;
    const FitResult r = solve_em(L, cfg);
    REQUIRE(r.trace.size() >= 2);
    for (std::size_t i = 1; i < r.trace.size(); ++i)
        REQUIRE(r.trace[i].neg_log_lik <=
                r.trace[i - 1].neg_log_lik + 1e-12 * std::abs(r.trace[i - 1].neg_log_lik));
    REQUIRE(r.trace.front().iter == 0);
    REQUIRE(r.trace.back().iter == r.iterations);
    REQUIRE(r.trace.back().neg_log_lik == r.neg_log_lik);
    REQUIRE(r.trace.back().kkt_gap == r.kkt_gap);
}

TEST_CASE("solver output is deterministic") {
    std::mt19937_64 rng(104);
    const LogLikelihoodMatrix L = random_instance(rng, 30, 8);
    const FitResult a = solve_em(L);
    const FitResult b = solve_em(L);
    REQUIRE(a.neg_log_lik == b.neg_log_lik);
    REQUIRE(a.kkt_gap == b.kkt_gap);
    REQUIRE(a.iterations == b.iterations);
    for (std::size_t k = 0; k < a.weights.size(); ++k)
        REQUIRE(a.weights[k] == b.weights[k]);

    const FitResult fa = solve_frank_wolfe(L);
    const FitResult fb = solve_frank_wolfe(L);
    REQUIRE(fa.neg_log_lik == fb.neg_log_lik);
    for (std::size_t k = 0; k < fa.weights.size(); ++k)
        REQUIRE(fa.weights[k] == fb.weights[k]);
}

TEST_CASE("delta_log_lik") {
    std::mt19937_64 rng(105);
    const LogLikelihoodMatrix L = random_instance(rng, 20, 6);
    const FitResult em = solve_em(L);
    const FitResult fw = solve_frank_wolfe(L);
    REQUIRE(delta_log_lik(em, em) == 0.0);
    REQUIRE(delta_log_lik(fw, em) == Catch::Approx(-delta_log_lik(em, fw)).margin(1e-15));

    const LogLikelihoodMatrix other = random_instance(rng, 20, 7);
    const FitResult em7 = solve_em(other);
    REQUIRE_THROWS_AS(delta_log_lik(em7, em), IncompatibleError);
}

TEST_CASE("solver iterates remain on the simplex") {
    std::mt19937_64 rng(106);
    const LogLikelihoodMatrix L = random_instance(rng, 25, 9);
    for (const FitResult& r : {solve_em(L), solve_frank_wolfe(L)}) {
        REQUIRE(std::abs(r.weights.values().sum() - 1.0) <= 1e-12);
        REQUIRE((r.weights.values().array() >= 0.0).all());
    }
}
