#include <npmix/core.hpp>

#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace npmix;

namespace {

// Reference objective on the raw (unshifted) scale, for small matrices only:
// F(w) = -(1/p) sum_j log(sum_k exp(raw_jk) w_k). Accepts any positive w,
// not just simplex points, so it can drive finite differences.
double raw_nll(const Eigen::MatrixXd& raw, const Eigen::VectorXd& w) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < raw.rows(); ++j) {
        double mix = 0.0;
        for (Eigen::Index k = 0; k < raw.cols(); ++k)
            mix += std::exp(raw(j, k)) * w(k);
        acc += std::log(mix);
    }
    return -acc / static_cast<double>(raw.rows());
}

Eigen::MatrixXd random_raw(std::mt19937_64& rng, Eigen::Index p, Eigen::Index q) {
    std::uniform_real_distribution<double> unif(-3.0, 1.0);
    Eigen::MatrixXd raw(p, q);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index k = 0; k < q; ++k)
            raw(j, k) = unif(rng);
    return raw;
}

}  // namespace

TEST_CASE("log_sum_exp matches closed forms") {
    REQUIRE(log_sum_exp(std::vector<double>{0.0, 0.0}) ==
            Catch::Approx(std::log(2.0)).margin(1e-15));
    REQUIRE(log_sum_exp(std::vector<double>{-1000.0, -1000.0}) ==
            Catch::Approx(-1000.0 + std::log(2.0)).margin(1e-12));
    REQUIRE(log_sum_exp(std::vector<double>{std::log(0.2), std::log(0.4)}) ==
            Catch::Approx(std::log(0.6)).margin(1e-14));
}

TEST_CASE("log_sum_exp edge inputs") {
    REQUIRE(log_sum_exp(std::vector<double>{}) == neg_inf);
    REQUIRE(log_sum_exp(std::vector<double>{neg_inf, neg_inf}) == neg_inf);
    REQUIRE(log_sum_exp(std::vector<double>{neg_inf, 1.5}) == Catch::Approx(1.5).margin(1e-15));
    REQUIRE_THROWS_AS(log_sum_exp(std::vector<double>{0.0, std::nan("")}), NonFiniteError);
    REQUIRE_THROWS_AS(
        log_sum_exp(std::vector<double>{0.0, std::numeric_limits<double>::infinity()}),
        NonFiniteError);
}

TEST_CASE("log_sum_exp shift identity") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> v(8);
        for (double& x : v) x = unif(rng);
        const double c = unif(rng);
        std::vector<double> shifted = v;
        for (double& x : shifted) x += c;
        REQUIRE(log_sum_exp(shifted) == Catch::Approx(log_sum_exp(v) + c).margin(1e-12));
    }
}

TEST_CASE("MixingWeights validation and normalization") {
    Eigen::VectorXd w(3);
    w << 0.2, 0.3, 0.5;
    MixingWeights mw(w);
    REQUIRE(mw.size() == 3);
    REQUIRE(mw[2] == Catch::Approx(0.5).margin(1e-15));

    Eigen::VectorXd nearly(2);
    nearly << 0.5 + 2e-9, 0.5;
    REQUIRE(std::abs(MixingWeights(nearly).values().sum() - 1.0) <= 1e-15);

    Eigen::VectorXd neg(2);
    neg << -0.1, 1.1;
    REQUIRE_THROWS_AS(MixingWeights(neg), std::invalid_argument);

    Eigen::VectorXd half(2);
    half << 0.25, 0.25;
    REQUIRE_THROWS_AS(MixingWeights(half), std::invalid_argument);

    Eigen::VectorXd bad(2);
    bad << std::nan(""), 1.0;
    REQUIRE_THROWS_AS(MixingWeights(bad), NonFiniteError);

    REQUIRE(MixingWeights::uniform(4).values().isApproxToConstant(0.25));

    Eigen::VectorXd sparse(4);
    sparse << 0.0, 1.0, 0.0, 0.0;
    REQUIRE(MixingWeights(sparse).support_size() == 1);
}

TEST_CASE("Atom and Grid validation") {
    REQUIRE_THROWS_AS(Atom(std::vector<double>{}), std::invalid_argument);
    REQUIRE_THROWS_AS(Atom({1.0, std::nan("")}), NonFiniteError);
    REQUIRE(Atom({1.0, 2.0}).dim() == 2);

    REQUIRE_THROWS_AS(Grid(std::vector<Atom>{}), std::invalid_argument);
    REQUIRE_THROWS_AS(Grid({Atom{1.0}, Atom{1.0, 2.0}}), IncompatibleError);
    Grid g({Atom{0.0, 1.0}, Atom{2.0, 3.0}});
    REQUIRE(g.size() == 2);
    REQUIRE(g.dim() == 2);
    REQUIRE(g.atom(1)[0] == 2.0);
}

TEST_CASE("LogLikelihoodMatrix row shifting") {
    Eigen::MatrixXd raw(2, 3);
    raw << -1.0, -4.0, neg_inf,
           -7.0, -2.5, -2.5;
    auto L = LogLikelihoodMatrix::from_raw(raw);
    REQUIRE(L.rows() == 2);
    REQUIRE(L.cols() == 3);
    REQUIRE(L.row_shifts()(0) == -1.0);
    REQUIRE(L.row_shifts()(1) == -2.5);
    REQUIRE(L.entries()(0, 0) == 0.0);
    REQUIRE(L.entries()(0, 1) == -3.0);
    REQUIRE(L.entries()(0, 2) == neg_inf);
    REQUIRE(L.entries()(1, 0) == -4.5);
    REQUIRE(L.entries()(1, 1) == 0.0);
    REQUIRE(L.entries()(1, 2) == 0.0);
    REQUIRE((L.entries().array() <= 0.0).all());
}

TEST_CASE("LogLikelihoodMatrix rejects bad rows") {
    Eigen::MatrixXd all_minus_inf(2, 2);
    all_minus_inf << 0.0, -1.0, neg_inf, neg_inf;
    REQUIRE_THROWS_AS(LogLikelihoodMatrix::from_raw(all_minus_inf), DegenerateRowError);

    Eigen::MatrixXd with_nan(1, 2);
    with_nan << 0.0, std::nan("");
    REQUIRE_THROWS_AS(LogLikelihoodMatrix::from_raw(with_nan), NonFiniteError);

    Eigen::MatrixXd with_inf(1, 2);
    with_inf << 0.0, std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(LogLikelihoodMatrix::from_raw(with_inf), NonFiniteError);

    REQUIRE_THROWS_AS(LogLikelihoodMatrix::from_raw(Eigen::MatrixXd(0, 0)),
                      std::invalid_argument);
}

TEST_CASE("neg_log_likelihood single-row example") {
    Eigen::MatrixXd raw(1, 2);
    raw << std::log(0.2), std::log(0.4);
    auto L = LogLikelihoodMatrix::from_raw(raw);
    Eigen::VectorXd w(2);
    w << 0.5, 0.5;
    REQUIRE(neg_log_likelihood(L, MixingWeights(w)) ==
            Catch::Approx(-std::log(0.3)).margin(1e-12));
    REQUIRE(neg_log_likelihood(L, MixingWeights(w)) == Catch::Approx(1.2039728).margin(1e-6));
}

TEST_CASE("neg_log_likelihood matches raw-scale reference") {
    std::mt19937_64 rng(72);
    for (int rep = 0; rep < 30; ++rep) {
        const Eigen::Index p = 1 + rep % 6, q = 1 + (rep * 7) % 5;
        Eigen::MatrixXd raw = random_raw(rng, p, q);
        Eigen::VectorXd w = Eigen::VectorXd::Random(q).array().abs() + 0.05;
        w /= w.sum();
        auto L = LogLikelihoodMatrix::from_raw(raw);
        REQUIRE(neg_log_likelihood(L, MixingWeights(w)) ==
                Catch::Approx(raw_nll(raw, w)).margin(1e-12));
    }
}

TEST_CASE("neg_log_likelihood avoids underflow on supported entries") {
    Eigen::MatrixXd raw(1, 2);
    raw << 0.0, -800.0;
    auto L = LogLikelihoodMatrix::from_raw(raw);
    Eigen::VectorXd w(2);
    w << 0.0, 1.0;
    REQUIRE(neg_log_likelihood(L, MixingWeights(w)) == Catch::Approx(800.0).margin(1e-9));
}

TEST_CASE("neg_log_likelihood error cases") {
    Eigen::MatrixXd raw(1, 2);
    raw << 0.0, neg_inf;
    auto L = LogLikelihoodMatrix::from_raw(raw);
    Eigen::VectorXd w3(3);
    w3 << 0.3, 0.3, 0.4;
    REQUIRE_THROWS_AS(neg_log_likelihood(L, MixingWeights(w3)), IncompatibleError);

    Eigen::VectorXd w(2);
    w << 0.0, 1.0;
    REQUIRE_THROWS_AS(neg_log_likelihood(L, MixingWeights(w)), DegenerateRowError);
    REQUIRE_THROWS_AS(mixture_gradient(L, MixingWeights(w)), DegenerateRowError);
}

TEST_CASE("mixture_gradient matches finite differences") {
    std::mt19937_64 rng(73);
    const double h = 1e-5;
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index p = 2 + rep % 5, q = 2 + (rep * 3) % 4;
        Eigen::MatrixXd raw = random_raw(rng, p, q);
        if (rep % 4 == 0 && q >= 2) raw(0, 0) = neg_inf;
        Eigen::VectorXd w = Eigen::VectorXd::Random(q).array().abs() + 0.1;
        w /= w.sum();
        auto L = LogLikelihoodMatrix::from_raw(raw);
        Eigen::VectorXd g = mixture_gradient(L, MixingWeights(w));
        for (Eigen::Index k = 0; k < q; ++k) {
            Eigen::VectorXd wp = w, wm = w;
            wp(k) += h;
            wm(k) -= h;
            const double fd = (raw_nll(raw, wp) - raw_nll(raw, wm)) / (2.0 * h);
            REQUIRE(g(k) == Catch::Approx(fd).margin(1e-6));
        }
    }
}

TEST_CASE("kkt_gap closed-form cases") {
    Eigen::MatrixXd raw(2, 2);
    raw << 0.0, neg_inf,
           neg_inf, 0.0;
    auto L = LogLikelihoodMatrix::from_raw(raw);

    Eigen::VectorXd even(2), skew(2);
    even << 0.5, 0.5;
    skew << 0.9, 0.1;

    Eigen::VectorXd g = mixture_gradient(L, MixingWeights(even));
    REQUIRE(g(0) == Catch::Approx(-1.0).margin(1e-14));
    REQUIRE(g(1) == Catch::Approx(-1.0).margin(1e-14));
    REQUIRE(kkt_gap(L, MixingWeights(even)) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(kkt_gap(L, MixingWeights(skew)) == Catch::Approx(4.0).margin(1e-12));
}

TEST_CASE("kkt_gap is nonnegative and zero for one atom") {
    std::mt19937_64 rng(74);
    for (int rep = 0; rep < 30; ++rep) {
        const Eigen::Index p = 1 + rep % 7, q = 1 + (rep * 5) % 6;
        Eigen::MatrixXd raw = random_raw(rng, p, q);
        Eigen::VectorXd w = Eigen::VectorXd::Random(q).array().abs() + 0.02;
        w /= w.sum();
        auto L = LogLikelihoodMatrix::from_raw(raw);
        REQUIRE(kkt_gap(L, MixingWeights(w)) >= -1e-12);
    }

    Eigen::MatrixXd one_col(3, 1);
    one_col << -1.0, -2.0, -3.0;
    auto L1 = LogLikelihoodMatrix::from_raw(one_col);
    REQUIRE(kkt_gap(L1, MixingWeights::uniform(1)) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("gradient averages to minus one under the weights") {
    std::mt19937_64 rng(75);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index p = 2 + rep % 5, q = 2 + rep % 5;
        Eigen::MatrixXd raw = random_raw(rng, p, q);
        Eigen::VectorXd w = Eigen::VectorXd::Random(q).array().abs() + 0.05;
        w /= w.sum();
        auto L = LogLikelihoodMatrix::from_raw(raw);
        Eigen::VectorXd g = mixture_gradient(L, MixingWeights(w));
        REQUIRE(w.dot(g) == Catch::Approx(-1.0).margin(1e-10));
    }
}
