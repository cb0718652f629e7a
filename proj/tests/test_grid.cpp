#include <npmix/grid.hpp>

#include "catch2/catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace npmix;

TEST_CASE("default_counts") {
    REQUIRE(default_counts(2, 7) == std::vector<int>{30, 30});
    REQUIRE(default_counts(2, 100000) == std::vector<int>{30, 30});
    REQUIRE(default_counts(3, 50) == std::vector<int>{30, 30, 30});
    REQUIRE(default_counts(1, 100) == std::vector<int>{30});
    REQUIRE(default_counts(1, 2500) == std::vector<int>{50});
    REQUIRE(default_counts(1, 1000000) == std::vector<int>{300});
    REQUIRE_THROWS_AS(default_counts(4, 10), UnsupportedDefaultError);
    REQUIRE_THROWS_AS(default_counts(1, 0), std::invalid_argument);
}

TEST_CASE("mle_cloud preserves order and aggregates warnings") {
    std::vector<Observation> data = {CountPairObs(100, 27), CountPairObs(50, 10)};
    std::vector<std::string> warnings;
    std::vector<Atom> cloud = mle_cloud(KernelId::PoissonBinomial, data, &warnings);
    REQUIRE(cloud.size() == 2);
    REQUIRE(cloud[0][0] == Catch::Approx(100.0));
    REQUIRE(cloud[0][1] == Catch::Approx(0.27));
    REQUIRE(cloud[1][0] == Catch::Approx(50.0));
    REQUIRE(cloud[1][1] == Catch::Approx(0.2));
    REQUIRE(warnings.empty());

    std::vector<Observation> single = {KnownVarObs(1.5, 2.0)};
    REQUIRE(mle_cloud(KernelId::GaussianLocation, single).size() == 1);

    std::vector<Observation> with_boundary = {CountPairObs(10, 3), CountPairObs(10, 10)};
    warnings.clear();
    mle_cloud(KernelId::PoissonBinomial, with_boundary, &warnings);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].find("observation 1") != std::string::npos);
}

TEST_CASE("mle_cloud attaches the observation index to errors") {
    std::vector<Observation> data = {SeriesObs({1.0, 2.0, 1.5}, {1.0, 1.0, 1.0}),
                                     SeriesObs({1.0, 2.0}, {1.0, 1.0})};
    try {
        mle_cloud(KernelId::LocalLevelStateSpace, data);
        FAIL("expected InsufficientSeriesError");
    } catch (const InsufficientSeriesError& e) {
        REQUIRE(std::string(e.what()).find("observation 1") != std::string::npos);
    }
    REQUIRE_THROWS_AS(mle_cloud(KernelId::GaussianLocation, std::vector<Observation>{}),
                      std::invalid_argument);
}

TEST_CASE("regular_grid box mode") {
    std::vector<Atom> cloud = {Atom{0.0, 0.0}, Atom{1.0, 1.0}, Atom{0.3, 0.9}};
    GridSpec spec;
    spec.per_dim_counts = {3, 3};
    Grid g = regular_grid(cloud, spec);
    REQUIRE(g.size() == 9);
    REQUIRE(g.dim() == 2);
    // lexicographic order, last dimension fastest
    REQUIRE(g.atom(0)[0] == 0.0);
    REQUIRE(g.atom(0)[1] == 0.0);
    REQUIRE(g.atom(1)[0] == 0.0);
    REQUIRE(g.atom(1)[1] == 0.5);
    REQUIRE(g.atom(8)[0] == 1.0);
    REQUIRE(g.atom(8)[1] == 1.0);
}

TEST_CASE("regular_grid 1-D equispacing") {
    std::vector<Atom> cloud = {Atom{-2.0}, Atom{4.0}, Atom{1.0}};
    GridSpec spec;
    spec.per_dim_counts = {4};
    Grid g = regular_grid(cloud, spec);
    REQUIRE(g.size() == 4);
    REQUIRE(g.atom(0)[0] == Catch::Approx(-2.0));
    REQUIRE(g.atom(1)[0] == Catch::Approx(0.0));
    REQUIRE(g.atom(2)[0] == Catch::Approx(2.0));
    REQUIRE(g.atom(3)[0] == 4.0);
}

TEST_CASE("regular_grid convex hull filter") {
    std::vector<Atom> cloud = {Atom{0.0, 0.0}, Atom{1.0, 0.0}, Atom{0.0, 1.0}};
    GridSpec spec;
    spec.per_dim_counts = {3, 3};
    spec.bounds_mode = BoundsMode::ConvexHullFilter;
    Grid g = regular_grid(cloud, spec);
    REQUIRE(g.size() == 6);
    auto has = [&](double a, double b) {
        for (std::size_t k = 0; k < g.size(); ++k)
            if (g.atom(k)[0] == a && g.atom(k)[1] == b) return true;
        return false;
    };
    REQUIRE(has(0.5, 0.5));  // on the hull edge
    REQUIRE_FALSE(has(1.0, 1.0));
    REQUIRE_FALSE(has(1.0, 0.5));
    REQUIRE_FALSE(has(0.5, 1.0));

    GridSpec bad = spec;
    bad.per_dim_counts = {3};
    REQUIRE_THROWS_AS(regular_grid({Atom{0.0}, Atom{1.0}}, bad), std::invalid_argument);
}

TEST_CASE("regular_grid degenerate dimension collapses with warning") {
    std::vector<Atom> cloud = {Atom{0.0, 1.0}, Atom{0.0, 2.0}};
    GridSpec spec;
    spec.per_dim_counts = {5, 2};
    std::vector<std::string> warnings;
    Grid g = regular_grid(cloud, spec, &warnings);
    REQUIRE(g.size() == 2);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].find("dimension 0") != std::string::npos);
}

TEST_CASE("regular_grid explicit bounds") {
    std::vector<Atom> cloud = {Atom{0.4, 0.6}};
    GridSpec spec;
    spec.per_dim_counts = {2, 3};
    spec.explicit_bounds = {std::pair{0.0, 1.0}, std::pair{-1.0, 1.0}};
    Grid g = regular_grid(cloud, spec);
    REQUIRE(g.size() == 6);
    REQUIRE(g.atom(0)[0] == 0.0);
    REQUIRE(g.atom(5)[0] == 1.0);
    REQUIRE(g.atom(5)[1] == 1.0);

    GridSpec bad = spec;
    bad.explicit_bounds = {std::pair{1.0, 0.0}, std::nullopt};
    REQUIRE_THROWS_AS(regular_grid(cloud, bad), std::invalid_argument);
}

TEST_CASE("regular_grid validation") {
    GridSpec spec;
    spec.per_dim_counts = {3, 3};
    REQUIRE_THROWS_AS(regular_grid({}, spec), std::invalid_argument);
    REQUIRE_THROWS_AS(regular_grid({Atom{0.0}}, spec), IncompatibleError);
    spec.per_dim_counts = {0, 3};
    REQUIRE_THROWS_AS(regular_grid({Atom{0.0, 0.0}, Atom{1.0, 1.0}}, spec),
                      std::invalid_argument);
}

TEST_CASE("regular_grid is invariant under cloud permutation") {
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> unif(-2.0, 3.0);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<Atom> cloud;
        for (int i = 0; i < 12; ++i) cloud.push_back(Atom{unif(rng), unif(rng)});
        std::vector<Atom> shuffled = cloud;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        for (BoundsMode mode : {BoundsMode::BoundingBox, BoundsMode::ConvexHullFilter}) {
            GridSpec spec;
            spec.per_dim_counts = {7, 5};
            spec.bounds_mode = mode;
            Grid a = regular_grid(cloud, spec);
            Grid b = regular_grid(shuffled, spec);
            REQUIRE(a.size() == b.size());
            for (std::size_t k = 0; k < a.size(); ++k) {
                REQUIRE(a.atom(k)[0] == b.atom(k)[0]);
                REQUIRE(a.atom(k)[1] == b.atom(k)[1]);
            }
        }
    }
}

TEST_CASE("every cloud atom is within half a cell of a grid atom") {
    std::mt19937_64 rng(92);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<Atom> cloud;
        for (int i = 0; i < 20; ++i) cloud.push_back(Atom{unif(rng), unif(rng)});
        GridSpec spec;
        spec.per_dim_counts = {9, 11};
        Grid g = regular_grid(cloud, spec);

        double lo0 = cloud[0][0], hi0 = cloud[0][0], lo1 = cloud[0][1], hi1 = cloud[0][1];
        for (const Atom& a : cloud) {
            lo0 = std::min(lo0, a[0]); hi0 = std::max(hi0, a[0]);
            lo1 = std::min(lo1, a[1]); hi1 = std::max(hi1, a[1]);
        }
        const double half0 = (hi0 - lo0) / 8.0 / 2.0;
        const double half1 = (hi1 - lo1) / 10.0 / 2.0;
        for (const Atom& a : cloud) {
            bool covered = false;
            for (std::size_t k = 0; k < g.size() && !covered; ++k)
                covered = std::abs(g.atom(k)[0] - a[0]) <= half0 + 1e-12 &&
                          std::abs(g.atom(k)[1] - a[1]) <= half1 + 1e-12;
            REQUIRE(covered);
        }
    }
}

TEST_CASE("convex hull handles degenerate clouds") {
    // collinear cloud: hull is a segment, membership means on-segment
    std::vector<Atom> cloud = {Atom{0.0, 0.0}, Atom{1.0, 1.0}, Atom{2.0, 2.0}};
    GridSpec spec;
    spec.per_dim_counts = {3, 3};
    spec.bounds_mode = BoundsMode::ConvexHullFilter;
    Grid g = regular_grid(cloud, spec);
    REQUIRE(g.size() == 3);
    for (std::size_t k = 0; k < g.size(); ++k) REQUIRE(g.atom(k)[0] == g.atom(k)[1]);

    // coincident cloud: single point survives
    std::vector<Atom> point = {Atom{1.5, -0.5}, Atom{1.5, -0.5}};
    std::vector<std::string> warnings;
    Grid g2 = regular_grid(point, spec, &warnings);
    REQUIRE(g2.size() == 1);
    REQUIRE(g2.atom(0)[0] == 1.5);
    REQUIRE(g2.atom(0)[1] == -0.5);
    REQUIRE(warnings.size() == 2);
}
