#include <npmix/glucose.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

using namespace npmix;

namespace {

GlucoseSubject tiny_subject(std::string id = "t") {
    return GlucoseSubject(std::move(id), SeriesObs({10.0, 12.0, 11.0}, {2.0, 3.0, 2.5}),
                          {20.0, 30.0}, {4.0, 5.0});
}

}  // namespace

TEST_CASE("glucose subject validates its halves") {
    REQUIRE_NOTHROW(tiny_subject());
    REQUIRE_THROWS_AS(GlucoseSubject("a", SeriesObs({1.0, 2.0}, {1.0, 1.0}), {1.0}, {1.0, 2.0}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(GlucoseSubject("a", SeriesObs({1.0, 2.0}, {1.0, 1.0}), {1.0}, {0.0}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(GlucoseSubject("a", SeriesObs({1.0, 2.0}, {1.0, 1.0}), {1.0}, {1.0},
                                     {1.0, 2.0}),
                      std::invalid_argument);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(GlucoseSubject("a", SeriesObs({1.0, 2.0}, {1.0, 1.0}), {nan}, {1.0}),
                      NonFiniteError);
}

TEST_CASE("glucose names round trip") {
    REQUIRE(glucose_model_from_name("lm") == GlucoseModel::Lm);
    REQUIRE(glucose_model_from_name(glucose_model_name(GlucoseModel::Ss)) == GlucoseModel::Ss);
    REQUIRE_THROWS_AS(glucose_model_from_name("arma"), std::invalid_argument);
    for (GlucoseMode m : {GlucoseMode::Combined, GlucoseMode::Individual, GlucoseMode::Npmle})
        REQUIRE(glucose_mode_from_name(glucose_mode_name(m)) == m);
    REQUIRE_THROWS_AS(glucose_mode_from_name("pooled"), std::invalid_argument);
}

TEST_CASE("sample_glucose is deterministic with the advertised shapes") {
    GlucoseSimConfig cfg;
    cfg.subjects = 6;
    cfg.train_points = 12;
    cfg.test_points = 5;
    cfg.cgm_sd = 10.0;
    cfg.seed = 4;
    std::vector<std::size_t> comp_a, comp_b;
    const std::vector<GlucoseSubject> a = sample_glucose(cfg, &comp_a);
    const std::vector<GlucoseSubject> b = sample_glucose(cfg, &comp_b);
    REQUIRE(a.size() == 6);
    REQUIRE(comp_a == comp_b);
    for (std::size_t j = 0; j < a.size(); ++j) {
        REQUIRE(a[j].train.n() == 12);
        REQUIRE(a[j].n_test() == 5);
        REQUIRE(a[j].test_cgm.size() == 5);
        REQUIRE(a[j].train.values == b[j].train.values);
        REQUIRE(a[j].test_fs == b[j].test_fs);
        for (double c : a[j].train.covariates) {
            REQUIRE(c >= 3.0);
            REQUIRE(c <= 8.0);
        }
    }

    cfg.cgm_sd = 0.0;
    REQUIRE(sample_glucose(cfg)[0].test_cgm.empty());
    cfg.subjects = 0;
    REQUIRE_THROWS_AS(sample_glucose(cfg), std::invalid_argument);
    cfg.subjects = 2;
    cfg.probs = {0.4, 0.4};
    REQUIRE_THROWS_AS(sample_glucose(cfg), std::invalid_argument);
    cfg.probs = {0.5, 0.5};
    cfg.isig_lo = 0.0;
    REQUIRE_THROWS_AS(sample_glucose(cfg), std::invalid_argument);
}

TEST_CASE("single-atom prediction is one step ahead") {
    // with near-zero observation noise the filtered state tracks y/c, so each
    // test point is predicted by the previous ratio times the current ISIG
    const GlucoseSubject s("x", SeriesObs({10.0, 12.0}, {2.0, 3.0}), {20.0, 30.0}, {4.0, 5.0});
    const Atom atom{0.0, std::log(1e-6)};
    const std::vector<double> pred = ss_predict_test(s, atom);
    REQUIRE(pred.size() == 2);
    // last training ratio 12/3 = 4, first test ISIG 4
    REQUIRE(pred[0] == Catch::Approx(16.0).margin(1e-3));
    // the filter then absorbs the first test observation: 20/4 = 5, ISIG 5
    REQUIRE(pred[1] == Catch::Approx(25.0).margin(1e-3));
}

TEST_CASE("point-mass posterior rows reduce to single-atom predictions") {
    const GlucoseSubject s = tiny_subject();
    GridSpec spec;
    spec.per_dim_counts = {2, 2};
    spec.explicit_bounds = {std::pair<double, double>{-1.0, 0.0},
                            std::pair<double, double>{0.5, 1.5}};
    const Grid grid = regular_grid({Atom{0.0, 1.0}}, spec);
    REQUIRE(grid.size() == 4);

    PosteriorRow row;
    row.weights = Eigen::VectorXd::Zero(4);
    row.weights(2) = 1.0;
    const std::vector<double> mix = ss_predict_test_mixture(s, grid, row);
    const std::vector<double> single = ss_predict_test(s, grid.atom(2));
    REQUIRE(mix.size() == single.size());
    for (std::size_t i = 0; i < mix.size(); ++i)
        REQUIRE(mix[i] == Catch::Approx(single[i]).margin(1e-12));

    PosteriorRow bad;
    bad.weights = Eigen::VectorXd::Zero(3);
    REQUIRE_THROWS_AS(ss_predict_test_mixture(s, grid, bad), IncompatibleError);
}

TEST_CASE("combined equals individual for a single subject") {
    GlucoseSimConfig cfg;
    cfg.subjects = 1;
    cfg.train_points = 15;
    cfg.test_points = 6;
    cfg.seed = 9;
    const std::vector<GlucoseSubject> one = sample_glucose(cfg);

    for (GlucoseModel model : {GlucoseModel::Lm, GlucoseModel::Ss}) {
        const GlucoseResult comb = glucose_run(one, model, GlucoseMode::Combined);
        const GlucoseResult indiv = glucose_run(one, model, GlucoseMode::Individual);
        REQUIRE(comb.subjects.size() == 1);
        REQUIRE(indiv.subjects.size() == 1);
        for (std::size_t t = 0; t < comb.subjects[0].predicted.size(); ++t)
            REQUIRE(comb.subjects[0].predicted[t] ==
                    Catch::Approx(indiv.subjects[0].predicted[t]).margin(1e-12));
        REQUIRE(comb.mse == Catch::Approx(indiv.mse).margin(1e-12));
    }
}

TEST_CASE("a one-atom grid reproduces combined-style predictions at that atom") {
    GlucoseSimConfig cfg;
    cfg.subjects = 5;
    cfg.train_points = 15;
    cfg.test_points = 6;
    cfg.seed = 14;
    const std::vector<GlucoseSubject> subjects = sample_glucose(cfg);

    GlucoseConfig gc;
    gc.grid_counts = {1, 1};
    const GlucoseResult npmle = glucose_run(subjects, GlucoseModel::Ss, GlucoseMode::Npmle, gc);
    REQUIRE(npmle.grid.has_value());
    REQUIRE(npmle.grid->size() == 1);
    const Atom atom = npmle.grid->atom(0);
    for (std::size_t j = 0; j < subjects.size(); ++j) {
        const std::vector<double> ref = ss_predict_test(subjects[j], atom);
        for (std::size_t t = 0; t < ref.size(); ++t)
            REQUIRE(npmle.subjects[j].predicted[t] == Catch::Approx(ref[t]).margin(1e-12));
    }

    gc.grid_counts = {1, 1, 1};
    const GlucoseResult lmk = glucose_run(subjects, GlucoseModel::Lm, GlucoseMode::Npmle, gc);
    REQUIRE(lmk.grid->size() == 1);
    const Atom lm_atom = lmk.grid->atom(0);
    for (std::size_t j = 0; j < subjects.size(); ++j) {
        const std::vector<double> ref = lm_predict_test(subjects[j], lm_atom[0], lm_atom[1]);
        for (std::size_t t = 0; t < ref.size(); ++t)
            REQUIRE(lmk.subjects[j].predicted[t] == Catch::Approx(ref[t]).margin(1e-12));
    }
}

TEST_CASE("ineligible subjects are excluded with warnings") {
    std::vector<GlucoseSubject> subjects;
    // two training points: too short for either model
    subjects.emplace_back("short", SeriesObs({1.0, 2.0}, {1.0, 2.0}),
                          std::vector<double>{1.0}, std::vector<double>{1.0});
    // three training points: enough for ss, not for lm
    subjects.emplace_back("three", SeriesObs({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}),
                          std::vector<double>{1.0}, std::vector<double>{1.0});
    // constant ISIG: fine for ss, singular for lm
    subjects.emplace_back("flat", SeriesObs({1.0, 2.0, 3.0, 4.0}, {2.0, 2.0, 2.0, 2.0}),
                          std::vector<double>{1.0}, std::vector<double>{1.0});
    // no test points
    subjects.emplace_back("edge", SeriesObs({1.0, 2.0, 3.0, 4.0}, {1.0, 2.0, 3.0, 4.0}),
                          std::vector<double>{}, std::vector<double>{});
    // fully usable
    subjects.emplace_back("ok", SeriesObs({1.0, 2.5, 3.0, 4.5}, {1.0, 2.0, 3.0, 4.0}),
                          std::vector<double>{5.0}, std::vector<double>{5.0});

    const GlucoseResult ss = glucose_run(subjects, GlucoseModel::Ss, GlucoseMode::Individual);
    REQUIRE(ss.subjects.size() == 3);  // three, flat, ok
    REQUIRE(ss.n_excluded == 2);

    const GlucoseResult lm = glucose_run(subjects, GlucoseModel::Lm, GlucoseMode::Individual);
    REQUIRE(lm.subjects.size() == 1);
    REQUIRE(lm.subjects[0].id == "ok");
    REQUIRE(lm.n_excluded == 4);
    bool mentions_flat = false;
    for (const std::string& w : lm.warnings)
        if (w.find("flat") != std::string::npos &&
            w.find("constant") != std::string::npos)
            mentions_flat = true;
    REQUIRE(mentions_flat);

    const std::vector<GlucoseSubject> none(subjects.begin(), subjects.begin() + 1);
    REQUIRE_THROWS_AS(glucose_run(none, GlucoseModel::Ss, GlucoseMode::Combined),
                      EmptyCohortError);
}

TEST_CASE("state-space study separates heterogeneous subjects") {
    GlucoseSimConfig cfg;
    cfg.subjects = 30;
    cfg.train_points = 25;
    cfg.test_points = 12;
    cfg.cgm_sd = 25.0;
    cfg.seed = 3;
    const std::vector<GlucoseSubject> subjects = sample_glucose(cfg);

    GlucoseConfig gc;
    gc.grid_counts = {12, 12};
    const GlucoseStudy study = glucose_study(subjects, GlucoseModel::Ss, gc);
    REQUIRE(study.modes.size() == 3);
    const GlucoseResult& comb = study.modes[0];
    const GlucoseResult& indiv = study.modes[1];
    const GlucoseResult& npmle = study.modes[2];
    REQUIRE(comb.mode == GlucoseMode::Combined);
    REQUIRE(npmle.mode == GlucoseMode::Npmle);
    REQUIRE(comb.mse > 0.0);
    REQUIRE(indiv.mse > 0.0);
    REQUIRE(npmle.fit->converged);
    REQUIRE(npmle.mse <= comb.mse);
    REQUIRE(npmle.relative_mse.has_value());
    REQUIRE(*npmle.relative_mse == Catch::Approx(npmle.mse / *npmle.cgm_mse));

    const std::string csv = glucose_report_csv(study);
    REQUIRE(csv.rfind("model,mode,n_subjects,n_excluded,mse,cgm_mse,relative_mse\n", 0) == 0);
    std::size_t lines = 0;
    for (char ch : csv)
        if (ch == '\n') ++lines;
    REQUIRE(lines == 4);
    const std::string text = glucose_report_text(study);
    REQUIRE(text.find("npmle") != std::string::npos);
    REQUIRE(text.find("relative_mse") != std::string::npos);
}

TEST_CASE("linear-model study runs without a baseline column") {
    GlucoseSimConfig cfg;
    cfg.subjects = 8;
    cfg.train_points = 15;
    cfg.test_points = 6;
    cfg.seed = 21;
    const std::vector<GlucoseSubject> subjects = sample_glucose(cfg);

    GlucoseConfig gc;
    gc.grid_counts = {8, 8, 8};
    const GlucoseStudy study = glucose_study(subjects, GlucoseModel::Lm, gc);
    for (const GlucoseResult& r : study.modes) {
        REQUIRE(r.subjects.size() == 8);
        REQUIRE(std::isfinite(r.mse));
        REQUIRE(r.mse > 0.0);
        REQUIRE_FALSE(r.relative_mse.has_value());
    }
    REQUIRE(study.modes[0].combined_atom.has_value());
    const std::string csv = glucose_report_csv(study);
    REQUIRE(csv.find(",,") != std::string::npos);  // empty cgm columns
}
