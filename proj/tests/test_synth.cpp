#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "scenario_util.hpp"
#include "selgen/combiner.hpp"
#include "selgen/evaluation.hpp"
#include "selgen/synth.hpp"

using namespace selgen;

TEST_CASE("gen_domain determinism and degenerate covariance") {
    DomainSpec spec;
    spec.name = "dom";
    spec.n = 50;
    spec.d = 3;
    spec.seed = 42;
    const EmbeddingStore a = gen_domain(spec);
    const EmbeddingStore b = gen_domain(spec);
    CHECK(a.matrix.data() == b.matrix.data());
    CHECK(a.meta[7].id == "dom-7");

    spec.seed = 43;
    const EmbeddingStore c = gen_domain(spec);
    CHECK(a.matrix.data() != c.matrix.data());

    DomainSpec tiny;
    tiny.name = "pin";
    tiny.n = 20;
    tiny.d = 2;
    tiny.mean = Vec{3.0, -1.0};
    tiny.cov = CovSpec::diag(Vec{1e-12, 1e-12});
    const EmbeddingStore pinned = gen_domain(tiny);
    for (std::size_t i = 0; i < pinned.size(); ++i) {
        CHECK(std::abs(pinned.matrix(i, 0) - 3.0) < 1e-4);
        CHECK(std::abs(pinned.matrix(i, 1) + 1.0) < 1e-4);
    }
}

TEST_CASE("gen_domain rejects invalid covariance") {
    DomainSpec spec;
    spec.name = "x";
    spec.n = 5;
    spec.d = 2;
    spec.cov = CovSpec::diag(Vec{1.0, -1.0});
    CHECK_THROWS_AS(gen_domain(spec), BadCov);

    spec.cov = CovSpec::diag(Vec{1.0});  // wrong length
    CHECK_THROWS_AS(gen_domain(spec), BadCov);

    SpdMatrix not_pd(2);
    not_pd(0, 0) = 1;
    not_pd(1, 1) = 1;
    not_pd(0, 1) = not_pd(1, 0) = 2;
    spec.cov = CovSpec::full(not_pd);
    CHECK_THROWS_AS(gen_domain(spec), BadCov);
}

TEST_CASE("gen_domain sample moments at 10k for N(0, I2)") {
    DomainSpec spec;
    spec.name = "m";
    spec.n = 10000;
    spec.d = 2;
    spec.seed = 7;
    const EmbeddingStore s = gen_domain(spec);
    const Vec mu = mean(s.matrix);
    for (double v : mu) CHECK(std::abs(v) < 0.05);
    const Matrix cov = oracles::covariance_two_pass(s.matrix, 0.0);
    CHECK(std::abs(cov(0, 0) - 1.0) < 0.05);
    CHECK(std::abs(cov(1, 1) - 1.0) < 0.05);
    CHECK(std::abs(cov(0, 1)) < 0.05);
}

TEST_CASE("gen_domain with full covariance reproduces the target moments") {
    SpdMatrix target(2);
    target(0, 0) = 2.0;
    target(1, 1) = 0.5;
    target(0, 1) = target(1, 0) = 0.6;
    DomainSpec spec;
    spec.name = "c";
    spec.n = 20000;
    spec.d = 2;
    spec.seed = 9;
    spec.cov = CovSpec::full(target);
    const EmbeddingStore s = gen_domain(spec);
    const Matrix cov = oracles::covariance_two_pass(s.matrix, 0.0);
    CHECK(std::abs(cov(0, 0) - 2.0) < 0.07);
    CHECK(std::abs(cov(1, 1) - 0.5) < 0.05);
    CHECK(std::abs(cov(0, 1) - 0.6) < 0.05);
}

TEST_CASE("scenario with shift 0 is an AUROC null") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const SelectiveScenario sc = gen_selective_scenario(seed, 2000, 2000, 0.0, 0.2);
        const RmdScorer scorer = scenario_util::fit_scorer(sc);
        const auto pool = scenario_util::score_test_pool(sc, scorer);
        const double a = auroc(pool.rmd_in, pool.rmd_ood);
        CHECK(std::abs(a - 0.5) < 0.03);
    }
}

TEST_CASE("scenario with noise 0 is exactly linear in the planted features") {
    const SelectiveScenario sc = gen_selective_scenario(3, 500, 500, 4.0, 0.0);
    const auto idx = sc.store.select("", "test");
    Matrix features(0, 2);
    Vec quality;
    for (std::size_t i : idx) {
        const auto& m = sc.store.meta[i];
        const double ood = m.dataset == "shifted" ? 1.0 : 0.0;
        const double ppx_effect = (1.0 - ood) * (*m.perplexity - sc.planted.ppx_min);
        features.push_row(Vec{ppx_effect, ood});
        quality.push_back(m.quality.at("quality"));
    }
    const LinearCombiner c = fit_linear_combiner({"ppx_effect", "is_ood"}, features, quality);
    CHECK(c.fit_rmse < 1e-9);
    CHECK(c.intercept == doctest::Approx(sc.planted.base).epsilon(1e-9));
    CHECK(c.weights[0] == doctest::Approx(-sc.planted.a_ppx).epsilon(1e-9));
    const double expected_ood_weight =
        -sc.planted.a_ppx * 0.5 * (sc.planted.ppx_max - sc.planted.ppx_min) -
        sc.planted.b_shift * sc.planted.shift_term;
    CHECK(c.weights[1] == doctest::Approx(expected_ood_weight).epsilon(1e-9));
}

TEST_CASE("scenario with shift 6 in 8 dimensions is near-perfectly detectable") {
    const SelectiveScenario sc = gen_selective_scenario(11, 2000, 2000, 6.0, 0.2);
    const RmdScorer scorer = scenario_util::fit_scorer(sc);
    const auto pool = scenario_util::score_test_pool(sc, scorer);
    CHECK(auroc(pool.rmd_in, pool.rmd_ood) > 0.99);
}

TEST_CASE("MD-difference AUROC tracks the analytic value for an axis shift") {
    // Two unit-covariance domains separated by delta along one axis:
    // AUROC = Phi(delta / sqrt(2)).
    const double delta = 2.0;
    const std::size_t d = 4, n = 5000;
    DomainSpec in_spec;
    in_spec.name = "in";
    in_spec.n = n;
    in_spec.d = d;
    in_spec.seed = 100;
    DomainSpec ood_spec = in_spec;
    ood_spec.name = "ood";
    ood_spec.seed = 101;
    ood_spec.mean = Vec{delta, 0, 0, 0};

    DomainSpec in_fit = in_spec, ood_fit = ood_spec;
    in_fit.seed = 102;
    ood_fit.seed = 103;

    RmdScorer scorer;
    scorer.input_fg = fit_gaussian(gen_domain(in_fit).matrix, 1e-6);
    scorer.input_bg = fit_gaussian(gen_domain(ood_fit).matrix, 1e-6);

    const auto s_in = batch_score(scorer, gen_domain(in_spec).matrix, Side::Input);
    const auto s_ood = batch_score(scorer, gen_domain(ood_spec).matrix, Side::Input);
    const double a = auroc(s_in, s_ood);
    CHECK(std::abs(a - oracles::phi(delta / std::sqrt(2.0))) < 0.02);
}
