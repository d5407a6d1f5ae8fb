#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "selgen/evaluation.hpp"
#include "selgen/rng.hpp"

using namespace selgen;

namespace {

std::vector<double> random_scores(Rng& rng, std::size_t n, int distinct) {
    // Small value pools produce heavy ties.
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(rng.next_below(distinct));
    return v;
}

}  // namespace

TEST_CASE("auroc hand cases") {
    CHECK(auroc({0, 1}, {2, 3}) == 1.0);
    CHECK(auroc({5, 5}, {5, 5}) == 0.5);
    CHECK(auroc({2}, {1, 3}) == 0.5);
    CHECK_THROWS_AS(auroc({}, {1.0}), EmptyInput);
    CHECK_THROWS_AS(auroc({1.0}, {}), EmptyInput);
}

TEST_CASE("auroc equals brute-force pair counting exactly, heavy ties included") {
    Rng rng(401);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t nn = 1 + rng.next_below(200);
        const std::size_t np = 1 + rng.next_below(200);
        const int distinct = 1 + static_cast<int>(rng.next_below(12));
        const auto neg = random_scores(rng, nn, distinct);
        const auto pos = random_scores(rng, np, distinct);
        CHECK(auroc(neg, pos) == oracles::auroc_brute(neg, pos));
    }
}

TEST_CASE("auroc complement identity is exact") {
    Rng rng(402);
    for (int rep = 0; rep < 100; ++rep) {
        const auto neg = random_scores(rng, 1 + rng.next_below(150), 8);
        const auto pos = random_scores(rng, 1 + rng.next_below(150), 8);
        CHECK(auroc(neg, pos) + auroc(pos, neg) == 1.0);
    }
}

TEST_CASE("auroc invariant under strictly increasing transforms") {
    Rng rng(403);
    const auto neg = random_scores(rng, 80, 6);
    const auto pos = random_scores(rng, 90, 6);
    auto transform = [](std::vector<double> v) {
        for (auto& x : v) x = std::exp(0.5 * x) + 3.0;
        return v;
    };
    CHECK(auroc(neg, pos) == auroc(transform(neg), transform(pos)));
}

TEST_CASE("kendall_tau_b hand cases") {
    CHECK(kendall_tau_b({1, 2, 3}, {1, 2, 3}).tau == 1.0);
    CHECK(kendall_tau_b({1, 2, 3}, {3, 2, 1}).tau == -1.0);
    CHECK(kendall_tau_b({1, 2, 3, 4}, {1, 3, 2, 4}).tau == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(kendall_tau_b({1, 2}, {1, 2, 3}), LengthMismatch);
    CHECK_THROWS_AS(kendall_tau_b({1, 1, 1}, {1, 2, 3}), DegenerateInput);
    CHECK_THROWS_AS(kendall_tau_b({2}, {3}), DegenerateInput);
}

TEST_CASE("kendall_tau_b matches the brute-force oracle on tie-bearing data") {
    Rng rng(404);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + rng.next_below(99);
        const auto x = random_scores(rng, n, 6);
        const auto y = random_scores(rng, n, 6);
        bool x_const = true, y_const = true;
        for (double v : x) x_const = x_const && v == x[0];
        for (double v : y) y_const = y_const && v == y[0];
        if (x_const || y_const) continue;
        CHECK(kendall_tau_b(x, y).tau == oracles::kendall_tau_b_brute(x, y));
    }
}

TEST_CASE("kendall_tau_b self and reversal identities on tie-free data") {
    Rng rng(405);
    std::vector<double> x(64);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i) + rng.next_double();
    for (std::size_t i = x.size() - 1; i > 0; --i)
        std::swap(x[i], x[rng.next_below(i + 1)]);
    std::vector<double> neg_x(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg_x[i] = -x[i];
    CHECK(kendall_tau_b(x, x).tau == 1.0);
    CHECK(kendall_tau_b(x, neg_x).tau == -1.0);
}

TEST_CASE("kendall_tau_b p-values match the frozen normal-approximation references") {
    // Two-sided normal approximation with tie correction.
    const KendallResult a = kendall_tau_b({1, 2, 3, 4, 5}, {1, 3, 2, 5, 4});
    CHECK(a.tau == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(a.p_value == doctest::Approx(0.14164469029513679).epsilon(1e-9));

    const KendallResult b =
        kendall_tau_b({1.0, 2, 2, 3, 4, 4, 4, 5}, {2.0, 1, 3, 3, 5, 4, 6, 6});
    CHECK(b.tau == doctest::Approx(0.80064076902543579).epsilon(1e-12));
    CHECK(b.p_value == doctest::Approx(0.0091919958625937513).epsilon(1e-9));

    const KendallResult c = kendall_tau_b({1, 2, 3, 4}, {1, 3, 2, 4});
    CHECK(c.p_value == doctest::Approx(0.17423138824802498).epsilon(1e-9));

    const KendallResult d = kendall_tau_b({3.2, 1.1, 4.4, 4.4, 2.0, 5.5, 0.3, 2.2},
                                          {1.0, 0.5, 3.3, 2.2, 2.0, 4.4, 0.1, 2.0});
    CHECK(d.tau == doctest::Approx(0.81481481481481477).epsilon(1e-12));
    CHECK(d.p_value == doctest::Approx(0.005715764405312131).epsilon(1e-9));
}

TEST_CASE("qa_curve hand cases") {
    const std::vector<double> quality{1, 2, 3, 4};
    const std::vector<double> abstain{-1, -2, -3, -4};  // negated quality

    const QaCurve c = qa_curve(abstain, quality, {0.0, 0.5});
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[0].alpha == 0.0);
    CHECK(c.points[0].mean_quality == doctest::Approx(2.5));
    CHECK(c.points[0].n_kept == 4);
    CHECK(c.points[1].mean_quality == doctest::Approx(3.5));  // removes qualities 1, 2
    CHECK(c.points[1].n_kept == 2);

    CHECK_THROWS_AS(qa_curve({1, 2}, {1, 2, 3}), LengthMismatch);
    CHECK_THROWS_AS(qa_curve(abstain, quality, {0.5, 0.6}), InvalidArgument);  // must start at 0
    CHECK_THROWS_AS(qa_curve(abstain, quality, {0.0, 1.0}), InvalidArgument);
}

TEST_CASE("qa_curve matches the sort-and-slice oracle exactly") {
    Rng rng(406);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 5 + rng.next_below(200);
        const auto scores = random_scores(rng, n, 9);
        std::vector<double> quality(n);
        for (auto& q : quality) q = rng.next_double();
        const QaCurve c = qa_curve(scores, quality);
        for (const auto& p : c.points)
            CHECK(p.mean_quality == oracles::qa_mean_brute(scores, quality, p.alpha));
    }
}

TEST_CASE("qa_curve area on a flat curve") {
    // Constant quality: every point has the same mean, area = quality * 0.99.
    const std::vector<double> q(50, 2.0);
    std::vector<double> s(50);
    for (std::size_t i = 0; i < 50; ++i) s[i] = static_cast<double>(i);
    const QaCurve c = qa_curve(s, q);
    CHECK(c.area == doctest::Approx(2.0 * 0.99).epsilon(1e-12));
}

TEST_CASE("survival_counts hand cases and conservation") {
    std::vector<double> scores{10, 9, 8, 1, 2, 3};
    std::vector<std::string> labels{"a", "a", "a", "b", "b", "b"};
    const SurvivalTable t = survival_counts(scores, labels, {0.0, 0.5});
    REQUIRE(t.series.size() == 2);
    CHECK(t.series[0].label == "a");
    CHECK(t.series[0].counts[0] == 3);
    CHECK(t.series[1].counts[0] == 3);
    // Removing the top half removes exactly dataset a.
    CHECK(t.series[0].counts[1] == 0);
    CHECK(t.series[1].counts[1] == 3);

    Rng rng(407);
    const std::size_t n = 173;
    const auto s = random_scores(rng, n, 7);
    std::vector<std::string> ds(n);
    for (auto& label : ds) label = "d" + std::to_string(rng.next_below(4));
    const SurvivalTable table = survival_counts(s, ds);
    for (std::size_t a = 0; a < table.alphas.size(); ++a) {
        std::size_t total = 0;
        for (const auto& series : table.series) total += series.counts[a];
        const auto removed =
            static_cast<std::size_t>(std::floor(table.alphas[a] * static_cast<double>(n)));
        CHECK(total == n - removed);
    }
}

TEST_CASE("qa_curve and survival_counts agree on kept totals") {
    Rng rng(408);
    const std::size_t n = 97;
    const auto scores = random_scores(rng, n, 5);
    std::vector<double> quality(n);
    for (auto& q : quality) q = rng.next_double();
    std::vector<std::string> labels(n);
    for (auto& label : labels) label = "d" + std::to_string(rng.next_below(3));

    const QaCurve qa = qa_curve(scores, quality);
    const SurvivalTable sv = survival_counts(scores, labels);
    REQUIRE(qa.points.size() == sv.alphas.size());
    for (std::size_t a = 0; a < sv.alphas.size(); ++a) {
        std::size_t total = 0;
        for (const auto& series : sv.series) total += series.counts[a];
        CHECK(total == qa.points[a].n_kept);
    }
}
