#include <doctest.h>

#include <algorithm>

#include "selgen/rng.hpp"
#include "selgen/textstats.hpp"

using namespace selgen;

TEST_CASE("build_profile sliding windows") {
    const NgramProfile p = build_profile({{1, 2, 3}}, 2);
    CHECK(p.grams(1).size() == 3);
    CHECK(p.grams(2).size() == 2);
    CHECK(p.grams(2).count({1, 2}) == 1);
    CHECK(p.grams(2).count({2, 3}) == 1);
    CHECK(p.grams(2).count({3, 1}) == 0);
    CHECK(p.token_count() == 3);

    const NgramProfile short_seq = build_profile({{7}}, 3);
    CHECK(short_seq.grams(1).size() == 1);
    CHECK(short_seq.grams(2).empty());
    CHECK(short_seq.grams(3).empty());

    const NgramProfile dup = build_profile({{1, 2, 3}, {1, 2, 3}}, 2);
    CHECK(dup.grams(1).size() == p.grams(1).size());
    CHECK(dup.grams(2).size() == p.grams(2).size());

    const NgramProfile empty = build_profile({}, 4);
    for (std::size_t n = 1; n <= 4; ++n) CHECK(empty.grams(n).empty());
}

TEST_CASE("overlap_report hand counts") {
    const NgramProfile test = build_profile({{1, 2, 3, 4}}, 1);
    const NgramProfile train = build_profile({{1, 2, 9, 9, 9}}, 1);
    const OverlapReport rep = overlap_report(test, train);
    CHECK(rep.overlap_pct[0] == doctest::Approx(50.0));  // {1,2} of {1,2,3,4}
    // Jaccard: |{1,2}| / |{1,2,3,4,9}| = 2/5.
    CHECK(rep.jaccard_pct[0] == doctest::Approx(40.0));
}

TEST_CASE("overlap_report subset and disjoint extremes") {
    const std::vector<TokenSeq> corpus{{1, 2, 3, 4, 5}, {2, 3, 4}};
    const NgramProfile test = build_profile(corpus, 3);
    std::vector<TokenSeq> bigger = corpus;
    bigger.push_back({6, 7, 8});
    const NgramProfile train = build_profile(bigger, 3);
    const OverlapReport rep = overlap_report(test, train);
    for (double r : rep.overlap_pct) CHECK(r == doctest::Approx(100.0));
    CHECK(rep.overall_pct == doctest::Approx(100.0));

    const NgramProfile disjoint = build_profile({{100, 101, 102}}, 3);
    const OverlapReport none = overlap_report(test, disjoint);
    for (double r : none.overlap_pct) CHECK(r == 0.0);
    CHECK(none.overall_pct == 0.0);  // geometric mean of zero rates is 0, not NaN

    const OverlapReport self = overlap_report(test, test);
    for (double r : self.overlap_pct) CHECK(r == doctest::Approx(100.0));
}

TEST_CASE("overlap rates are invariant under corpus order") {
    Rng rng(601);
    std::vector<TokenSeq> corpus;
    for (int s = 0; s < 30; ++s) {
        TokenSeq seq(3 + rng.next_below(10));
        for (auto& t : seq) t = static_cast<std::int32_t>(rng.next_below(20));
        corpus.push_back(std::move(seq));
    }
    std::vector<TokenSeq> shuffled = corpus;
    for (std::size_t i = shuffled.size() - 1; i > 0; --i)
        std::swap(shuffled[i], shuffled[rng.next_below(i + 1)]);

    const NgramProfile test = build_profile({{1, 2, 3, 4, 5, 6}}, 4);
    const OverlapReport a = overlap_report(test, build_profile(corpus, 4));
    const OverlapReport b = overlap_report(test, build_profile(shuffled, 4));
    for (std::size_t n = 0; n < 4; ++n) CHECK(a.overlap_pct[n] == b.overlap_pct[n]);
}

TEST_CASE("overlap is monotone in the train corpus") {
    Rng rng(602);
    std::vector<TokenSeq> train;
    TokenSeq probe(40);
    for (auto& t : probe) t = static_cast<std::int32_t>(rng.next_below(15));
    const NgramProfile test = build_profile({probe}, 4);

    std::vector<double> prev(4, 0.0);
    for (int round = 0; round < 10; ++round) {
        TokenSeq seq(5 + rng.next_below(12));
        for (auto& t : seq) t = static_cast<std::int32_t>(rng.next_below(15));
        train.push_back(std::move(seq));
        const OverlapReport rep = overlap_report(test, build_profile(train, 4));
        for (std::size_t n = 0; n < 4; ++n) {
            CHECK(rep.overlap_pct[n] >= prev[n]);
            prev[n] = rep.overlap_pct[n];
        }
    }
}
