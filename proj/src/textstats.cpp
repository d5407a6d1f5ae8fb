#include "selgen/textstats.hpp"

#include <cmath>

namespace selgen {

NgramProfile build_profile(const std::vector<TokenSeq>& corpus, std::size_t n_max) {
    NgramProfile profile(n_max);
    for (const auto& seq : corpus) {
        profile.add_tokens(seq.size());
        for (std::size_t n = 1; n <= n_max; ++n) {
            if (seq.size() < n) continue;
            for (std::size_t i = 0; i + n <= seq.size(); ++i)
                profile.grams(n).insert(TokenSeq(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                                 seq.begin() + static_cast<std::ptrdiff_t>(i + n)));
        }
    }
    return profile;
}

OverlapReport overlap_report(const NgramProfile& test, const NgramProfile& train) {
    if (test.n_max() != train.n_max())
        throw DimensionMismatch("overlap_report: profiles have different n_max");
    OverlapReport rep;
    const std::size_t n_max = test.n_max();
    rep.overlap_pct.resize(n_max);
    rep.jaccard_pct.resize(n_max);
    rep.test_unique.resize(n_max);
    rep.train_unique.resize(n_max);

    for (std::size_t n = 1; n <= n_max; ++n) {
        const auto& tset = test.grams(n);
        const auto& rset = train.grams(n);
        rep.test_unique[n - 1] = tset.size();
        rep.train_unique[n - 1] = rset.size();
        std::size_t inter = 0;
        for (const auto& g : tset)
            if (rset.count(g)) ++inter;
        rep.overlap_pct[n - 1] =
            tset.empty() ? 0.0 : 100.0 * static_cast<double>(inter) / static_cast<double>(tset.size());
        const std::size_t uni = tset.size() + rset.size() - inter;
        rep.jaccard_pct[n - 1] =
            uni == 0 ? 0.0 : 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
    }

    double log_sum = 0.0;
    bool any_zero = false;
    for (double r : rep.overlap_pct) {
        if (r <= 0.0) {
            any_zero = true;
            break;
        }
        log_sum += std::log(r);
    }
    rep.overall_pct = any_zero ? 0.0 : std::exp(log_sum / static_cast<double>(n_max));
    return rep;
}

}  // namespace selgen
