#ifndef SELGEN_TEXTSTATS_HPP
#define SELGEN_TEXTSTATS_HPP

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "selgen/errors.hpp"

namespace selgen {

using TokenSeq = std::vector<std::int32_t>;

/// Unique n-grams per order 1..n_max. Tokens are opaque integer ids; no
/// tokenizer or normalization is applied here.
class NgramProfile {
public:
    struct NgramHash {
        std::size_t operator()(const TokenSeq& g) const noexcept {
            std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
            for (std::int32_t t : g) {
                h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(t));
                h *= 1099511628211ULL;
            }
            return static_cast<std::size_t>(h);
        }
    };
    using NgramSet = std::unordered_set<TokenSeq, NgramHash>;

    explicit NgramProfile(std::size_t n_max) : sets_(n_max) {
        if (n_max < 1) throw InvalidArgument("NgramProfile: n_max must be >= 1");
    }

    std::size_t n_max() const { return sets_.size(); }
    const NgramSet& grams(std::size_t n) const { return sets_.at(n - 1); }
    NgramSet& grams(std::size_t n) { return sets_.at(n - 1); }
    std::size_t token_count() const { return token_count_; }
    void add_tokens(std::size_t n) { token_count_ += n; }

private:
    std::vector<NgramSet> sets_;
    std::size_t token_count_ = 0;
};

/// Sliding-window extraction per sequence; n-grams never cross sequence
/// boundaries. An empty corpus yields empty sets.
NgramProfile build_profile(const std::vector<TokenSeq>& corpus, std::size_t n_max);

struct OverlapReport {
    /// rate[n-1] = 100 * |test_n intersect train_n| / |test_n|; 0 when the
    /// test set has no n-grams of that order.
    std::vector<double> overlap_pct;
    /// Jaccard variant 100 * |intersection| / |union|, reported alongside
    /// since a revision of the analysis uses it.
    std::vector<double> jaccard_pct;
    /// Geometric mean of overlap_pct across all orders; 0 if any rate is 0.
    double overall_pct = 0.0;
    std::vector<std::size_t> test_unique;
    std::vector<std::size_t> train_unique;
};

/// Test-relative overlap rates between two profiles with the same n_max.
OverlapReport overlap_report(const NgramProfile& test, const NgramProfile& train);

}  // namespace selgen

#endif
