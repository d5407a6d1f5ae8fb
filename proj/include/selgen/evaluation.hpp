#ifndef SELGEN_EVALUATION_HPP
#define SELGEN_EVALUATION_HPP

#include <string>
#include <vector>

#include "selgen/errors.hpp"

namespace selgen {

/// Probability that a random positive outranks a random negative, ties
/// counted 1/2. Computed by the Mann-Whitney rank sum in O(n log n).
/// Convention from the detection protocol: negatives are in-domain test
/// examples, positives are the shifted set.
double auroc(const std::vector<double>& neg, const std::vector<double>& pos);

struct KendallResult {
    double tau = 0.0;
    double p_value = 1.0;  // two-sided, normal approximation with tie correction
    long long concordant = 0;
    long long discordant = 0;
};

/// Kendall's tau-b with tie correction:
/// tau = (C - D) / sqrt((C + D + Tx)(C + D + Ty)).
/// Pair counting is O(n^2), fine at desk scale. Throws LengthMismatch on
/// unequal lengths and DegenerateInput when either sequence is constant.
KendallResult kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

struct QaPoint {
    double alpha = 0.0;
    double mean_quality = 0.0;
    std::size_t n_kept = 0;
};

struct QaCurve {
    std::vector<QaPoint> points;
    double area = 0.0;  // trapezoidal integral of mean_quality over alpha
};

/// The default abstention grid {0, 0.01, ..., 0.99}.
std::vector<double> default_alpha_grid();

/// Quality-vs-abstention curve: at each alpha the floor(alpha*N) highest
/// abstain scores are removed (ties broken by stable input order, earlier
/// rows removed first) and the mean quality of the remainder is recorded.
QaCurve qa_curve(const std::vector<double>& abstain_scores, const std::vector<double>& quality,
                 const std::vector<double>& alphas = default_alpha_grid());

struct SurvivalSeries {
    std::string label;
    std::vector<std::size_t> counts;  // aligned with SurvivalTable::alphas
};

struct SurvivalTable {
    std::vector<double> alphas;
    std::vector<SurvivalSeries> series;  // labels in order of first appearance
};

/// Per-dataset counts of surviving rows under the same removal rule as
/// qa_curve; at every alpha the counts sum to N - floor(alpha*N).
SurvivalTable survival_counts(const std::vector<double>& abstain_scores,
                              const std::vector<std::string>& dataset_labels,
                              const std::vector<double>& alphas = default_alpha_grid());

}  // namespace selgen

#endif
