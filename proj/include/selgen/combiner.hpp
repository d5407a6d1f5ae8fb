#ifndef SELGEN_COMBINER_HPP
#define SELGEN_COMBINER_HPP

#include <map>
#include <string>
#include <vector>

#include "selgen/linalg.hpp"

namespace selgen {

/// Reference population for percentile ranks. Usually the pooled evaluation
/// set (in-domain + shifted); a frozen in-domain-only reference is also
/// supported by the CLI for deployment-style scoring.
class PercentileReference {
public:
    explicit PercentileReference(std::vector<double> scores);

    std::size_t size() const { return sorted_.size(); }
    const std::vector<double>& sorted_scores() const { return sorted_; }

private:
    std::vector<double> sorted_;
};

/// PR(x) = R(x)/N * 100 where R(x) counts reference scores <= x and ties at
/// x contribute their average rank. Clamped below to 100/N so the result is
/// in (0, 100]. Nondecreasing in x and invariant under strictly increasing
/// transforms applied jointly to x and the reference population.
double percentile_rank(const PercentileReference& ref, double x);

/// PRsum = PR_perplexity + PR_OOD, in (0, 200]. Higher = abstain earlier.
double prsum(const PercentileReference& ref_ppx, const PercentileReference& ref_ood,
             double ppx, double ood);

/// Ordinary least squares of a quality metric on named feature columns.
/// apply() predicts quality; abstention scoring negates the prediction
/// (higher = abstain first), which callers do when assembling score tables.
struct LinearCombiner {
    double intercept = 0.0;
    std::vector<std::string> feature_names;
    Vec weights;  // aligned with feature_names
    double fit_rmse = 0.0;

    std::map<std::string, double> weight_map() const;
};

/// Solves the normal equations with a Cholesky factorization and a 1e-10
/// diagonal jitter. Throws UnderDetermined when N <= F and SingularDesign
/// when the normal matrix is not positive definite.
LinearCombiner fit_linear_combiner(const std::vector<std::string>& feature_names,
                                   const Matrix& features, const Vec& quality);

/// intercept + sum(w_i * feature_i). Throws MissingFeature when one of the
/// combiner's features is absent from the row; extra entries are ignored.
double apply_linear_combiner(const LinearCombiner& c,
                             const std::map<std::string, double>& feature_row);

/// Same, for a row aligned with the combiner's own feature order.
double apply_linear_combiner(const LinearCombiner& c, const Vec& feature_row);

}  // namespace selgen

#endif
