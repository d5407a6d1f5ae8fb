#ifndef SELGEN_CLASSIFIER_OOD_HPP
#define SELGEN_CLASSIFIER_OOD_HPP

#include <cstdint>

#include "selgen/linalg.hpp"

namespace selgen {

/// L2-regularized logistic regression separating background (label 1) from
/// in-domain (label 0) embeddings. The un-normalized logit is the OOD score.
struct BinaryClassifier {
    double beta0 = 0.0;
    Vec beta1;
    double l2 = 0.0;
    int n_iter = 0;
    bool converged = false;
};

inline constexpr double kDefaultLogisticL2 = 1e-4;
inline constexpr int kDefaultLogisticMaxIter = 100;
inline constexpr double kDefaultLogisticTol = 1e-8;

/// Trains by iteratively reweighted least squares with step halving, so the
/// penalized negative log-likelihood never increases across iterations.
/// `pos` is the background/OOD class, `neg` the in-domain class. When the
/// classes differ in size the larger one is downsampled to the smaller with
/// the seeded RNG, so the logit's zero threshold corresponds to a balanced
/// prior. The intercept is not penalized. A model that fails to reach
/// max |gradient| < tol within max_iter is returned with converged = false.
BinaryClassifier train_logistic(const EmbeddingMatrix& pos, const EmbeddingMatrix& neg,
                                double l2 = kDefaultLogisticL2,
                                int max_iter = kDefaultLogisticMaxIter,
                                double tol = kDefaultLogisticTol,
                                std::uint64_t balance_seed = 0);

/// beta0 + beta1 . x; higher = more OOD.
double logit_score(const BinaryClassifier& c, const Vec& x);

/// Penalized negative log-likelihood of the training data under the model;
/// exposed for the monotonicity property and diagnostics.
double logistic_nll(const BinaryClassifier& c, const EmbeddingMatrix& x,
                    const std::vector<int>& y);

/// Exact k-th nearest neighbor OOD score over unit-normalized vectors.
/// alpha_pct < 100 scores against a seeded subsample of the stored rows.
class KnnIndex {
public:
    /// Normalizes every row to unit Euclidean norm. Throws ZeroVector when a
    /// row has zero norm, KTooLarge when k exceeds the row count.
    KnnIndex(const EmbeddingMatrix& rows, std::size_t k, double alpha_pct = 100.0);

    std::size_t k() const { return k_; }
    double alpha_pct() const { return alpha_pct_; }
    std::size_t size() const { return rows_.rows(); }
    const EmbeddingMatrix& rows() const { return rows_; }

private:
    EmbeddingMatrix rows_;
    std::size_t k_;
    double alpha_pct_;
};

/// Distance from the unit-normalized query to its k-th nearest stored row
/// among the alpha% subsample drawn with `seed` (alpha = 100 uses the full
/// set and ignores the seed). Throws ZeroVector for a zero-norm query,
/// KTooLarge when k exceeds the subsample size.
double knn_score(const KnnIndex& idx, const Vec& x, std::uint64_t seed = 0);

}  // namespace selgen

#endif
