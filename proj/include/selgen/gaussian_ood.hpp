#ifndef SELGEN_GAUSSIAN_OOD_HPP
#define SELGEN_GAUSSIAN_OOD_HPP

#include <cstddef>
#include <optional>
#include <utility>

#include "selgen/linalg.hpp"

namespace selgen {

/// Default covariance regularization: 1e-6, applied as ridge * trace/d on
/// the diagonal. Embedding dimensions can exceed the rank of a modest fit
/// set, so fits are regularized unless explicitly disabled with ridge = 0.
inline constexpr double kDefaultRidge = 1e-6;

/// A Gaussian fitted to one embedding population. Stores the mean and the
/// Cholesky factor of the regularized covariance; the raw covariance is not
/// kept (scoring only needs triangular solves).
struct GaussianModel {
    Vec mu;
    CholeskyFactor chol;
    std::size_t d = 0;
    std::size_t n_fit = 0;
    double ridge = 0.0;
};

enum class Side { Input, Output };

const char* side_name(Side s);
Side parse_side(const std::string& s);

/// Foreground/background Gaussian pairs for the input and output sides.
/// Any side (or the background of a side) may be absent.
struct RmdScorer {
    std::optional<GaussianModel> input_fg;
    std::optional<GaussianModel> input_bg;
    std::optional<GaussianModel> output_fg;
    std::optional<GaussianModel> output_bg;

    const std::optional<GaussianModel>& fg(Side s) const {
        return s == Side::Input ? input_fg : output_fg;
    }
    const std::optional<GaussianModel>& bg(Side s) const {
        return s == Side::Input ? input_bg : output_bg;
    }
};

/// Fits mean + regularized covariance + Cholesky on the rows. Requires
/// N >= 2. Propagates SingularCovariance when the (possibly unregularized)
/// covariance is rank deficient.
GaussianModel fit_gaussian(const EmbeddingMatrix& rows, double ridge = kDefaultRidge);

/// Fits a foreground/background pair sharing one covariance estimated from
/// the union of both row sets (means stay per class). With a shared
/// covariance the resulting RMD score is an affine function of the
/// coordinates, which is what makes the score equivalent to a generative
/// linear classifier; per-class covariance is the default everywhere else.
std::pair<GaussianModel, GaussianModel> fit_gaussians_pooled(
    const EmbeddingMatrix& fg_rows, const EmbeddingMatrix& bg_rows,
    double ridge = kDefaultRidge);

/// Mahalanobis OOD score; higher = farther from the fitted population.
double md_score(const GaussianModel& model, const Vec& x);

/// Relative Mahalanobis: md(fg) - md(bg). Positive suggests OOD, negative
/// suggests in-domain. Throws SideNotConfigured unless both the foreground
/// and background model of the side are present.
double rmd_score(const RmdScorer& scorer, Side side, const Vec& x);

/// MD when only a foreground is configured, RMD when a background is also
/// present. Used by attribution and the CLI where either configuration is
/// acceptable.
double ood_score(const RmdScorer& scorer, Side side, const Vec& x);

/// Elementwise rmd_score over the rows; order-preserving and deterministic
/// regardless of n_threads.
std::vector<double> batch_score(const RmdScorer& scorer, const EmbeddingMatrix& rows,
                                Side side, unsigned n_threads = 1);

/// Same partitioning scheme for plain MD scores.
std::vector<double> batch_md(const GaussianModel& model, const EmbeddingMatrix& rows,
                             unsigned n_threads = 1);

}  // namespace selgen

#endif
