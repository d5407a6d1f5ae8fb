#ifndef SELGEN_LINALG_HPP
#define SELGEN_LINALG_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "selgen/errors.hpp"

namespace selgen {

using Vec = std::vector<double>;

/// Dense row-major matrix. Rows are examples, columns are embedding
/// coordinates. All arithmetic is done in double even when the data
/// originated as 32-bit floats.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }
    std::span<double> row(std::size_t r) {
        return {data_.data() + r * cols_, cols_};
    }
    Vec row_vec(std::size_t r) const {
        return Vec(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
                   data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_));
    }
    void push_row(std::span<const double> v);

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using EmbeddingMatrix = Matrix;

/// Symmetric positive (semi-)definite d-by-d matrix. Symmetry is exact by
/// construction; definiteness is established when a Cholesky factor is taken.
class SpdMatrix {
public:
    SpdMatrix() = default;
    explicit SpdMatrix(std::size_t d) : d_(d), m_(d, d, 0.0) {}
    /// Wraps an existing matrix, symmetrizing exactly as (m + m^T)/2.
    /// Throws DimensionMismatch if not square, InvalidArgument if the
    /// asymmetry exceeds 1e-9 relative.
    explicit SpdMatrix(const Matrix& m);

    std::size_t dim() const { return d_; }
    double& operator()(std::size_t r, std::size_t c) { return m_(r, c); }
    double operator()(std::size_t r, std::size_t c) const { return m_(r, c); }
    const Matrix& matrix() const { return m_; }
    double trace() const;

private:
    std::size_t d_ = 0;
    Matrix m_;
};

/// Lower-triangular Cholesky factor L with L*L^T = source matrix.
struct CholeskyFactor {
    std::size_t d = 0;
    Matrix lower;  // entries above the diagonal are zero
};

/// Componentwise arithmetic mean of the rows. Throws EmptyInput when N = 0.
Vec mean(const EmbeddingMatrix& rows);

/// MLE covariance (denominator N) of the rows about mu, with
/// ridge * (trace/d) * I added to the diagonal. The result is exactly
/// symmetric. Throws SingularCovariance when the regularized matrix is not
/// positive definite (detected by an internal Cholesky attempt).
SpdMatrix covariance(const EmbeddingMatrix& rows, const Vec& mu, double ridge);

/// Cholesky factorization of a symmetric matrix. Throws NotPositiveDefinite
/// when a pivot is <= 0.
CholeskyFactor cholesky(const SpdMatrix& m);

/// Solves L * v = b by forward substitution.
Vec forward_solve(const CholeskyFactor& chol, const Vec& b);

/// Squared Mahalanobis distance (x - mu)^T Sigma^{-1} (x - mu), computed via
/// the Cholesky factor of Sigma (one triangular solve, no explicit inverse).
double mahalanobis_sq(const Vec& x, const Vec& mu, const CholeskyFactor& chol);

}  // namespace selgen

#endif
