#include "selgen/linalg.hpp"

#include <cmath>
#include <cstdlib>

namespace selgen {

void Matrix::push_row(std::span<const double> v) {
    if (rows_ == 0 && cols_ == 0) cols_ = v.size();
    if (v.size() != cols_)
        throw DimensionMismatch("push_row: expected row of length " +
                                std::to_string(cols_) + ", got " + std::to_string(v.size()));
    data_.insert(data_.end(), v.begin(), v.end());
    ++rows_;
}

SpdMatrix::SpdMatrix(const Matrix& m) {
    if (m.rows() != m.cols())
        throw DimensionMismatch("SpdMatrix: matrix is not square");
    d_ = m.rows();
    m_ = Matrix(d_, d_);
    double max_abs = 0.0, max_asym = 0.0;
    for (std::size_t i = 0; i < d_; ++i) {
        for (std::size_t j = 0; j < d_; ++j) {
            max_abs = std::max(max_abs, std::abs(m(i, j)));
            max_asym = std::max(max_asym, std::abs(m(i, j) - m(j, i)));
        }
    }
    if (max_asym > 1e-9 * std::max(max_abs, 1.0))
        throw InvalidArgument("SpdMatrix: matrix is not symmetric to within 1e-9 relative");
    for (std::size_t i = 0; i < d_; ++i) {
        m_(i, i) = m(i, i);
        for (std::size_t j = 0; j < i; ++j) {
            const double v = 0.5 * (m(i, j) + m(j, i));
            m_(i, j) = v;
            m_(j, i) = v;
        }
    }
}

double SpdMatrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < d_; ++i) t += m_(i, i);
    return t;
}

Vec mean(const EmbeddingMatrix& rows) {
    if (rows.rows() == 0) throw EmptyInput("mean: no rows");
    const std::size_t n = rows.rows(), d = rows.cols();
    Vec mu(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = rows.row(i);
        for (std::size_t j = 0; j < d; ++j) mu[j] += r[j];
    }
    for (std::size_t j = 0; j < d; ++j) mu[j] /= static_cast<double>(n);
    return mu;
}

namespace {

// Raw Cholesky on the lower triangle; returns false on a non-positive pivot.
bool cholesky_lower(const Matrix& a, Matrix& l) {
    const std::size_t d = a.rows();
    l = Matrix(d, d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) return false;
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return true;
}

}  // namespace

SpdMatrix covariance(const EmbeddingMatrix& rows, const Vec& mu, double ridge) {
    if (rows.rows() == 0) throw EmptyInput("covariance: no rows");
    if (mu.size() != rows.cols())
        throw DimensionMismatch("covariance: mu length does not match row length");
    if (ridge < 0.0) throw InvalidArgument("covariance: ridge must be nonnegative");
    const std::size_t n = rows.rows(), d = rows.cols();

    SpdMatrix cov(d);
    Vec dev(d);
    for (std::size_t r = 0; r < n; ++r) {
        auto row = rows.row(r);
        for (std::size_t j = 0; j < d; ++j) dev[j] = row[j] - mu[j];
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j <= i; ++j) cov(i, j) += dev[i] * dev[j];
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            cov(i, j) *= inv_n;
            cov(j, i) = cov(i, j);
        }

    if (ridge > 0.0) {
        const double bump = ridge * cov.trace() / static_cast<double>(d);
        for (std::size_t i = 0; i < d; ++i) cov(i, i) += bump;
    }

    Matrix l;
    if (!cholesky_lower(cov.matrix(), l))
        throw SingularCovariance("covariance: matrix is not positive definite (rank-deficient sample)");
    return cov;
}

CholeskyFactor cholesky(const SpdMatrix& m) {
    CholeskyFactor f;
    f.d = m.dim();
    if (!cholesky_lower(m.matrix(), f.lower))
        throw NotPositiveDefinite("cholesky: encountered a non-positive pivot");
    return f;
}

Vec forward_solve(const CholeskyFactor& chol, const Vec& b) {
    if (b.size() != chol.d)
        throw DimensionMismatch("forward_solve: vector length does not match factor dimension");
    const std::size_t d = chol.d;
    Vec v(d);
    for (std::size_t i = 0; i < d; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= chol.lower(i, k) * v[k];
        v[i] = s / chol.lower(i, i);
    }
    return v;
}

double mahalanobis_sq(const Vec& x, const Vec& mu, const CholeskyFactor& chol) {
    if (x.size() != mu.size() || x.size() != chol.d)
        throw DimensionMismatch("mahalanobis_sq: dimension mismatch");
    const std::size_t d = chol.d;
    Vec diff(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = x[j] - mu[j];
    Vec v = forward_solve(chol, diff);
    double s = 0.0;
    for (double e : v) s += e * e;
    return s;
}

}  // namespace selgen
