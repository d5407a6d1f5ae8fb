#include "selgen/classifier_ood.hpp"

#include <algorithm>
#include <cmath>

#include "selgen/rng.hpp"

namespace selgen {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double log1pexp(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

double penalized_nll(const Matrix& x, const std::vector<int>& y, double beta0,
                     const Vec& beta1, double l2) {
    const std::size_t n = x.rows(), d = x.cols();
    double nll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = x.row(i);
        double z = beta0;
        for (std::size_t j = 0; j < d; ++j) z += beta1[j] * r[j];
        // -log p(y|z) = log(1+exp(z)) - y*z
        nll += log1pexp(z) - (y[i] ? z : 0.0);
    }
    double pen = 0.0;
    for (double b : beta1) pen += b * b;
    return nll + 0.5 * l2 * pen;
}

Matrix downsample(const EmbeddingMatrix& rows, std::size_t target, Rng& rng) {
    if (rows.rows() <= target) return rows;
    auto keep = rng.sample_indices(rows.rows(), target);
    std::sort(keep.begin(), keep.end());
    Matrix out(0, rows.cols());
    for (std::size_t i : keep) out.push_row(rows.row(i));
    return out;
}

}  // namespace

BinaryClassifier train_logistic(const EmbeddingMatrix& pos, const EmbeddingMatrix& neg,
                                double l2, int max_iter, double tol,
                                std::uint64_t balance_seed) {
    if (pos.rows() == 0 || neg.rows() == 0)
        throw EmptyInput("train_logistic: both classes must be nonempty");
    if (pos.cols() != neg.cols())
        throw DimensionMismatch("train_logistic: feature dimensions differ");
    if (l2 <= 0.0) throw InvalidArgument("train_logistic: l2 must be positive");

    Rng rng(balance_seed);
    const std::size_t n_per_class = std::min(pos.rows(), neg.rows());
    const Matrix pos_b = downsample(pos, n_per_class, rng);
    const Matrix neg_b = downsample(neg, n_per_class, rng);

    const std::size_t d = pos.cols();
    const std::size_t n = 2 * n_per_class;
    Matrix x(0, d);
    std::vector<int> y;
    y.reserve(n);
    for (std::size_t i = 0; i < n_per_class; ++i) {
        x.push_row(pos_b.row(i));
        y.push_back(1);
    }
    for (std::size_t i = 0; i < n_per_class; ++i) {
        x.push_row(neg_b.row(i));
        y.push_back(0);
    }

    const std::size_t p = d + 1;  // intercept first
    Vec beta(p, 0.0);
    double nll = penalized_nll(x, y, beta[0], Vec(beta.begin() + 1, beta.end()), l2);

    BinaryClassifier model;
    model.l2 = l2;

    Vec grad(p), prob(n), w(n);
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        // Gradient of the penalized NLL.
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto r = x.row(i);
            double z = beta[0];
            for (std::size_t j = 0; j < d; ++j) z += beta[j + 1] * r[j];
            prob[i] = sigmoid(z);
            const double resid = prob[i] - y[i];
            grad[0] += resid;
            for (std::size_t j = 0; j < d; ++j) grad[j + 1] += resid * r[j];
            w[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-10);
        }
        for (std::size_t j = 1; j < p; ++j) grad[j] += l2 * beta[j];

        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax < tol) {
            model.converged = true;
            break;
        }

        // Newton system H delta = -grad with H = X'WX + l2*diag(0,1,..,1).
        SpdMatrix h(p);
        for (std::size_t i = 0; i < n; ++i) {
            auto r = x.row(i);
            h(0, 0) += w[i];
            for (std::size_t a = 0; a < d; ++a) {
                h(a + 1, 0) += w[i] * r[a];
                for (std::size_t b = 0; b <= a; ++b) h(a + 1, b + 1) += w[i] * r[a] * r[b];
            }
        }
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < a; ++b) h(b, a) = h(a, b);
        for (std::size_t j = 1; j < p; ++j) h(j, j) += l2;

        CholeskyFactor hf;
        try {
            hf = cholesky(h);
        } catch (const NotPositiveDefinite&) {
            break;  // flat region; report unconverged with current weights
        }
        // Solve L L^T delta = -grad.
        Vec t = forward_solve(hf, grad);
        Vec delta(p, 0.0);
        for (std::size_t i = p; i-- > 0;) {
            double s = t[i];
            for (std::size_t k2 = i + 1; k2 < p; ++k2) s -= hf.lower(k2, i) * delta[k2];
            delta[i] = s / hf.lower(i, i);
        }
        for (double& v : delta) v = -v;

        // Step halving keeps the objective non-increasing.
        double step = 1.0;
        Vec cand(p);
        double cand_nll = nll;
        for (int half = 0; half < 30; ++half) {
            for (std::size_t j = 0; j < p; ++j) cand[j] = beta[j] + step * delta[j];
            cand_nll = penalized_nll(x, y, cand[0], Vec(cand.begin() + 1, cand.end()), l2);
            if (cand_nll <= nll) break;
            step *= 0.5;
        }
        if (cand_nll > nll) break;  // no improving step found
        beta = cand;
        nll = cand_nll;
    }

    model.beta0 = beta[0];
    model.beta1.assign(beta.begin() + 1, beta.end());
    model.n_iter = iter;
    return model;
}

double logit_score(const BinaryClassifier& c, const Vec& x) {
    if (x.size() != c.beta1.size())
        throw DimensionMismatch("logit_score: feature length does not match model");
    double z = c.beta0;
    for (std::size_t j = 0; j < x.size(); ++j) z += c.beta1[j] * x[j];
    return z;
}

double logistic_nll(const BinaryClassifier& c, const EmbeddingMatrix& x,
                    const std::vector<int>& y) {
    if (x.rows() != y.size()) throw LengthMismatch("logistic_nll: labels do not match rows");
    return penalized_nll(x, y, c.beta0, c.beta1, c.l2);
}

KnnIndex::KnnIndex(const EmbeddingMatrix& rows, std::size_t k, double alpha_pct)
    : rows_(rows), k_(k), alpha_pct_(alpha_pct) {
    if (rows_.rows() == 0) throw EmptyInput("KnnIndex: no rows");
    if (k_ < 1 || k_ > rows_.rows())
        throw KTooLarge("KnnIndex: k = " + std::to_string(k_) + " outside [1, " +
                        std::to_string(rows_.rows()) + "]");
    if (alpha_pct_ <= 0.0 || alpha_pct_ > 100.0)
        throw InvalidArgument("KnnIndex: alpha_pct must be in (0, 100]");
    for (std::size_t i = 0; i < rows_.rows(); ++i) {
        auto r = rows_.row(i);
        double norm_sq = 0.0;
        for (double v : r) norm_sq += v * v;
        if (norm_sq == 0.0)
            throw ZeroVector("KnnIndex: row " + std::to_string(i) + " has zero norm");
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : r) v *= inv;
    }
}

double knn_score(const KnnIndex& idx, const Vec& x, std::uint64_t seed) {
    if (x.size() != idx.rows().cols())
        throw DimensionMismatch("knn_score: query length does not match index");
    double norm_sq = 0.0;
    for (double v : x) norm_sq += v * v;
    if (norm_sq == 0.0) throw ZeroVector("knn_score: query has zero norm");
    const double inv = 1.0 / std::sqrt(norm_sq);
    Vec q(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) q[j] = x[j] * inv;

    const std::size_t n = idx.size();
    std::vector<std::size_t> pool;
    if (idx.alpha_pct() >= 100.0) {
        pool.resize(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    } else {
        auto m = static_cast<std::size_t>(idx.alpha_pct() / 100.0 * static_cast<double>(n));
        m = std::max<std::size_t>(m, 1);
        Rng rng(seed);
        pool = rng.sample_indices(n, m);
    }
    if (idx.k() > pool.size())
        throw KTooLarge("knn_score: k = " + std::to_string(idx.k()) +
                        " exceeds subsample size " + std::to_string(pool.size()));

    std::vector<double> dist_sq(pool.size());
    for (std::size_t p = 0; p < pool.size(); ++p) {
        auto r = idx.rows().row(pool[p]);
        double s = 0.0;
        for (std::size_t j = 0; j < q.size(); ++j) {
            const double diff = q[j] - r[j];
            s += diff * diff;
        }
        dist_sq[p] = s;
    }
    std::nth_element(dist_sq.begin(), dist_sq.begin() + static_cast<std::ptrdiff_t>(idx.k() - 1),
                     dist_sq.end());
    return std::sqrt(dist_sq[idx.k() - 1]);
}

}  // namespace selgen
