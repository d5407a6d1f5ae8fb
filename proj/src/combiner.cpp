#include "selgen/combiner.hpp"

#include <algorithm>
#include <cmath>

namespace selgen {

PercentileReference::PercentileReference(std::vector<double> scores) : sorted_(std::move(scores)) {
    if (sorted_.empty()) throw EmptyInput("PercentileReference: empty reference population");
    for (double s : sorted_)
        if (!std::isfinite(s)) throw NonFiniteInput("PercentileReference: non-finite score");
    std::sort(sorted_.begin(), sorted_.end());
}

double percentile_rank(const PercentileReference& ref, double x) {
    if (!std::isfinite(x)) throw NonFiniteInput("percentile_rank: non-finite input");
    const auto& s = ref.sorted_scores();
    const auto lo = std::lower_bound(s.begin(), s.end(), x);
    const auto hi = std::upper_bound(s.begin(), s.end(), x);
    const double n_less = static_cast<double>(lo - s.begin());
    const double n_eq = static_cast<double>(hi - lo);
    // Average rank of the tie block; plain count when x is absent.
    const double r = n_eq > 0.0 ? n_less + 0.5 * (n_eq + 1.0) : n_less;
    const double n = static_cast<double>(s.size());
    return std::max(100.0 * r / n, 100.0 / n);
}

double prsum(const PercentileReference& ref_ppx, const PercentileReference& ref_ood,
             double ppx, double ood) {
    return percentile_rank(ref_ppx, ppx) + percentile_rank(ref_ood, ood);
}

std::map<std::string, double> LinearCombiner::weight_map() const {
    std::map<std::string, double> m;
    for (std::size_t i = 0; i < feature_names.size(); ++i) m[feature_names[i]] = weights[i];
    return m;
}

LinearCombiner fit_linear_combiner(const std::vector<std::string>& feature_names,
                                   const Matrix& features, const Vec& quality) {
    const std::size_t n = features.rows(), f = features.cols();
    if (f == 0 || feature_names.size() != f)
        throw InvalidArgument("fit_linear_combiner: need one name per feature column");
    if (quality.size() != n)
        throw LengthMismatch("fit_linear_combiner: quality length does not match rows");
    if (n <= f)
        throw UnderDetermined("fit_linear_combiner: N = " + std::to_string(n) +
                              " rows for F = " + std::to_string(f) + " features");
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(quality[i])) throw NonFiniteInput("fit_linear_combiner: quality has NaN");
        for (double v : features.row(i))
            if (!std::isfinite(v)) throw NonFiniteInput("fit_linear_combiner: features have NaN");
    }

    // Normal equations on the intercept-augmented design.
    const std::size_t p = f + 1;
    SpdMatrix g(p);
    Vec rhs(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = features.row(i);
        g(0, 0) += 1.0;
        rhs[0] += quality[i];
        for (std::size_t a = 0; a < f; ++a) {
            g(a + 1, 0) += r[a];
            rhs[a + 1] += r[a] * quality[i];
            for (std::size_t b = 0; b <= a; ++b) g(a + 1, b + 1) += r[a] * r[b];
        }
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) g(b, a) = g(a, b);
    for (std::size_t a = 0; a < p; ++a) g(a, a) += 1e-10;

    CholeskyFactor gf;
    try {
        gf = cholesky(g);
    } catch (const NotPositiveDefinite&) {
        throw SingularDesign("fit_linear_combiner: design matrix is rank deficient");
    }
    Vec t = forward_solve(gf, rhs);
    Vec beta(p, 0.0);
    for (std::size_t i = p; i-- > 0;) {
        double s = t[i];
        for (std::size_t k = i + 1; k < p; ++k) s -= gf.lower(k, i) * beta[k];
        beta[i] = s / gf.lower(i, i);
    }

    LinearCombiner c;
    c.intercept = beta[0];
    c.feature_names = feature_names;
    c.weights.assign(beta.begin() + 1, beta.end());

    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = apply_linear_combiner(c, features.row_vec(i)) - quality[i];
        ss += resid * resid;
    }
    c.fit_rmse = std::sqrt(ss / static_cast<double>(n));
    return c;
}

double apply_linear_combiner(const LinearCombiner& c,
                             const std::map<std::string, double>& feature_row) {
    double v = c.intercept;
    for (std::size_t i = 0; i < c.feature_names.size(); ++i) {
        const auto it = feature_row.find(c.feature_names[i]);
        if (it == feature_row.end())
            throw MissingFeature("apply_linear_combiner: missing feature '" +
                                 c.feature_names[i] + "'");
        v += c.weights[i] * it->second;
    }
    return v;
}

double apply_linear_combiner(const LinearCombiner& c, const Vec& feature_row) {
    if (feature_row.size() != c.weights.size())
        throw MissingFeature("apply_linear_combiner: row has " +
                             std::to_string(feature_row.size()) + " features, combiner needs " +
                             std::to_string(c.weights.size()));
    double v = c.intercept;
    for (std::size_t i = 0; i < c.weights.size(); ++i) v += c.weights[i] * feature_row[i];
    return v;
}

}  // namespace selgen
