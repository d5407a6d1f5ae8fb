#include "selgen/gaussian_ood.hpp"

#include <string>
#include <thread>

namespace selgen {

const char* side_name(Side s) { return s == Side::Input ? "input" : "output"; }

Side parse_side(const std::string& s) {
    if (s == "input") return Side::Input;
    if (s == "output") return Side::Output;
    throw InvalidArgument("unknown side '" + s + "' (expected input or output)");
}

GaussianModel fit_gaussian(const EmbeddingMatrix& rows, double ridge) {
    if (rows.rows() < 2)
        throw EmptyInput("fit_gaussian: need at least 2 rows, got " +
                         std::to_string(rows.rows()));
    GaussianModel m;
    m.mu = mean(rows);
    m.chol = cholesky(covariance(rows, m.mu, ridge));
    m.d = rows.cols();
    m.n_fit = rows.rows();
    m.ridge = ridge;
    return m;
}

std::pair<GaussianModel, GaussianModel> fit_gaussians_pooled(
    const EmbeddingMatrix& fg_rows, const EmbeddingMatrix& bg_rows, double ridge) {
    if (fg_rows.rows() < 2 || bg_rows.rows() < 2)
        throw EmptyInput("fit_gaussians_pooled: need at least 2 rows per class");
    if (fg_rows.cols() != bg_rows.cols())
        throw DimensionMismatch("fit_gaussians_pooled: row lengths differ");

    Matrix pooled(0, fg_rows.cols());
    for (std::size_t i = 0; i < fg_rows.rows(); ++i) pooled.push_row(fg_rows.row(i));
    for (std::size_t i = 0; i < bg_rows.rows(); ++i) pooled.push_row(bg_rows.row(i));

    const Vec pooled_mu = mean(pooled);
    const CholeskyFactor shared = cholesky(covariance(pooled, pooled_mu, ridge));

    GaussianModel fg{mean(fg_rows), shared, fg_rows.cols(), fg_rows.rows(), ridge};
    GaussianModel bg{mean(bg_rows), shared, bg_rows.cols(), bg_rows.rows(), ridge};
    return {std::move(fg), std::move(bg)};
}

double md_score(const GaussianModel& model, const Vec& x) {
    return mahalanobis_sq(x, model.mu, model.chol);
}

double rmd_score(const RmdScorer& scorer, Side side, const Vec& x) {
    const auto& fg = scorer.fg(side);
    const auto& bg = scorer.bg(side);
    if (!fg || !bg)
        throw SideNotConfigured(std::string("rmd_score: ") + side_name(side) +
                                " side needs both foreground and background models");
    return md_score(*fg, x) - md_score(*bg, x);
}

double ood_score(const RmdScorer& scorer, Side side, const Vec& x) {
    const auto& fg = scorer.fg(side);
    if (!fg)
        throw SideNotConfigured(std::string("ood_score: ") + side_name(side) +
                                " side has no foreground model");
    if (scorer.bg(side)) return rmd_score(scorer, side, x);
    return md_score(*fg, x);
}

namespace {

template <typename PerRow>
std::vector<double> run_partitioned(std::size_t n, unsigned n_threads, PerRow per_row) {
    std::vector<double> out(n);
    if (n == 0) return out;
    if (n_threads <= 1 || n < 2 * n_threads) {
        for (std::size_t i = 0; i < n; ++i) out[i] = per_row(i);
        return out;
    }
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    const std::size_t chunk = (n + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) out[i] = per_row(i);
        });
    }
    for (auto& w : workers) w.join();
    return out;
}

}  // namespace

std::vector<double> batch_score(const RmdScorer& scorer, const EmbeddingMatrix& rows,
                                Side side, unsigned n_threads) {
    // Validate configuration up front so an empty matrix still reports a
    // misconfigured side.
    if (!scorer.fg(side) || !scorer.bg(side))
        throw SideNotConfigured(std::string("batch_score: ") + side_name(side) +
                                " side needs both foreground and background models");
    return run_partitioned(rows.rows(), n_threads, [&](std::size_t i) {
        return rmd_score(scorer, side, rows.row_vec(i));
    });
}

std::vector<double> batch_md(const GaussianModel& model, const EmbeddingMatrix& rows,
                             unsigned n_threads) {
    return run_partitioned(rows.rows(), n_threads, [&](std::size_t i) {
        return md_score(model, rows.row_vec(i));
    });
}

}  // namespace selgen
