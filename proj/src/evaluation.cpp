#include "selgen/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace selgen {

double auroc(const std::vector<double>& neg, const std::vector<double>& pos) {
    if (neg.empty() || pos.empty()) throw EmptyInput("auroc: both classes must be nonempty");
    for (double v : neg)
        if (std::isnan(v)) throw NonFiniteInput("auroc: NaN score");
    for (double v : pos)
        if (std::isnan(v)) throw NonFiniteInput("auroc: NaN score");

    struct Entry {
        double score;
        bool is_pos;
    };
    std::vector<Entry> all;
    all.reserve(neg.size() + pos.size());
    for (double v : neg) all.push_back({v, false});
    for (double v : pos) all.push_back({v, true});
    std::sort(all.begin(), all.end(),
              [](const Entry& a, const Entry& b) { return a.score < b.score; });

    // Average ranks over tie blocks; rank values are half-integers so the
    // accumulated sums stay exact in double.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (all[k].is_pos) rank_sum_pos += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(pos.size());
    const double nn = static_cast<double>(neg.size());
    const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

KendallResult kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw LengthMismatch("kendall_tau_b: sequences differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw DegenerateInput("kendall_tau_b: need at least 2 observations");

    long long concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            const double prod = dx * dy;
            if (prod > 0.0)
                ++concordant;
            else if (prod < 0.0)
                ++discordant;
        }
    }

    // Tie-group sizes per variable.
    auto tie_groups = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        std::vector<long long> groups;
        std::size_t i = 0;
        while (i < v.size()) {
            std::size_t j = i;
            while (j < v.size() && v[j] == v[i]) ++j;
            if (j - i > 1) groups.push_back(static_cast<long long>(j - i));
            i = j;
        }
        return groups;
    };
    const auto tx = tie_groups(x);
    const auto ty = tie_groups(y);

    const long long n0 = static_cast<long long>(n) * (static_cast<long long>(n) - 1) / 2;
    long long n1 = 0, n2 = 0;
    for (long long t : tx) n1 += t * (t - 1) / 2;
    for (long long t : ty) n2 += t * (t - 1) / 2;
    if (n0 == n1 || n0 == n2)
        throw DegenerateInput("kendall_tau_b: a sequence is constant");

    KendallResult res;
    res.concordant = concordant;
    res.discordant = discordant;
    const double num = static_cast<double>(concordant - discordant);
    res.tau = num / std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));

    // Normal approximation of the null variance of C - D with tie
    // corrections; the reported p-value is two-sided.
    const double dn = static_cast<double>(n);
    double vt = 0.0, vu = 0.0, t1 = 0.0, t2 = 0.0, u1 = 0.0, u2 = 0.0;
    for (long long t : tx) {
        const double td = static_cast<double>(t);
        vt += td * (td - 1.0) * (2.0 * td + 5.0);
        t1 += td * (td - 1.0);
        t2 += td * (td - 1.0) * (td - 2.0);
    }
    for (long long t : ty) {
        const double td = static_cast<double>(t);
        vu += td * (td - 1.0) * (2.0 * td + 5.0);
        u1 += td * (td - 1.0);
        u2 += td * (td - 1.0) * (td - 2.0);
    }
    double var = (dn * (dn - 1.0) * (2.0 * dn + 5.0) - vt - vu) / 18.0 +
                 t1 * u1 / (2.0 * dn * (dn - 1.0));
    if (n > 2) var += t2 * u2 / (9.0 * dn * (dn - 1.0) * (dn - 2.0));
    if (var > 0.0) {
        const double z = num / std::sqrt(var);
        res.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
    } else {
        res.p_value = 1.0;
    }
    return res;
}

std::vector<double> default_alpha_grid() {
    std::vector<double> g(100);
    for (int i = 0; i < 100; ++i) g[i] = static_cast<double>(i) / 100.0;
    return g;
}

namespace {

void check_alpha_grid(const std::vector<double>& alphas) {
    if (alphas.empty()) throw InvalidArgument("alpha grid is empty");
    if (alphas.front() != 0.0) throw InvalidArgument("alpha grid must start at 0");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (alphas[i] < 0.0 || alphas[i] >= 1.0)
            throw InvalidArgument("alpha grid values must lie in [0, 1)");
        if (i > 0 && alphas[i] <= alphas[i - 1])
            throw InvalidArgument("alpha grid must be strictly increasing");
    }
}

// Removal order: higher abstain score first, ties broken by input order
// (earlier rows removed first).
std::vector<std::size_t> removal_order(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    return order;
}

}  // namespace

QaCurve qa_curve(const std::vector<double>& abstain_scores, const std::vector<double>& quality,
                 const std::vector<double>& alphas) {
    if (abstain_scores.size() != quality.size())
        throw LengthMismatch("qa_curve: scores and quality differ in length");
    if (abstain_scores.empty()) throw EmptyInput("qa_curve: no rows");
    check_alpha_grid(alphas);

    const std::size_t n = abstain_scores.size();
    const auto order = removal_order(abstain_scores);

    QaCurve curve;
    curve.points.reserve(alphas.size());
    std::vector<char> removed(n, 0);
    std::size_t n_removed = 0;
    for (double alpha : alphas) {
        const auto target = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
        while (n_removed < target) removed[order[n_removed++]] = 1;
        const std::size_t n_kept = n - n_removed;
        if (n_kept == 0)
            throw EmptyAfterRemoval("qa_curve: alpha = " + std::to_string(alpha) +
                                    " removes every row");
        // Summation in ascending input order keeps the result independent of
        // the sort that chose the removal set.
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (!removed[i]) sum += quality[i];
        curve.points.push_back({alpha, sum / static_cast<double>(n_kept), n_kept});
    }

    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        curve.area += 0.5 * (a.mean_quality + b.mean_quality) * (b.alpha - a.alpha);
    }
    return curve;
}

SurvivalTable survival_counts(const std::vector<double>& abstain_scores,
                              const std::vector<std::string>& dataset_labels,
                              const std::vector<double>& alphas) {
    if (abstain_scores.size() != dataset_labels.size())
        throw LengthMismatch("survival_counts: scores and labels differ in length");
    if (abstain_scores.empty()) throw EmptyInput("survival_counts: no rows");
    check_alpha_grid(alphas);

    const std::size_t n = abstain_scores.size();
    std::map<std::string, std::size_t> label_index;
    std::vector<std::size_t> row_label(n);
    SurvivalTable table;
    table.alphas = alphas;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = label_index.try_emplace(dataset_labels[i], table.series.size());
        if (inserted) table.series.push_back({dataset_labels[i], {}});
        row_label[i] = it->second;
    }

    const auto order = removal_order(abstain_scores);
    std::vector<std::size_t> alive(table.series.size(), 0);
    for (std::size_t i = 0; i < n; ++i) ++alive[row_label[i]];

    std::size_t n_removed = 0;
    for (double alpha : alphas) {
        const auto target = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n)));
        while (n_removed < target) --alive[row_label[order[n_removed++]]];
        for (std::size_t s = 0; s < table.series.size(); ++s)
            table.series[s].counts.push_back(alive[s]);
    }
    return table;
}

}  // namespace selgen
