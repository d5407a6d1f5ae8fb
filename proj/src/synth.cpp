#include "selgen/synth.hpp"

#include <algorithm>
#include <cmath>

#include "selgen/rng.hpp"

namespace selgen {

CovSpec CovSpec::diag(Vec values) {
    CovSpec c;
    c.kind = Kind::Diagonal;
    c.diagonal = std::move(values);
    return c;
}

CovSpec CovSpec::full(SpdMatrix m) {
    CovSpec c;
    c.kind = Kind::Spd;
    c.spd = std::move(m);
    return c;
}

namespace {

// Coloring factor L with L L^T = cov; identity and diagonal shortcuts keep
// fixtures exact.
CholeskyFactor cov_factor(const CovSpec& cov, std::size_t d) {
    CholeskyFactor f;
    f.d = d;
    f.lower = Matrix(d, d, 0.0);
    switch (cov.kind) {
        case CovSpec::Kind::Identity:
            for (std::size_t i = 0; i < d; ++i) f.lower(i, i) = 1.0;
            return f;
        case CovSpec::Kind::Diagonal:
            if (cov.diagonal.size() != d) throw BadCov("gen_domain: diagonal length != d");
            for (std::size_t i = 0; i < d; ++i) {
                if (cov.diagonal[i] <= 0.0 || !std::isfinite(cov.diagonal[i]))
                    throw BadCov("gen_domain: diagonal entries must be positive");
                f.lower(i, i) = std::sqrt(cov.diagonal[i]);
            }
            return f;
        case CovSpec::Kind::Spd:
            if (cov.spd.dim() != d) throw BadCov("gen_domain: covariance dimension != d");
            try {
                return cholesky(cov.spd);
            } catch (const NotPositiveDefinite&) {
                throw BadCov("gen_domain: covariance is not positive definite");
            }
    }
    throw BadCov("gen_domain: unknown covariance kind");
}

}  // namespace

EmbeddingStore gen_domain(const DomainSpec& spec) {
    if (spec.n < 1) throw InvalidArgument("gen_domain: n must be >= 1");
    if (spec.d < 1) throw InvalidArgument("gen_domain: d must be >= 1");
    Vec mu = spec.mean;
    if (mu.empty()) mu.assign(spec.d, 0.0);
    if (mu.size() != spec.d) throw DimensionMismatch("gen_domain: mean length != d");
    const CholeskyFactor l = cov_factor(spec.cov, spec.d);

    Rng rng(spec.seed);
    EmbeddingStore store;
    store.matrix = EmbeddingMatrix(spec.n, spec.d);
    store.meta.resize(spec.n);
    Vec g(spec.d);
    for (std::size_t r = 0; r < spec.n; ++r) {
        for (std::size_t j = 0; j < spec.d; ++j) g[j] = rng.next_gaussian();
        auto row = store.matrix.row(r);
        for (std::size_t i = 0; i < spec.d; ++i) {
            double s = mu[i];
            for (std::size_t k = 0; k <= i; ++k) s += l.lower(i, k) * g[k];
            row[i] = s;
        }
        auto& m = store.meta[r];
        m.id = spec.name + "-" + std::to_string(r);
        m.dataset = spec.name;
        m.split = spec.split;
    }
    return store;
}

SelectiveScenario gen_selective_scenario(std::uint64_t seed, std::size_t n_in, std::size_t n_ood,
                                         double shift, double noise, std::size_t d,
                                         std::size_t n_fit) {
    if (shift < 0.0) throw InvalidArgument("gen_selective_scenario: shift must be >= 0");
    if (n_in < 2 || n_ood < 2)
        throw InvalidArgument("gen_selective_scenario: need at least 2 rows per dataset");
    if (n_fit == 0) n_fit = std::max(n_in, n_ood);

    SelectiveScenario sc;
    sc.shift = shift;
    sc.d = d;
    sc.planted.noise = noise;
    sc.planted.shift_term = std::min(shift, 6.0) / 6.0;

    const Vec shifted_mean(d, shift);
    struct Block {
        const char* dataset;
        const char* split;
        std::size_t n;
        bool is_ood;
    };
    const Block blocks[] = {
        {"indomain", "fit", n_fit, false},
        {"shifted", "fit", n_fit, true},
        {"indomain", "test", n_in, false},
        {"shifted", "test", n_ood, true},
    };

    // Separate streams per block so changing one count does not reshuffle
    // the others.
    EmbeddingStore& store = sc.store;
    store.matrix = EmbeddingMatrix(0, d);
    std::uint64_t stream = 0;
    const PlantedQuality& p = sc.planted;
    for (const auto& b : blocks) {
        DomainSpec ds;
        ds.name = b.dataset;
        ds.split = b.split;
        ds.n = b.n;
        ds.d = d;
        ds.mean = b.is_ood ? shifted_mean : Vec();
        ds.seed = seed * 1000003ULL + stream;
        EmbeddingStore block = gen_domain(ds);

        Rng rng(seed * 7919ULL + stream + 17ULL);
        for (std::size_t i = 0; i < block.size(); ++i) {
            auto& m = block.meta[i];
            m.id = std::string(b.dataset) + "-" + b.split + "-" + std::to_string(i);
            const double ppx = p.ppx_min + (p.ppx_max - p.ppx_min) * rng.next_double();
            m.perplexity = ppx;
            const double eps = rng.next_gaussian();
            double q;
            if (b.is_ood) {
                q = p.base - p.a_ppx * 0.5 * (p.ppx_max - p.ppx_min) - p.b_shift * p.shift_term;
            } else {
                q = p.base - p.a_ppx * (ppx - p.ppx_min);
            }
            q += noise * eps;
            m.quality["quality"] = std::clamp(q, 0.0, 1.0);
            store.matrix.push_row(block.matrix.row(i));
            store.meta.push_back(std::move(m));
        }
        ++stream;
    }
    return sc;
}

}  // namespace selgen
