#ifndef SELGEN_SYNTH_HPP
#define SELGEN_SYNTH_HPP

#include <cstdint>
#include <string>

#include "selgen/store.hpp"

namespace selgen {

struct CovSpec {
    enum class Kind { Identity, Diagonal, Spd } kind = Kind::Identity;
    Vec diagonal;   // Kind::Diagonal
    SpdMatrix spd;  // Kind::Spd

    static CovSpec identity() { return {}; }
    static CovSpec diag(Vec values);
    static CovSpec full(SpdMatrix m);
};

struct DomainSpec {
    std::string name;
    std::size_t n = 0;
    std::size_t d = 0;
    Vec mean;  // empty = zero vector
    CovSpec cov;
    std::uint64_t seed = 0;
    std::string split = "synth";
};

/// Samples n rows from the specified Gaussian via the inlined SplitMix64 +
/// Box-Muller generator and Cholesky coloring. Deterministic per
/// (spec, seed), independent of platform. Throws BadCov for invalid
/// covariance specs.
EmbeddingStore gen_domain(const DomainSpec& spec);

/// Coefficients of the planted quality model, recorded so oracle tests can
/// reconstruct quality exactly from the emitted metadata.
struct PlantedQuality {
    double base = 0.9;
    double a_ppx = 0.2;        // quality slope against (ppx - ppx_min), in-domain rows
    double b_shift = 0.3;      // penalty weight of the shift term, OOD rows
    double shift_term = 0.0;   // min(shift, 6)/6
    double ppx_min = 1.0;
    double ppx_max = 3.0;
    double noise = 0.0;
};

struct SelectiveScenario {
    EmbeddingStore store;  // datasets "indomain"/"shifted", splits "fit"/"test"
    PlantedQuality planted;
    double shift = 0.0;
    std::size_t d = 0;
};

/// Selective-generation test bed: in-domain points from N(0, I_d), shifted
/// points from N(shift * 1, I_d), each with a fit and a test split.
/// Perplexity is sampled from the same range for both datasets, and planted
/// quality follows it only on in-domain rows:
///   in-domain: q = base - a * (ppx - ppx_min) + noise * eps
///   shifted:   q = base - a * (ppx_max - ppx_min)/2 - b * shift_term + noise * eps
/// so perplexity predicts quality in-domain but carries no signal on shifted
/// rows, and a combined abstainer has an edge over either single score.
/// Quality is clipped to [0, 1]; with noise = 0 the construction keeps it
/// inside the clip range so it is exactly linear in (ppx-effect, ood flag).
SelectiveScenario gen_selective_scenario(std::uint64_t seed, std::size_t n_in, std::size_t n_ood,
                                         double shift, double noise, std::size_t d = 8,
                                         std::size_t n_fit = 0 /* 0 = match test sizes */);

}  // namespace selgen

#endif
