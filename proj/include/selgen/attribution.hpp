#ifndef SELGEN_ATTRIBUTION_HPP
#define SELGEN_ATTRIBUTION_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selgen/gaussian_ood.hpp"

namespace selgen {

struct Segment {
    std::string segment_id;
    std::size_t token_count = 0;
    Vec embedding;
};

/// A document split into segments upstream (this module never tokenizes).
/// Exact mode additionally carries the true document embedding and one
/// re-encoded embedding per leave-one-out variant.
struct SegmentedDocument {
    std::string doc_id;
    std::vector<Segment> segments;
    std::optional<Vec> full_embedding;
    std::map<std::string, Vec> variant_embeddings;  // segment_id -> doc without it
};

enum class AttributionMode { Compositional, Exact };

const char* attribution_mode_name(AttributionMode m);
AttributionMode parse_attribution_mode(const std::string& s);

/// Token-count-weighted mean of segment embeddings.
Vec compose_mean(const std::vector<Segment>& segments);

struct SegmentAttribution {
    std::string segment_id;
    double attribution = 0.0;
};

/// Leave-one-out attribution: OOD(full) - OOD(without segment), the negative
/// of the score change after removal. Positive attribution means the segment
/// pushes the document toward OOD. Compositional mode rebuilds the ablated
/// embedding as a weighted mean of the remaining segments; exact mode uses
/// externally re-encoded variant embeddings (the upstream encoder is not part
/// of this artifact, so true re-encoding has to be supplied as data).
std::vector<SegmentAttribution> sentence_attribution(const SegmentedDocument& doc,
                                                     const RmdScorer& scorer, Side side,
                                                     AttributionMode mode);

}  // namespace selgen

#endif
