#include "selgen/attribution.hpp"

namespace selgen {

const char* attribution_mode_name(AttributionMode m) {
    return m == AttributionMode::Compositional ? "compositional" : "exact";
}

AttributionMode parse_attribution_mode(const std::string& s) {
    if (s == "compositional") return AttributionMode::Compositional;
    if (s == "exact") return AttributionMode::Exact;
    throw InvalidArgument("unknown attribution mode '" + s + "'");
}

Vec compose_mean(const std::vector<Segment>& segments) {
    if (segments.empty()) throw EmptyDocument("compose_mean: no segments");
    const std::size_t d = segments.front().embedding.size();
    Vec acc(d, 0.0);
    double total = 0.0;
    for (const auto& seg : segments) {
        if (seg.embedding.size() != d)
            throw DimensionMismatch("compose_mean: segment embeddings differ in length");
        if (seg.token_count == 0)
            throw InvalidArgument("compose_mean: token_count must be >= 1");
        const auto w = static_cast<double>(seg.token_count);
        for (std::size_t j = 0; j < d; ++j) acc[j] += w * seg.embedding[j];
        total += w;
    }
    for (std::size_t j = 0; j < d; ++j) acc[j] /= total;
    return acc;
}

std::vector<SegmentAttribution> sentence_attribution(const SegmentedDocument& doc,
                                                     const RmdScorer& scorer, Side side,
                                                     AttributionMode mode) {
    if (doc.segments.empty()) throw EmptyDocument("sentence_attribution: document has no segments");

    Vec full;
    if (mode == AttributionMode::Compositional) {
        if (doc.segments.size() < 2)
            throw SingleSegment("sentence_attribution: compositional mode needs >= 2 segments");
        full = compose_mean(doc.segments);
    } else {
        if (!doc.full_embedding)
            throw MissingVariant("sentence_attribution: exact mode needs full_embedding");
        full = *doc.full_embedding;
    }
    const double full_score = ood_score(scorer, side, full);

    std::vector<SegmentAttribution> out;
    out.reserve(doc.segments.size());
    for (std::size_t s = 0; s < doc.segments.size(); ++s) {
        Vec without;
        if (mode == AttributionMode::Compositional) {
            std::vector<Segment> rest;
            rest.reserve(doc.segments.size() - 1);
            for (std::size_t t = 0; t < doc.segments.size(); ++t)
                if (t != s) rest.push_back(doc.segments[t]);
            without = compose_mean(rest);
        } else {
            const auto it = doc.variant_embeddings.find(doc.segments[s].segment_id);
            if (it == doc.variant_embeddings.end())
                throw MissingVariant("sentence_attribution: no variant embedding for segment '" +
                                     doc.segments[s].segment_id + "'");
            without = it->second;
        }
        out.push_back({doc.segments[s].segment_id, full_score - ood_score(scorer, side, without)});
    }
    return out;
}

}  // namespace selgen
