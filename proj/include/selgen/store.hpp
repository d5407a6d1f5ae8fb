#ifndef SELGEN_STORE_HPP
#define SELGEN_STORE_HPP

#include <map>
#include <optional>
#include <string>

#include "selgen/classifier_ood.hpp"
#include "selgen/combiner.hpp"
#include "selgen/gaussian_ood.hpp"
#include "selgen/linalg.hpp"

namespace selgen {

/// Per-example sidecar record, aligned by row with the embedding matrix.
struct ExampleMeta {
    std::string id;
    std::string dataset;
    std::string split;
    Side side = Side::Input;
    std::optional<double> perplexity;           // mean per-token NLL, consumed as data
    std::map<std::string, double> quality;      // metric name -> value
    std::optional<std::int64_t> n_tokens;
};

struct EmbeddingStore {
    EmbeddingMatrix matrix;  // widened to f64 in memory; f32 on disk
    std::vector<ExampleMeta> meta;

    std::size_t size() const { return matrix.rows(); }
    std::size_t dim() const { return matrix.cols(); }

    /// Row indices whose dataset/split match the given filters (empty filter
    /// accepts everything).
    std::vector<std::size_t> select(const std::string& dataset, const std::string& split) const;
    EmbeddingMatrix rows_at(const std::vector<std::size_t>& indices) const;
};

/// Binary embedding format: magic "EMB1", little-endian u32 version = 1,
/// u32 dtype code (1 = f32), u64 N, u64 d, then N*d little-endian f32
/// row-major. Round trips are bit-exact on the f32 payload.
void write_embeddings(const std::string& path, const EmbeddingMatrix& matrix);
EmbeddingMatrix read_embeddings(const std::string& path);

/// JSONL metadata, one object per line:
///   {"id": ..., "dataset": ..., "split": ..., "side": "input"|"output",
///    "perplexity": ..., "quality": {...}, "n_tokens": ...}
/// Only "id" is required. Length-checked against expected_n, ids must be
/// unique, perplexity/quality values must be finite.
std::vector<ExampleMeta> read_metadata(const std::string& path, std::size_t expected_n);
void write_metadata(const std::string& path, const std::vector<ExampleMeta>& meta);

/// Loads path.emb + path.jsonl as a paired store.
EmbeddingStore load_store(const std::string& path_base);
void save_store(const std::string& path_base, const EmbeddingStore& store);

/// CSV fixture reader, header "id,dataset,split,v0..v{d-1}".
EmbeddingStore read_csv_store(const std::string& path);

/// Model persistence: JSON documents with a "kind" discriminator and
/// "schema_version". Gaussians serialize the mean and the lower-triangular
/// Cholesky factor (not the raw covariance); reloaded models reproduce
/// scores to 1e-12 (in practice bit-exactly, JSON doubles round trip).
void save_model(const std::string& path, const GaussianModel& m);
void save_model(const std::string& path, const RmdScorer& m);
void save_model(const std::string& path, const BinaryClassifier& m);
void save_model(const std::string& path, const LinearCombiner& m);

/// Reads the "kind" field ("gaussian", "rmd_scorer", "binary_classifier",
/// "linear_combiner") without loading the full model.
std::string model_kind(const std::string& path);

GaussianModel load_gaussian(const std::string& path);
RmdScorer load_rmd_scorer(const std::string& path);
BinaryClassifier load_classifier(const std::string& path);
LinearCombiner load_combiner(const std::string& path);

}  // namespace selgen

#endif
