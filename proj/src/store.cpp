#include "selgen/store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace selgen {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint32_t kDtypeF32 = 1;
constexpr int kModelSchemaVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(b, 8);
}

bool get_u32(std::istream& is, std::uint32_t& v) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
    v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return true;
}

bool get_u64(std::istream& is, std::uint64_t& v) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return true;
}

}  // namespace

std::vector<std::size_t> EmbeddingStore::select(const std::string& dataset,
                                                const std::string& split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < meta.size(); ++i) {
        if (!dataset.empty() && meta[i].dataset != dataset) continue;
        if (!split.empty() && meta[i].split != split) continue;
        out.push_back(i);
    }
    return out;
}

EmbeddingMatrix EmbeddingStore::rows_at(const std::vector<std::size_t>& indices) const {
    EmbeddingMatrix out(0, matrix.cols());
    for (std::size_t i : indices) out.push_row(matrix.row(i));
    return out;
}

void write_embeddings(const std::string& path, const EmbeddingMatrix& matrix) {
    for (double v : matrix.data())
        if (!std::isfinite(v)) throw NonFiniteInput("write_embeddings: non-finite value");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("write_embeddings: cannot open " + path);
    os.write(kMagic, 4);
    put_u32(os, kFormatVersion);
    put_u32(os, kDtypeF32);
    put_u64(os, matrix.rows());
    put_u64(os, matrix.cols());
    for (double v : matrix.data()) {
        const auto f = static_cast<float>(v);
        const auto bits = std::bit_cast<std::uint32_t>(f);
        put_u32(os, bits);
    }
    if (!os) throw IoError("write_embeddings: write failed for " + path);
}

EmbeddingMatrix read_embeddings(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read_embeddings: cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4)) throw TruncatedPayload("read_embeddings: file shorter than header", 0);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw BadMagic("read_embeddings: bad magic in " + path);
    std::uint32_t version = 0, dtype = 0;
    std::uint64_t n = 0, d = 0;
    if (!get_u32(is, version)) throw TruncatedPayload("read_embeddings: truncated header", 4);
    if (version != kFormatVersion)
        throw UnsupportedVersion("read_embeddings: version " + std::to_string(version));
    if (!get_u32(is, dtype)) throw TruncatedPayload("read_embeddings: truncated header", 8);
    if (dtype != kDtypeF32)
        throw DtypeMismatch("read_embeddings: dtype code " + std::to_string(dtype) +
                            " (expected 1 = f32)");
    if (!get_u64(is, n)) throw TruncatedPayload("read_embeddings: truncated header", 12);
    if (!get_u64(is, d)) throw TruncatedPayload("read_embeddings: truncated header", 20);

    EmbeddingMatrix m(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    std::size_t offset = 28;
    for (std::size_t i = 0; i < m.data().size(); ++i) {
        std::uint32_t bits = 0;
        if (!get_u32(is, bits))
            throw TruncatedPayload("read_embeddings: payload ends early", offset);
        m.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
        offset += 4;
    }
    return m;
}

namespace {

ExampleMeta parse_meta_line(const json& j, std::size_t line_no) {
    if (!j.is_object()) throw MalformedLine("metadata entry is not an object", line_no);
    ExampleMeta m;
    if (!j.contains("id") || !j["id"].is_string())
        throw MalformedLine("metadata entry is missing string 'id'", line_no);
    m.id = j["id"].get<std::string>();
    if (j.contains("dataset")) m.dataset = j["dataset"].get<std::string>();
    if (j.contains("split")) m.split = j["split"].get<std::string>();
    if (j.contains("side")) m.side = parse_side(j["side"].get<std::string>());
    if (j.contains("perplexity") && !j["perplexity"].is_null()) {
        m.perplexity = j["perplexity"].get<double>();
        if (!std::isfinite(*m.perplexity))
            throw MalformedLine("perplexity is not finite", line_no);
    }
    if (j.contains("quality") && !j["quality"].is_null()) {
        for (const auto& [k, v] : j["quality"].items()) {
            const double q = v.get<double>();
            if (!std::isfinite(q)) throw MalformedLine("quality '" + k + "' is not finite", line_no);
            m.quality[k] = q;
        }
    }
    if (j.contains("n_tokens") && !j["n_tokens"].is_null())
        m.n_tokens = j["n_tokens"].get<std::int64_t>();
    return m;
}

}  // namespace

std::vector<ExampleMeta> read_metadata(const std::string& path, std::size_t expected_n) {
    std::ifstream is(path);
    if (!is) throw IoError("read_metadata: cannot open " + path);
    std::vector<ExampleMeta> out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedLine(std::string("metadata JSON parse error: ") + e.what(), line_no);
        }
        ExampleMeta m = parse_meta_line(j, line_no);
        if (!seen.insert(m.id).second)
            throw DuplicateId("duplicate id '" + m.id + "'", line_no);
        out.push_back(std::move(m));
    }
    if (out.size() != expected_n)
        throw LineCountMismatch("read_metadata: " + std::to_string(out.size()) +
                                " records, expected " + std::to_string(expected_n));
    return out;
}

void write_metadata(const std::string& path, const std::vector<ExampleMeta>& meta) {
    std::ofstream os(path);
    if (!os) throw IoError("write_metadata: cannot open " + path);
    for (const auto& m : meta) {
        json j;
        j["id"] = m.id;
        j["dataset"] = m.dataset;
        j["split"] = m.split;
        j["side"] = side_name(m.side);
        if (m.perplexity) j["perplexity"] = *m.perplexity;
        if (!m.quality.empty()) j["quality"] = m.quality;
        if (m.n_tokens) j["n_tokens"] = *m.n_tokens;
        os << j.dump() << '\n';
    }
    if (!os) throw IoError("write_metadata: write failed for " + path);
}

EmbeddingStore load_store(const std::string& path_base) {
    EmbeddingStore s;
    s.matrix = read_embeddings(path_base + ".emb");
    s.meta = read_metadata(path_base + ".jsonl", s.matrix.rows());
    return s;
}

void save_store(const std::string& path_base, const EmbeddingStore& store) {
    if (store.meta.size() != store.matrix.rows())
        throw LengthMismatch("save_store: metadata does not match matrix rows");
    write_embeddings(path_base + ".emb", store.matrix);
    write_metadata(path_base + ".jsonl", store.meta);
}

EmbeddingStore read_csv_store(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("read_csv_store: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw MalformedLine("csv store: missing header", 1);

    auto split_csv = [](const std::string& s) {
        std::vector<std::string> fields;
        std::string cur;
        std::stringstream ss(s);
        while (std::getline(ss, cur, ',')) fields.push_back(cur);
        if (!s.empty() && s.back() == ',') fields.emplace_back();
        return fields;
    };

    const auto header = split_csv(line);
    if (header.size() < 4 || header[0] != "id" || header[1] != "dataset" || header[2] != "split")
        throw MalformedLine("csv store: header must be id,dataset,split,v0..", 1);
    const std::size_t d = header.size() - 3;
    for (std::size_t j = 0; j < d; ++j)
        if (header[3 + j] != "v" + std::to_string(j))
            throw MalformedLine("csv store: expected column v" + std::to_string(j), 1);

    EmbeddingStore store;
    store.matrix = EmbeddingMatrix(0, d);
    std::unordered_set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw MalformedLine("csv store: wrong field count", line_no);
        ExampleMeta m;
        m.id = fields[0];
        m.dataset = fields[1];
        m.split = fields[2];
        if (!seen.insert(m.id).second) throw DuplicateId("duplicate id '" + m.id + "'", line_no);
        Vec row(d);
        for (std::size_t j = 0; j < d; ++j) {
            try {
                row[j] = std::stod(fields[3 + j]);
            } catch (const std::exception&) {
                throw MalformedLine("csv store: bad number '" + fields[3 + j] + "'", line_no);
            }
        }
        store.matrix.push_row(row);
        store.meta.push_back(std::move(m));
    }
    return store;
}

namespace {

json gaussian_to_json(const GaussianModel& m) {
    json j;
    j["kind"] = "gaussian";
    j["schema_version"] = kModelSchemaVersion;
    j["d"] = m.d;
    j["n_fit"] = m.n_fit;
    j["ridge"] = m.ridge;
    j["mu"] = m.mu;
    std::vector<double> lower;
    lower.reserve(m.d * (m.d + 1) / 2);
    for (std::size_t i = 0; i < m.d; ++i)
        for (std::size_t k = 0; k <= i; ++k) lower.push_back(m.chol.lower(i, k));
    j["chol_lower"] = lower;
    return j;
}

GaussianModel gaussian_from_json(const json& j) {
    if (!j.is_object() || j.value("kind", "") != "gaussian")
        throw SchemaMismatch("expected a gaussian model document");
    if (j.value("schema_version", -1) != kModelSchemaVersion)
        throw VersionUnsupported("gaussian model schema_version is not supported");
    GaussianModel m;
    m.d = j.at("d").get<std::size_t>();
    m.n_fit = j.at("n_fit").get<std::size_t>();
    m.ridge = j.at("ridge").get<double>();
    m.mu = j.at("mu").get<Vec>();
    const auto lower = j.at("chol_lower").get<std::vector<double>>();
    if (m.mu.size() != m.d || lower.size() != m.d * (m.d + 1) / 2)
        throw SchemaMismatch("gaussian model fields have inconsistent sizes");
    m.chol.d = m.d;
    m.chol.lower = Matrix(m.d, m.d, 0.0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < m.d; ++i)
        for (std::size_t k = 0; k <= i; ++k) m.chol.lower(i, k) = lower[pos++];
    return m;
}

json load_json_doc(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("load_model: cannot open " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw SchemaMismatch(std::string("load_model: JSON parse error: ") + e.what());
    }
    return j;
}

void dump_json_doc(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw IoError("save_model: cannot open " + path);
    os << j.dump(2) << '\n';
    if (!os) throw IoError("save_model: write failed for " + path);
}

void require_kind(const json& j, const std::string& kind) {
    if (!j.is_object() || !j.contains("kind"))
        throw SchemaMismatch("model document has no 'kind' field");
    if (j["kind"].get<std::string>() != kind)
        throw SchemaMismatch("model kind is '" + j["kind"].get<std::string>() + "', expected '" +
                             kind + "'");
    if (j.value("schema_version", -1) != kModelSchemaVersion)
        throw VersionUnsupported("model schema_version is not supported");
}

}  // namespace

void save_model(const std::string& path, const GaussianModel& m) {
    dump_json_doc(path, gaussian_to_json(m));
}

void save_model(const std::string& path, const RmdScorer& m) {
    json j;
    j["kind"] = "rmd_scorer";
    j["schema_version"] = kModelSchemaVersion;
    j["input_fg"] = m.input_fg ? gaussian_to_json(*m.input_fg) : json(nullptr);
    j["input_bg"] = m.input_bg ? gaussian_to_json(*m.input_bg) : json(nullptr);
    j["output_fg"] = m.output_fg ? gaussian_to_json(*m.output_fg) : json(nullptr);
    j["output_bg"] = m.output_bg ? gaussian_to_json(*m.output_bg) : json(nullptr);
    dump_json_doc(path, j);
}

void save_model(const std::string& path, const BinaryClassifier& m) {
    json j;
    j["kind"] = "binary_classifier";
    j["schema_version"] = kModelSchemaVersion;
    j["beta0"] = m.beta0;
    j["beta1"] = m.beta1;
    j["l2"] = m.l2;
    j["n_iter"] = m.n_iter;
    j["converged"] = m.converged;
    dump_json_doc(path, j);
}

void save_model(const std::string& path, const LinearCombiner& m) {
    json j;
    j["kind"] = "linear_combiner";
    j["schema_version"] = kModelSchemaVersion;
    j["intercept"] = m.intercept;
    j["feature_names"] = m.feature_names;
    j["weights"] = m.weights;
    j["fit_rmse"] = m.fit_rmse;
    dump_json_doc(path, j);
}

std::string model_kind(const std::string& path) {
    const json j = load_json_doc(path);
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw SchemaMismatch("model document has no 'kind' field");
    return j["kind"].get<std::string>();
}

GaussianModel load_gaussian(const std::string& path) {
    return gaussian_from_json(load_json_doc(path));
}

RmdScorer load_rmd_scorer(const std::string& path) {
    const json j = load_json_doc(path);
    require_kind(j, "rmd_scorer");
    RmdScorer s;
    auto get = [&](const char* key) -> std::optional<GaussianModel> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        return gaussian_from_json(j[key]);
    };
    s.input_fg = get("input_fg");
    s.input_bg = get("input_bg");
    s.output_fg = get("output_fg");
    s.output_bg = get("output_bg");
    return s;
}

BinaryClassifier load_classifier(const std::string& path) {
    const json j = load_json_doc(path);
    require_kind(j, "binary_classifier");
    BinaryClassifier m;
    m.beta0 = j.at("beta0").get<double>();
    m.beta1 = j.at("beta1").get<Vec>();
    m.l2 = j.at("l2").get<double>();
    m.n_iter = j.at("n_iter").get<int>();
    m.converged = j.at("converged").get<bool>();
    return m;
}

LinearCombiner load_combiner(const std::string& path) {
    const json j = load_json_doc(path);
    require_kind(j, "linear_combiner");
    LinearCombiner m;
    m.intercept = j.at("intercept").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.weights = j.at("weights").get<Vec>();
    m.fit_rmse = j.at("fit_rmse").get<double>();
    if (m.weights.size() != m.feature_names.size())
        throw SchemaMismatch("linear_combiner weights do not match feature names");
    return m;
}

}  // namespace selgen
