#include "selgen/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "selgen/attribution.hpp"
#include "selgen/classifier_ood.hpp"
#include "selgen/combiner.hpp"
#include "selgen/evaluation.hpp"
#include "selgen/gaussian_ood.hpp"
#include "selgen/rng.hpp"
#include "selgen/store.hpp"
#include "selgen/synth.hpp"
#include "selgen/textstats.hpp"

namespace selgen {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting and small utilities

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("cannot parse " + what + " value '" + s + "'");
    }
}

unsigned default_threads() {
    if (const char* env = std::getenv("SELGEN_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? hc : 1;
}

template <typename PerRow>
void parallel_rows(std::size_t n, unsigned n_threads, PerRow per_row) {
    if (n == 0) return;
    if (n_threads <= 1 || n < 2 * n_threads) {
        for (std::size_t i = 0; i < n; ++i) per_row(i);
        return;
    }
    std::vector<std::thread> workers;
    const std::size_t chunk = (n + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
        const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) per_row(i);
        });
    }
    for (auto& w : workers) w.join();
}

// ---------------------------------------------------------------------------
// Manifest

std::string fnv1a64_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("checksum: cannot open " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
        const std::streamsize got = is.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!is) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

struct Manifest {
    std::string command;
    json config = json::object();
    json seeds = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    void write(const std::string& primary_output) const {
        json j;
        j["command"] = command;
        j["config"] = config;
        j["seeds"] = seeds;
        json in = json::object();
        for (const auto& p : inputs) in[p] = fnv1a64_file(p);
        j["inputs"] = in;
        j["outputs"] = outputs;
        fs::path dir = fs::path(primary_output).parent_path();
        if (dir.empty()) dir = ".";
        std::ofstream os(dir / "manifest.json");
        if (!os) throw IoError("cannot write manifest.json in " + dir.string());
        os << j.dump(2) << '\n';
    }
};

// ---------------------------------------------------------------------------
// JSON config overlay: flags win, config fills the rest.

class ConfigOverlay {
public:
    ConfigOverlay(CLI::App* cmd, const std::string& config_path) : cmd_(cmd) {
        if (config_path.empty()) return;
        std::ifstream is(config_path);
        if (!is) throw IoError("cannot open config file " + config_path);
        try {
            is >> doc_;
        } catch (const json::exception& e) {
            throw InvalidArgument(std::string("config file parse error: ") + e.what());
        }
        if (!doc_.is_object()) throw InvalidArgument("config file must hold a JSON object");
    }

    template <typename T>
    void apply(const std::string& key, T& value) const {
        if (!doc_.contains(key)) return;
        const auto* opt = cmd_->get_option_no_throw("--" + key);
        if (opt != nullptr && opt->count() > 0) return;  // flag wins
        value = doc_[key].get<T>();
    }

private:
    CLI::App* cmd_;
    json doc_;
};

// ---------------------------------------------------------------------------
// Score-table CSV (output of `score` / `combine`)

struct ScoreTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;  // raw cells; empty = absent

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw MissingFeature("score table has no column '" + name + "'");
    }
    bool has_col(const std::string& name) const {
        for (const auto& c : columns)
            if (c == name) return true;
        return false;
    }
    const std::string& cell(std::size_t r, std::size_t c) const { return rows[r][c]; }
};

ScoreTable read_score_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open score table " + path);
    ScoreTable t;
    std::string line;
    if (!std::getline(is, line)) throw MalformedLine("score table is empty", 1);
    t.columns = split_list(line);
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_list(line);
        if (cells.size() != t.columns.size())
            throw MalformedLine("score table row has wrong field count", line_no);
        t.rows.push_back(std::move(cells));
    }
    return t;
}

std::optional<double> cell_double(const ScoreTable& t, std::size_t r, std::size_t c) {
    const std::string& s = t.cell(r, c);
    if (s.empty()) return std::nullopt;
    return parse_double(s, t.columns[c]);
}

// Numeric column that must be present in every row.
std::vector<double> full_column(const ScoreTable& t, const std::string& name) {
    const std::size_t c = t.col(name);
    std::vector<double> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto v = cell_double(t, r, c);
        if (!v)
            throw InvalidArgument("column '" + name + "' has an empty cell at data row " +
                                  std::to_string(r + 1));
        out.push_back(*v);
    }
    return out;
}

// Drops rows marked is_train = 1 (combiner training rows are not evaluated).
void drop_train_rows(ScoreTable& t) {
    if (!t.has_col("is_train")) return;
    const std::size_t c = t.col("is_train");
    std::vector<std::vector<std::string>> kept;
    for (auto& row : t.rows)
        if (row[c] != "1") kept.push_back(std::move(row));
    t.rows = std::move(kept);
}

// ---------------------------------------------------------------------------
// Minimal SVG polyline chart

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

void write_svg_chart(const std::string& path, const std::vector<SvgSeries>& series,
                     const std::string& x_label, const std::string& y_label) {
    const double w = 640, h = 480, ml = 60, mr = 20, mt = 20, mb = 45;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : series)
        for (const auto& [x, y] : s.points) {
            if (first) {
                xmin = xmax = x;
                ymin = ymax = y;
                first = false;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto sy = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
    std::ofstream os(path);
    if (!os) throw IoError("cannot write SVG " + path);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
       << h - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 10
       << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n";
    os << "<text x=\"15\" y=\"" << (mt + h - mb) / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 15 "
       << (mt + h - mb) / 2 << ")\">" << y_label << "</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double fx = xmin + (xmax - xmin) * tick / 4.0;
        const double fy = ymin + (ymax - ymin) * tick / 4.0;
        os << "<text x=\"" << sx(fx) << "\" y=\"" << h - mb + 16
           << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_double(fx) << "</text>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << sy(fy) + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_double(fy) << "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        os << "<polyline fill=\"none\" stroke=\"" << palette[s % 8] << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[s].points) os << sx(x) << "," << sy(y) << " ";
        os << "\"/>\n";
        os << "<text x=\"" << w - mr - 5 << "\" y=\"" << mt + 16 * (s + 1)
           << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << palette[s % 8] << "\">"
           << series[s].label << "</text>\n";
    }
    os << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Subcommand option structs and runners

struct FitGaussianOpts {
    std::string embeddings, meta, dataset, split, out, config;
    double ridge = kDefaultRidge;
    std::size_t max_rows = 0;  // 0 = use every selected row
    std::uint64_t subsample_seed = 0;
};

int run_fit_gaussian(const FitGaussianOpts& o) {
    EmbeddingStore store;
    store.matrix = read_embeddings(o.embeddings);
    store.meta = read_metadata(o.meta, store.matrix.rows());
    auto idx = store.select(o.dataset, o.split);
    if (o.max_rows > 0 && idx.size() > o.max_rows) {
        Rng rng(o.subsample_seed);
        auto pick = rng.sample_indices(idx.size(), o.max_rows);
        std::sort(pick.begin(), pick.end());
        std::vector<std::size_t> capped;
        capped.reserve(o.max_rows);
        for (std::size_t p : pick) capped.push_back(idx[p]);
        idx = std::move(capped);
    }
    if (idx.size() < 2)
        throw EmptyInput("fit-gaussian: selection matched " + std::to_string(idx.size()) +
                         " rows, need at least 2");
    const GaussianModel model = fit_gaussian(store.rows_at(idx), o.ridge);
    save_model(o.out, model);

    Manifest m;
    m.command = "fit-gaussian";
    m.config = {{"embeddings", o.embeddings}, {"meta", o.meta},   {"dataset", o.dataset},
                {"split", o.split},           {"ridge", o.ridge}, {"max_rows", o.max_rows},
                {"out", o.out}};
    m.seeds = {{"subsample_seed", o.subsample_seed}};
    m.inputs = {o.embeddings, o.meta};
    m.outputs = {o.out};
    m.write(o.out);
    std::cout << "fit-gaussian: " << idx.size() << " rows, d=" << model.d << " -> " << o.out
              << "\n";
    return 0;
}

struct FitClassifierOpts {
    std::string pos_embeddings, pos_meta, pos_dataset, pos_split;
    std::string neg_embeddings, neg_meta, neg_dataset, neg_split;
    std::string out, config;
    double l2 = kDefaultLogisticL2;
    int max_iter = kDefaultLogisticMaxIter;
    double tol = kDefaultLogisticTol;
    std::uint64_t seed = 0;
};

int run_fit_classifier(const FitClassifierOpts& o) {
    auto load_side = [](const std::string& emb, const std::string& meta, const std::string& dataset,
                        const std::string& split) {
        EmbeddingStore s;
        s.matrix = read_embeddings(emb);
        s.meta = read_metadata(meta, s.matrix.rows());
        return s.rows_at(s.select(dataset, split));
    };
    const Matrix pos = load_side(o.pos_embeddings, o.pos_meta, o.pos_dataset, o.pos_split);
    const Matrix neg = load_side(o.neg_embeddings, o.neg_meta, o.neg_dataset, o.neg_split);
    const BinaryClassifier clf = train_logistic(pos, neg, o.l2, o.max_iter, o.tol, o.seed);
    save_model(o.out, clf);
    if (!clf.converged)
        std::cerr << "fit-classifier: warning: not converged after " << clf.n_iter
                  << " iterations\n";

    Manifest m;
    m.command = "fit-classifier";
    m.config = {{"pos_embeddings", o.pos_embeddings}, {"pos_meta", o.pos_meta},
                {"pos_dataset", o.pos_dataset},       {"pos_split", o.pos_split},
                {"neg_embeddings", o.neg_embeddings}, {"neg_meta", o.neg_meta},
                {"neg_dataset", o.neg_dataset},       {"neg_split", o.neg_split},
                {"l2", o.l2},                         {"max_iter", o.max_iter},
                {"tol", o.tol},                       {"out", o.out}};
    m.seeds = {{"balance_seed", o.seed}};
    m.inputs = {o.pos_embeddings, o.pos_meta, o.neg_embeddings, o.neg_meta};
    m.outputs = {o.out};
    m.write(o.out);
    std::cout << "fit-classifier: " << pos.rows() << " pos / " << neg.rows() << " neg rows, "
              << (clf.converged ? "converged" : "NOT converged") << " in " << clf.n_iter
              << " iterations -> " << o.out << "\n";
    return 0;
}

struct ScoreOpts {
    std::string embeddings, meta, out, config;
    std::string side;  // empty = take the stores' unanimous side
    std::string fg, bg, scorer, classifier;
    std::string knn_train;
    std::size_t knn_k = 1000;
    double knn_alpha = 100.0;
    std::uint64_t knn_seed = 0;
    unsigned threads = 0;  // 0 = default_threads()
};

int run_score(const ScoreOpts& o) {
    EmbeddingStore store;
    store.matrix = read_embeddings(o.embeddings);
    store.meta = read_metadata(o.meta, store.matrix.rows());

    Side side;
    if (!o.side.empty()) {
        side = parse_side(o.side);
    } else {
        if (store.meta.empty()) throw EmptyInput("score: store is empty and --side not given");
        side = store.meta.front().side;
        for (const auto& m : store.meta)
            if (m.side != side)
                throw InvalidArgument("score: store mixes sides; pass --side explicitly");
    }

    std::optional<GaussianModel> fg, bg;
    if (!o.scorer.empty()) {
        const RmdScorer sc = load_rmd_scorer(o.scorer);
        fg = sc.fg(side);
        bg = sc.bg(side);
    }
    if (!o.fg.empty()) fg = load_gaussian(o.fg);
    if (!o.bg.empty()) bg = load_gaussian(o.bg);
    if (bg && !fg) throw InvalidArgument("score: --bg requires a foreground model");

    std::optional<BinaryClassifier> clf;
    if (!o.classifier.empty()) clf = load_classifier(o.classifier);

    std::optional<KnnIndex> knn;
    if (!o.knn_train.empty())
        knn.emplace(read_embeddings(o.knn_train), o.knn_k, o.knn_alpha);

    const std::size_t n = store.size();
    const unsigned threads = o.threads > 0 ? o.threads : default_threads();
    std::vector<double> md(n), rmd(n), logit(n), knn_d(n);
    parallel_rows(n, threads, [&](std::size_t i) {
        const Vec x = store.matrix.row_vec(i);
        if (fg) md[i] = md_score(*fg, x);
        if (fg && bg) rmd[i] = md[i] - md_score(*bg, x);
        if (clf) logit[i] = logit_score(*clf, x);
        if (knn) knn_d[i] = knn_score(*knn, x, o.knn_seed);
    });

    std::ofstream os(o.out);
    if (!os) throw IoError("score: cannot open " + o.out);
    os << "id,dataset,side,md,rmd,logit,knn,perplexity\n";
    for (std::size_t i = 0; i < n; ++i) {
        const auto& meta = store.meta[i];
        os << meta.id << ',' << meta.dataset << ',' << side_name(side) << ',';
        if (fg) os << fmt_double(md[i]);
        os << ',';
        if (fg && bg) os << fmt_double(rmd[i]);
        os << ',';
        if (clf) os << fmt_double(logit[i]);
        os << ',';
        if (knn) os << fmt_double(knn_d[i]);
        os << ',';
        if (meta.perplexity) os << fmt_double(*meta.perplexity);
        os << '\n';
    }
    os.close();

    Manifest m;
    m.command = "score";
    m.config = {{"embeddings", o.embeddings}, {"meta", o.meta},     {"side", side_name(side)},
                {"fg", o.fg},                 {"bg", o.bg},         {"scorer", o.scorer},
                {"classifier", o.classifier}, {"knn_train", o.knn_train},
                {"knn_k", o.knn_k},           {"knn_alpha", o.knn_alpha},
                {"out", o.out}};
    m.seeds = {{"knn_seed", o.knn_seed}};
    m.inputs = {o.embeddings, o.meta};
    for (const auto& p : {o.fg, o.bg, o.scorer, o.classifier, o.knn_train})
        if (!p.empty()) m.inputs.push_back(p);
    m.outputs = {o.out};
    m.write(o.out);
    std::cout << "score: " << n << " rows -> " << o.out << "\n";
    return 0;
}

struct CombineOpts {
    std::vector<std::string> scores;  // one or two CSVs (distinct sides)
    std::string meta, out, model_out, config;
    std::string quality_metric = "quality";
    std::string prsum_ppx = "perplexity";
    std::string prsum_ood;  // default picked from available columns
    std::string linreg_features;  // comma list; default ppx + available rmd columns
    std::string combiners = "prsum,linreg";
    std::string pr_reference = "pooled";  // or "indomain"
    std::string indomain_dataset;
    double train_frac = 0.1;
    std::uint64_t seed = 0;
};

struct CombinedPool {
    std::vector<std::string> ids, datasets;
    std::vector<std::string> feature_cols;                 // canonical order
    std::map<std::string, std::vector<std::optional<double>>> features;
    std::vector<std::optional<double>> quality;
};

CombinedPool load_pool(const CombineOpts& o) {
    if (o.scores.empty() || o.scores.size() > 2)
        throw InvalidArgument("combine: pass one or two --scores tables");

    CombinedPool pool;
    static const char* kScoreCols[] = {"md", "rmd", "logit", "knn"};
    std::map<std::string, std::size_t> id_to_row;
    std::vector<std::string> seen_sides;

    for (std::size_t t = 0; t < o.scores.size(); ++t) {
        const ScoreTable tab = read_score_table(o.scores[t]);
        const std::size_t c_id = tab.col("id"), c_ds = tab.col("dataset"), c_side = tab.col("side");
        if (tab.rows.empty()) throw EmptyInput("combine: score table " + o.scores[t] + " is empty");
        const std::string side = tab.cell(0, c_side);
        for (std::size_t r = 0; r < tab.rows.size(); ++r)
            if (tab.cell(r, c_side) != side)
                throw InvalidArgument("combine: score table mixes sides: " + o.scores[t]);
        if (std::find(seen_sides.begin(), seen_sides.end(), side) != seen_sides.end())
            throw InvalidArgument("combine: two score tables share side '" + side + "'");
        seen_sides.push_back(side);

        if (t == 0) {
            pool.ids.reserve(tab.rows.size());
            for (std::size_t r = 0; r < tab.rows.size(); ++r) {
                pool.ids.push_back(tab.cell(r, c_id));
                pool.datasets.push_back(tab.cell(r, c_ds));
                id_to_row[tab.cell(r, c_id)] = r;
            }
            if (id_to_row.size() != pool.ids.size())
                throw DuplicateId("combine: duplicate id in " + o.scores[t], 0);
            pool.features["perplexity"].assign(pool.ids.size(), std::nullopt);
            const std::size_t c_ppx = tab.col("perplexity");
            for (std::size_t r = 0; r < tab.rows.size(); ++r)
                pool.features["perplexity"][r] = cell_double(tab, r, c_ppx);
        } else {
            if (tab.rows.size() != pool.ids.size())
                throw LengthMismatch("combine: score tables differ in row count");
            for (std::size_t r = 0; r < tab.rows.size(); ++r)
                if (!id_to_row.count(tab.cell(r, c_id)))
                    throw InvalidArgument("combine: id '" + tab.cell(r, c_id) +
                                          "' missing from first table");
        }

        for (const char* c : kScoreCols) {
            const std::size_t ci = tab.col(c);
            bool any = false;
            for (std::size_t r = 0; r < tab.rows.size() && !any; ++r)
                any = !tab.cell(r, ci).empty();
            if (!any) continue;
            const std::string name = side + "_" + c;
            auto& colv = pool.features[name];
            colv.assign(pool.ids.size(), std::nullopt);
            for (std::size_t r = 0; r < tab.rows.size(); ++r) {
                const std::size_t dst = id_to_row.at(tab.cell(r, c_id));
                colv[dst] = cell_double(tab, r, ci);
            }
        }
    }

    // Canonical feature column order.
    for (const char* side : {"input", "output"})
        for (const char* c : {"md", "rmd", "logit", "knn"}) {
            const std::string name = std::string(side) + "_" + c;
            if (pool.features.count(name)) pool.feature_cols.push_back(name);
        }

    // Quality from the metadata sidecar, matched by id.
    pool.quality.assign(pool.ids.size(), std::nullopt);
    if (!o.meta.empty()) {
        std::ifstream is(o.meta);
        if (!is) throw IoError("combine: cannot open " + o.meta);
        std::string line;
        std::size_t line_no = 0;
        std::map<std::string, double> by_id;
        while (std::getline(is, line)) {
            ++line_no;
            if (line.empty()) continue;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                throw MalformedLine(std::string("metadata parse error: ") + e.what(), line_no);
            }
            if (!j.contains("id")) throw MalformedLine("metadata entry has no id", line_no);
            if (j.contains("quality") && j["quality"].is_object() &&
                j["quality"].contains(o.quality_metric))
                by_id[j["id"].get<std::string>()] = j["quality"][o.quality_metric].get<double>();
        }
        for (std::size_t r = 0; r < pool.ids.size(); ++r) {
            const auto it = by_id.find(pool.ids[r]);
            if (it != by_id.end()) pool.quality[r] = it->second;
        }
    }
    return pool;
}

int run_combine(const CombineOpts& o) {
    if (o.train_frac <= 0.0 || o.train_frac >= 1.0)
        throw InvalidArgument("combine: --train-frac must be in (0, 1)");
    if (o.pr_reference == "indomain" && o.indomain_dataset.empty())
        throw InvalidArgument("combine: --pr-reference indomain needs --indomain-dataset");
    CombinedPool pool = load_pool(o);
    const std::size_t n = pool.ids.size();
    const auto wanted = split_list(o.combiners);
    const bool want_prsum =
        std::find(wanted.begin(), wanted.end(), "prsum") != wanted.end();
    const bool want_linreg =
        std::find(wanted.begin(), wanted.end(), "linreg") != wanted.end();

    auto feature_or_throw = [&](const std::string& name) -> const std::vector<std::optional<double>>& {
        const auto it = pool.features.find(name);
        if (it == pool.features.end())
            throw MissingFeature("combine: feature '" + name + "' is not available");
        return it->second;
    };

    // PRsum.
    std::vector<std::optional<double>> prsum_col(n);
    std::string prsum_ood = o.prsum_ood;
    if (want_prsum) {
        if (prsum_ood.empty()) {
            for (const auto& c : pool.feature_cols)
                if (c.ends_with("_rmd")) {
                    prsum_ood = c;
                    break;
                }
            if (prsum_ood.empty())
                throw MissingFeature("combine: no RMD column available; pass --prsum-ood");
        }
        const auto& ppx = feature_or_throw(o.prsum_ppx);
        const auto& ood = feature_or_throw(prsum_ood);

        // Reference population: the pooled evaluation set, or a frozen
        // in-domain-only reference.
        std::vector<double> ppx_ref, ood_ref;
        for (std::size_t r = 0; r < n; ++r) {
            if (o.pr_reference == "indomain" && pool.datasets[r] != o.indomain_dataset) continue;
            if (ppx[r]) ppx_ref.push_back(*ppx[r]);
            if (ood[r]) ood_ref.push_back(*ood[r]);
        }
        if (o.pr_reference != "pooled" && o.pr_reference != "indomain")
            throw InvalidArgument("combine: --pr-reference must be pooled or indomain");
        const PercentileReference ref_ppx(ppx_ref), ref_ood(ood_ref);
        for (std::size_t r = 0; r < n; ++r)
            if (ppx[r] && ood[r]) prsum_col[r] = prsum(ref_ppx, ref_ood, *ppx[r], *ood[r]);
    }

    // Linear regression on a seeded train split of the quality-bearing rows;
    // the abstention column is the negated quality prediction.
    std::vector<std::optional<double>> linreg_col(n);
    std::vector<char> is_train(n, 0);
    std::optional<LinearCombiner> combiner;
    if (want_linreg) {
        std::vector<std::string> feat_names = o.linreg_features.empty()
                                                  ? std::vector<std::string>{}
                                                  : split_list(o.linreg_features);
        if (feat_names.empty()) {
            feat_names.push_back("perplexity");
            for (const auto& c : pool.feature_cols)
                if (c.ends_with("_rmd")) feat_names.push_back(c);
        }
        std::vector<std::size_t> eligible;
        for (std::size_t r = 0; r < n; ++r) {
            if (!pool.quality[r]) continue;
            bool complete = true;
            for (const auto& f : feat_names)
                complete = complete && feature_or_throw(f)[r].has_value();
            if (complete) eligible.push_back(r);
        }
        const auto n_train =
            static_cast<std::size_t>(o.train_frac * static_cast<double>(eligible.size()));
        if (n_train <= feat_names.size())
            throw UnderDetermined("combine: train split too small for the feature count");
        Rng rng(o.seed);
        auto pick = rng.sample_indices(eligible.size(), n_train);
        Matrix x(0, feat_names.size());
        Vec q;
        for (std::size_t p : pick) {
            const std::size_t r = eligible[p];
            is_train[r] = 1;
            Vec row(feat_names.size());
            for (std::size_t f = 0; f < feat_names.size(); ++f)
                row[f] = *pool.features[feat_names[f]][r];
            x.push_row(row);
            q.push_back(*pool.quality[r]);
        }
        combiner = fit_linear_combiner(feat_names, x, q);
        for (std::size_t r = 0; r < n; ++r) {
            bool complete = true;
            Vec row(feat_names.size());
            for (std::size_t f = 0; f < feat_names.size() && complete; ++f) {
                const auto& v = pool.features[feat_names[f]][r];
                if (v)
                    row[f] = *v;
                else
                    complete = false;
            }
            if (complete) linreg_col[r] = -apply_linear_combiner(*combiner, row);
        }
        if (!o.model_out.empty()) save_model(o.model_out, *combiner);
    }

    std::ofstream os(o.out);
    if (!os) throw IoError("combine: cannot open " + o.out);
    os << "id,dataset,perplexity";
    for (const auto& c : pool.feature_cols) os << ',' << c;
    os << ",prsum,linreg,quality,is_train\n";
    for (std::size_t r = 0; r < n; ++r) {
        os << pool.ids[r] << ',' << pool.datasets[r] << ',';
        if (pool.features["perplexity"][r]) os << fmt_double(*pool.features["perplexity"][r]);
        for (const auto& c : pool.feature_cols) {
            os << ',';
            if (pool.features[c][r]) os << fmt_double(*pool.features[c][r]);
        }
        os << ',';
        if (prsum_col[r]) os << fmt_double(*prsum_col[r]);
        os << ',';
        if (linreg_col[r]) os << fmt_double(*linreg_col[r]);
        os << ',';
        if (pool.quality[r]) os << fmt_double(*pool.quality[r]);
        os << ',' << (is_train[r] ? '1' : '0') << '\n';
    }
    os.close();

    Manifest m;
    m.command = "combine";
    m.config = {{"scores", o.scores},
                {"meta", o.meta},
                {"quality_metric", o.quality_metric},
                {"prsum_ppx", o.prsum_ppx},
                {"prsum_ood", prsum_ood},
                {"linreg_features", o.linreg_features},
                {"combiners", o.combiners},
                {"pr_reference", o.pr_reference},
                {"indomain_dataset", o.indomain_dataset},
                {"train_frac", o.train_frac},
                {"out", o.out}};
    m.seeds = {{"train_split_seed", o.seed}};
    m.inputs = o.scores;
    if (!o.meta.empty()) m.inputs.push_back(o.meta);
    m.outputs = {o.out};
    if (!o.model_out.empty()) m.outputs.push_back(o.model_out);
    m.write(o.out);
    std::cout << "combine: " << n << " rows -> " << o.out;
    if (combiner) std::cout << " (linreg rmse " << fmt_double(combiner->fit_rmse) << ")";
    std::cout << "\n";
    return 0;
}

struct EvalOpts {
    std::string scores, score_col, quality_col = "quality", out, csv, svg, config;
    std::string neg_dataset, pos_dataset;
    bool negate_score = false;
    bool keep_train = false;
    double alpha_step = 0.01;
};

std::vector<double> alpha_grid_from_step(double step) {
    if (step <= 0.0 || step >= 1.0) throw InvalidArgument("eval: alpha step must be in (0,1)");
    std::vector<double> g;
    for (double a = 0.0; a < 1.0 - 1e-12; a += step) g.push_back(a);
    return g;
}

void write_report(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw IoError("eval: cannot write " + path);
    os << j.dump(2) << '\n';
}

Manifest eval_manifest(const std::string& kind, const EvalOpts& o) {
    Manifest m;
    m.command = "eval " + kind;
    m.config = {{"scores", o.scores},     {"score_col", o.score_col},
                {"quality_col", o.quality_col}, {"neg_dataset", o.neg_dataset},
                {"pos_dataset", o.pos_dataset}, {"negate_score", o.negate_score},
                {"alpha_step", o.alpha_step},   {"out", o.out}};
    m.inputs = {o.scores};
    m.outputs = {o.out};
    if (!o.csv.empty()) m.outputs.push_back(o.csv);
    if (!o.svg.empty()) m.outputs.push_back(o.svg);
    return m;
}

int run_eval_auroc(const EvalOpts& o) {
    ScoreTable t = read_score_table(o.scores);
    if (!o.keep_train) drop_train_rows(t);
    if (o.neg_dataset.empty()) throw InvalidArgument("eval auroc: --neg-dataset is required");
    const std::size_t c_ds = t.col("dataset");
    const auto scores = full_column(t, o.score_col);
    std::vector<double> neg, pos;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double v = o.negate_score ? -scores[r] : scores[r];
        if (t.cell(r, c_ds) == o.neg_dataset)
            neg.push_back(v);
        else if (o.pos_dataset.empty() || t.cell(r, c_ds) == o.pos_dataset)
            pos.push_back(v);
    }
    const double a = auroc(neg, pos);
    json j = {{"metric", "auroc"},      {"score_col", o.score_col}, {"auroc", a},
              {"n_neg", neg.size()},    {"n_pos", pos.size()},      {"neg_dataset", o.neg_dataset},
              {"pos_dataset", o.pos_dataset.empty() ? "(rest)" : o.pos_dataset}};
    write_report(o.out, j);
    eval_manifest("auroc", o).write(o.out);
    std::cout << "auroc(" << o.score_col << ") = " << fmt_double(a) << "  [neg " << neg.size()
              << ", pos " << pos.size() << "]\n";
    return 0;
}

int run_eval_kendall(const EvalOpts& o) {
    ScoreTable t = read_score_table(o.scores);
    if (!o.keep_train) drop_train_rows(t);
    const std::size_t c_s = t.col(o.score_col), c_q = t.col(o.quality_col);
    std::vector<double> x, y;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto sv = cell_double(t, r, c_s);
        const auto qv = cell_double(t, r, c_q);
        if (!sv || !qv) continue;
        x.push_back(o.negate_score ? -*sv : *sv);
        y.push_back(*qv);
    }
    const KendallResult kr = kendall_tau_b(x, y);
    json j = {{"metric", "kendall_tau_b"},
              {"score_col", o.score_col},
              {"quality_col", o.quality_col},
              {"negate_score", o.negate_score},
              {"tau", kr.tau},
              {"p_value", kr.p_value},
              {"n", x.size()}};
    write_report(o.out, j);
    eval_manifest("kendall", o).write(o.out);
    std::cout << "kendall_tau_b(" << o.score_col << ", " << o.quality_col
              << ") = " << fmt_double(kr.tau) << "  (p = " << fmt_double(kr.p_value) << ", n = "
              << x.size() << ")\n";
    return 0;
}

int run_eval_qa(const EvalOpts& o) {
    ScoreTable t = read_score_table(o.scores);
    if (!o.keep_train) drop_train_rows(t);
    const std::size_t c_s = t.col(o.score_col), c_q = t.col(o.quality_col);
    std::vector<double> scores, quality;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto sv = cell_double(t, r, c_s);
        const auto qv = cell_double(t, r, c_q);
        if (!sv || !qv) continue;
        scores.push_back(*sv);
        quality.push_back(*qv);
    }
    const QaCurve curve = qa_curve(scores, quality, alpha_grid_from_step(o.alpha_step));
    json pts = json::array();
    for (const auto& p : curve.points)
        pts.push_back({{"alpha", p.alpha}, {"mean_quality", p.mean_quality}, {"n_kept", p.n_kept}});
    json j = {{"metric", "qa_curve"},
              {"score_col", o.score_col},
              {"quality_col", o.quality_col},
              {"n", scores.size()},
              {"area", curve.area},
              {"points", pts}};
    write_report(o.out, j);
    if (!o.csv.empty()) {
        std::ofstream cs(o.csv);
        if (!cs) throw IoError("eval qa: cannot write " + o.csv);
        cs << "alpha,mean_quality,n_kept\n";
        for (const auto& p : curve.points)
            cs << fmt_double(p.alpha) << ',' << fmt_double(p.mean_quality) << ',' << p.n_kept
               << '\n';
    }
    if (!o.svg.empty()) {
        SvgSeries s{o.score_col, {}};
        for (const auto& p : curve.points) s.points.emplace_back(p.alpha, p.mean_quality);
        write_svg_chart(o.svg, {s}, "abstention rate", "mean quality");
    }
    eval_manifest("qa", o).write(o.out);
    std::cout << "qa(" << o.score_col << "): area = " << fmt_double(curve.area) << " over "
              << curve.points.size() << " grid points\n";
    return 0;
}

int run_eval_survival(const EvalOpts& o) {
    ScoreTable t = read_score_table(o.scores);
    if (!o.keep_train) drop_train_rows(t);
    const std::size_t c_ds = t.col("dataset");
    const auto scores = full_column(t, o.score_col);
    std::vector<std::string> labels;
    labels.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) labels.push_back(t.cell(r, c_ds));
    const SurvivalTable table = survival_counts(scores, labels, alpha_grid_from_step(o.alpha_step));

    json series = json::array();
    for (const auto& s : table.series) series.push_back({{"label", s.label}, {"counts", s.counts}});
    json j = {{"metric", "survival"},
              {"score_col", o.score_col},
              {"alphas", table.alphas},
              {"series", series}};
    write_report(o.out, j);
    if (!o.csv.empty()) {
        std::ofstream cs(o.csv);
        if (!cs) throw IoError("eval survival: cannot write " + o.csv);
        cs << "alpha,dataset,count\n";
        for (std::size_t a = 0; a < table.alphas.size(); ++a)
            for (const auto& s : table.series)
                cs << fmt_double(table.alphas[a]) << ',' << s.label << ',' << s.counts[a] << '\n';
    }
    if (!o.svg.empty()) {
        std::vector<SvgSeries> sv;
        for (const auto& s : table.series) {
            SvgSeries out{s.label, {}};
            for (std::size_t a = 0; a < table.alphas.size(); ++a)
                out.points.emplace_back(table.alphas[a], static_cast<double>(s.counts[a]));
            sv.push_back(std::move(out));
        }
        write_svg_chart(o.svg, sv, "abstention rate", "surviving count");
    }
    eval_manifest("survival", o).write(o.out);
    std::cout << "survival(" << o.score_col << "): " << table.series.size() << " datasets, "
              << table.alphas.size() << " grid points\n";
    return 0;
}

struct AttributeOpts {
    std::string docs, fg, bg, scorer, side = "input", mode = "compositional", out, config;
};

int run_attribute(const AttributeOpts& o) {
    RmdScorer scorer;
    if (!o.scorer.empty()) scorer = load_rmd_scorer(o.scorer);
    const Side side = parse_side(o.side);
    auto& fg_slot = side == Side::Input ? scorer.input_fg : scorer.output_fg;
    auto& bg_slot = side == Side::Input ? scorer.input_bg : scorer.output_bg;
    if (!o.fg.empty()) fg_slot = load_gaussian(o.fg);
    if (!o.bg.empty()) bg_slot = load_gaussian(o.bg);
    if (!fg_slot) throw SideNotConfigured("attribute: no foreground model for the chosen side");
    const AttributionMode mode = parse_attribution_mode(o.mode);

    std::ifstream is(o.docs);
    if (!is) throw IoError("attribute: cannot open " + o.docs);
    std::ofstream os(o.out);
    if (!os) throw IoError("attribute: cannot open " + o.out);

    std::string line;
    std::size_t line_no = 0, n_docs = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedLine(std::string("docs parse error: ") + e.what(), line_no);
        }
        SegmentedDocument doc;
        doc.doc_id = j.at("doc_id").get<std::string>();
        for (const auto& seg : j.at("segments")) {
            Segment s;
            s.segment_id = seg.at("segment_id").get<std::string>();
            s.token_count = seg.at("token_count").get<std::size_t>();
            s.embedding = seg.at("embedding").get<Vec>();
            doc.segments.push_back(std::move(s));
        }
        if (j.contains("full_embedding") && !j["full_embedding"].is_null())
            doc.full_embedding = j["full_embedding"].get<Vec>();
        if (j.contains("variant_embeddings") && !j["variant_embeddings"].is_null())
            for (const auto& [k, v] : j["variant_embeddings"].items())
                doc.variant_embeddings[k] = v.get<Vec>();

        for (const auto& a : sentence_attribution(doc, scorer, side, mode)) {
            json row = {{"doc_id", doc.doc_id},
                        {"segment_id", a.segment_id},
                        {"attribution", a.attribution},
                        {"mode", attribution_mode_name(mode)}};
            os << row.dump() << '\n';
        }
        ++n_docs;
    }
    os.close();

    Manifest m;
    m.command = "attribute";
    m.config = {{"docs", o.docs}, {"fg", o.fg},     {"bg", o.bg},   {"scorer", o.scorer},
                {"side", o.side}, {"mode", o.mode}, {"out", o.out}};
    m.inputs = {o.docs};
    for (const auto& p : {o.fg, o.bg, o.scorer})
        if (!p.empty()) m.inputs.push_back(p);
    m.outputs = {o.out};
    m.write(o.out);
    std::cout << "attribute: " << n_docs << " documents (" << o.mode << ") -> " << o.out << "\n";
    return 0;
}

struct NgramOpts {
    std::string test, train, out, config;
    std::size_t n_max = 4;
    std::size_t sample = 0;  // 0 = all sequences
    std::uint64_t seed = 0;
};

std::vector<TokenSeq> read_token_jsonl(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("ngram: cannot open " + path);
    std::vector<TokenSeq> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedLine(std::string("token JSONL parse error: ") + e.what(), line_no);
        }
        if (!j.contains("tokens") || !j["tokens"].is_array())
            throw MalformedLine("token JSONL entry has no 'tokens' array", line_no);
        out.push_back(j["tokens"].get<TokenSeq>());
    }
    return out;
}

int run_ngram(const NgramOpts& o) {
    auto test_seqs = read_token_jsonl(o.test);
    auto train_seqs = read_token_jsonl(o.train);
    auto subsample = [&](std::vector<TokenSeq>& seqs, std::uint64_t stream) {
        if (o.sample == 0 || seqs.size() <= o.sample) return;
        Rng rng(o.seed + stream);
        auto keep = rng.sample_indices(seqs.size(), o.sample);
        std::sort(keep.begin(), keep.end());
        std::vector<TokenSeq> out;
        out.reserve(keep.size());
        for (std::size_t i : keep) out.push_back(std::move(seqs[i]));
        seqs = std::move(out);
    };
    subsample(test_seqs, 1);
    subsample(train_seqs, 2);

    const NgramProfile test = build_profile(test_seqs, o.n_max);
    const NgramProfile train = build_profile(train_seqs, o.n_max);
    const OverlapReport rep = overlap_report(test, train);

    json per_n = json::array();
    for (std::size_t n = 1; n <= o.n_max; ++n)
        per_n.push_back({{"n", n},
                         {"overlap_pct", rep.overlap_pct[n - 1]},
                         {"jaccard_pct", rep.jaccard_pct[n - 1]},
                         {"test_unique", rep.test_unique[n - 1]},
                         {"train_unique", rep.train_unique[n - 1]}});
    json j = {{"metric", "ngram_overlap"},
              {"n_max", o.n_max},
              {"test_sequences", test_seqs.size()},
              {"train_sequences", train_seqs.size()},
              {"overall_pct", rep.overall_pct},
              {"per_n", per_n}};
    write_report(o.out, j);

    Manifest m;
    m.command = "ngram";
    m.config = {{"test", o.test}, {"train", o.train}, {"n_max", o.n_max},
                {"sample", o.sample}, {"out", o.out}};
    m.seeds = {{"sample_seed", o.seed}};
    m.inputs = {o.test, o.train};
    m.outputs = {o.out};
    m.write(o.out);
    std::cout << "ngram: overall overlap " << fmt_double(rep.overall_pct) << "% (unigram "
              << fmt_double(rep.overlap_pct[0]) << "%) -> " << o.out << "\n";
    return 0;
}

struct SynthDomainOpts {
    std::string name = "domain", out_base, config;
    std::size_t n = 0, d = 0;
    std::uint64_t seed = 0;
    std::string mean;  // comma list or single value broadcast
    std::string cov = "identity";  // identity | diag:v1,v2,... | diag:v (broadcast)
    std::string split = "synth";
};

int run_synth_domain(const SynthDomainOpts& o) {
    DomainSpec spec;
    spec.name = o.name;
    spec.n = o.n;
    spec.d = o.d;
    spec.seed = o.seed;
    spec.split = o.split;
    if (!o.mean.empty()) {
        const auto parts = split_list(o.mean);
        if (parts.size() == 1) {
            spec.mean.assign(o.d, parse_double(parts[0], "mean"));
        } else {
            for (const auto& p : parts) spec.mean.push_back(parse_double(p, "mean"));
        }
    }
    if (o.cov == "identity") {
        spec.cov = CovSpec::identity();
    } else if (o.cov.starts_with("diag:")) {
        const auto parts = split_list(o.cov.substr(5));
        Vec diag;
        if (parts.size() == 1) {
            diag.assign(o.d, parse_double(parts[0], "cov diagonal"));
        } else {
            for (const auto& p : parts) diag.push_back(parse_double(p, "cov diagonal"));
        }
        spec.cov = CovSpec::diag(std::move(diag));
    } else {
        throw InvalidArgument("synth domain: --cov must be identity or diag:...");
    }

    const EmbeddingStore store = gen_domain(spec);
    save_store(o.out_base, store);

    Manifest m;
    m.command = "synth domain";
    m.config = {{"name", o.name}, {"n", o.n},     {"d", o.d},
                {"mean", o.mean}, {"cov", o.cov}, {"split", o.split},
                {"out_base", o.out_base}};
    m.seeds = {{"seed", o.seed}};
    m.outputs = {o.out_base + ".emb", o.out_base + ".jsonl"};
    m.write(o.out_base + ".emb");
    std::cout << "synth domain: " << store.size() << " x " << store.dim() << " -> " << o.out_base
              << ".{emb,jsonl}\n";
    return 0;
}

struct SynthScenarioOpts {
    std::string out_base, config;
    std::size_t n_in = 2000, n_ood = 2000, d = 8, n_fit = 0;
    double shift = 4.0, noise = 0.2;
    std::uint64_t seed = 0;
};

int run_synth_scenario(const SynthScenarioOpts& o) {
    const SelectiveScenario sc =
        gen_selective_scenario(o.seed, o.n_in, o.n_ood, o.shift, o.noise, o.d, o.n_fit);
    save_store(o.out_base, sc.store);
    json planted = {{"base", sc.planted.base},
                    {"a_ppx", sc.planted.a_ppx},
                    {"b_shift", sc.planted.b_shift},
                    {"shift_term", sc.planted.shift_term},
                    {"ppx_min", sc.planted.ppx_min},
                    {"ppx_max", sc.planted.ppx_max},
                    {"noise", sc.planted.noise},
                    {"shift", sc.shift},
                    {"d", sc.d}};
    write_report(o.out_base + ".planted.json", planted);

    Manifest m;
    m.command = "synth scenario";
    m.config = {{"n_in", o.n_in},   {"n_ood", o.n_ood}, {"d", o.d},
                {"n_fit", o.n_fit}, {"shift", o.shift}, {"noise", o.noise},
                {"out_base", o.out_base}};
    m.seeds = {{"seed", o.seed}};
    m.outputs = {o.out_base + ".emb", o.out_base + ".jsonl", o.out_base + ".planted.json"};
    m.write(o.out_base + ".emb");
    std::cout << "synth scenario: " << sc.store.size() << " rows (shift " << fmt_double(o.shift)
              << ", noise " << fmt_double(o.noise) << ") -> " << o.out_base << ".{emb,jsonl}\n";
    return 0;
}

}  // namespace

int dispatch(int argc, char** argv) {
    CLI::App app{"selgen: embedding-based OOD detection and selective generation toolkit"};
    app.require_subcommand(1);

    // fit-gaussian ----------------------------------------------------------
    FitGaussianOpts fg;
    auto* c_fg = app.add_subcommand("fit-gaussian", "Fit a Gaussian to embedding rows");
    c_fg->add_option("--embeddings", fg.embeddings, "input .emb file")->required();
    c_fg->add_option("--meta", fg.meta, "input metadata .jsonl")->required();
    c_fg->add_option("--dataset", fg.dataset, "restrict to this dataset label");
    c_fg->add_option("--split", fg.split, "restrict to this split");
    c_fg->add_option("--ridge", fg.ridge, "covariance ridge (scaled by trace/d)");
    c_fg->add_option("--max-rows", fg.max_rows,
                     "cap the fit set with a seeded subsample (0 = use all)");
    c_fg->add_option("--subsample-seed", fg.subsample_seed);
    c_fg->add_option("--out", fg.out, "output model JSON")->required();
    c_fg->add_option("--config", fg.config, "JSON config file (flags win)");

    // fit-classifier ---------------------------------------------------------
    FitClassifierOpts fc;
    auto* c_fc = app.add_subcommand("fit-classifier",
                                    "Train the background-vs-in-domain logistic regression");
    c_fc->add_option("--pos-embeddings", fc.pos_embeddings, "background/OOD .emb")->required();
    c_fc->add_option("--pos-meta", fc.pos_meta, "background/OOD metadata")->required();
    c_fc->add_option("--pos-dataset", fc.pos_dataset);
    c_fc->add_option("--pos-split", fc.pos_split);
    c_fc->add_option("--neg-embeddings", fc.neg_embeddings, "in-domain .emb")->required();
    c_fc->add_option("--neg-meta", fc.neg_meta, "in-domain metadata")->required();
    c_fc->add_option("--neg-dataset", fc.neg_dataset);
    c_fc->add_option("--neg-split", fc.neg_split);
    c_fc->add_option("--l2", fc.l2, "L2 penalty (intercept unpenalized)");
    c_fc->add_option("--max-iter", fc.max_iter);
    c_fc->add_option("--tol", fc.tol, "max |gradient| convergence threshold");
    c_fc->add_option("--seed", fc.seed, "class-balancing downsample seed");
    c_fc->add_option("--out", fc.out, "output model JSON")->required();
    c_fc->add_option("--config", fc.config, "JSON config file (flags win)");

    // score -------------------------------------------------------------------
    ScoreOpts sc;
    auto* c_sc = app.add_subcommand("score", "Emit the per-example score table CSV");
    c_sc->add_option("--embeddings", sc.embeddings, "test .emb")->required();
    c_sc->add_option("--meta", sc.meta, "test metadata .jsonl")->required();
    c_sc->add_option("--side", sc.side, "input|output (default: the store's side)");
    c_sc->add_option("--fg", sc.fg, "foreground Gaussian model JSON");
    c_sc->add_option("--bg", sc.bg, "background Gaussian model JSON");
    c_sc->add_option("--scorer", sc.scorer, "rmd_scorer model JSON");
    c_sc->add_option("--classifier", sc.classifier, "binary classifier model JSON");
    c_sc->add_option("--knn-train", sc.knn_train, "training .emb for the KNN score");
    c_sc->add_option("--knn-k", sc.knn_k, "k-th nearest neighbor (default 1000)");
    c_sc->add_option("--knn-alpha", sc.knn_alpha, "subsample percentage (default 100)");
    c_sc->add_option("--knn-seed", sc.knn_seed, "subsample seed");
    c_sc->add_option("--threads", sc.threads, "scoring threads (default: cores / SELGEN_THREADS)");
    c_sc->add_option("--out", sc.out, "output CSV")->required();
    c_sc->add_option("--config", sc.config, "JSON config file (flags win)");

    // combine -----------------------------------------------------------------
    CombineOpts cb;
    auto* c_cb = app.add_subcommand("combine", "Add PRsum / linear-regression abstention columns");
    c_cb->add_option("--scores", cb.scores, "score CSV(s), one per side")->required()->expected(1, 2);
    c_cb->add_option("--meta", cb.meta, "metadata .jsonl providing quality values");
    c_cb->add_option("--quality-metric", cb.quality_metric, "quality map key (default quality)");
    c_cb->add_option("--prsum-ppx", cb.prsum_ppx, "PRsum perplexity feature");
    c_cb->add_option("--prsum-ood", cb.prsum_ood, "PRsum OOD feature (default: first RMD column)");
    c_cb->add_option("--linreg-features", cb.linreg_features,
                     "comma list (default: perplexity + RMD columns)");
    c_cb->add_option("--combiners", cb.combiners, "prsum,linreg (default both)");
    c_cb->add_option("--pr-reference", cb.pr_reference, "pooled|indomain");
    c_cb->add_option("--indomain-dataset", cb.indomain_dataset,
                     "dataset label for --pr-reference indomain");
    c_cb->add_option("--train-frac", cb.train_frac, "linreg train fraction (default 0.1)");
    c_cb->add_option("--seed", cb.seed, "train split seed");
    c_cb->add_option("--out", cb.out, "output CSV")->required();
    c_cb->add_option("--model-out", cb.model_out, "also save the fitted combiner JSON");
    c_cb->add_option("--config", cb.config, "JSON config file (flags win)");

    // eval ----------------------------------------------------------------------
    EvalOpts ev;
    auto* c_ev = app.add_subcommand("eval", "Evaluation metrics and curves");
    c_ev->require_subcommand(1);
    auto add_common_eval = [&](CLI::App* sub) {
        sub->add_option("--scores", ev.scores, "score table CSV")->required();
        sub->add_option("--score-col", ev.score_col, "score column name")->required();
        sub->add_option("--out", ev.out, "output report JSON")->required();
        sub->add_flag("--negate-score", ev.negate_score, "negate the score column first");
        sub->add_flag("--keep-train", ev.keep_train, "keep rows marked is_train=1");
        sub->add_option("--config", ev.config, "JSON config file (flags win)");
    };
    auto* c_auroc = c_ev->add_subcommand("auroc", "Mann-Whitney AUROC, in-domain as negatives");
    add_common_eval(c_auroc);
    c_auroc->add_option("--neg-dataset", ev.neg_dataset, "in-domain dataset label")->required();
    c_auroc->add_option("--pos-dataset", ev.pos_dataset, "OOD dataset (default: all others)");
    auto* c_kend = c_ev->add_subcommand("kendall", "Kendall tau-b against a quality column");
    add_common_eval(c_kend);
    c_kend->add_option("--quality-col", ev.quality_col, "quality column (default quality)");
    auto* c_qa = c_ev->add_subcommand("qa", "Quality-vs-abstention curve and area");
    add_common_eval(c_qa);
    c_qa->add_option("--quality-col", ev.quality_col);
    c_qa->add_option("--alpha-step", ev.alpha_step, "grid step (default 0.01)");
    c_qa->add_option("--csv", ev.csv, "also write curve points CSV");
    c_qa->add_option("--svg", ev.svg, "also render an SVG line chart");
    auto* c_sv = c_ev->add_subcommand("survival", "Per-dataset survival counts");
    add_common_eval(c_sv);
    c_sv->add_option("--alpha-step", ev.alpha_step);
    c_sv->add_option("--csv", ev.csv);
    c_sv->add_option("--svg", ev.svg);

    // attribute -------------------------------------------------------------------
    AttributeOpts at;
    auto* c_at = app.add_subcommand("attribute", "Leave-one-out sentence attribution");
    c_at->add_option("--docs", at.docs, "segmented documents JSONL")->required();
    c_at->add_option("--fg", at.fg, "foreground Gaussian JSON");
    c_at->add_option("--bg", at.bg, "background Gaussian JSON");
    c_at->add_option("--scorer", at.scorer, "rmd_scorer JSON");
    c_at->add_option("--side", at.side, "input|output (default input)");
    c_at->add_option("--mode", at.mode, "compositional|exact");
    c_at->add_option("--out", at.out, "output attributions JSONL")->required();
    c_at->add_option("--config", at.config, "JSON config file (flags win)");

    // ngram -------------------------------------------------------------------------
    NgramOpts ng;
    auto* c_ng = app.add_subcommand("ngram", "n-gram overlap between two token corpora");
    c_ng->add_option("--test", ng.test, "test token JSONL")->required();
    c_ng->add_option("--train", ng.train, "train token JSONL")->required();
    c_ng->add_option("--n-max", ng.n_max, "max n-gram order (default 4)");
    c_ng->add_option("--sample", ng.sample, "subsample each corpus to this many sequences");
    c_ng->add_option("--seed", ng.seed, "subsample seed");
    c_ng->add_option("--out", ng.out, "output report JSON")->required();
    c_ng->add_option("--config", ng.config, "JSON config file (flags win)");

    // synth ----------------------------------------------------------------------------
    auto* c_sy = app.add_subcommand("synth", "Seeded synthetic fixtures");
    c_sy->require_subcommand(1);
    SynthDomainOpts sd;
    auto* c_sd = c_sy->add_subcommand("domain", "One Gaussian domain");
    c_sd->add_option("--name", sd.name);
    c_sd->add_option("--n", sd.n)->required();
    c_sd->add_option("--d", sd.d)->required();
    c_sd->add_option("--seed", sd.seed);
    c_sd->add_option("--mean", sd.mean, "comma list or one value broadcast to d");
    c_sd->add_option("--cov", sd.cov, "identity | diag:v | diag:v1,v2,...");
    c_sd->add_option("--split", sd.split);
    c_sd->add_option("--out-base", sd.out_base, "writes out-base.emb/.jsonl")->required();
    c_sd->add_option("--config", sd.config, "JSON config file (flags win)");
    SynthScenarioOpts ss;
    auto* c_ss = c_sy->add_subcommand("scenario", "Selective-generation scenario with planted quality");
    c_ss->add_option("--seed", ss.seed);
    c_ss->add_option("--n-in", ss.n_in);
    c_ss->add_option("--n-ood", ss.n_ood);
    c_ss->add_option("--d", ss.d);
    c_ss->add_option("--n-fit", ss.n_fit, "fit rows per dataset (default: test sizes)");
    c_ss->add_option("--shift", ss.shift);
    c_ss->add_option("--noise", ss.noise);
    c_ss->add_option("--out-base", ss.out_base, "writes out-base.emb/.jsonl/.planted.json")
        ->required();
    c_ss->add_option("--config", ss.config, "JSON config file (flags win)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << "\n";
        return 1;
    }

    try {
        if (c_fg->parsed()) {
            ConfigOverlay cfg(c_fg, fg.config);
            cfg.apply("embeddings", fg.embeddings);
            cfg.apply("meta", fg.meta);
            cfg.apply("dataset", fg.dataset);
            cfg.apply("split", fg.split);
            cfg.apply("ridge", fg.ridge);
            cfg.apply("max-rows", fg.max_rows);
            cfg.apply("subsample-seed", fg.subsample_seed);
            cfg.apply("out", fg.out);
            return run_fit_gaussian(fg);
        }
        if (c_fc->parsed()) {
            ConfigOverlay cfg(c_fc, fc.config);
            cfg.apply("l2", fc.l2);
            cfg.apply("max-iter", fc.max_iter);
            cfg.apply("tol", fc.tol);
            cfg.apply("seed", fc.seed);
            return run_fit_classifier(fc);
        }
        if (c_sc->parsed()) {
            ConfigOverlay cfg(c_sc, sc.config);
            cfg.apply("side", sc.side);
            cfg.apply("fg", sc.fg);
            cfg.apply("bg", sc.bg);
            cfg.apply("scorer", sc.scorer);
            cfg.apply("classifier", sc.classifier);
            cfg.apply("knn-train", sc.knn_train);
            cfg.apply("knn-k", sc.knn_k);
            cfg.apply("knn-alpha", sc.knn_alpha);
            cfg.apply("knn-seed", sc.knn_seed);
            cfg.apply("threads", sc.threads);
            return run_score(sc);
        }
        if (c_cb->parsed()) {
            ConfigOverlay cfg(c_cb, cb.config);
            cfg.apply("quality-metric", cb.quality_metric);
            cfg.apply("prsum-ppx", cb.prsum_ppx);
            cfg.apply("prsum-ood", cb.prsum_ood);
            cfg.apply("linreg-features", cb.linreg_features);
            cfg.apply("combiners", cb.combiners);
            cfg.apply("pr-reference", cb.pr_reference);
            cfg.apply("indomain-dataset", cb.indomain_dataset);
            cfg.apply("train-frac", cb.train_frac);
            cfg.apply("seed", cb.seed);
            return run_combine(cb);
        }
        if (c_ev->parsed()) {
            if (c_auroc->parsed()) return run_eval_auroc(ev);
            if (c_kend->parsed()) return run_eval_kendall(ev);
            if (c_qa->parsed()) return run_eval_qa(ev);
            if (c_sv->parsed()) return run_eval_survival(ev);
        }
        if (c_at->parsed()) return run_attribute(at);
        if (c_ng->parsed()) {
            ConfigOverlay cfg(c_ng, ng.config);
            cfg.apply("n-max", ng.n_max);
            cfg.apply("sample", ng.sample);
            cfg.apply("seed", ng.seed);
            return run_ngram(ng);
        }
        if (c_sy->parsed()) {
            if (c_sd->parsed()) {
                ConfigOverlay cfg(c_sd, sd.config);
                cfg.apply("name", sd.name);
                cfg.apply("n", sd.n);
                cfg.apply("d", sd.d);
                cfg.apply("seed", sd.seed);
                cfg.apply("mean", sd.mean);
                cfg.apply("cov", sd.cov);
                return run_synth_domain(sd);
            }
            if (c_ss->parsed()) {
                ConfigOverlay cfg(c_ss, ss.config);
                cfg.apply("seed", ss.seed);
                cfg.apply("n-in", ss.n_in);
                cfg.apply("n-ood", ss.n_ood);
                cfg.apply("d", ss.d);
                cfg.apply("n-fit", ss.n_fit);
                cfg.apply("shift", ss.shift);
                cfg.apply("noise", ss.noise);
                return run_synth_scenario(ss);
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cerr << "error: no subcommand executed\n";
    return 1;
}

int dispatch(const std::vector<std::string>& args) {
    std::vector<std::string> owned = args;
    std::vector<char*> argv;
    std::string prog = "selgen";
    argv.push_back(prog.data());
    for (auto& a : owned) argv.push_back(a.data());
    return dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace selgen
