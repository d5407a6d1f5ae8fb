#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "selgen/cli.hpp"
#include "selgen/store.hpp"

using namespace selgen;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("selgen-cli-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

struct ScoreTableProbe {
    double mean = 0.0;
    std::size_t n = 0;
};

json load_json(const std::string& path) { return json::parse(slurp(path)); }

// Shared fixture: a generated scenario with fitted models and a score table.
struct Pipeline {
    TempDir tmp;
    std::string base, fg, bg, scores;

    explicit Pipeline(double shift = 6.0, const std::string& n = "400") {
        base = tmp.file("scn");
        fg = tmp.file("fg.json");
        bg = tmp.file("bg.json");
        scores = tmp.file("scores.csv");
        REQUIRE(dispatch({"synth", "scenario", "--seed", "5", "--n-in", n, "--n-ood", n, "--d",
                          "8", "--shift", std::to_string(shift), "--noise", "0.2", "--out-base",
                          base}) == 0);
        REQUIRE(dispatch({"fit-gaussian", "--embeddings", base + ".emb", "--meta", base + ".jsonl",
                          "--dataset", "indomain", "--split", "fit", "--out", fg}) == 0);
        REQUIRE(dispatch({"fit-gaussian", "--embeddings", base + ".emb", "--meta", base + ".jsonl",
                          "--dataset", "shifted", "--split", "fit", "--out", bg}) == 0);
        REQUIRE(dispatch({"score", "--embeddings", base + ".emb", "--meta", base + ".jsonl",
                          "--fg", fg, "--bg", bg, "--out", scores}) == 0);
    }
};

}  // namespace

TEST_CASE("cli end-to-end pipeline reaches near-perfect AUROC on a large shift") {
    Pipeline p;
    // The score table covers fit and test splits; both draw from the same
    // two distributions, so the detection AUROC is unaffected.
    const std::string report = p.tmp.file("auroc.json");
    REQUIRE(dispatch({"eval", "auroc", "--scores", p.scores, "--score-col", "rmd",
                      "--neg-dataset", "indomain", "--out", report}) == 0);
    const json j = load_json(report);
    CHECK(j["auroc"].get<double>() > 0.99);
    CHECK(j["n_neg"] == 800);
    CHECK(j["n_pos"] == 800);
}

TEST_CASE("cli score output is deterministic and manifested") {
    Pipeline p(4.0, "100");
    const std::string again = p.tmp.file("scores2.csv");
    REQUIRE(dispatch({"score", "--embeddings", p.base + ".emb", "--meta", p.base + ".jsonl",
                      "--fg", p.fg, "--bg", p.bg, "--out", again}) == 0);
    CHECK(slurp(p.scores) == slurp(again));

    const json manifest = load_json(p.tmp.file("manifest.json"));
    CHECK(manifest["command"] == "score");
    CHECK(manifest["inputs"].size() >= 2);
    for (const auto& [path, checksum] : manifest["inputs"].items()) {
        CHECK(checksum.is_string());
        CHECK(checksum.get<std::string>().size() == 16);
    }

    // 4-thread rerun is byte-identical too.
    const std::string threaded = p.tmp.file("scores4.csv");
    REQUIRE(dispatch({"score", "--embeddings", p.base + ".emb", "--meta", p.base + ".jsonl",
                      "--fg", p.fg, "--bg", p.bg, "--threads", "4", "--out", threaded}) == 0);
    CHECK(slurp(p.scores) == slurp(threaded));
}

TEST_CASE("cli usage errors exit 1, data errors exit 2") {
    CHECK(dispatch({"no-such-subcommand"}) == 1);
    CHECK(dispatch({}) == 1);
    CHECK(dispatch({"score", "--embeddings", "/nonexistent.emb", "--meta", "/nonexistent.jsonl",
                    "--out", "/tmp/selgen-nowhere.csv"}) == 2);
}

TEST_CASE("cli combine adds prsum and linreg columns and eval consumes them") {
    Pipeline p(4.0, "300");
    const std::string combined = p.tmp.file("combined.csv");
    REQUIRE(dispatch({"combine", "--scores", p.scores, "--meta", p.base + ".jsonl", "--seed", "7",
                      "--out", combined}) == 0);
    std::ifstream is(combined);
    std::string header;
    std::getline(is, header);
    CHECK(header == "id,dataset,perplexity,input_md,input_rmd,prsum,linreg,quality,is_train");

    const std::string qa = p.tmp.file("qa.json");
    REQUIRE(dispatch({"eval", "qa", "--scores", combined, "--score-col", "prsum",
                      "--quality-col", "quality", "--out", qa, "--csv", p.tmp.file("qa.csv"),
                      "--svg", p.tmp.file("qa.svg")}) == 0);
    const json qj = load_json(qa);
    CHECK(qj["area"].get<double>() > 0.0);
    REQUIRE(qj["points"].size() == 100);

    // At alpha = 0 the mean equals the pool mean of the quality column.
    const ScoreTableProbe probe = [&] {
        ScoreTableProbe out;
        std::ifstream cs(combined);
        std::string line;
        std::getline(cs, line);
        double sum = 0.0;
        std::size_t n = 0, c_quality = 7, c_train = 8;
        while (std::getline(cs, line)) {
            std::stringstream ss(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            if (cells[c_train] == "1" || cells[c_quality].empty()) continue;
            sum += std::stod(cells[c_quality]);
            ++n;
        }
        out.mean = sum / static_cast<double>(n);
        out.n = n;
        return out;
    }();
    CHECK(qj["points"][0]["alpha"].get<double>() == 0.0);
    CHECK(qj["points"][0]["mean_quality"].get<double>() ==
          doctest::Approx(probe.mean).epsilon(1e-12));
    CHECK(qj["points"][0]["n_kept"].get<std::size_t>() == probe.n);

    const std::string sv = p.tmp.file("surv.json");
    REQUIRE(dispatch({"eval", "survival", "--scores", combined, "--score-col", "prsum", "--out",
                      sv, "--csv", p.tmp.file("surv.csv"), "--svg", p.tmp.file("surv.svg")}) == 0);
    const json sj = load_json(sv);
    CHECK(sj["series"].size() == 2);

    const std::string kd = p.tmp.file("kendall.json");
    REQUIRE(dispatch({"eval", "kendall", "--scores", combined, "--score-col", "prsum",
                      "--quality-col", "quality", "--negate-score", "--out", kd}) == 0);
    const json kj = load_json(kd);
    CHECK(kj["tau"].get<double>() > 0.0);
    CHECK(kj["p_value"].get<double>() < 0.05);

    // Frozen in-domain PR reference is a distinct ranking population.
    const std::string frozen = p.tmp.file("frozen.csv");
    REQUIRE(dispatch({"combine", "--scores", p.scores, "--meta", p.base + ".jsonl",
                      "--combiners", "prsum", "--pr-reference", "indomain",
                      "--indomain-dataset", "indomain", "--out", frozen}) == 0);
    CHECK(slurp(frozen) != slurp(combined));
    CHECK(dispatch({"combine", "--scores", p.scores, "--combiners", "prsum",
                    "--pr-reference", "indomain", "--out", p.tmp.file("bad.csv")}) == 2);
    CHECK(dispatch({"combine", "--scores", p.scores, "--meta", p.base + ".jsonl",
                    "--train-frac", "1.5", "--out", p.tmp.file("bad2.csv")}) == 2);
}

TEST_CASE("cli config file fills defaults and flags win") {
    Pipeline p(2.0, "60");
    const std::string cfg = p.tmp.file("cfg.json");
    {
        std::ofstream os(cfg);
        os << R"({"ridge": 0.125, "dataset": "indomain", "split": "fit"})";
    }
    const std::string m1 = p.tmp.file("m1.json");
    REQUIRE(dispatch({"fit-gaussian", "--embeddings", p.base + ".emb", "--meta",
                      p.base + ".jsonl", "--config", cfg, "--out", m1}) == 0);
    CHECK(load_json(m1)["ridge"].get<double>() == 0.125);
    CHECK(load_json(p.tmp.file("manifest.json"))["config"]["ridge"].get<double>() == 0.125);

    const std::string m2 = p.tmp.file("m2.json");
    REQUIRE(dispatch({"fit-gaussian", "--embeddings", p.base + ".emb", "--meta",
                      p.base + ".jsonl", "--config", cfg, "--ridge", "0.5", "--out", m2}) == 0);
    CHECK(load_json(m2)["ridge"].get<double>() == 0.5);  // flag beats config
}

TEST_CASE("cli fit-gaussian --max-rows caps the fit set deterministically") {
    Pipeline p(2.0, "60");
    const std::string m1 = p.tmp.file("cap1.json"), m2 = p.tmp.file("cap2.json");
    for (const auto& out : {m1, m2})
        REQUIRE(dispatch({"fit-gaussian", "--embeddings", p.base + ".emb", "--meta",
                          p.base + ".jsonl", "--dataset", "indomain", "--split", "fit",
                          "--max-rows", "25", "--subsample-seed", "9", "--out", out}) == 0);
    const json a = load_json(m1), b = load_json(m2);
    CHECK(a["n_fit"].get<std::size_t>() == 25);
    CHECK(a["mu"] == b["mu"]);
    CHECK(a["chol_lower"] == b["chol_lower"]);
}

TEST_CASE("cli classifier and knn columns") {
    Pipeline p(5.0, "80");
    const std::string clf = p.tmp.file("clf.json");
    REQUIRE(dispatch({"fit-classifier", "--pos-embeddings", p.base + ".emb", "--pos-meta",
                      p.base + ".jsonl", "--pos-dataset", "shifted", "--pos-split", "fit",
                      "--neg-embeddings", p.base + ".emb", "--neg-meta", p.base + ".jsonl",
                      "--neg-dataset", "indomain", "--neg-split", "fit", "--out", clf}) == 0);

    // KNN training set: in-domain fit rows, exported as a store.
    EmbeddingStore full = load_store(p.base);
    EmbeddingStore train;
    train.matrix = full.rows_at(full.select("indomain", "fit"));
    for (std::size_t i : full.select("indomain", "fit")) train.meta.push_back(full.meta[i]);
    save_store(p.tmp.file("knn_train"), train);

    const std::string scored = p.tmp.file("all_scores.csv");
    REQUIRE(dispatch({"score", "--embeddings", p.base + ".emb", "--meta", p.base + ".jsonl",
                      "--fg", p.fg, "--bg", p.bg, "--classifier", clf, "--knn-train",
                      p.tmp.file("knn_train") + ".emb", "--knn-k", "5", "--out", scored}) == 0);

    const std::string rep_logit = p.tmp.file("auroc_logit.json");
    REQUIRE(dispatch({"eval", "auroc", "--scores", scored, "--score-col", "logit",
                      "--neg-dataset", "indomain", "--out", rep_logit}) == 0);
    CHECK(load_json(rep_logit)["auroc"].get<double>() > 0.95);

    const std::string rep_knn = p.tmp.file("auroc_knn.json");
    REQUIRE(dispatch({"eval", "auroc", "--scores", scored, "--score-col", "knn",
                      "--neg-dataset", "indomain", "--out", rep_knn}) == 0);
    CHECK(load_json(rep_knn)["auroc"].get<double>() > 0.9);
}

TEST_CASE("cli combine joins input- and output-side tables by id") {
    Pipeline p(3.0, "80");
    // Score the same store once per side; the ids coincide, which is the
    // join contract for paired input/output dumps.
    const std::string out_side = p.tmp.file("out_scores.csv");
    REQUIRE(dispatch({"score", "--embeddings", p.base + ".emb", "--meta", p.base + ".jsonl",
                      "--side", "output", "--fg", p.fg, "--bg", p.bg, "--out", out_side}) == 0);
    const std::string combined = p.tmp.file("two_side.csv");
    REQUIRE(dispatch({"combine", "--scores", p.scores, "--scores", out_side, "--meta",
                      p.base + ".jsonl", "--prsum-ood", "output_rmd", "--linreg-features",
                      "perplexity,input_rmd,output_rmd", "--seed", "1", "--out", combined}) == 0);
    std::ifstream is(combined);
    std::string header;
    std::getline(is, header);
    CHECK(header ==
          "id,dataset,perplexity,input_md,input_rmd,output_md,output_rmd,prsum,linreg,quality,"
          "is_train");

    // Two tables of the same side are rejected.
    CHECK(dispatch({"combine", "--scores", p.scores, "--scores", p.scores, "--meta",
                    p.base + ".jsonl", "--out", p.tmp.file("dup.csv")}) == 2);
}

TEST_CASE("cli score accepts a saved rmd_scorer document") {
    Pipeline p(4.0, "60");
    RmdScorer scorer;
    scorer.input_fg = load_gaussian(p.fg);
    scorer.input_bg = load_gaussian(p.bg);
    const std::string sp = p.tmp.file("scorer.json");
    save_model(sp, scorer);

    const std::string out = p.tmp.file("scorer_scores.csv");
    REQUIRE(dispatch({"score", "--embeddings", p.base + ".emb", "--meta", p.base + ".jsonl",
                      "--scorer", sp, "--out", out}) == 0);
    CHECK(slurp(out) == slurp(p.scores));
}

TEST_CASE("cli eval auroc with an explicit positive dataset and --keep-train") {
    Pipeline p(5.0, "60");
    const std::string report = p.tmp.file("pos.json");
    REQUIRE(dispatch({"eval", "auroc", "--scores", p.scores, "--score-col", "rmd",
                      "--neg-dataset", "indomain", "--pos-dataset", "shifted", "--keep-train",
                      "--out", report}) == 0);
    const json j = load_json(report);
    CHECK(j["n_neg"].get<int>() == 120);
    CHECK(j["n_pos"].get<int>() == 120);
    CHECK(j["auroc"].get<double>() > 0.99);
}

TEST_CASE("cli attribute exact mode via scorer document") {
    Pipeline p(3.0, "60");
    RmdScorer scorer;
    scorer.input_fg = load_gaussian(p.fg);
    const std::string sp = p.tmp.file("fg_only.json");
    save_model(sp, scorer);

    const std::string docs = p.tmp.file("docs.jsonl");
    {
        std::ofstream os(docs);
        os << R"({"doc_id":"d1","segments":[)"
           << R"({"segment_id":"s0","token_count":1,"embedding":[0,0,0,0,0,0,0,0]}],)"
           << R"("full_embedding":[1,1,1,1,1,1,1,1],)"
           << R"("variant_embeddings":{"s0":[2,2,2,2,2,2,2,2]}})" << "\n";
    }
    const std::string out = p.tmp.file("attr.jsonl");
    REQUIRE(dispatch({"attribute", "--docs", docs, "--scorer", sp, "--mode", "exact", "--out",
                      out}) == 0);
    std::ifstream is(out);
    std::string line;
    std::getline(is, line);
    const json row = json::parse(line);
    CHECK(row["mode"] == "exact");
}

TEST_CASE("cli ngram --sample subsamples deterministically") {
    TempDir tmp;
    const std::string test = tmp.file("t.jsonl"), train = tmp.file("r.jsonl");
    {
        std::ofstream os(test);
        for (int i = 0; i < 50; ++i)
            os << R"({"id":"t)" << i << R"(","tokens":[)" << i << "," << i + 1 << "]}\n";
    }
    {
        std::ofstream os(train);
        for (int i = 0; i < 50; ++i)
            os << R"({"id":"r)" << i << R"(","tokens":[)" << i << "," << i + 1 << "]}\n";
    }
    const std::string o1 = tmp.file("n1.json"), o2 = tmp.file("n2.json");
    for (const auto& out : {o1, o2})
        REQUIRE(dispatch({"ngram", "--test", test, "--train", train, "--n-max", "2", "--sample",
                          "10", "--seed", "3", "--out", out}) == 0);
    CHECK(load_json(o1) == load_json(o2));
    CHECK(load_json(o1)["test_sequences"].get<int>() == 10);
}

TEST_CASE("cli help exits 0") { CHECK(dispatch({"--help"}) == 0); }

TEST_CASE("cli attribute emits one JSONL row per segment") {
    Pipeline p(3.0, "60");
    const std::string docs = p.tmp.file("docs.jsonl");
    {
        std::ofstream os(docs);
        os << R"({"doc_id":"d1","segments":[)"
           << R"({"segment_id":"s0","token_count":2,"embedding":[0,0,0,0,0,0,0,0]},)"
           << R"({"segment_id":"s1","token_count":1,"embedding":[4,4,4,4,4,4,4,4]}]})" << "\n";
    }
    const std::string out = p.tmp.file("attr.jsonl");
    REQUIRE(dispatch({"attribute", "--docs", docs, "--fg", p.fg, "--bg", p.bg, "--mode",
                      "compositional", "--out", out}) == 0);
    std::ifstream is(out);
    std::string line;
    std::vector<json> rows;
    while (std::getline(is, line))
        if (!line.empty()) rows.push_back(json::parse(line));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0]["doc_id"] == "d1");
    CHECK(rows[0]["mode"] == "compositional");
    // The far segment pushes the document toward the shifted domain.
    CHECK(rows[1]["segment_id"] == "s1");
    CHECK(rows[1]["attribution"].get<double>() > 0.0);
}

TEST_CASE("cli ngram report") {
    TempDir tmp;
    const std::string test = tmp.file("test.jsonl"), train = tmp.file("train.jsonl");
    {
        std::ofstream os(test);
        os << R"({"id":"t1","tokens":[1,2,3,4]})" << "\n";
    }
    {
        std::ofstream os(train);
        os << R"({"id":"r1","tokens":[1,2,9]})" << "\n";
        os << R"({"id":"r2","tokens":[7]})" << "\n";
    }
    const std::string out = tmp.file("ngram.json");
    REQUIRE(dispatch({"ngram", "--test", test, "--train", train, "--n-max", "2", "--out", out}) ==
            0);
    const json j = load_json(out);
    CHECK(j["per_n"][0]["overlap_pct"].get<double>() == doctest::Approx(50.0));
    CHECK(j["per_n"][1]["overlap_pct"].get<double>() == doctest::Approx(100.0 / 3.0));
}
