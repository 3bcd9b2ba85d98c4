#include "hybridir/cli.hpp"

#include "hybridir/binary_io.hpp"
#include "hybridir/corpus.hpp"
#include "hybridir/dense.hpp"
#include "hybridir/embedder.hpp"
#include "hybridir/eval.hpp"
#include "hybridir/hybrid.hpp"
#include "hybridir/lexical.hpp"
#include "hybridir/stemmer.hpp"
#include "hybridir/trec.hpp"
#include "hybridir/weaksup.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <chrono>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_set>

namespace fs = std::filesystem;
using nlohmann::json;

namespace hybridir {

namespace {

struct Settings {
    double k1 = 0.9;
    double b = 0.4;
    std::size_t fb_docs = 10;
    std::size_t fb_terms = 10;
    double alpha = 0.5;
    double mu = 1000.0;
    std::size_t window = kDefaultPassageWindow;
    std::size_t stride = kDefaultPassageStride;
    std::size_t passage_k = 10000;
    std::size_t c = 1000;
    std::vector<std::size_t> cutoffs = {500, 1000, 1500, 2000};
    std::size_t n_probe = 16;
    std::size_t n_centroids = 0;  // 0: round(sqrt(passages))
    std::uint64_t ann_seed = 7;
    std::size_t kmeans_iterations = 25;
    std::uint64_t training_seed = 13;
    double negative_ratio = 1.0;
    std::size_t min_df = 5;
    std::size_t min_results = 10;
    std::size_t top_docs = 10;
    std::size_t max_passages = 5;
    std::size_t shard_size = 100000;
    std::string passage_order = "document";
    std::string provider = "baseline:dim=128,seed=42";
    std::string stemmer = "porter";
    std::string stopwords = "builtin";
    std::string induction = "lexical";
    std::size_t threads = 0;
};

#define HYBRIDIR_SETTINGS_FIELDS(X)                                                                             \
    X(k1) X(b) X(fb_docs) X(fb_terms) X(alpha) X(mu) X(window) X(stride) X(passage_k) X(c) X(cutoffs) X(n_probe) \
        X(n_centroids) X(ann_seed) X(kmeans_iterations) X(training_seed) X(negative_ratio) X(min_df)           \
            X(min_results) X(top_docs) X(max_passages) X(shard_size) X(passage_order) X(provider) X(stemmer)    \
                X(stopwords) X(induction) X(threads)

json to_json(const Settings& s) {
    json j;
#define X(name) j[#name] = s.name;
    HYBRIDIR_SETTINGS_FIELDS(X)
#undef X
    return j;
}

void apply_overrides(Settings& s, const json& j, const std::string& source) {
    if (!j.is_object()) throw ParameterError(source + ": config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        try {
#define X(name)                                  \
    if (key == #name) {                          \
        value.get_to(s.name);                    \
        known = true;                            \
    }
            HYBRIDIR_SETTINGS_FIELDS(X)
#undef X
        } catch (const json::exception& e) {
            throw ParameterError(source + ": bad value for \"" + key + "\": " + e.what());
        }
        if (!known) throw ParameterError(source + ": unknown config key \"" + key + "\"");
    }
}

#undef HYBRIDIR_SETTINGS_FIELDS

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IngestError(path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

void require_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw IoError("no such file: " + path.string());
}

/// Sidecar describing how an artifact was produced.
class Manifest {
public:
    Manifest(std::string command, const Settings& settings) {
        body_ = {{"tool", "hybridir"},
                 {"version", kToolVersion},
                 {"defaults_version", kDefaultsVersion},
                 {"command", std::move(command)},
                 {"created", utc_timestamp()},
                 {"config", to_json(settings)},
                 {"config_hash", hex64(fnv1a(to_json(settings).dump()))},
                 {"inputs", json::object()},
                 {"outputs", json::object()}};
    }

    void input(const std::string& role, const fs::path& path) {
        body_["inputs"][role] = {{"path", path.string()}, {"digest", file_digest(path)}};
    }
    void output(const std::string& role, const fs::path& path) {
        body_["outputs"][role] = {{"path", path.filename().string()}, {"digest", file_digest(path)}};
    }
    json& operator[](const std::string& key) { return body_[key]; }
    void write(const fs::path& path) const { write_text(path, body_.dump(2) + "\n"); }

private:
    json body_;
};

fs::path sidecar(const fs::path& artifact) { return fs::path(artifact.string() + ".manifest.json"); }

// ---- index directory ----

constexpr const char* kLexicalFile = "lexical.idx";
constexpr const char* kStatsFile = "stats.json";
constexpr const char* kTokensFile = "tokens.jsonl";
constexpr const char* kPassagesFile = "passages.tsv";
constexpr const char* kStopwordsFile = "stopwords.txt";
constexpr const char* kManifestFile = "manifest.json";

struct IndexDir {
    fs::path dir;
    json manifest;
    NormalizationConfig normalization;
    LexicalIndex index;
    std::size_t window = kDefaultPassageWindow;
    std::size_t stride = kDefaultPassageStride;
};

NormalizationConfig normalization_from(const Settings& s) {
    NormalizationConfig n;
    n.stemmer = make_stemmer(s.stemmer);
    if (s.stopwords == "builtin") {
        n.stopwords.insert(default_stopwords().begin(), default_stopwords().end());
    } else if (s.stopwords != "none") {
        n.stopwords = load_stopwords(s.stopwords);
    }
    return n;
}

IndexDir open_index(const fs::path& dir) {
    IndexDir out;
    out.dir = dir;
    require_file(dir / kManifestFile);
    require_file(dir / kLexicalFile);
    out.manifest = read_json(dir / kManifestFile);
    const auto& norm = out.manifest.at("normalization");
    out.normalization.stemmer = make_stemmer(norm.at("stemmer").get<std::string>());
    out.normalization.stopwords = load_stopwords(dir / kStopwordsFile);
    out.window = out.manifest.at("passages").at("window").get<std::size_t>();
    out.stride = out.manifest.at("passages").at("stride").get<std::size_t>();
    out.index = LexicalIndex::load(dir / kLexicalFile);
    return out;
}

Corpus load_tokens(const fs::path& dir) {
    const fs::path path = dir / kTokensFile;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<Document> docs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = json::parse(line);
            docs.push_back({j.at("doc_id").get<std::string>(), {}, j.at("tokens").get<Tokens>()});
        } catch (const json::exception& e) {
            throw IngestError(path.string() + ":line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return Corpus(std::move(docs));
}

// ---- commands ----

struct IndexArgs {
    std::string corpus;
    std::string format = "jsonl";
    std::string out;
};

int cmd_index(const IndexArgs& a, const Settings& s, std::ostream& out) {
    require_file(a.corpus);
    const auto format = parse_corpus_format(a.format);
    const auto normalization = normalization_from(s);
    if (s.window == 0 || s.stride == 0) throw ParameterError("window and stride must be positive");

    const fs::path dir(a.out);
    fs::create_directories(dir);
    std::ofstream tokens(dir / kTokensFile, std::ios::binary | std::ios::trunc);
    std::ofstream passages(dir / kPassagesFile, std::ios::binary | std::ios::trunc);
    if (!tokens || !passages) throw IoError("cannot write into " + dir.string());
    passages << "passage_id\tdoc_id\tordinal\toffset\tlength\n";

    LexicalIndex::Builder builder;
    std::size_t n_passages = 0;
    for_each_document(a.corpus, format, normalization, [&](Document&& doc) {
        tokens << json{{"doc_id", doc.doc_id}, {"tokens", doc.tokens}}.dump() << '\n';
        for (const auto& p : split_passages(doc.doc_id, doc.tokens, s.window, s.stride)) {
            passages << p.passage_id() << '\t' << p.doc_id << '\t' << p.ordinal << '\t' << p.offset << '\t'
                     << p.tokens.size() << '\n';
            ++n_passages;
        }
        builder.add(doc.doc_id, doc.tokens);
    });
    tokens.close();
    passages.close();
    if (!tokens || !passages) throw IoError("write failed in " + dir.string());

    const LexicalIndex index = std::move(builder).finish();
    index.save(dir / kLexicalFile);
    write_text(dir / kStatsFile, index.stats_json().dump(2) + "\n");
    std::string stop_text;
    for (const auto& w : normalization.stopwords) stop_text += w + "\n";
    write_text(dir / kStopwordsFile, stop_text);

    Manifest m("index", s);
    m.input("corpus", a.corpus);
    m["normalization"] = {{"stemmer", normalization.stemmer->name()},
                          {"stopwords", s.stopwords == "builtin" ? std::string("builtin:") +
                                                                       std::string(kStopwordListVersion)
                                                                 : s.stopwords}};
    m["passages"] = {{"window", s.window}, {"stride", s.stride}, {"count", n_passages}};
    m["format"] = a.format;
    for (const char* f : {kLexicalFile, kStatsFile, kTokensFile, kPassagesFile, kStopwordsFile}) m.output(f, dir / f);
    m.write(dir / kManifestFile);

    out << "indexed " << index.num_docs() << " documents, " << index.num_terms() << " terms, " << n_passages
        << " passages into " << dir.string() << '\n';
    return kExitOk;
}

struct GenTrainingArgs {
    std::string index;
    std::string out;
};

int cmd_gen_training(const GenTrainingArgs& a, const Settings& s, std::ostream& out) {
    const IndexDir idx = open_index(a.index);
    const Corpus corpus = load_tokens(idx.dir);

    TrainingConfig config;
    config.mining = {s.min_df, s.min_results};
    config.positives.top_docs = s.top_docs;
    config.positives.max_passages = s.max_passages;
    config.positives.window = idx.window;
    config.positives.stride = idx.stride;
    config.positives.order = parse_passage_order(s.passage_order);
    config.positives.bm25 = {s.k1, s.b};
    config.seed = s.training_seed;
    config.negative_ratio = s.negative_ratio;
    config.shard_size = s.shard_size;
    config.threads = s.threads;

    std::vector<std::string> vocab;
    vocab.reserve(idx.index.num_terms());
    for (TermId t = 0; t < idx.index.num_terms(); ++t) vocab.push_back(idx.index.term(t));

    const auto summary = generate_training_data(corpus, idx.index, vocab, config, a.out);
    out << "bi-gram queries: " << summary.bigram_queries << '\n'
        << "tri-gram queries: " << summary.trigram_queries << '\n'
        << "positive pairs: " << summary.positive_pairs << '\n'
        << "positives: " << summary.positives << '\n'
        << "negatives: " << summary.negatives << '\n'
        << "shards: " << summary.shards.size() << '\n'
        << "output digest: " << summary.output_digest << '\n';

    auto manifest = read_json(fs::path(a.out) / "manifest.json");
    manifest["tool"] = {{"name", "hybridir"}, {"version", kToolVersion}, {"created", utc_timestamp()}};
    manifest["inputs"] = {{"index", {{"path", a.index}, {"digest", file_digest(idx.dir / kLexicalFile)}}}};
    write_text(fs::path(a.out) / "manifest.json", manifest.dump(2) + "\n");
    return summary.positives + summary.negatives == 0 ? kExitEmpty : kExitOk;
}

struct EmbedArgs {
    std::string index;
    std::string out;
    bool no_ann = false;
};

int cmd_embed(const EmbedArgs& a, const Settings& s, std::ostream& out) {
    const IndexDir idx = open_index(a.index);
    const Corpus corpus = load_tokens(idx.dir);
    const auto provider = make_provider(s.provider, idx.index);
    const fs::path path(a.out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const std::size_t count = embed_corpus(*provider, corpus, path, idx.window, idx.stride);

    Manifest m("embed", s);
    m.input("index", idx.dir / kLexicalFile);
    m["provider"] = provider->describe();
    m["dim"] = provider->dim();
    m["count"] = count;
    m.output("vectors", path);

    if (!a.no_ann && count > 0) {
        VectorIndex vectors = VectorIndex::load(path);
        const std::size_t cells =
            s.n_centroids ? std::min(s.n_centroids, count)
                          : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(std::sqrt(count))));
        vectors.build_ann(cells, s.ann_seed, {s.kmeans_iterations});
        const fs::path ivf(path.string() + ".ivf");
        vectors.save_ann(ivf);
        m["ann"] = {{"n_centroids", cells}, {"seed", s.ann_seed}, {"max_iterations", s.kmeans_iterations}};
        m.output("ann", ivf);
    }
    m.write(sidecar(path));
    out << "embedded " << count << " passages (dim " << provider->dim() << ") into " << path.string() << '\n';
    return count == 0 ? kExitEmpty : kExitOk;
}

struct SearchArgs {
    std::string index;
    std::string vectors;
    std::string provider;
    std::string queries;
    std::string mode = "hybrid";
    std::string out;
    std::optional<std::size_t> lexical_c;
    std::optional<std::size_t> semantic_c;
    bool sequential = false;
};

int cmd_search(const SearchArgs& a, const Settings& s, std::ostream& out, std::ostream& err) {
    if (a.mode != "lexical" && a.mode != "semantic" && a.mode != "hybrid") {
        throw ParameterError("unknown mode \"" + a.mode + "\" (expected lexical, semantic or hybrid)");
    }
    const IndexDir idx = open_index(a.index);
    const auto queries = read_queries(a.queries, idx.normalization);

    HybridConfig config;
    config.c = s.c;
    config.lexical_c = a.lexical_c;
    config.semantic_c = a.semantic_c;
    config.passage_k = s.passage_k;
    config.n_probe = s.n_probe;
    config.bm25 = {s.k1, s.b};
    config.feedback = {s.fb_docs, s.fb_terms, s.alpha, s.mu};
    if (s.induction == "lexical") {
        config.induction = MergeInduction::kLexical;
    } else if (s.induction == "pool") {
        config.induction = MergeInduction::kPool;
    } else {
        throw ParameterError("unknown induction \"" + s.induction + "\"");
    }
    config.parallel = !a.sequential;
    config.validate();

    std::optional<VectorIndex> vectors;
    std::unique_ptr<EmbeddingProvider> provider;
    std::string provider_spec = a.provider;
    if (a.mode != "lexical") {
        if (a.vectors.empty()) throw ParameterError("--vectors is required for mode " + a.mode);
        require_file(a.vectors);
        vectors = VectorIndex::load(a.vectors);
        const fs::path ivf(a.vectors + ".ivf");
        if (!vectors->empty() && fs::exists(ivf)) vectors->load_ann(ivf);
        if (provider_spec.empty() && fs::exists(sidecar(a.vectors))) {
            provider_spec = read_json(sidecar(a.vectors)).value("provider", "");
        }
        if (provider_spec.empty()) provider_spec = s.provider;
        provider = make_provider(provider_spec, idx.index);
    }
    const VectorIndex empty_vectors(provider ? provider->dim() : 1);
    const HybridIndexes indexes{idx.index, vectors ? *vectors : empty_vectors, provider.get()};

    const fs::path run_path(a.out);
    if (run_path.has_parent_path()) fs::create_directories(run_path.parent_path());
    std::ofstream run(run_path, std::ios::binary | std::ios::trunc);
    if (!run) throw IoError("cannot write " + run_path.string());

    ArmTimings sum;
    std::size_t non_empty = 0;
    std::size_t fallbacks = 0;
    std::size_t semantic_empty = 0;
    for (const auto& q : queries) {
        if (!q.answerable()) err << "warning: query " << q.query_id << " has no terms after normalization\n";
        ScoredList list;
        if (a.mode == "lexical") {
            const auto t = std::chrono::steady_clock::now();
            list = lexical_arm(idx.index, q, config.c, config.bm25);
            sum.lexical_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
        } else if (a.mode == "semantic") {
            std::vector<std::string> warnings;
            const auto t = std::chrono::steady_clock::now();
            list = semantic_arm(indexes.vectors, provider.get(), q, config.c, config.passage_k, config.n_probe,
                                &warnings);
            sum.semantic_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t).count();
            for (const auto& w : warnings) err << "warning: " << w << '\n';
        } else {
            auto result = retrieve_hybrid(q, indexes, config);
            for (const auto& w : result.warnings) err << "warning: " << w << '\n';
            sum.lexical_ms += result.timings.lexical_ms;
            sum.semantic_ms += result.timings.semantic_ms;
            sum.merge_ms += result.timings.merge_ms;
            sum.total_ms += result.timings.total_ms;
            fallbacks += result.lexical_fallback;
            semantic_empty += result.semantic_empty;
            list = std::move(result.final_list);
        }
        if (!list.empty()) ++non_empty;
        write_run(run, q.query_id, list, a.mode);
    }
    run.close();
    if (!run) throw IoError("write failed: " + run_path.string());

    Manifest m("search", s);
    m.input("index", idx.dir / kLexicalFile);
    m.input("queries", a.queries);
    if (vectors) {
        m.input("vectors", a.vectors);
        m["provider"] = provider_spec;
    }
    m["mode"] = a.mode;
    m["parallel_arms"] = config.parallel;
    m["queries"] = queries.size();
    m.output("run", run_path);
    m.write(sidecar(run_path));

    const double n = queries.empty() ? 1.0 : static_cast<double>(queries.size());
    out << "queries: " << queries.size() << " (" << non_empty << " with results)\n";
    out << "mean per query: lexical " << sum.lexical_ms / n << " ms, semantic " << sum.semantic_ms / n << " ms";
    if (a.mode == "hybrid") {
        const double slowest = std::max(sum.lexical_ms, sum.semantic_ms);
        out << ", merge " << sum.merge_ms / n << " ms, total " << sum.total_ms / n << " ms";
        if (slowest > 0) out << ", total/max(arm) " << sum.total_ms / slowest;
        out << "\nsemantic arm empty: " << semantic_empty << ", lexical fallback: " << fallbacks;
    }
    out << '\n';
    return non_empty == 0 ? kExitEmpty : kExitOk;
}

struct EvaluateArgs {
    std::vector<std::string> runs;
    std::string qrels;
    std::vector<std::size_t> cutoffs;
    std::string report;
    std::vector<std::string> oracle;
    std::string oracle_out;
};

std::pair<std::string, fs::path> run_spec(const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq != std::string::npos && eq > 0) return {spec.substr(0, eq), spec.substr(eq + 1)};
    return {fs::path(spec).stem().string(), spec};
}

Run oracle_run(const Run& lexical, const Run& semantic, const Qrels& qrels, std::size_t c) {
    Run out;
    std::set<std::string> qids;
    for (const auto& [qid, _] : lexical) qids.insert(qid);
    for (const auto& [qid, _] : semantic) qids.insert(qid);
    for (const auto& qid : qids) {
        auto lex = lexical.count(qid) ? lexical.at(qid).truncated(c) : ScoredList{};
        auto sem = semantic.count(qid) ? semantic.at(qid).truncated(c) : ScoredList{};
        out.emplace(qid, oracle_merge(lex, sem, qrels.relevant(qid), c));
    }
    return out;
}

int cmd_evaluate(const EvaluateArgs& a, const Settings& s, std::ostream& out) {
    require_file(a.qrels);
    const Qrels qrels = Qrels::load(a.qrels);
    const std::vector<std::size_t> cutoffs = a.cutoffs.empty() ? s.cutoffs : a.cutoffs;

    std::vector<std::pair<std::string, Run>> runs;
    Manifest m("evaluate", s);
    m.input("qrels", a.qrels);
    for (const auto& spec : a.runs) {
        auto [name, path] = run_spec(spec);
        require_file(path);
        runs.emplace_back(name, read_run(path));
        m.input("run:" + name, path);
    }
    EvalReport report;
    if (a.oracle.empty()) {
        if (runs.empty()) throw ParameterError("no runs given");
        report = evaluate_runs(runs, qrels, cutoffs);
    } else {
        if (a.oracle.size() != 2) throw ParameterError("--oracle takes a lexical run and a semantic run");
        std::vector<std::pair<std::string, Run>> pair;
        for (const auto& spec : a.oracle) {
            auto [name, path] = run_spec(spec);
            require_file(path);
            pair.emplace_back(name, read_run(path));
            m.input("oracle:" + name, path);
        }
        report.cutoffs = cutoffs;
        for (std::size_t c : cutoffs) {
            std::vector<std::pair<std::string, Run>> at_c = {pair[0]};
            at_c.emplace_back("oracle", oracle_run(pair[0].second, pair[1].second, qrels, c));
            if (!a.oracle_out.empty()) {
                write_run(fs::path(a.oracle_out + "." + std::to_string(c)), at_c.back().second, "oracle");
            }
            for (const auto& r : runs) at_c.push_back(r);
            const std::size_t one[] = {c};
            auto part = evaluate_runs(at_c, qrels, one);
            report.summaries.push_back(std::move(part.summaries[0]));
            report.comparisons.push_back(std::move(part.comparisons[0]));
        }
    }
    const std::string text = report.to_text();
    out << text;
    if (!a.report.empty()) {
        const fs::path json_path(a.report);
        write_text(json_path, report.to_json().dump(2) + "\n");
        const fs::path text_path(a.report + ".txt");
        write_text(text_path, text);
        m.output("report", json_path);
        m.output("table", text_path);
        m.write(sidecar(json_path));
    }
    return kExitOk;
}

struct AnalyzeArgs {
    std::string kind;
    std::string baseline;
    std::string test;
    std::string qrels;
    std::string index;
    std::string queries;
    std::string query;
    std::vector<std::string> docs;
    std::vector<double> edges = {-50, -10, -1, 1, 10, 50};
    std::vector<std::size_t> lexical_cs;
    std::size_t semantic_c = 2000;
    std::size_t n = 50;
    std::size_t per_query = 5;
    std::optional<std::size_t> c;
    std::string out;
};

Run load_run_arg(const std::string& path, const char* flag) {
    if (path.empty()) throw ParameterError(std::string(flag) + " is required");
    require_file(path);
    return read_run(path);
}

Qrels load_qrels_arg(const std::string& path) {
    if (path.empty()) throw ParameterError("--qrels is required");
    require_file(path);
    return Qrels::load(path);
}

IndexDir load_index_arg(const std::string& path) {
    if (path.empty()) throw ParameterError("--index is required");
    return open_index(path);
}

std::vector<std::string> relevant_only_in(const ScoredList& a, const ScoredList& b,
                                          const std::unordered_set<std::string>& relevant) {
    std::unordered_set<std::string> in_b;
    for (const auto& e : b) in_b.insert(e.doc_id);
    std::vector<std::string> out;
    for (const auto& e : a) {
        if (relevant.count(e.doc_id) && !in_b.count(e.doc_id)) out.push_back(e.doc_id);
    }
    return out;
}

int cmd_analyze(const AnalyzeArgs& a, const Settings& s, std::ostream& out) {
    const std::size_t c = a.c.value_or(s.c);
    std::string text;
    json data;
    if (a.kind == "quartiles") {
        const auto groups = quartile_analysis(load_run_arg(a.baseline, "--baseline"), load_run_arg(a.test, "--test"),
                                              load_qrels_arg(a.qrels), c);
        const auto b = fs::path(a.baseline).stem().string();
        const auto t = fs::path(a.test).stem().string();
        text = quartile_table(groups, b, t);
        for (const auto& g : groups) {
            data.push_back({{"queries", g.query_ids}, {b, g.baseline_mean}, {t, g.test_mean}});
        }
    } else if (a.kind == "histogram") {
        const auto h = improvement_histogram(load_run_arg(a.baseline, "--baseline"), load_run_arg(a.test, "--test"),
                                             load_qrels_arg(a.qrels), c, a.edges);
        text = h.to_csv();
    } else if (a.kind == "properties") {
        const auto qrels = load_qrels_arg(a.qrels);
        const auto idx = load_index_arg(a.index);
        if (a.queries.empty()) throw ParameterError("--queries is required");
        const auto queries = read_queries(a.queries, idx.normalization);
        const auto base = evaluate_run(load_run_arg(a.baseline, "--baseline"), qrels, c, "baseline");
        const auto test = evaluate_run(load_run_arg(a.test, "--test"), qrels, c, "test");
        const auto cmp = compare_runs(base, test);
        const auto groups = property_analysis(cmp, queries, idx.index);
        text = property_table(groups);
        for (const auto& q : queries) {
            if (q.tokens.empty()) continue;
            const auto p = query_properties(q.tokens, idx.index);
            data.push_back({{"query_id", q.query_id},
                            {"mean_idf", p.mean_idf},
                            {"max_idf", p.max_idf},
                            {"std_idf", p.std_idf},
                            {"n_terms", p.n_terms}});
        }
    } else if (a.kind == "terms") {
        const auto idx = load_index_arg(a.index);
        std::vector<std::pair<std::string, std::vector<std::string>>> sets;
        if (!a.docs.empty()) {
            sets.emplace_back("docs", a.docs);
        } else {
            if (a.query.empty()) throw ParameterError("--query or --docs is required");
            const auto qrels = load_qrels_arg(a.qrels);
            const auto base = load_run_arg(a.baseline, "--baseline");
            const auto test = load_run_arg(a.test, "--test");
            const auto lb = base.count(a.query) ? base.at(a.query).truncated(c) : ScoredList{};
            const auto lt = test.count(a.query) ? test.at(a.query).truncated(c) : ScoredList{};
            sets.emplace_back(fs::path(a.baseline).stem().string(), relevant_only_in(lb, lt, qrels.relevant(a.query)));
            sets.emplace_back(fs::path(a.test).stem().string(), relevant_only_in(lt, lb, qrels.relevant(a.query)));
        }
        std::vector<std::vector<std::string>> lists;
        for (const auto& [name, docs] : sets) {
            std::vector<std::string> terms;
            json entry = {{"name", name}, {"documents", docs.size()}, {"terms", json::array()}};
            text += name + " (" + std::to_string(docs.size()) + " documents):";
            if (!docs.empty()) {
                for (const auto& [term, score] : representative_terms(docs, idx.index, a.n, idx.normalization)) {
                    terms.push_back(term);
                    entry["terms"].push_back({{"term", term}, {"score", score}});
                    text += " " + term;
                }
            }
            text += "\n";
            lists.push_back(std::move(terms));
            data.push_back(std::move(entry));
        }
        if (lists.size() == 2 && !lists[0].empty() && !lists[1].empty()) {
            const double j = jaccard(lists[0], lists[1]);
            text += "jaccard " + std::to_string(j) + "\n";
        }
    } else if (a.kind == "lengths") {
        const auto idx = load_index_arg(a.index);
        const auto profile = relevant_length_profile(load_run_arg(a.baseline, "--baseline"),
                                                     load_run_arg(a.test, "--test"), load_qrels_arg(a.qrels),
                                                     idx.index, a.per_query);
        text = profile.to_csv(fs::path(a.baseline).stem().string(), fs::path(a.test).stem().string());
    } else if (a.kind == "unique") {
        const std::vector<std::size_t> cs = a.lexical_cs.empty() ? s.cutoffs : a.lexical_cs;
        const auto points = unique_relevant_curve(load_run_arg(a.baseline, "--baseline"),
                                                  load_run_arg(a.test, "--test"), load_qrels_arg(a.qrels), cs,
                                                  a.semantic_c);
        text = unique_relevant_csv(points);
    } else {
        throw ParameterError("unknown analysis \"" + a.kind + "\"");
    }
    if (a.out.empty()) {
        out << text;
    } else {
        write_text(a.out, text);
        if (!data.is_null()) write_text(a.out + ".json", data.dump(2) + "\n");
        out << "wrote " << a.out << '\n';
    }
    return kExitOk;
}

std::optional<std::string> prescan_config(const std::vector<std::string>& args) {
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    if (const char* env = std::getenv("HYBRIDIR_CONFIG"); env && *env) return std::string(env);
    return std::nullopt;
}

void add_settings_options(CLI::App& app, Settings& s) {
    app.add_option("--k1", s.k1, "BM25 k1")->capture_default_str();
    app.add_option("--b", s.b, "BM25 b")->capture_default_str();
    app.add_option("--fb-docs", s.fb_docs, "RM3 feedback documents")->capture_default_str();
    app.add_option("--fb-terms", s.fb_terms, "RM3 expansion terms")->capture_default_str();
    app.add_option("--alpha", s.alpha, "RM3 weight of the feedback model")->capture_default_str();
    app.add_option("--mu", s.mu, "Dirichlet prior")->capture_default_str();
    app.add_option("--passage-k", s.passage_k, "passages retrieved before aggregation")->capture_default_str();
    app.add_option("--n-probe", s.n_probe, "IVF cells probed")->capture_default_str();
    app.add_option("--threads", s.threads, "worker threads (0: all cores)")->capture_default_str();
}

}  // namespace

json defaults_table() {
    json j = to_json(Settings{});
    j["defaults_version"] = kDefaultsVersion;
    return j;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Settings settings;
    std::string config_path;
    try {
        if (auto path = prescan_config(args)) {
            config_path = *path;
            apply_overrides(settings, read_json(config_path), config_path);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    CLI::App app{"hybridir: hybrid lexical + semantic retrieval with RM3 merging"};
    app.set_version_flag("--version", kToolVersion);
    app.fallthrough();
    app.add_option("--config", config_path, "JSON config overriding the defaults (also HYBRIDIR_CONFIG)");
    bool show_config = false;
    app.add_flag("--show-config", show_config, "print the effective configuration and exit");
    add_settings_options(app, settings);

    IndexArgs index_args;
    auto* index_cmd = app.add_subcommand("index", "build the lexical index and passage table");
    index_cmd->add_option("--corpus", index_args.corpus, "corpus file")->required();
    index_cmd->add_option("--format", index_args.format, "jsonl or trec-sgml")->capture_default_str();
    index_cmd->add_option("--out", index_args.out, "index directory")->required();
    index_cmd->add_option("--stemmer", settings.stemmer, "porter or none")->capture_default_str();
    index_cmd->add_option("--stopwords", settings.stopwords, "builtin, none or a word-list file")
        ->capture_default_str();
    index_cmd->add_option("--window", settings.window, "passage window in tokens")->capture_default_str();
    index_cmd->add_option("--stride", settings.stride, "passage stride in tokens")->capture_default_str();

    GenTrainingArgs gen_args;
    auto* gen_cmd = app.add_subcommand("gen-training", "generate weakly supervised training pairs");
    gen_cmd->add_option("--index", gen_args.index, "index directory")->required();
    gen_cmd->add_option("--out", gen_args.out, "output directory")->required();
    gen_cmd->add_option("--seed", settings.training_seed, "global seed")->capture_default_str();
    gen_cmd->add_option("--neg-ratio", settings.negative_ratio, "negatives per positive")->capture_default_str();
    gen_cmd->add_option("--min-df", settings.min_df, "minimum n-gram document frequency")->capture_default_str();
    gen_cmd->add_option("--min-results", settings.min_results, "minimum BM25 result count")
        ->capture_default_str();
    gen_cmd->add_option("--top-docs", settings.top_docs, "BM25 documents searched for positives")
        ->capture_default_str();
    gen_cmd->add_option("--max-passages", settings.max_passages, "positive passages per document")
        ->capture_default_str();
    gen_cmd->add_option("--passage-order", settings.passage_order, "document or bm25-passage-score")
        ->capture_default_str();
    gen_cmd->add_option("--shard-size", settings.shard_size, "pairs per shard")->capture_default_str();

    EmbedArgs embed_args;
    auto* embed_cmd = app.add_subcommand("embed", "embed every passage and build the ANN index");
    embed_cmd->add_option("--index", embed_args.index, "index directory")->required();
    embed_cmd->add_option("--provider", settings.provider,
                          "baseline:dim=D,seed=S[,min_occ=M][,concepts=PATH] | tsv:PATH | vectors:PATH")
        ->capture_default_str();
    embed_cmd->add_option("--out", embed_args.out, "vector file")->required();
    embed_cmd->add_option("--n-centroids", settings.n_centroids, "IVF cells (0: sqrt of passage count)")
        ->capture_default_str();
    embed_cmd->add_option("--ann-seed", settings.ann_seed, "k-means seed")->capture_default_str();
    embed_cmd->add_flag("--no-ann", embed_args.no_ann, "skip the ANN build (exact search only)");

    SearchArgs search_args;
    auto* search_cmd = app.add_subcommand("search", "retrieve a TREC run for a query file");
    search_cmd->add_option("--index", search_args.index, "index directory")->required();
    search_cmd->add_option("--vectors", search_args.vectors, "vector file (semantic and hybrid modes)");
    search_cmd->add_option("--provider", search_args.provider, "query embedding provider (default: from vectors)");
    search_cmd->add_option("--queries", search_args.queries, "qid<TAB>text file")->required();
    search_cmd->add_option("--mode", search_args.mode, "lexical, semantic or hybrid")->capture_default_str();
    search_cmd->add_option("--c", settings.c, "result list size")->capture_default_str();
    search_cmd->add_option("--lexical-c", search_args.lexical_c, "lexical list size (default: c)");
    search_cmd->add_option("--semantic-c", search_args.semantic_c, "semantic list size (default: c)");
    search_cmd->add_option("--induction", settings.induction, "RM3 induced from: lexical or pool")
        ->capture_default_str();
    search_cmd->add_flag("--sequential", search_args.sequential, "run the two arms one after the other");
    search_cmd->add_option("--out", search_args.out, "run file")->required();

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "recall, MAP, #rel and RI for runs");
    eval_cmd->add_option("--run", eval_args.runs, "[name=]run file; the first is the baseline");
    eval_cmd->add_option("--qrels", eval_args.qrels, "qrels file")->required();
    eval_cmd->add_option("--c", eval_args.cutoffs, "cutoffs (default: the standard list)")->delimiter(',');
    eval_cmd->add_option("--report", eval_args.report, "JSON report path (text table beside it)");
    eval_cmd->add_option("--oracle", eval_args.oracle, "lexical and semantic runs for the oracle merge")
        ->expected(2);
    eval_cmd->add_option("--oracle-out", eval_args.oracle_out, "write oracle runs to PREFIX.<c>");

    AnalyzeArgs an_args;
    auto* an_cmd = app.add_subcommand("analyze", "per-query analyses");
    an_cmd->add_option("--kind", an_args.kind, "quartiles, histogram, properties, terms, lengths or unique")
        ->required();
    an_cmd->add_option("--baseline", an_args.baseline, "baseline (or lexical) run");
    an_cmd->add_option("--test", an_args.test, "test (or semantic) run");
    an_cmd->add_option("--qrels", an_args.qrels, "qrels file");
    an_cmd->add_option("--index", an_args.index, "index directory");
    an_cmd->add_option("--queries", an_args.queries, "qid<TAB>text file");
    an_cmd->add_option("--query", an_args.query, "query id for terms");
    an_cmd->add_option("--docs", an_args.docs, "explicit document ids for terms")->delimiter(',');
    an_cmd->add_option("--edges", an_args.edges, "histogram edges in percent")->delimiter(',');
    an_cmd->add_option("--lexical-c", an_args.lexical_cs, "lexical list sizes for unique")->delimiter(',');
    an_cmd->add_option("--semantic-c", an_args.semantic_c, "semantic list size for unique")->capture_default_str();
    an_cmd->add_option("--n", an_args.n, "terms to list")->capture_default_str();
    an_cmd->add_option("--per-query", an_args.per_query, "relevant documents per query for lengths")
        ->capture_default_str();
    an_cmd->add_option("--c", an_args.c, "cutoff (default: c)");
    an_cmd->add_option("--out", an_args.out, "output file (default: stdout)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (show_config) {
            json j = to_json(settings);
            j["defaults_version"] = kDefaultsVersion;
            if (!config_path.empty()) j["config_file"] = config_path;
            out << j.dump(2) << '\n';
            return kExitOk;
        }
        if (index_cmd->parsed()) return cmd_index(index_args, settings, out);
        if (gen_cmd->parsed()) return cmd_gen_training(gen_args, settings, out);
        if (embed_cmd->parsed()) return cmd_embed(embed_args, settings, out);
        if (search_cmd->parsed()) return cmd_search(search_args, settings, out, err);
        if (eval_cmd->parsed()) return cmd_evaluate(eval_args, settings, out);
        if (an_cmd->parsed()) return cmd_analyze(an_args, settings, out);
        err << app.help();
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace hybridir
