#include "hybridir/weaksup.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace hybridir {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string join(const Tokens& terms) {
    std::string out;
    for (const auto& t : terms) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

bool all_distinct(const Tokens& terms) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            if (terms[i] == terms[j]) return false;
        }
    }
    return true;
}

double passage_bm25(const LexicalIndex& index, const Tokens& query, const Tokens& passage, double avg_len,
                    const Bm25Params& p) {
    double score = 0.0;
    for (const auto& term : query) {
        const double tf = static_cast<double>(std::count(passage.begin(), passage.end(), term));
        if (tf == 0) continue;
        const double idf = bm25_idf(index.num_docs(), index.df(term));
        score += idf * tf * (p.k1 + 1.0) /
                 (tf + p.k1 * (1.0 - p.b + p.b * static_cast<double>(passage.size()) / avg_len));
    }
    return score;
}

// Replaced query-term positions for each graded variant, with its score.
struct Variant {
    std::vector<std::size_t> replaced;
    double score;
};

const std::vector<Variant>& variants_for(std::size_t n_terms) {
    static const std::vector<Variant> bigram = {
        {{}, kFullMatchScore},
        {{0}, kBigramPartialScore},
        {{1}, kBigramPartialScore},
    };
    static const std::vector<Variant> trigram = {
        {{}, kFullMatchScore},
        {{0}, kTrigramDoubleMatchScore},
        {{1}, kTrigramDoubleMatchScore},
        {{2}, kTrigramDoubleMatchScore},
        {{1, 2}, kTrigramSingleMatchScore},
        {{0, 2}, kTrigramSingleMatchScore},
        {{0, 1}, kTrigramSingleMatchScore},
    };
    if (n_terms == 2) return bigram;
    if (n_terms == 3) return trigram;
    throw ParameterError("perturbation needs a bi-gram or tri-gram query");
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
    if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(1, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::string MinedQuery::key() const {
    return join(terms);
}

std::vector<MinedQuery> mine_queries(const Corpus& corpus, const LexicalIndex& index, const MiningConfig& config) {
    std::unordered_map<std::string, std::size_t> df;
    std::unordered_set<std::string> in_doc;
    for (const auto& doc : corpus.documents()) {
        in_doc.clear();
        const auto& t = doc.tokens;
        for (std::size_t n = 2; n <= 3; ++n) {
            for (std::size_t i = 0; i + n <= t.size(); ++i) {
                Tokens gram(t.begin() + static_cast<std::ptrdiff_t>(i), t.begin() + static_cast<std::ptrdiff_t>(i + n));
                if (!all_distinct(gram)) continue;
                std::string key = join(gram);
                if (in_doc.insert(key).second) ++df[key];
            }
        }
    }
    std::vector<MinedQuery> out;
    for (const auto& [key, count] : df) {
        if (count < config.min_df) continue;
        MinedQuery q;
        std::istringstream words(key);
        std::string w;
        while (words >> w) q.terms.push_back(w);
        q.df = count;
        q.bm25_result_count = matching_doc_count(index, q.terms);
        if (q.bm25_result_count < config.min_results) continue;
        out.push_back(std::move(q));
    }
    std::sort(out.begin(), out.end(), [](const MinedQuery& a, const MinedQuery& b) { return a.terms < b.terms; });
    return out;
}

PassageOrder parse_passage_order(std::string_view name) {
    if (name == "document") return PassageOrder::kDocument;
    if (name == "bm25-passage-score") return PassageOrder::kBm25;
    throw ParameterError("unknown passage order: " + std::string(name));
}

bool contains_all(const Tokens& passage, const Tokens& terms) {
    return std::all_of(terms.begin(), terms.end(), [&](const std::string& t) {
        return std::find(passage.begin(), passage.end(), t) != passage.end();
    });
}

std::vector<PositivePair> positive_pairs(const MinedQuery& query, const LexicalIndex& index, const Corpus& corpus,
                                         const PositiveConfig& config) {
    std::vector<PositivePair> out;
    const auto result = bm25_search(index, query.terms, config.top_docs, config.bm25);
    for (const auto& hit : result.list) {
        const Document& doc = corpus.at(hit.doc_id);
        std::vector<Passage> matching;
        for (auto& p : split_passages(doc, config.window, config.stride)) {
            if (contains_all(p.tokens, query.terms)) matching.push_back(std::move(p));
        }
        if (config.order == PassageOrder::kBm25) {
            const double avg = static_cast<double>(config.window);
            std::vector<std::pair<double, std::size_t>> scored;
            for (std::size_t i = 0; i < matching.size(); ++i) {
                scored.emplace_back(passage_bm25(index, query.terms, matching[i].tokens, avg, config.bm25), i);
            }
            std::stable_sort(scored.begin(), scored.end(),
                             [](const auto& a, const auto& b) { return a.first > b.first; });
            std::vector<Passage> reordered;
            for (const auto& [_, i] : scored) reordered.push_back(std::move(matching[i]));
            matching = std::move(reordered);
        }
        if (matching.size() > config.max_passages) matching.resize(config.max_passages);
        for (auto& p : matching) out.push_back({query.terms, std::move(p)});
    }
    return out;
}

nlohmann::json TrainingPair::to_json() const {
    return {{"query", query_terms}, {"passage", passage_tokens}, {"label", label}, {"score", score}};
}

std::vector<TrainingPair> perturb(const PositivePair& pair, std::span<const std::string> vocab, std::uint64_t seed) {
    const Tokens& q = pair.query_terms;
    const auto& variants = variants_for(q.size());
    if (!contains_all(pair.passage.tokens, q)) {
        throw ParameterError("perturb needs a passage containing every query term");
    }
    std::vector<std::string_view> candidates;
    for (const auto& w : vocab) {
        if (std::find(q.begin(), q.end(), w) == q.end()) candidates.push_back(w);
    }
    if (candidates.empty()) {
        throw ParameterError("replacement vocabulary has no term outside the query");
    }
    std::mt19937_64 rng(seed);
    std::vector<TrainingPair> out;
    out.reserve(variants.size());
    for (const auto& v : variants) {
        TrainingPair tp;
        tp.query_terms = q;
        tp.passage_tokens = pair.passage.tokens;
        tp.label = 1;
        tp.score = v.score;
        for (std::size_t pos : v.replaced) {
            const std::string replacement(candidates[rng() % candidates.size()]);
            std::replace(tp.passage_tokens.begin(), tp.passage_tokens.end(), q[pos], replacement);
        }
        out.push_back(std::move(tp));
    }
    return out;
}

std::vector<TrainingPair> negative_pairs(std::span<const MinedQuery> queries, std::span<const Passage> passages,
                                         std::size_t count, std::uint64_t seed) {
    std::vector<TrainingPair> out;
    if (count == 0) return out;
    if (queries.empty() || passages.empty()) {
        throw ParameterError("negative sampling needs queries and passages");
    }
    constexpr std::size_t kMaxAttempts = 10000;
    std::mt19937_64 rng(seed);
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        bool accepted = false;
        for (std::size_t attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
            const auto& q = queries[rng() % queries.size()];
            const auto& p = passages[rng() % passages.size()];
            if (contains_all(p.tokens, q.terms)) continue;
            out.push_back({q.terms, p.tokens, 0, 0.0});
            accepted = true;
        }
        if (!accepted) {
            throw StateError("negative sampling kept drawing passages that match the query");
        }
    }
    return out;
}

std::uint64_t query_seed(std::uint64_t global_seed, std::string_view query_key) {
    return splitmix64(global_seed ^ fnv1a(query_key));
}

nlohmann::json training_config_json(const TrainingConfig& config) {
    return {
        {"min_df", config.mining.min_df},
        {"min_results", config.mining.min_results},
        {"top_docs", config.positives.top_docs},
        {"max_passages", config.positives.max_passages},
        {"window", config.positives.window},
        {"stride", config.positives.stride},
        {"passage_order", config.positives.order == PassageOrder::kDocument ? "document" : "bm25-passage-score"},
        {"k1", config.positives.bm25.k1},
        {"b", config.positives.bm25.b},
        {"seed", config.seed},
        {"negative_ratio", config.negative_ratio},
        {"shard_size", config.shard_size},
    };
}

std::vector<TrainingPair> build_training_pairs(const Corpus& corpus, const LexicalIndex& index,
                                               std::span<const std::string> vocab, const TrainingConfig& config,
                                               TrainingSummary* summary) {
    if (!(config.negative_ratio >= 0.0)) {
        throw ParameterError("negative ratio must be non-negative");
    }
    const auto queries = mine_queries(corpus, index, config.mining);

    std::vector<std::vector<TrainingPair>> per_query(queries.size());
    std::vector<std::size_t> pair_counts(queries.size(), 0);
    parallel_for(queries.size(), config.threads, [&](std::size_t i) {
        const auto& q = queries[i];
        const auto positives = positive_pairs(q, index, corpus, config.positives);
        pair_counts[i] = positives.size();
        const std::uint64_t base = query_seed(config.seed, q.key());
        for (std::size_t j = 0; j < positives.size(); ++j) {
            auto graded = perturb(positives[j], vocab, splitmix64(base + j));
            per_query[i].insert(per_query[i].end(), std::make_move_iterator(graded.begin()),
                                std::make_move_iterator(graded.end()));
        }
    });

    std::vector<TrainingPair> out;
    TrainingSummary local;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        (queries[i].terms.size() == 2 ? local.bigram_queries : local.trigram_queries) += 1;
        local.positive_pairs += pair_counts[i];
        local.positives += per_query[i].size();
        out.insert(out.end(), std::make_move_iterator(per_query[i].begin()),
                   std::make_move_iterator(per_query[i].end()));
    }

    const auto n_negatives =
        static_cast<std::size_t>(std::llround(config.negative_ratio * static_cast<double>(local.positives)));
    if (n_negatives > 0) {
        std::vector<Passage> passages;
        for (const auto& doc : corpus.documents()) {
            auto ps = split_passages(doc, config.positives.window, config.positives.stride);
            passages.insert(passages.end(), std::make_move_iterator(ps.begin()), std::make_move_iterator(ps.end()));
        }
        auto negatives = negative_pairs(queries, passages, n_negatives, query_seed(config.seed, "#negatives"));
        local.negatives = negatives.size();
        out.insert(out.end(), std::make_move_iterator(negatives.begin()), std::make_move_iterator(negatives.end()));
    }
    local.config_hash = hex64(fnv1a(training_config_json(config).dump()));
    std::uint64_t digest = fnv1a("");
    for (const auto& tp : out) digest = fnv1a(tp.to_json().dump() + "\n", digest);
    local.output_digest = hex64(digest);
    if (summary) *summary = std::move(local);
    return out;
}

TrainingSummary generate_training_data(const Corpus& corpus, const LexicalIndex& index,
                                       std::span<const std::string> vocab, const TrainingConfig& config,
                                       const std::filesystem::path& out_dir) {
    if (config.shard_size == 0) throw ParameterError("shard size must be positive");
    TrainingSummary summary;
    const auto pairs = build_training_pairs(corpus, index, vocab, config, &summary);

    std::filesystem::create_directories(out_dir);
    std::size_t written = 0;
    std::size_t shard_no = 0;
    while (written < pairs.size() || shard_no == 0) {
        std::ostringstream name;
        name << "shard-" << std::setw(5) << std::setfill('0') << shard_no << ".jsonl";
        std::ofstream out(out_dir / name.str(), std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + (out_dir / name.str()).string());
        const std::size_t end = std::min(pairs.size(), written + config.shard_size);
        for (std::size_t i = written; i < end; ++i) out << pairs[i].to_json().dump() << '\n';
        if (!out) throw IoError("write failed: " + (out_dir / name.str()).string());
        summary.shards.emplace_back(name.str(), end - written);
        written = end;
        ++shard_no;
    }

    nlohmann::json shards = nlohmann::json::array();
    for (const auto& [path, count] : summary.shards) shards.push_back({{"path", path}, {"count", count}});
    nlohmann::json manifest = {
        {"format", "hybridir-training"},
        {"version", 1},
        {"shards", shards},
        {"counts",
         {{"bigram_queries", summary.bigram_queries},
          {"trigram_queries", summary.trigram_queries},
          {"positive_pairs", summary.positive_pairs},
          {"positives", summary.positives},
          {"negatives", summary.negatives}}},
        {"config", training_config_json(config)},
        {"config_hash", summary.config_hash},
        {"output_digest", summary.output_digest},
    };
    std::ofstream m(out_dir / "manifest.json", std::ios::trunc);
    m << manifest.dump(2) << '\n';
    if (!m) throw IoError("cannot write training manifest");
    return summary;
}

}  // namespace hybridir
