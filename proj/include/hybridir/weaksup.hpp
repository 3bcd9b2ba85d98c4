#pragma once

#include "hybridir/corpus.hpp"
#include "hybridir/lexical.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hybridir {

/// A bi- or tri-gram training query mined from the collection.
struct MinedQuery {
    Tokens terms;
    /// Documents containing the exact contiguous n-gram.
    std::size_t df = 0;
    /// Documents BM25 retrieves for the query (those containing any term).
    std::size_t bm25_result_count = 0;

    /// Terms joined by a single space; used as the query key and RNG stream id.
    std::string key() const;
    friend bool operator==(const MinedQuery&, const MinedQuery&) = default;
};

struct MiningConfig {
    std::size_t min_df = 5;
    std::size_t min_results = 10;
};

/// All distinct contiguous bi-/tri-grams (with distinct terms) that occur in
/// at least `min_df` documents and retrieve at least `min_results` documents,
/// in lexicographic order of their term sequence.
std::vector<MinedQuery> mine_queries(const Corpus& corpus, const LexicalIndex& index, const MiningConfig& config = {});

enum class PassageOrder { kDocument, kBm25 };

PassageOrder parse_passage_order(std::string_view name);

struct PositiveConfig {
    std::size_t top_docs = 10;
    std::size_t max_passages = 5;
    std::size_t window = kDefaultPassageWindow;
    std::size_t stride = kDefaultPassageStride;
    PassageOrder order = PassageOrder::kDocument;
    Bm25Params bm25;
};

struct PositivePair {
    Tokens query_terms;
    Passage passage;
};

bool contains_all(const Tokens& passage, const Tokens& terms);

/// For each of the top BM25 documents, up to `max_passages` passages that
/// contain every query term.
std::vector<PositivePair> positive_pairs(const MinedQuery& query, const LexicalIndex& index, const Corpus& corpus,
                                         const PositiveConfig& config = {});

struct TrainingPair {
    Tokens query_terms;
    Tokens passage_tokens;
    int label = 0;
    double score = 0.0;

    nlohmann::json to_json() const;
    friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

inline constexpr double kFullMatchScore = 1.0;
inline constexpr double kBigramPartialScore = 0.6;
inline constexpr double kTrigramDoubleMatchScore = 0.65;
inline constexpr double kTrigramSingleMatchScore = 0.55;

/// Expands a positive pair into graded pairs by replacing every occurrence
/// of chosen query terms in the passage with random vocabulary terms.
/// Bi-gram: full (1.0) + two single matches (0.6). Tri-gram: full (1.0) +
/// three double matches (0.65) + three single matches (0.55). Replacement
/// terms are never query terms. Throws ParameterError if the passage does not
/// contain every query term or no replacement candidate exists.
std::vector<TrainingPair> perturb(const PositivePair& pair, std::span<const std::string> vocab, std::uint64_t seed);

/// Uniformly samples `count` (query, passage) pairs, rejecting passages that
/// contain every query term. label 0, score 0.
std::vector<TrainingPair> negative_pairs(std::span<const MinedQuery> queries, std::span<const Passage> passages,
                                         std::size_t count, std::uint64_t seed);

/// Seed for a query's generator, derived from the global seed and the query
/// key so output does not depend on processing order.
std::uint64_t query_seed(std::uint64_t global_seed, std::string_view query_key);

struct TrainingConfig {
    MiningConfig mining;
    PositiveConfig positives;
    std::uint64_t seed = 13;
    double negative_ratio = 1.0;
    std::size_t shard_size = 100000;
    std::size_t threads = 0;  // 0: hardware concurrency
};

struct TrainingSummary {
    std::size_t bigram_queries = 0;
    std::size_t trigram_queries = 0;
    std::size_t positive_pairs = 0;  // before perturbation
    std::size_t positives = 0;       // label-1 training pairs
    std::size_t negatives = 0;
    std::vector<std::pair<std::string, std::size_t>> shards;
    std::string config_hash;
    std::string output_digest;
};

/// Full pipeline: mine, pair, perturb, sample negatives, then write
/// `shard-NNNNN.jsonl` files and `manifest.json` under out_dir.
TrainingSummary generate_training_data(const Corpus& corpus, const LexicalIndex& index,
                                       std::span<const std::string> vocab, const TrainingConfig& config,
                                       const std::filesystem::path& out_dir);

/// Same as generate_training_data without touching the filesystem.
std::vector<TrainingPair> build_training_pairs(const Corpus& corpus, const LexicalIndex& index,
                                               std::span<const std::string> vocab, const TrainingConfig& config,
                                               TrainingSummary* summary = nullptr);

nlohmann::json training_config_json(const TrainingConfig& config);

}  // namespace hybridir
