#pragma once

#include "hybridir/common.hpp"
#include "hybridir/corpus.hpp"
#include "hybridir/dense.hpp"
#include "hybridir/embedder.hpp"
#include "hybridir/feedback.hpp"
#include "hybridir/lexical.hpp"

#include <optional>
#include <string>
#include <unordered_set>

namespace hybridir {

enum class MergeInduction { kLexical, kPool };

struct HybridConfig {
    /// Final list size and, unless overridden, each arm's list size.
    std::size_t c = 1000;
    std::optional<std::size_t> lexical_c;
    std::optional<std::size_t> semantic_c;
    /// Passages retrieved per query before aggregation.
    std::size_t passage_k = 10000;
    /// Cells probed when the vector index has ANN state; exact search otherwise.
    std::size_t n_probe = 16;
    Bm25Params bm25;
    FeedbackParams feedback;
    MergeInduction induction = MergeInduction::kLexical;
    /// Run the two arms on separate threads.
    bool parallel = true;

    std::size_t lexical_depth() const { return lexical_c.value_or(c); }
    std::size_t semantic_depth() const { return semantic_c.value_or(c); }
    /// Throws ParameterError unless c > 0 and passage_k >= c.
    void validate() const;
};

struct ArmTimings {
    double lexical_ms = 0.0;
    double semantic_ms = 0.0;
    double merge_ms = 0.0;
    double total_ms = 0.0;
};

struct HybridResult {
    ScoredList final_list;
    ScoredList lexical;
    ScoredList semantic;
    std::size_t pool_size = 0;
    /// Semantic arm produced nothing (empty index, zero query vector or
    /// embedding miss).
    bool semantic_empty = false;
    /// Lexical arm was empty, so the semantic list was returned as is.
    bool lexical_fallback = false;
    std::vector<std::string> warnings;
    ArmTimings timings;
};

/// Read-only view of everything a query needs. Holds references only.
struct HybridIndexes {
    const LexicalIndex& lexical;
    const VectorIndex& vectors;
    const EmbeddingProvider* provider = nullptr;
};

ScoredList lexical_arm(const LexicalIndex& index, const Query& query, std::size_t c, const Bm25Params& bm25);

/// Embeds the query, retrieves passage_k passages and aggregates them to
/// the top-c documents. Returns an empty list (with a warning) when the
/// semantic arm cannot run.
ScoredList semantic_arm(const VectorIndex& vectors, const EmbeddingProvider* provider, const Query& query,
                        std::size_t c, std::size_t passage_k, std::size_t n_probe,
                        std::vector<std::string>* warnings = nullptr);

/// Pools both lists, induces RM3 from the lexical list (or the pool) and
/// returns the top-c pooled documents by RM3 score.
ScoredList merge_rm3(const LexicalIndex& index, const Query& query, const ScoredList& lexical,
                     const ScoredList& semantic, const HybridConfig& config, std::size_t* pool_size = nullptr,
                     std::vector<std::string>* warnings = nullptr);

HybridResult retrieve_hybrid(const Query& query, const HybridIndexes& indexes, const HybridConfig& config);

/// Upper-bound merge: semantic-only relevant documents replace non-relevant
/// lexical documents (lowest ranked first), then fill free slots up to c.
/// Scores in the output are rank-derived (c - rank).
ScoredList oracle_merge(const ScoredList& lexical, const ScoredList& semantic,
                        const std::unordered_set<std::string>& relevant, std::size_t c);

}  // namespace hybridir
