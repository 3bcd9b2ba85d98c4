#pragma once

#include "hybridir/common.hpp"
#include "hybridir/corpus.hpp"
#include "hybridir/lexical.hpp"
#include "hybridir/trec.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hybridir {

/// |relevant in top c| / |relevant|; nullopt when the query has no relevant
/// documents.
std::optional<double> recall_at(const ScoredList& run, const Qrels& qrels, const std::string& query_id,
                                std::size_t c);
/// Average precision over the top c, normalized by |relevant|.
std::optional<double> map_at(const ScoredList& run, const Qrels& qrels, const std::string& query_id, std::size_t c);
std::size_t relevant_retrieved(const ScoredList& run, const Qrels& qrels, const std::string& query_id,
                               std::size_t c);

/// (#positive - #negative) / #deltas. Throws ParameterError on empty input.
double reliability_of_improvement(std::span<const double> deltas);

struct QueryMetrics {
    std::string query_id;
    double recall = 0.0;
    double ap = 0.0;
    std::size_t rel_retrieved = 0;
    std::size_t num_relevant = 0;
};

struct RunSummary {
    std::string name;
    std::size_t c = 0;
    /// Queries with at least one relevant document, in qid order. Queries
    /// missing from the run score zero.
    std::vector<QueryMetrics> per_query;
    double mean_recall = 0.0;
    double map = 0.0;
    std::size_t rel_retrieved = 0;
    /// Run queries skipped because they have no relevant documents.
    std::vector<std::string> excluded;

    nlohmann::json to_json() const;
};

RunSummary evaluate_run(const Run& run, const Qrels& qrels, std::size_t c, const std::string& name = "run");

struct RunComparison {
    std::string baseline;
    std::string test;
    std::size_t c = 0;
    /// Relative change of mean recall, in percent.
    double recall_change_pct = 0.0;
    double map_change_pct = 0.0;
    double ri = 0.0;
    std::size_t improved = 0;
    std::size_t degraded = 0;
    std::size_t unchanged = 0;
    /// Per-query recall deltas (test - baseline).
    std::vector<std::pair<std::string, double>> deltas;

    nlohmann::json to_json() const;
};

/// Both summaries must come from the same qrels and c.
RunComparison compare_runs(const RunSummary& baseline, const RunSummary& test);

struct EvalReport {
    std::vector<std::size_t> cutoffs;
    /// summaries[i][j]: run j at cutoffs[i].
    std::vector<std::vector<RunSummary>> summaries;
    /// comparisons[i][j]: run j+1 against run 0 at cutoffs[i].
    std::vector<std::vector<RunComparison>> comparisons;

    nlohmann::json to_json() const;
    /// One row per cutoff, columns Recall/MAP/#Rel per run plus the change
    /// and RI of every run against the first.
    std::string to_text() const;
};

EvalReport evaluate_runs(std::span<const std::pair<std::string, Run>> runs, const Qrels& qrels,
                         std::span<const std::size_t> cutoffs);

struct QuartileGroup {
    std::vector<std::string> query_ids;
    double baseline_mean = 0.0;
    double test_mean = 0.0;
};

/// Sorts evaluable queries by baseline recall (ties by qid) and splits them
/// into four groups of equal size, the remainder going to the lower groups.
/// Throws ParameterError with fewer than four evaluable queries.
std::array<QuartileGroup, 4> quartile_analysis(const Run& baseline, const Run& test, const Qrels& qrels,
                                               std::size_t c);
std::string quartile_table(const std::array<QuartileGroup, 4>& groups, const std::string& baseline_name,
                           const std::string& test_name);

/// Percentage change from `base` to `test`. Zero base with a positive test
/// value yields +infinity; zero to zero yields 0.
double percent_change(double base, double test);

struct Histogram {
    std::vector<std::string> labels;
    std::vector<std::size_t> counts;

    std::string to_csv() const;
};

/// Buckets: (-inf, e1), [e1, e2), ..., [ek, +inf) for non-zero values plus a
/// dedicated zero bucket placed where 0 falls. Edges must be strictly
/// increasing and non-empty.
Histogram histogram(std::span<const double> values, std::span<const double> edges);
/// Per-query percentage recall change between two runs, bucketed.
Histogram improvement_histogram(const Run& baseline, const Run& test, const Qrels& qrels, std::size_t c,
                                std::span<const double> edges);

struct QueryProperties {
    double mean_idf = 0.0;
    double max_idf = 0.0;
    double std_idf = 0.0;  // population
    std::size_t n_terms = 0;
};

/// idf statistics over the query's terms (repeats included). Throws
/// ParameterError for an empty query.
QueryProperties query_properties(const Tokens& terms, const LexicalIndex& index);

struct PropertyGroup {
    std::string name;
    std::size_t queries = 0;
    QueryProperties mean;
};

/// Mean query properties of the improved, degraded and unchanged queries of
/// a comparison.
std::vector<PropertyGroup> property_analysis(const RunComparison& comparison, std::span<const Query> queries,
                                             const LexicalIndex& index);
std::string property_table(std::span<const PropertyGroup> groups);

/// Top-n terms by sum over doc_ids of tf * idf, stopwords excluded, ties by
/// ascending term.
std::vector<std::pair<std::string, double>> representative_terms(std::span<const std::string> doc_ids,
                                                                 const LexicalIndex& index, std::size_t n,
                                                                 const NormalizationConfig& normalization);

/// |A n B| / |A u B| over the distinct terms. Throws ParameterError when
/// either list is empty.
double jaccard(std::span<const std::string> a, std::span<const std::string> b);

struct LengthProfile {
    std::vector<std::uint32_t> a;
    std::vector<std::uint32_t> b;

    /// Columns index,length_a,length_b; the shorter sequence leaves blanks.
    std::string to_csv(const std::string& name_a, const std::string& name_b) const;
};

/// Lengths of the first `per_query` relevant documents of each query in
/// each run, pooled and sorted ascending.
LengthProfile relevant_length_profile(const Run& a, const Run& b, const Qrels& qrels, const LexicalIndex& index,
                                      std::size_t per_query = 5);

struct UniqueRelevantPoint {
    std::size_t lexical_c = 0;
    /// Relevant documents retrieved by the lexical list.
    std::size_t lexical_relevant = 0;
    /// Relevant documents of the semantic list missing from the lexical list.
    std::size_t semantic_unique_relevant = 0;
};

/// Semantic list fixed at `semantic_c`, lexical list grown over `lexical_cs`;
/// counts summed over the queries of the qrels.
std::vector<UniqueRelevantPoint> unique_relevant_curve(const Run& lexical, const Run& semantic, const Qrels& qrels,
                                                       std::span<const std::size_t> lexical_cs,
                                                       std::size_t semantic_c);
std::string unique_relevant_csv(std::span<const UniqueRelevantPoint> points);

}  // namespace hybridir
