#pragma once

#include "hybridir/common.hpp"
#include "hybridir/corpus.hpp"
#include "hybridir/lexical.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace hybridir {

struct TermWeight {
    std::string term;
    double probability = 0.0;
};

enum class RelevanceModelKind { kRm1, kRm3 };

/// Truncated term distribution. Weights are sorted by probability
/// descending, then term ascending, and sum to one.
struct RelevanceModel {
    std::vector<TermWeight> weights;
    std::size_t fb_terms = 0;
    RelevanceModelKind origin = RelevanceModelKind::kRm1;

    double probability(std::string_view term) const;
    double total() const;
    nlohmann::json to_json() const;
};

struct FeedbackParams {
    std::size_t fb_docs = 10;
    std::size_t fb_terms = 10;
    double alpha = 0.5;
    double mu = 1000.0;
};

/// (tf + mu * cf / |C|) / (|d| + mu)
double dirichlet_probability(std::uint32_t tf, std::uint32_t doc_len, std::uint64_t cf,
                             std::uint64_t collection_len, double mu);

/// RM1 from the top `fb_docs` documents of `list`: P(w|R) proportional to
/// sum_d P_mle(w|d) * P(q|d), with the query likelihood under Dirichlet
/// smoothing. Query terms unseen in the collection are left out of P(q|d).
/// Throws StateError for an empty list, ParameterError for zero sizes.
RelevanceModel induce_rm1(const LexicalIndex& index, const Tokens& query_terms, const ScoredList& list,
                          std::size_t fb_docs, std::size_t fb_terms, double mu = 1000.0);

/// (1 - alpha) * P_mle(w|q) + alpha * P_rm1(w), renormalized. alpha = 0 gives
/// the query distribution, alpha = 1 gives rm1 unchanged.
RelevanceModel interpolate_rm3(const RelevanceModel& rm1, const Tokens& query_terms, double alpha);

/// Scores documents by sum_w P(w) * ln P_dirichlet(w|d). Model terms with
/// zero collection frequency cannot be smoothed and are skipped; they are
/// reported through `excluded_terms`.
class RmScorer {
public:
    RmScorer(const LexicalIndex& index, const RelevanceModel& rm, double mu = 1000.0);

    double score(DocIndex d) const;
    /// Throws LookupError for an unknown doc_id.
    double score(std::string_view doc_id) const { return score(index_.doc_index(doc_id)); }

    const std::vector<std::string>& excluded_terms() const { return excluded_; }

private:
    struct Entry {
        TermId term;
        double weight;
        double background;  // mu * P(w|C)
    };

    const LexicalIndex& index_;
    double mu_;
    std::vector<Entry> entries_;
    std::vector<std::string> excluded_;
};

double rm_score(const LexicalIndex& index, const RelevanceModel& rm, std::string_view doc_id, double mu = 1000.0);

}  // namespace hybridir
