#pragma once

#include "hybridir/common.hpp"
#include "hybridir/corpus.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hybridir {

using TermId = std::uint32_t;
using DocIndex = std::uint32_t;

struct Posting {
    DocIndex doc = 0;
    std::uint32_t tf = 0;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// (term, tf) entry of a document's forward list, sorted by term id.
struct TermCount {
    TermId term = 0;
    std::uint32_t tf = 0;
};

/// Immutable inverted index with the collection statistics needed by BM25
/// and by Dirichlet-smoothed language models. Term ids follow lexicographic
/// term order and doc indices follow insertion order, so rebuilding from the
/// same corpus yields an identical index.
class LexicalIndex {
public:
    class Builder {
    public:
        void add(std::string_view doc_id, const Tokens& tokens);
        void add(const Document& doc) { add(doc.doc_id, doc.tokens); }
        /// Throws StateError on an empty corpus.
        LexicalIndex finish() &&;

    private:
        std::vector<std::string> doc_ids_;
        std::unordered_map<std::string, std::size_t> seen_;
        std::vector<std::uint32_t> doc_lens_;
        std::unordered_map<std::string, std::vector<Posting>> postings_;
    };

    static LexicalIndex build(const std::vector<Document>& docs);

    std::size_t num_docs() const { return doc_ids_.size(); }
    std::size_t num_terms() const { return terms_.size(); }
    std::uint64_t total_tokens() const { return total_tokens_; }
    double avg_doc_len() const;

    std::optional<TermId> term_id(std::string_view term) const;
    const std::string& term(TermId id) const { return terms_[id]; }
    std::span<const Posting> postings(TermId id) const { return postings_[id]; }
    std::uint32_t df(TermId id) const { return static_cast<std::uint32_t>(postings_[id].size()); }
    std::uint64_t cf(TermId id) const { return cf_[id]; }
    /// df of a term string; 0 when absent.
    std::uint32_t df(std::string_view term) const;
    std::uint64_t cf(std::string_view term) const;

    /// Throws LookupError for an unknown doc_id.
    DocIndex doc_index(std::string_view doc_id) const;
    std::optional<DocIndex> find_doc(std::string_view doc_id) const;
    const std::string& doc_id(DocIndex d) const { return doc_ids_[d]; }
    std::uint32_t doc_len(DocIndex d) const { return doc_lens_[d]; }
    std::span<const TermCount> doc_terms(DocIndex d) const;
    std::uint32_t tf(TermId term, DocIndex d) const;

    void save(const std::filesystem::path& path) const;
    static LexicalIndex load(const std::filesystem::path& path);
    /// Global statistics written next to the binary index.
    nlohmann::json stats_json() const;

    friend bool operator==(const LexicalIndex& a, const LexicalIndex& b);

private:
    void finalize_forward();

    std::vector<std::string> doc_ids_;
    std::unordered_map<std::string, DocIndex> doc_lookup_;
    std::vector<std::uint32_t> doc_lens_;
    std::vector<std::string> terms_;
    std::unordered_map<std::string, TermId> term_lookup_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::uint64_t> cf_;
    std::uint64_t total_tokens_ = 0;
    // forward index: doc d owns forward_[forward_offsets_[d] .. forward_offsets_[d+1])
    std::vector<TermCount> forward_;
    std::vector<std::size_t> forward_offsets_;
};

inline constexpr char kLexicalIndexMagic[8] = {'H', 'I', 'R', 'L', 'E', 'X', 'I', 'X'};
inline constexpr std::uint32_t kLexicalIndexVersion = 1;

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;
};

/// ln(1 + (N - df + 0.5) / (df + 0.5)); finite for df = 0.
double bm25_idf(std::size_t num_docs, std::size_t df);

/// Sum over query tokens (repeats counted) of idf * saturated tf. Throws
/// LookupError for an unknown doc_id.
double bm25_score(const LexicalIndex& index, const Tokens& query_terms, std::string_view doc_id,
                  const Bm25Params& params = {});

struct LexicalResult {
    ScoredList list;
    /// Set when the query normalized to zero terms.
    bool empty_query = false;
};

/// Top-c documents among those containing at least one query term.
LexicalResult bm25_search(const LexicalIndex& index, const Tokens& query_terms, std::size_t c,
                          const Bm25Params& params = {});

/// Number of documents containing at least one of the terms.
std::size_t matching_doc_count(const LexicalIndex& index, const Tokens& terms);

}  // namespace hybridir
