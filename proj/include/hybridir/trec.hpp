#pragma once

#include "hybridir/common.hpp"
#include "hybridir/corpus.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

namespace hybridir {

/// Ranked lists keyed by query id.
using Run = std::map<std::string, ScoredList>;

/// Reads `qid Q0 docid rank score tag` lines. Each query's list is re-sorted
/// by score (ties by doc_id); the rank column is parsed but not trusted.
/// Throws IngestError naming the line for malformed or duplicate entries.
Run read_run(const std::filesystem::path& path);
Run parse_run(std::istream& in, const std::string& source);

void write_run(std::ostream& out, const std::string& query_id, const ScoredList& list, const std::string& tag);
void write_run(const std::filesystem::path& path, const Run& run, const std::string& tag);

/// Binary judgments. Graded relevance collapses to relevant at >= 1;
/// unjudged documents are non-relevant.
class Qrels {
public:
    static Qrels load(const std::filesystem::path& path);
    static Qrels parse(std::istream& in, const std::string& source);

    void add(const std::string& query_id, const std::string& doc_id, int relevance);

    bool is_relevant(const std::string& query_id, const std::string& doc_id) const;
    std::size_t num_relevant(const std::string& query_id) const;
    /// Relevant docs of a query; empty when the query is unknown.
    const std::unordered_set<std::string>& relevant(const std::string& query_id) const;
    /// Every judged query, including those without relevant documents.
    std::vector<std::string> query_ids() const;

private:
    std::map<std::string, std::unordered_set<std::string>> relevant_;
};

/// Queries file: `qid<TAB>text` per line, blank lines skipped.
std::vector<Query> read_queries(const std::filesystem::path& path, const NormalizationConfig& config);

}  // namespace hybridir
