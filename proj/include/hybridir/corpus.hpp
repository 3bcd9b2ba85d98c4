#pragma once

#include "hybridir/stemmer.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hybridir {

using Tokens = std::vector<std::string>;

/// Stopwords plus stemmer. The same configuration is applied to documents
/// and queries.
struct NormalizationConfig {
    std::set<std::string, std::less<>> stopwords;
    std::shared_ptr<const Stemmer> stemmer;

    /// Built-in English stopword list with the Porter stemmer.
    static NormalizationConfig standard();

    bool is_stopword(std::string_view term) const { return stopwords.find(term) != stopwords.end(); }
};

inline constexpr std::string_view kStopwordListVersion = "hybridir-en-stop-v1";

/// The built-in list (Lucene/Anserini English set).
const std::vector<std::string>& default_stopwords();

/// One word per line; blank lines and lines starting with '#' are skipped.
std::set<std::string, std::less<>> load_stopwords(const std::filesystem::path& path);

/// Lowercases ASCII, splits on anything that is not an ASCII letter, digit or
/// a non-ASCII byte, drops stopwords and stems.
Tokens tokenize(std::string_view text, const NormalizationConfig& config);

struct Document {
    std::string doc_id;
    std::string raw_text;
    Tokens tokens;
};

struct Passage {
    std::string doc_id;
    std::size_t ordinal = 0;
    std::size_t offset = 0;
    Tokens tokens;

    std::string passage_id() const;
};

struct Query {
    std::string query_id;
    std::string raw_text;
    Tokens tokens;

    bool answerable() const { return !tokens.empty(); }
};

Query make_query(std::string query_id, std::string raw_text, const NormalizationConfig& config);

inline constexpr std::size_t kDefaultPassageWindow = 20;
inline constexpr std::size_t kDefaultPassageStride = 10;

/// Number of passages split_passages produces for `n_tokens`.
std::size_t passage_count(std::size_t n_tokens, std::size_t window, std::size_t stride);

/// Passage k covers tokens [k*stride, k*stride + window). The final passage
/// may be short. A document with at most `window` tokens gives one passage.
std::vector<Passage> split_passages(const Document& doc, std::size_t window = kDefaultPassageWindow,
                                    std::size_t stride = kDefaultPassageStride);
std::vector<Passage> split_passages(std::string_view doc_id, const Tokens& tokens,
                                    std::size_t window = kDefaultPassageWindow,
                                    std::size_t stride = kDefaultPassageStride);

enum class CorpusFormat { kTrecSgml, kJsonl };

CorpusFormat parse_corpus_format(std::string_view name);

/// Streams documents in file order. Throws IngestError on a malformed record
/// (with its line number) or a repeated doc_id, IoError if unreadable.
void for_each_document(const std::filesystem::path& path, CorpusFormat format,
                       const NormalizationConfig& config,
                       const std::function<void(Document&&)>& sink);

class Corpus {
public:
    Corpus() = default;
    explicit Corpus(std::vector<Document> docs);

    static Corpus load(const std::filesystem::path& path, CorpusFormat format,
                       const NormalizationConfig& config);

    const std::vector<Document>& documents() const { return docs_; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    const Document& at(std::string_view doc_id) const;
    const Document* find(std::string_view doc_id) const;

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

}  // namespace hybridir
