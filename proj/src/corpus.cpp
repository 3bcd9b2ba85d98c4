#include "hybridir/corpus.hpp"

#include "hybridir/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

namespace hybridir {

namespace {

bool is_token_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Case-insensitive search for `<name` followed by '>' or whitespace (open)
// or `</name>` (close). Returns npos when absent.
std::size_t find_tag(std::string_view hay, std::string_view name, bool closing, std::size_t from,
                     std::size_t* tag_end = nullptr) {
    std::string needle = closing ? "</" : "<";
    needle += lower(name);
    auto matches_at = [&](std::size_t pos) {
        for (std::size_t i = 0; i < needle.size(); ++i) {
            if (ascii_lower(hay[pos + i]) != needle[i]) return false;
        }
        return true;
    };
    for (std::size_t pos = hay.find('<', from); pos != std::string_view::npos; pos = hay.find('<', pos + 1)) {
        if (pos + needle.size() >= hay.size() || !matches_at(pos)) continue;
        char after = hay[pos + needle.size()];
        if (after != '>' && !std::isspace(static_cast<unsigned char>(after))) continue;
        std::size_t gt = hay.find('>', pos + needle.size());
        if (gt == std::string_view::npos) return std::string_view::npos;
        if (tag_end) *tag_end = gt + 1;
        return pos;
    }
    return std::string_view::npos;
}

std::string strip_tags(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_tag = false;
    for (char c : s) {
        if (c == '<') {
            in_tag = true;
            out.push_back(' ');
        } else if (c == '>' && in_tag) {
            in_tag = false;
        } else if (!in_tag) {
            out.push_back(c);
        }
    }
    return out;
}

// Parses one <DOC>...</DOC> block (tags included).
Document parse_sgml_doc(std::string_view block, std::size_t line_no, const NormalizationConfig& config) {
    std::size_t open_end = 0;
    std::size_t open = find_tag(block, "DOCNO", false, 0, &open_end);
    if (open == std::string::npos) {
        throw IngestError("line " + std::to_string(line_no) + ": <DOC> without <DOCNO>");
    }
    std::size_t close = find_tag(block, "DOCNO", true, open_end);
    if (close == std::string::npos) {
        throw IngestError("line " + std::to_string(line_no) + ": unterminated <DOCNO>");
    }
    Document doc;
    doc.doc_id = std::string(trim(block.substr(open_end, close - open_end)));
    if (doc.doc_id.empty()) {
        throw IngestError("line " + std::to_string(line_no) + ": empty <DOCNO>");
    }

    std::string text;
    std::size_t pos = 0;
    bool any_text = false;
    while (true) {
        std::size_t t_end = 0;
        std::size_t t_open = find_tag(block, "TEXT", false, pos, &t_end);
        if (t_open == std::string::npos) break;
        std::size_t t_close = find_tag(block, "TEXT", true, t_end);
        std::size_t stop = t_close == std::string::npos ? block.size() : t_close;
        if (!text.empty()) text.push_back('\n');
        text += strip_tags(block.substr(t_end, stop - t_end));
        any_text = true;
        if (t_close == std::string::npos) break;
        pos = t_close + 1;
    }
    if (!any_text) {
        // No <TEXT>: keep everything except the DOCNO element.
        std::string rest(block.substr(0, open));
        std::size_t close_end = block.find('>', close);
        rest += block.substr(close_end + 1);
        text = strip_tags(rest);
    }
    doc.raw_text = std::string(trim(text));
    doc.tokens = tokenize(doc.raw_text, config);
    return doc;
}

void read_jsonl(std::istream& in, const NormalizationConfig& config,
                const std::function<void(Document&&, std::size_t)>& emit) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IngestError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        if (!record.is_object() || !record.contains("id") || !record["id"].is_string() ||
            !record.contains("text") || !record["text"].is_string()) {
            throw IngestError("line " + std::to_string(line_no) +
                              ": record needs string fields \"id\" and \"text\"");
        }
        Document doc;
        doc.doc_id = record["id"].get<std::string>();
        doc.raw_text = record["text"].get<std::string>();
        doc.tokens = tokenize(doc.raw_text, config);
        emit(std::move(doc), line_no);
    }
}

void read_sgml(std::istream& in, const NormalizationConfig& config,
               const std::function<void(Document&&, std::size_t)>& emit) {
    std::string line;
    std::size_t line_no = 0;
    std::string block;
    std::size_t block_start = 0;
    bool inside = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view rest = line;
        while (!rest.empty()) {
            if (!inside) {
                std::size_t tag_end = 0;
                std::size_t open = find_tag(rest, "DOC", false, 0, &tag_end);
                if (open == std::string::npos) break;
                inside = true;
                block_start = line_no;
                block.assign(rest.substr(open, tag_end - open));
                rest.remove_prefix(tag_end);
            } else {
                std::size_t tag_end = 0;
                std::size_t close = find_tag(rest, "DOC", true, 0, &tag_end);
                if (close == std::string::npos) {
                    block.append(rest);
                    break;
                }
                block.append(rest.substr(0, tag_end));
                emit(parse_sgml_doc(block, block_start, config), block_start);
                inside = false;
                block.clear();
                rest.remove_prefix(tag_end);
            }
        }
        if (inside) block.push_back('\n');
    }
    if (inside) {
        throw IngestError("line " + std::to_string(block_start) + ": unterminated <DOC>");
    }
}

const std::vector<std::string> kStopwords = {
    "a",    "an",   "and",   "are",  "as",    "at",   "be",    "but",   "by",
    "for",  "if",   "in",    "into", "is",    "it",   "no",    "not",   "of",
    "on",   "or",   "such",  "that", "the",   "their", "then", "there", "these",
    "they", "this", "to",    "was",  "will",  "with",
};

}  // namespace

const std::vector<std::string>& default_stopwords() {
    return kStopwords;
}

NormalizationConfig NormalizationConfig::standard() {
    NormalizationConfig config;
    config.stopwords.insert(kStopwords.begin(), kStopwords.end());
    config.stemmer = std::make_shared<PorterStemmer>();
    return config;
}

std::set<std::string, std::less<>> load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read stopword file: " + path.string());
    }
    std::set<std::string, std::less<>> words;
    std::string line;
    while (std::getline(in, line)) {
        auto word = trim(line);
        if (word.empty() || word.front() == '#') continue;
        words.insert(lower(word));
    }
    return words;
}

Tokens tokenize(std::string_view text, const NormalizationConfig& config) {
    Tokens out;
    std::string current;
    auto flush = [&] {
        if (current.empty()) return;
        if (!config.is_stopword(current)) {
            std::string term = config.stemmer ? config.stemmer->stem(current) : current;
            if (!term.empty() && !config.is_stopword(term)) {
                out.push_back(std::move(term));
            }
        }
        current.clear();
    };
    for (char c : text) {
        if (is_token_byte(static_cast<unsigned char>(c))) {
            current.push_back(ascii_lower(c));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::string Passage::passage_id() const {
    return doc_id + "#" + std::to_string(ordinal);
}

Query make_query(std::string query_id, std::string raw_text, const NormalizationConfig& config) {
    Query q;
    q.query_id = std::move(query_id);
    q.tokens = tokenize(raw_text, config);
    q.raw_text = std::move(raw_text);
    return q;
}

std::size_t passage_count(std::size_t n_tokens, std::size_t window, std::size_t stride) {
    if (window == 0 || stride == 0 || stride > window) {
        throw ParameterError("passage window/stride must satisfy 0 < stride <= window");
    }
    std::size_t excess = n_tokens > window ? n_tokens - window : 0;
    return (excess + stride - 1) / stride + 1;
}

std::vector<Passage> split_passages(std::string_view doc_id, const Tokens& tokens, std::size_t window,
                                    std::size_t stride) {
    const std::size_t count = passage_count(tokens.size(), window, stride);
    std::vector<Passage> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        Passage p;
        p.doc_id = std::string(doc_id);
        p.ordinal = k;
        p.offset = k * stride;
        std::size_t end = std::min(tokens.size(), p.offset + window);
        p.tokens.assign(tokens.begin() + static_cast<std::ptrdiff_t>(std::min(p.offset, tokens.size())),
                        tokens.begin() + static_cast<std::ptrdiff_t>(end));
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<Passage> split_passages(const Document& doc, std::size_t window, std::size_t stride) {
    return split_passages(doc.doc_id, doc.tokens, window, stride);
}

CorpusFormat parse_corpus_format(std::string_view name) {
    if (name == "jsonl") return CorpusFormat::kJsonl;
    if (name == "trec-sgml" || name == "trec") return CorpusFormat::kTrecSgml;
    throw ParameterError("unsupported corpus format: " + std::string(name));
}

void for_each_document(const std::filesystem::path& path, CorpusFormat format,
                       const NormalizationConfig& config, const std::function<void(Document&&)>& sink) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read corpus: " + path.string());
    }
    std::unordered_set<std::string> seen;
    auto emit = [&](Document&& doc, std::size_t line_no) {
        if (!seen.insert(doc.doc_id).second) {
            throw IngestError("line " + std::to_string(line_no) + ": duplicate doc_id \"" + doc.doc_id + "\"");
        }
        sink(std::move(doc));
    };
    if (format == CorpusFormat::kJsonl) {
        read_jsonl(in, config, emit);
    } else {
        read_sgml(in, config, emit);
    }
}

Corpus::Corpus(std::vector<Document> docs) : docs_(std::move(docs)) {
    by_id_.reserve(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        if (!by_id_.emplace(docs_[i].doc_id, i).second) {
            throw IngestError("duplicate doc_id \"" + docs_[i].doc_id + "\"");
        }
    }
}

Corpus Corpus::load(const std::filesystem::path& path, CorpusFormat format, const NormalizationConfig& config) {
    std::vector<Document> docs;
    for_each_document(path, format, config, [&](Document&& d) { docs.push_back(std::move(d)); });
    return Corpus(std::move(docs));
}

const Document& Corpus::at(std::string_view doc_id) const {
    const Document* d = find(doc_id);
    if (!d) {
        throw LookupError("unknown doc_id: " + std::string(doc_id));
    }
    return *d;
}

const Document* Corpus::find(std::string_view doc_id) const {
    auto it = by_id_.find(std::string(doc_id));
    return it == by_id_.end() ? nullptr : &docs_[it->second];
}

}  // namespace hybridir
