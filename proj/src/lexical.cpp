#include "hybridir/lexical.hpp"

#include "hybridir/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace hybridir {

void LexicalIndex::Builder::add(std::string_view doc_id, const Tokens& tokens) {
    std::string id(doc_id);
    if (!seen_.emplace(id, doc_ids_.size()).second) {
        throw IngestError("duplicate doc_id \"" + id + "\"");
    }
    const auto doc = static_cast<DocIndex>(doc_ids_.size());
    doc_ids_.push_back(std::move(id));
    doc_lens_.push_back(static_cast<std::uint32_t>(tokens.size()));

    std::map<std::string_view, std::uint32_t> counts;
    for (const auto& t : tokens) ++counts[t];
    for (const auto& [term, tf] : counts) {
        auto& list = postings_[std::string(term)];
        list.push_back({doc, tf});
    }
}

LexicalIndex LexicalIndex::Builder::finish() && {
    if (doc_ids_.empty()) {
        throw StateError("cannot build an index from an empty corpus");
    }
    LexicalIndex index;
    index.doc_ids_ = std::move(doc_ids_);
    index.doc_lens_ = std::move(doc_lens_);
    for (std::size_t d = 0; d < index.doc_ids_.size(); ++d) {
        index.doc_lookup_.emplace(index.doc_ids_[d], static_cast<DocIndex>(d));
        index.total_tokens_ += index.doc_lens_[d];
    }

    std::vector<std::string> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, _] : postings_) terms.push_back(term);
    std::sort(terms.begin(), terms.end());

    index.terms_.reserve(terms.size());
    index.postings_.reserve(terms.size());
    index.cf_.reserve(terms.size());
    for (auto& term : terms) {
        auto node = postings_.extract(term);
        std::uint64_t cf = 0;
        for (const auto& p : node.mapped()) cf += p.tf;
        index.term_lookup_.emplace(term, static_cast<TermId>(index.terms_.size()));
        index.cf_.push_back(cf);
        index.postings_.push_back(std::move(node.mapped()));
        index.terms_.push_back(std::move(term));
    }
    index.finalize_forward();
    return index;
}

LexicalIndex LexicalIndex::build(const std::vector<Document>& docs) {
    Builder builder;
    for (const auto& doc : docs) builder.add(doc);
    return std::move(builder).finish();
}

void LexicalIndex::finalize_forward() {
    std::vector<std::size_t> counts(doc_ids_.size(), 0);
    for (const auto& list : postings_) {
        for (const auto& p : list) ++counts[p.doc];
    }
    forward_offsets_.assign(doc_ids_.size() + 1, 0);
    for (std::size_t d = 0; d < counts.size(); ++d) {
        forward_offsets_[d + 1] = forward_offsets_[d] + counts[d];
    }
    forward_.assign(forward_offsets_.back(), {});
    std::vector<std::size_t> cursor(forward_offsets_.begin(), forward_offsets_.end() - 1);
    // term ids are visited in increasing order, so each doc's slice comes out sorted
    for (TermId t = 0; t < postings_.size(); ++t) {
        for (const auto& p : postings_[t]) {
            forward_[cursor[p.doc]++] = {t, p.tf};
        }
    }
}

double LexicalIndex::avg_doc_len() const {
    return static_cast<double>(total_tokens_) / static_cast<double>(doc_ids_.size());
}

std::optional<TermId> LexicalIndex::term_id(std::string_view term) const {
    auto it = term_lookup_.find(std::string(term));
    if (it == term_lookup_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t LexicalIndex::df(std::string_view term) const {
    auto id = term_id(term);
    return id ? df(*id) : 0;
}

std::uint64_t LexicalIndex::cf(std::string_view term) const {
    auto id = term_id(term);
    return id ? cf(*id) : 0;
}

DocIndex LexicalIndex::doc_index(std::string_view doc_id) const {
    auto d = find_doc(doc_id);
    if (!d) {
        throw LookupError("unknown doc_id: " + std::string(doc_id));
    }
    return *d;
}

std::optional<DocIndex> LexicalIndex::find_doc(std::string_view doc_id) const {
    auto it = doc_lookup_.find(std::string(doc_id));
    if (it == doc_lookup_.end()) return std::nullopt;
    return it->second;
}

std::span<const TermCount> LexicalIndex::doc_terms(DocIndex d) const {
    return std::span<const TermCount>(forward_).subspan(forward_offsets_[d],
                                                        forward_offsets_[d + 1] - forward_offsets_[d]);
}

std::uint32_t LexicalIndex::tf(TermId term, DocIndex d) const {
    auto terms = doc_terms(d);
    auto it = std::lower_bound(terms.begin(), terms.end(), term,
                               [](const TermCount& tc, TermId t) { return tc.term < t; });
    return (it != terms.end() && it->term == term) ? it->tf : 0;
}

void LexicalIndex::save(const std::filesystem::path& path) const {
    BinaryWriter out(path);
    out.bytes({kLexicalIndexMagic, sizeof(kLexicalIndexMagic)});
    out.u32(kLexicalIndexVersion);
    out.u32(0);
    out.u64(doc_ids_.size());
    out.u64(total_tokens_);
    out.u64(terms_.size());
    for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
        out.str(doc_ids_[d]);
        out.u32(doc_lens_[d]);
    }
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        out.str(terms_[t]);
        out.u64(cf_[t]);
        out.u32(static_cast<std::uint32_t>(postings_[t].size()));
        for (const auto& p : postings_[t]) {
            out.u32(p.doc);
            out.u32(p.tf);
        }
    }
    out.close();
}

LexicalIndex LexicalIndex::load(const std::filesystem::path& path) {
    BinaryReader in(path);
    if (in.bytes(sizeof(kLexicalIndexMagic)) != std::string_view(kLexicalIndexMagic, sizeof(kLexicalIndexMagic))) {
        throw IoError("not a lexical index file: " + path.string());
    }
    std::uint32_t version = in.u32();
    if (version != kLexicalIndexVersion) {
        throw IoError("unsupported lexical index version " + std::to_string(version));
    }
    in.u32();
    LexicalIndex index;
    const std::uint64_t n_docs = in.u64();
    index.total_tokens_ = in.u64();
    const std::uint64_t n_terms = in.u64();
    index.doc_ids_.reserve(n_docs);
    for (std::uint64_t d = 0; d < n_docs; ++d) {
        index.doc_ids_.push_back(in.str());
        index.doc_lens_.push_back(in.u32());
        index.doc_lookup_.emplace(index.doc_ids_.back(), static_cast<DocIndex>(d));
    }
    for (std::uint64_t t = 0; t < n_terms; ++t) {
        index.terms_.push_back(in.str());
        index.term_lookup_.emplace(index.terms_.back(), static_cast<TermId>(t));
        index.cf_.push_back(in.u64());
        std::vector<Posting> list(in.u32());
        for (auto& p : list) {
            p.doc = in.u32();
            p.tf = in.u32();
            if (p.doc >= n_docs) throw IoError("corrupt posting in " + path.string());
        }
        index.postings_.push_back(std::move(list));
    }
    in.expect_end();
    index.finalize_forward();
    return index;
}

nlohmann::json LexicalIndex::stats_json() const {
    return {
        {"format", "hybridir-lexical"},
        {"version", kLexicalIndexVersion},
        {"num_docs", num_docs()},
        {"num_terms", num_terms()},
        {"total_tokens", total_tokens_},
        {"avg_doc_len", avg_doc_len()},
    };
}

bool operator==(const LexicalIndex& a, const LexicalIndex& b) {
    return a.doc_ids_ == b.doc_ids_ && a.doc_lens_ == b.doc_lens_ && a.terms_ == b.terms_ &&
           a.postings_ == b.postings_ && a.cf_ == b.cf_ && a.total_tokens_ == b.total_tokens_;
}

double bm25_idf(std::size_t num_docs, std::size_t df) {
    const double n = static_cast<double>(num_docs);
    const double f = static_cast<double>(df);
    return std::log(1.0 + (n - f + 0.5) / (f + 0.5));
}

namespace {

double bm25_term(double idf, double tf, double doc_len, double avg_len, const Bm25Params& p) {
    return idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * doc_len / avg_len));
}

}  // namespace

double bm25_score(const LexicalIndex& index, const Tokens& query_terms, std::string_view doc_id,
                  const Bm25Params& params) {
    const DocIndex d = index.doc_index(doc_id);
    const double avg = index.avg_doc_len();
    const double len = index.doc_len(d);
    double score = 0.0;
    for (const auto& term : query_terms) {
        auto t = index.term_id(term);
        if (!t) continue;
        const std::uint32_t tf = index.tf(*t, d);
        if (tf == 0) continue;
        score += bm25_term(bm25_idf(index.num_docs(), index.df(*t)), tf, len, avg, params);
    }
    return score;
}

LexicalResult bm25_search(const LexicalIndex& index, const Tokens& query_terms, std::size_t c,
                          const Bm25Params& params) {
    if (c == 0) {
        throw ParameterError("result list size c must be positive");
    }
    LexicalResult result;
    if (query_terms.empty()) {
        result.empty_query = true;
        return result;
    }
    const double avg = index.avg_doc_len();
    std::vector<double> acc(index.num_docs(), 0.0);
    std::vector<char> hit(index.num_docs(), 0);
    std::vector<DocIndex> touched;
    // term-at-a-time, in query order so the summation order matches bm25_score
    for (const auto& term : query_terms) {
        auto t = index.term_id(term);
        if (!t) continue;
        const double idf = bm25_idf(index.num_docs(), index.df(*t));
        for (const auto& p : index.postings(*t)) {
            acc[p.doc] += bm25_term(idf, p.tf, index.doc_len(p.doc), avg, params);
            if (!hit[p.doc]) {
                hit[p.doc] = 1;
                touched.push_back(p.doc);
            }
        }
    }
    std::vector<ScoredDoc> candidates;
    candidates.reserve(touched.size());
    for (DocIndex d : touched) candidates.push_back({index.doc_id(d), acc[d]});
    result.list = ScoredList::top(std::move(candidates), c);
    return result;
}

std::size_t matching_doc_count(const LexicalIndex& index, const Tokens& terms) {
    std::vector<char> hit(index.num_docs(), 0);
    std::size_t count = 0;
    for (const auto& term : terms) {
        auto t = index.term_id(term);
        if (!t) continue;
        for (const auto& p : index.postings(*t)) {
            if (!hit[p.doc]) {
                hit[p.doc] = 1;
                ++count;
            }
        }
    }
    return count;
}

}  // namespace hybridir
