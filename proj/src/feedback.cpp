#include "hybridir/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace hybridir {

namespace {

bool weight_order(const TermWeight& a, const TermWeight& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.term < b.term;
}

void normalize(std::vector<TermWeight>& weights) {
    double sum = 0.0;
    for (const auto& w : weights) sum += w.probability;
    for (auto& w : weights) w.probability /= sum;
}

std::vector<TermWeight> query_mle(const Tokens& query_terms) {
    std::map<std::string, double> counts;
    for (const auto& t : query_terms) counts[t] += 1.0;
    std::vector<TermWeight> out;
    for (const auto& [term, n] : counts) {
        out.push_back({term, n / static_cast<double>(query_terms.size())});
    }
    return out;
}

}  // namespace

double RelevanceModel::probability(std::string_view term) const {
    for (const auto& w : weights) {
        if (w.term == term) return w.probability;
    }
    return 0.0;
}

double RelevanceModel::total() const {
    double sum = 0.0;
    for (const auto& w : weights) sum += w.probability;
    return sum;
}

nlohmann::json RelevanceModel::to_json() const {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& w : weights) terms.push_back({{"term", w.term}, {"probability", w.probability}});
    return {{"origin", origin == RelevanceModelKind::kRm1 ? "rm1" : "rm3"},
            {"fb_terms", fb_terms},
            {"terms", std::move(terms)}};
}

double dirichlet_probability(std::uint32_t tf, std::uint32_t doc_len, std::uint64_t cf,
                             std::uint64_t collection_len, double mu) {
    const double background = static_cast<double>(cf) / static_cast<double>(collection_len);
    return (static_cast<double>(tf) + mu * background) / (static_cast<double>(doc_len) + mu);
}

RelevanceModel induce_rm1(const LexicalIndex& index, const Tokens& query_terms, const ScoredList& list,
                          std::size_t fb_docs, std::size_t fb_terms, double mu) {
    if (list.empty()) {
        throw StateError("relevance model needs a nonempty feedback list");
    }
    if (fb_docs == 0 || fb_terms == 0) {
        throw ParameterError("fb_docs and fb_terms must be positive");
    }
    if (!(mu > 0.0)) {
        throw ParameterError("Dirichlet mu must be positive");
    }
    std::vector<TermId> q_ids;
    for (const auto& t : query_terms) {
        if (auto id = index.term_id(t)) q_ids.push_back(*id);
    }

    const std::size_t n = std::min(fb_docs, list.size());
    std::vector<DocIndex> docs;
    std::vector<double> log_ql;
    for (std::size_t i = 0; i < n; ++i) {
        DocIndex d = index.doc_index(list[i].doc_id);
        double lq = 0.0;
        for (TermId t : q_ids) {
            lq += std::log(dirichlet_probability(index.tf(t, d), index.doc_len(d), index.cf(t),
                                                 index.total_tokens(), mu));
        }
        docs.push_back(d);
        log_ql.push_back(lq);
    }
    // P(q|d) only matters up to a common factor; shift by the max for range.
    const double max_lq = *std::max_element(log_ql.begin(), log_ql.end());

    std::map<TermId, double> mass;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const double doc_weight = std::exp(log_ql[i] - max_lq);
        const double len = index.doc_len(docs[i]);
        if (len == 0) continue;
        for (const auto& tc : index.doc_terms(docs[i])) {
            mass[tc.term] += doc_weight * static_cast<double>(tc.tf) / len;
        }
    }
    if (mass.empty()) {
        throw StateError("feedback documents contain no terms");
    }

    RelevanceModel rm;
    rm.fb_terms = fb_terms;
    rm.origin = RelevanceModelKind::kRm1;
    for (const auto& [term, m] : mass) rm.weights.push_back({index.term(term), m});
    normalize(rm.weights);
    std::sort(rm.weights.begin(), rm.weights.end(), weight_order);
    if (rm.weights.size() > fb_terms) rm.weights.resize(fb_terms);
    normalize(rm.weights);
    return rm;
}

RelevanceModel interpolate_rm3(const RelevanceModel& rm1, const Tokens& query_terms, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ParameterError("alpha must lie in [0, 1]");
    }
    std::map<std::string, double> mixed;
    if (alpha < 1.0) {
        for (const auto& w : query_mle(query_terms)) mixed[w.term] += (1.0 - alpha) * w.probability;
    }
    if (alpha > 0.0) {
        for (const auto& w : rm1.weights) mixed[w.term] += alpha * w.probability;
    }
    RelevanceModel rm;
    rm.origin = RelevanceModelKind::kRm3;
    rm.fb_terms = rm1.fb_terms;
    if (alpha == 1.0) {
        rm.weights = rm1.weights;
        return rm;
    }
    for (const auto& [term, p] : mixed) {
        if (p > 0.0) rm.weights.push_back({term, p});
    }
    if (rm.weights.empty()) {
        throw StateError("relevance model and query are both empty");
    }
    normalize(rm.weights);
    std::sort(rm.weights.begin(), rm.weights.end(), weight_order);
    return rm;
}

RmScorer::RmScorer(const LexicalIndex& index, const RelevanceModel& rm, double mu) : index_(index), mu_(mu) {
    if (!(mu > 0.0)) {
        throw ParameterError("Dirichlet mu must be positive");
    }
    for (const auto& w : rm.weights) {
        auto id = index.term_id(w.term);
        if (!id || index.cf(*id) == 0) {
            excluded_.push_back(w.term);
            continue;
        }
        const double background =
            mu * static_cast<double>(index.cf(*id)) / static_cast<double>(index.total_tokens());
        entries_.push_back({*id, w.probability, background});
    }
}

double RmScorer::score(DocIndex d) const {
    const double denom = static_cast<double>(index_.doc_len(d)) + mu_;
    double score = 0.0;
    for (const auto& e : entries_) {
        score += e.weight * std::log((static_cast<double>(index_.tf(e.term, d)) + e.background) / denom);
    }
    return score;
}

double rm_score(const LexicalIndex& index, const RelevanceModel& rm, std::string_view doc_id, double mu) {
    return RmScorer(index, rm, mu).score(doc_id);
}

}  // namespace hybridir
