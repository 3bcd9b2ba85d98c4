#include "hybridir/hybrid.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <unordered_set>

namespace hybridir {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void warn(std::vector<std::string>* warnings, std::string message) {
    if (warnings) warnings->push_back(std::move(message));
}

}  // namespace

void HybridConfig::validate() const {
    if (c == 0) throw ParameterError("c must be positive");
    if (lexical_depth() == 0 || semantic_depth() == 0) throw ParameterError("arm list sizes must be positive");
    if (passage_k < semantic_depth()) throw ParameterError("passage_k must be at least the semantic list size");
    if (n_probe == 0) throw ParameterError("n_probe must be positive");
}

ScoredList lexical_arm(const LexicalIndex& index, const Query& query, std::size_t c, const Bm25Params& bm25) {
    return bm25_search(index, query.tokens, c, bm25).list;
}

ScoredList semantic_arm(const VectorIndex& vectors, const EmbeddingProvider* provider, const Query& query,
                        std::size_t c, std::size_t passage_k, std::size_t n_probe, std::vector<std::string>* warnings) {
    if (provider == nullptr || vectors.empty()) {
        warn(warnings, "query " + query.query_id + ": semantic index unavailable");
        return {};
    }
    if (provider->dim() != vectors.dim()) {
        throw ParameterError("provider dim " + std::to_string(provider->dim()) + " differs from vector index dim " +
                             std::to_string(vectors.dim()));
    }
    std::vector<float> q;
    try {
        q = provider->embed_query(query.query_id, query.tokens);
    } catch (const LookupError& e) {
        warn(warnings, "query " + query.query_id + ": " + e.what());
        return {};
    }
    if (std::all_of(q.begin(), q.end(), [](float x) { return x == 0.0f; })) {
        warn(warnings, "query " + query.query_id + ": zero query vector (no in-vocabulary terms)");
        return {};
    }
    const auto hits = vectors.has_ann()
                          ? vectors.knn_approx(q, passage_k, std::min(n_probe, vectors.ann().n_centroids))
                          : vectors.knn_exact(q, passage_k);
    return aggregate_to_docs(hits, c);
}

ScoredList merge_rm3(const LexicalIndex& index, const Query& query, const ScoredList& lexical,
                     const ScoredList& semantic, const HybridConfig& config, std::size_t* pool_size,
                     std::vector<std::string>* warnings) {
    std::vector<DocIndex> pool;
    std::unordered_set<std::string_view> seen;
    std::vector<ScoredDoc> feedback_docs(lexical.entries());
    for (const auto& e : lexical) {
        if (seen.insert(e.doc_id).second) pool.push_back(index.doc_index(e.doc_id));
    }
    for (const auto& e : semantic) {
        if (!seen.insert(e.doc_id).second) continue;
        auto d = index.find_doc(e.doc_id);
        if (!d) {
            warn(warnings, "semantic document " + e.doc_id + " is not in the lexical index");
            continue;
        }
        pool.push_back(*d);
        if (config.induction == MergeInduction::kPool) feedback_docs.push_back({e.doc_id, 0.0});
    }
    if (pool_size) *pool_size = pool.size();

    // pool induction keeps lexical order first, then semantic-only documents
    ScoredList feedback_list;
    if (config.induction == MergeInduction::kPool) {
        for (std::size_t i = 0; i < feedback_docs.size(); ++i) {
            feedback_docs[i].score = -static_cast<double>(i);
        }
        feedback_list = ScoredList::from_ranked(std::move(feedback_docs));
    } else {
        feedback_list = lexical;
    }

    const auto& fb = config.feedback;
    const RelevanceModel rm1 = induce_rm1(index, query.tokens, feedback_list, fb.fb_docs, fb.fb_terms, fb.mu);
    const RelevanceModel rm3 = interpolate_rm3(rm1, query.tokens, fb.alpha);
    const RmScorer scorer(index, rm3, fb.mu);
    for (const auto& t : scorer.excluded_terms()) {
        warn(warnings, "query " + query.query_id + ": term \"" + t + "\" has no collection statistics; skipped");
    }

    std::vector<ScoredDoc> scored;
    scored.reserve(pool.size());
    for (DocIndex d : pool) scored.push_back({index.doc_id(d), scorer.score(d)});
    return ScoredList::top(std::move(scored), config.c);
}

HybridResult retrieve_hybrid(const Query& query, const HybridIndexes& indexes, const HybridConfig& config) {
    config.validate();
    HybridResult result;
    const auto start = Clock::now();

    std::vector<std::string> semantic_warnings;
    auto run_semantic = [&] {
        const auto t = Clock::now();
        ScoredList list = semantic_arm(indexes.vectors, indexes.provider, query, config.semantic_depth(),
                                       config.passage_k, config.n_probe, &semantic_warnings);
        result.timings.semantic_ms = elapsed_ms(t);
        return list;
    };
    auto run_lexical = [&] {
        const auto t = Clock::now();
        ScoredList list = lexical_arm(indexes.lexical, query, config.lexical_depth(), config.bm25);
        result.timings.lexical_ms = elapsed_ms(t);
        return list;
    };

    if (config.parallel) {
        // the arms share only read-only index state
        auto semantic_future = std::async(std::launch::async, run_semantic);
        result.lexical = run_lexical();
        result.semantic = semantic_future.get();
    } else {
        result.lexical = run_lexical();
        result.semantic = run_semantic();
    }
    result.warnings = std::move(semantic_warnings);
    result.semantic_empty = result.semantic.empty();

    const auto merge_start = Clock::now();
    if (result.lexical.empty()) {
        result.lexical_fallback = true;
        result.warnings.push_back("query " + query.query_id + ": lexical list empty, using the semantic list");
        result.final_list = result.semantic.truncated(config.c);
        result.pool_size = result.semantic.size();
    } else {
        result.final_list = merge_rm3(indexes.lexical, query, result.lexical, result.semantic, config,
                                      &result.pool_size, &result.warnings);
    }
    result.timings.merge_ms = elapsed_ms(merge_start);
    result.timings.total_ms = elapsed_ms(start);
    return result;
}

ScoredList oracle_merge(const ScoredList& lexical, const ScoredList& semantic,
                        const std::unordered_set<std::string>& relevant, std::size_t c) {
    if (lexical.size() > c || semantic.size() > c) {
        throw ParameterError("oracle_merge inputs must not exceed c");
    }
    std::vector<std::string> ids = lexical.doc_ids();
    const std::unordered_set<std::string> in_lexical(ids.begin(), ids.end());

    std::vector<std::string> additions;
    for (const auto& e : semantic) {
        if (relevant.count(e.doc_id) && !in_lexical.count(e.doc_id)) additions.push_back(e.doc_id);
    }

    std::size_t next = 0;
    for (std::size_t i = ids.size(); i-- > 0 && next < additions.size();) {
        if (!relevant.count(ids[i])) ids[i] = additions[next++];
    }
    while (next < additions.size() && ids.size() < c) ids.push_back(additions[next++]);

    std::vector<ScoredDoc> ranked;
    ranked.reserve(ids.size());
    for (std::size_t r = 0; r < ids.size(); ++r) {
        ranked.push_back({std::move(ids[r]), static_cast<double>(c - r)});
    }
    return ScoredList::from_ranked(std::move(ranked));
}

}  // namespace hybridir
