#include "hybridir/weaksup.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

using namespace hybridir;
using hybridir::fixtures::doc;
using hybridir::fixtures::TempDir;

namespace {

// Counts n-grams by scanning every document directly.
std::map<Tokens, std::size_t> brute_ngram_df(const std::vector<Document>& docs) {
    std::map<Tokens, std::size_t> df;
    for (const auto& d : docs) {
        std::set<Tokens> seen;
        for (std::size_t n = 2; n <= 3; ++n) {
            for (std::size_t i = 0; i + n <= d.tokens.size(); ++i) {
                Tokens g(d.tokens.begin() + i, d.tokens.begin() + i + n);
                if (std::set<std::string>(g.begin(), g.end()).size() != n) continue;
                seen.insert(g);
            }
        }
        for (const auto& g : seen) ++df[g];
    }
    return df;
}

std::size_t brute_any_match(const std::vector<Document>& docs, const Tokens& terms) {
    std::size_t n = 0;
    for (const auto& d : docs) {
        n += std::any_of(terms.begin(), terms.end(), [&](const std::string& t) {
            return std::find(d.tokens.begin(), d.tokens.end(), t) != d.tokens.end();
        });
    }
    return n;
}

std::vector<Document> weather_docs() {
    return {doc("a", "storm surge hit coast storm surge"), doc("b", "storm surge warning"),
            doc("c", "coast guard storm surge"),        doc("d", "storm warning issued"),
            doc("e", "surge pricing storm"),            doc("f", "calm sea")};
}

std::vector<std::string> vocab_of(const LexicalIndex& index) {
    std::vector<std::string> v;
    for (TermId t = 0; t < index.num_terms(); ++t) v.push_back(index.term(t));
    return v;
}

}  // namespace

TEST(Mining, ThresholdBoundary) {
    const auto docs = weather_docs();
    const Corpus corpus(docs);
    const auto index = LexicalIndex::build(docs);
    // "storm surge" occurs contiguously in a, b, c
    auto at3 = mine_queries(corpus, index, {3, 1});
    ASSERT_EQ(at3.size(), 1u);
    EXPECT_EQ(at3[0].terms, (Tokens{"storm", "surge"}));
    EXPECT_EQ(at3[0].df, 3u);
    EXPECT_EQ(at3[0].bm25_result_count, 5u);
    EXPECT_TRUE(mine_queries(corpus, index, {4, 1}).empty());
    EXPECT_EQ(mine_queries(corpus, index, {3, 5}).size(), 1u);
    EXPECT_TRUE(mine_queries(corpus, index, {3, 6}).empty());
}

TEST(Mining, MatchesBruteForceCounts) {
    std::mt19937_64 rng(21);
    for (int round = 0; round < 5; ++round) {
        const auto docs = fixtures::random_docs(rng, 60, 15, 25);
        const Corpus corpus(docs);
        const auto index = LexicalIndex::build(docs);
        const MiningConfig config{3, 10};
        std::vector<MinedQuery> want;
        for (const auto& [g, df] : brute_ngram_df(docs)) {
            const auto hits = brute_any_match(docs, g);
            if (df >= config.min_df && hits >= config.min_results) want.push_back({g, df, hits});
        }
        EXPECT_EQ(mine_queries(corpus, index, config), want);
    }
}

TEST(Mining, SkipsRepeatedTerms) {
    const std::vector<Document> docs = {doc("a", "x x y"), doc("b", "x x y"), doc("c", "x x y")};
    const auto mined = mine_queries(Corpus(docs), LexicalIndex::build(docs), {1, 1});
    for (const auto& q : mined) {
        EXPECT_EQ(std::set<std::string>(q.terms.begin(), q.terms.end()).size(), q.terms.size()) << q.key();
    }
    EXPECT_EQ(mined.size(), 1u);  // only "x y"
}

TEST(Positives, FirstPassagesInDocumentOrder) {
    Tokens long_doc;
    for (int i = 0; i < 8; ++i) {
        for (int k = 0; k < 9; ++k) long_doc.push_back("f" + std::to_string(k));
        long_doc.push_back("alpha");
        long_doc.push_back("beta");
    }
    std::string text;
    for (const auto& t : long_doc) text += t + " ";
    const std::vector<Document> docs = {doc("long", text), doc("short", "alpha beta"), doc("none", "gamma")};
    const Corpus corpus(docs);
    const auto index = LexicalIndex::build(docs);
    const MinedQuery q{{"alpha", "beta"}, 2, 2};
    const auto pairs = positive_pairs(q, index, corpus);
    std::map<std::string, std::vector<std::size_t>> per_doc;
    for (const auto& p : pairs) {
        EXPECT_TRUE(contains_all(p.passage.tokens, q.terms));
        per_doc[p.passage.doc_id].push_back(p.passage.ordinal);
    }
    EXPECT_EQ(per_doc["long"], (std::vector<std::size_t>{0, 1, 2, 3, 4}));
    EXPECT_EQ(per_doc["short"], (std::vector<std::size_t>{0}));
    EXPECT_FALSE(per_doc.count("none"));

    PositiveConfig by_score;
    by_score.order = PassageOrder::kBm25;
    EXPECT_EQ(positive_pairs(q, index, corpus, by_score).size(), pairs.size());
    EXPECT_THROW(parse_passage_order("random"), ParameterError);
}

TEST(Perturb, BigramLaw) {
    const PositivePair pair{{"storm", "surge"}, {"d", 0, 0, {"storm", "surge", "storm", "hit"}}};
    const std::vector<std::string> vocab = {"storm", "surge", "calm", "sea", "wind"};
    const auto out = perturb(pair, vocab, 5);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].passage_tokens, pair.passage.tokens);
    std::multiset<double> scores;
    for (const auto& tp : out) {
        scores.insert(tp.score);
        EXPECT_EQ(tp.label, 1);
        const auto present = std::count_if(pair.query_terms.begin(), pair.query_terms.end(), [&](const auto& t) {
            return std::find(tp.passage_tokens.begin(), tp.passage_tokens.end(), t) != tp.passage_tokens.end();
        });
        EXPECT_EQ(present, tp.score == 1.0 ? 2 : 1);
        EXPECT_EQ(tp.passage_tokens.size(), 4u);
    }
    EXPECT_EQ(scores, (std::multiset<double>{1.0, 0.6, 0.6}));
    EXPECT_EQ(out, perturb(pair, vocab, 5));
}

TEST(Perturb, TrigramLaw) {
    const PositivePair pair{{"a", "b", "c"}, {"d", 0, 0, {"a", "x", "b", "c", "a"}}};
    const std::vector<std::string> vocab = {"a", "b", "c", "x", "y", "z"};
    const auto out = perturb(pair, vocab, 9);
    ASSERT_EQ(out.size(), 7u);
    std::multiset<double> scores;
    for (const auto& tp : out) {
        scores.insert(tp.score);
        std::size_t present = 0;
        for (const auto& t : pair.query_terms) {
            present += std::find(tp.passage_tokens.begin(), tp.passage_tokens.end(), t) != tp.passage_tokens.end();
        }
        const std::size_t expected = tp.score == 1.0 ? 3 : tp.score == 0.65 ? 2 : 1;
        EXPECT_EQ(present, expected);
    }
    EXPECT_EQ(scores, (std::multiset<double>{1.0, 0.65, 0.65, 0.65, 0.55, 0.55, 0.55}));
}

TEST(Perturb, Rejections) {
    const std::vector<std::string> vocab = {"a", "b", "z"};
    EXPECT_THROW(perturb({{"a", "b"}, {"d", 0, 0, {"a"}}}, vocab, 1), ParameterError);
    EXPECT_THROW(perturb({{"a"}, {"d", 0, 0, {"a"}}}, vocab, 1), ParameterError);
    const std::vector<std::string> only_query = {"a", "b"};
    EXPECT_THROW(perturb({{"a", "b"}, {"d", 0, 0, {"a", "b"}}}, only_query, 1), ParameterError);
}

TEST(Negatives, CountAndRejection) {
    const std::vector<MinedQuery> queries = {{{"a", "b"}, 1, 1}};
    const std::vector<Passage> passages = {{"x", 0, 0, {"a", "b"}}, {"y", 0, 0, {"a", "c"}}, {"z", 0, 0, {"q"}}};
    const auto neg = negative_pairs(queries, passages, 50, 3);
    ASSERT_EQ(neg.size(), 50u);
    for (const auto& tp : neg) {
        EXPECT_EQ(tp.label, 0);
        EXPECT_EQ(tp.score, 0.0);
        EXPECT_FALSE(contains_all(tp.passage_tokens, tp.query_terms));
    }
    EXPECT_EQ(neg, negative_pairs(queries, passages, 50, 3));
    EXPECT_TRUE(negative_pairs(queries, passages, 0, 3).empty());
    const std::vector<Passage> all_match = {{"x", 0, 0, {"a", "b"}}};
    EXPECT_THROW(negative_pairs(queries, all_match, 1, 3), StateError);
}

TEST(QuerySeed, DependsOnKeyAndSeed) {
    EXPECT_EQ(query_seed(1, "a b"), query_seed(1, "a b"));
    EXPECT_NE(query_seed(1, "a b"), query_seed(2, "a b"));
    EXPECT_NE(query_seed(1, "a b"), query_seed(1, "a c"));
}

TEST(Pipeline, DeterministicAcrossThreadCounts) {
    std::mt19937_64 rng(8);
    const auto docs = fixtures::random_docs(rng, 80, 20, 40);
    const Corpus corpus(docs);
    const auto index = LexicalIndex::build(docs);
    const auto vocab = vocab_of(index);
    TrainingConfig config;
    config.mining = {4, 10};
    config.threads = 1;
    TrainingSummary one;
    const auto a = build_training_pairs(corpus, index, vocab, config, &one);
    config.threads = 4;
    TrainingSummary four;
    const auto b = build_training_pairs(corpus, index, vocab, config, &four);
    EXPECT_EQ(a, b);
    EXPECT_EQ(one.output_digest, four.output_digest);
    EXPECT_GT(one.bigram_queries, 0u);
    EXPECT_GE(one.positives, 3 * one.positive_pairs);
    EXPECT_LE(one.positives, 7 * one.positive_pairs);
    EXPECT_EQ(one.negatives, one.positives);

    config.seed = 14;
    TrainingSummary other;
    build_training_pairs(corpus, index, vocab, config, &other);
    EXPECT_NE(other.output_digest, one.output_digest);
    EXPECT_NE(other.config_hash, one.config_hash);
}

TEST(Pipeline, ShardsAndManifest) {
    const auto docs = weather_docs();
    const Corpus corpus(docs);
    const auto index = LexicalIndex::build(docs);
    const auto vocab = vocab_of(index);
    TrainingConfig config;
    config.mining = {3, 1};
    config.shard_size = 4;
    config.negative_ratio = 0.5;
    TempDir tmp;
    const auto summary = generate_training_data(corpus, index, vocab, config, tmp.path());
    // "storm surge" is contiguous in a, b, c; e holds both terms apart, so
    // four single-passage documents give 3 graded pairs each
    EXPECT_EQ(summary.positive_pairs, 4u);
    EXPECT_EQ(summary.positives, 12u);
    EXPECT_EQ(summary.negatives, 6u);
    ASSERT_EQ(summary.shards.size(), 5u);
    EXPECT_EQ(summary.shards.back().second, 2u);

    std::size_t lines = 0;
    for (const auto& [name, count] : summary.shards) {
        std::ifstream in(tmp / name);
        std::string line;
        std::size_t n = 0;
        while (std::getline(in, line)) {
            const auto j = nlohmann::json::parse(line);
            EXPECT_TRUE(j.contains("query") && j.contains("passage") && j.contains("label") && j.contains("score"));
            ++n;
        }
        EXPECT_EQ(n, count);
        lines += n;
    }
    EXPECT_EQ(lines, 18u);
    std::ifstream m(tmp / "manifest.json");
    const auto manifest = nlohmann::json::parse(m);
    EXPECT_EQ(manifest.at("output_digest"), summary.output_digest);
    EXPECT_EQ(manifest.at("counts").at("negatives"), 6);

    config.shard_size = 0;
    EXPECT_THROW(generate_training_data(corpus, index, vocab, config, tmp / "x"), ParameterError);
}
