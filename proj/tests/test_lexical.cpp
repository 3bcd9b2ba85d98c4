#include "hybridir/binary_io.hpp"
#include "hybridir/lexical.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

using namespace hybridir;
using hybridir::fixtures::doc;
using hybridir::fixtures::TempDir;

TEST(Bm25, WorkedPoint) {
    // N=2, df=1, tf=1 and |d| equal to the average length: idf = ln 2, tf part = 1.
    const auto index = LexicalIndex::build({doc("a", "x"), doc("b", "y")});
    EXPECT_NEAR(bm25_score(index, {"x"}, "a"), std::log(2.0), 1e-12);
    EXPECT_NEAR(bm25_score(index, {"x"}, "a"), 0.693147, 1e-6);
    EXPECT_EQ(bm25_score(index, {"x"}, "b"), 0.0);
}

TEST(Bm25, IdfIsFiniteAndPositive) {
    EXPECT_NEAR(bm25_idf(10, 0), std::log(1 + 10.5 / 0.5), 1e-12);
    EXPECT_GT(bm25_idf(10, 10), 0.0);
    EXPECT_NEAR(bm25_idf(10, 10), std::log(1 + 0.5 / 10.5), 1e-12);
}

TEST(Bm25, RepeatedQueryTermsCountTwice) {
    const auto index = LexicalIndex::build({doc("a", "x y"), doc("b", "y z"), doc("c", "z")});
    EXPECT_NEAR(bm25_score(index, {"x", "x"}, "a"), 2 * bm25_score(index, {"x"}, "a"), 1e-12);
}

TEST(Bm25, SearchMatchesBruteForce) {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 5; ++round) {
        const auto docs = fixtures::random_docs(rng, 80, 40, 30);
        const auto index = LexicalIndex::build(docs);
        for (int q = 0; q < 20; ++q) {
            Tokens query;
            const std::size_t n = 1 + rng() % 4;
            for (std::size_t k = 0; k < n; ++k) query.push_back(fixtures::word(rng() % 45));
            const auto expected = fixtures::brute_bm25(docs, query, 0.9, 0.4);
            const auto result = bm25_search(index, query, 1000).list;
            ASSERT_EQ(result.size(), expected.size());
            for (std::size_t r = 0; r < result.size(); ++r) {
                EXPECT_NEAR(result[r].score, expected.at(result[r].doc_id), 1e-9);
                if (r > 0) EXPECT_TRUE(ranks_before(result[r - 1], result[r]));
            }
        }
    }
}

TEST(Bm25, TiesBreakByDocId) {
    const auto index = LexicalIndex::build({doc("b", "x"), doc("a", "x"), doc("c", "y")});
    const auto list = bm25_search(index, {"x"}, 10).list;
    ASSERT_EQ(list.size(), 2u);
    EXPECT_EQ(list[0].doc_id, "a");
    EXPECT_EQ(list[1].doc_id, "b");
}

TEST(Bm25, TruncationAndEmptyQuery) {
    const auto index = LexicalIndex::build({doc("a", "x"), doc("b", "x x"), doc("c", "x y")});
    EXPECT_EQ(bm25_search(index, {"x"}, 2).list.size(), 2u);
    const auto empty = bm25_search(index, {}, 5);
    EXPECT_TRUE(empty.empty_query);
    EXPECT_TRUE(empty.list.empty());
    EXPECT_TRUE(bm25_search(index, {"unknown"}, 5).list.empty());
    EXPECT_THROW(bm25_search(index, {"x"}, 0), ParameterError);
    EXPECT_THROW(bm25_score(index, {"x"}, "zz"), LookupError);
}

TEST(Bm25, CustomParameters) {
    std::mt19937_64 rng(5);
    const auto docs = fixtures::random_docs(rng, 50, 20, 40);
    const auto index = LexicalIndex::build(docs);
    const Tokens query{"w1", "w7"};
    const auto expected = fixtures::brute_bm25(docs, query, 1.2, 0.75);
    for (const auto& e : bm25_search(index, query, 100, {1.2, 0.75}).list) {
        EXPECT_NEAR(e.score, expected.at(e.doc_id), 1e-9);
    }
}

TEST(LexicalIndex, Statistics) {
    const auto index = LexicalIndex::build({doc("a", "x y x"), doc("b", "y z")});
    EXPECT_EQ(index.num_docs(), 2u);
    EXPECT_EQ(index.num_terms(), 3u);
    EXPECT_EQ(index.total_tokens(), 5u);
    EXPECT_DOUBLE_EQ(index.avg_doc_len(), 2.5);
    EXPECT_EQ(index.df("y"), 2u);
    EXPECT_EQ(index.cf("x"), 2u);
    EXPECT_EQ(index.df("nope"), 0u);
    EXPECT_EQ(index.term(0), "x");
    EXPECT_EQ(index.tf(*index.term_id("x"), index.doc_index("a")), 2u);
    EXPECT_EQ(index.doc_terms(index.doc_index("b")).size(), 2u);
    EXPECT_EQ(matching_doc_count(index, {"x", "z"}), 2u);
    EXPECT_EQ(matching_doc_count(index, {"x"}), 1u);
    EXPECT_THROW(index.doc_index("c"), LookupError);
}

TEST(LexicalIndex, BuilderRejectsEmptyAndDuplicates) {
    EXPECT_THROW(LexicalIndex::Builder().finish(), StateError);
    LexicalIndex::Builder b;
    b.add("a", Tokens{"x"});
    EXPECT_THROW(b.add("a", Tokens{"y"}), IngestError);
}

TEST(LexicalIndex, EmptyDocumentIsIndexed) {
    const auto index = LexicalIndex::build({doc("a", ""), doc("b", "x")});
    EXPECT_EQ(index.doc_len(index.doc_index("a")), 0u);
    EXPECT_EQ(bm25_search(index, {"x"}, 5).list.size(), 1u);
}

TEST(LexicalIndex, SaveLoadRoundTripIsByteStable) {
    std::mt19937_64 rng(2);
    const auto docs = fixtures::random_docs(rng, 60, 30, 25);
    const auto index = LexicalIndex::build(docs);
    TempDir tmp;
    index.save(tmp / "a.idx");
    const auto loaded = LexicalIndex::load(tmp / "a.idx");
    EXPECT_TRUE(loaded == index);
    loaded.save(tmp / "b.idx");
    EXPECT_EQ(file_digest(tmp / "a.idx"), file_digest(tmp / "b.idx"));
    const auto rebuilt = LexicalIndex::build(docs);
    rebuilt.save(tmp / "c.idx");
    EXPECT_EQ(file_digest(tmp / "a.idx"), file_digest(tmp / "c.idx"));
    EXPECT_EQ(bm25_search(loaded, {"w1", "w2"}, 10).list, bm25_search(index, {"w1", "w2"}, 10).list);
}

TEST(LexicalIndex, LoadRejectsCorruptFiles) {
    TempDir tmp;
    {
        std::ofstream out(tmp / "bad.idx", std::ios::binary);
        out << "NOTANINDEX";
    }
    EXPECT_THROW(LexicalIndex::load(tmp / "bad.idx"), IoError);
    EXPECT_THROW(LexicalIndex::load(tmp / "missing.idx"), IoError);
}

TEST(LexicalIndex, StatsJson) {
    const auto index = LexicalIndex::build({doc("a", "x y"), doc("b", "y")});
    const auto stats = index.stats_json();
    EXPECT_EQ(stats.at("num_docs").get<int>(), 2);
    EXPECT_EQ(stats.at("total_tokens").get<int>(), 3);
}
