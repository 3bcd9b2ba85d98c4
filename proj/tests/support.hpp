#pragma once

// Shared fixtures and brute-force oracles for the test binaries. The oracles
// work from raw token lists and never touch the index internals.

#include "hybridir/corpus.hpp"
#include "hybridir/lexical.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace hybridir::fixtures {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("hybridir-test-" + std::to_string(rd()) + "-" + std::to_string(++counter));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Tokens split_words(const std::string& text) {
    Tokens out;
    std::string cur;
    for (char ch : text) {
        if (ch == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline Document doc(const std::string& id, const std::string& words) { return {id, words, split_words(words)}; }

inline std::string word(std::size_t i) { return "w" + std::to_string(i); }

/// Zipf-ish random documents over w0..w{vocab-1}.
inline std::vector<Document> random_docs(std::mt19937_64& rng, std::size_t n_docs, std::size_t vocab,
                                         std::size_t max_len) {
    std::vector<double> weights(vocab);
    for (std::size_t i = 0; i < vocab; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::uniform_int_distribution<std::size_t> len(1, max_len);
    std::vector<Document> docs;
    for (std::size_t d = 0; d < n_docs; ++d) {
        Document doc;
        doc.doc_id = "d" + std::to_string(d);
        const std::size_t n = len(rng);
        for (std::size_t k = 0; k < n; ++k) doc.tokens.push_back(word(pick(rng)));
        docs.push_back(std::move(doc));
    }
    return docs;
}

/// BM25 transcribed from its definition over raw documents.
inline std::map<std::string, double> brute_bm25(const std::vector<Document>& docs, const Tokens& query, double k1,
                                                double b) {
    const double n = static_cast<double>(docs.size());
    double total = 0;
    for (const auto& d : docs) total += static_cast<double>(d.tokens.size());
    const double avg = total / n;
    std::map<std::string, double> out;
    for (const auto& d : docs) {
        double score = 0;
        bool matched = false;
        for (const auto& q : query) {
            double df = 0;
            for (const auto& other : docs) {
                for (const auto& t : other.tokens) {
                    if (t == q) {
                        df += 1;
                        break;
                    }
                }
            }
            double tf = 0;
            for (const auto& t : d.tokens) tf += (t == q);
            if (tf == 0) continue;
            matched = true;
            const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            const double len = static_cast<double>(d.tokens.size());
            score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg));
        }
        if (matched) out[d.doc_id] = score;
    }
    return out;
}

}  // namespace hybridir::fixtures
