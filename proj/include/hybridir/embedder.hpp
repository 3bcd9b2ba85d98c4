#pragma once

#include "hybridir/common.hpp"
#include "hybridir/corpus.hpp"
#include "hybridir/lexical.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hybridir {

/// Produces query and passage vectors. Implementations are immutable after
/// construction and safe to call concurrently. The query and passage entry
/// points are separate so a provider can keep distinct output layers per side.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dim() const = 0;
    /// `key` is the query id; tokens are its normalized terms.
    virtual std::vector<float> embed_query(std::string_view key, const Tokens& tokens) const = 0;
    /// `key` is the passage id.
    virtual std::vector<float> embed_passage(std::string_view key, const Tokens& tokens) const = 0;
    /// Round-trippable spec string, recorded in manifests.
    virtual std::string describe() const = 0;
};

struct BaselineProjectionConfig {
    std::size_t dim = 128;
    std::uint64_t seed = 42;
    /// Vocabulary: terms whose collection frequency reaches this threshold.
    std::uint64_t min_occurrences = 300;
    /// Optional term -> concept map. Terms sharing a concept share a
    /// projection row, which makes synonyms land near each other.
    std::map<std::string, std::string> concepts;
    /// Where `concepts` came from, for describe().
    std::string concepts_source;
};

/// idf-weighted bag of terms pushed through a fixed seeded Gaussian random
/// projection. Linear in term counts; terms outside the vocabulary are ignored.
class BaselineProjectionProvider final : public EmbeddingProvider {
public:
    BaselineProjectionProvider(const LexicalIndex& index, BaselineProjectionConfig config);

    std::size_t dim() const override { return config_.dim; }
    std::vector<float> embed_query(std::string_view key, const Tokens& tokens) const override;
    std::vector<float> embed_passage(std::string_view key, const Tokens& tokens) const override;
    std::string describe() const override;

    /// Terms that qualify for the vocabulary, ascending.
    std::vector<std::string> vocabulary() const;
    bool in_vocabulary(std::string_view term) const { return weights_.count(std::string(term)) != 0; }

    /// Projection row for a concept (independent of vocabulary order).
    static std::vector<float> projection_row(std::string_view concept_name, std::size_t dim, std::uint64_t seed);

private:
    std::vector<float> embed(const Tokens& tokens) const;

    BaselineProjectionConfig config_;
    std::unordered_map<std::string, double> weights_;  // term -> idf
    std::unordered_map<std::string, std::vector<float>> rows_;  // concept -> row
    std::unordered_map<std::string, std::string> concept_of_;
};

/// Vectors looked up by key; a miss throws LookupError.
class PrecomputedProvider final : public EmbeddingProvider {
public:
    PrecomputedProvider(std::size_t dim, std::string source);

    void insert(std::string key, std::vector<float> vector);
    std::size_t dim() const override { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    std::vector<float> embed_query(std::string_view key, const Tokens& tokens) const override;
    std::vector<float> embed_passage(std::string_view key, const Tokens& tokens) const override;
    std::string describe() const override { return source_; }

    /// Lines of `key<TAB>f1 f2 ... fD`.
    static PrecomputedProvider load_tsv(const std::filesystem::path& path);
    /// Keys are the passage ids of the vector file.
    static PrecomputedProvider load_vector_file(const std::filesystem::path& path);

private:
    const std::vector<float>& lookup(std::string_view key) const;

    std::size_t dim_;
    std::string source_;
    std::unordered_map<std::string, std::vector<float>> vectors_;
};

/// Parses `baseline:dim=D,seed=S[,min_occ=M][,concepts=PATH]`, `tsv:PATH`
/// or `vectors:PATH`. The index is needed for the baseline provider.
std::unique_ptr<EmbeddingProvider> make_provider(std::string_view spec, const LexicalIndex& index);

/// Concept file: one line per group, `concept<TAB>term term ...`.
std::map<std::string, std::string> load_concepts(const std::filesystem::path& path);

/// CE(label, sigmoid(dot)) + (target - dot)^2. Throws ParameterError for
/// non-finite input, a target outside [0, 1] or a label other than 0/1.
double pair_loss(int label, double target_score, double dot);
/// d pair_loss / d dot = sigmoid(dot) - label + 2 (dot - target).
double pair_loss_grad(int label, double target_score, double dot);

/// Embeds every passage with embed_passage and writes a vector file.
/// Returns the record count.
std::size_t embed_corpus(const EmbeddingProvider& provider, std::span<const Passage> passages,
                         const std::filesystem::path& out);
/// Splits each document into passages on the fly.
std::size_t embed_corpus(const EmbeddingProvider& provider, const Corpus& corpus, const std::filesystem::path& out,
                         std::size_t window = kDefaultPassageWindow, std::size_t stride = kDefaultPassageStride);

}  // namespace hybridir
