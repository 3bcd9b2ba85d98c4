#include "hybridir/embedder.hpp"

#include "hybridir/dense.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace hybridir {

namespace {

double uniform01(std::mt19937_64& rng) {
    // 53 random bits -> (0, 1]
    return (static_cast<double>(rng() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::map<std::string, std::string> parse_kv(std::string_view body) {
    std::map<std::string, std::string> kv;
    while (!body.empty()) {
        auto comma = body.find(',');
        auto item = body.substr(0, comma);
        auto eq = item.find('=');
        if (eq == std::string_view::npos) {
            throw ParameterError("malformed provider option: " + std::string(item));
        }
        kv[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
        if (comma == std::string_view::npos) break;
        body.remove_prefix(comma + 1);
    }
    return kv;
}

std::uint64_t parse_u64(const std::string& s, std::string_view what) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw ParameterError("invalid " + std::string(what) + ": " + s);
    }
    return v;
}

}  // namespace

std::vector<float> BaselineProjectionProvider::projection_row(std::string_view concept_name, std::size_t dim,
                                                              std::uint64_t seed) {
    std::mt19937_64 rng(fnv1a(concept_name) ^ (seed * 0x9e3779b97f4a7c15ULL));
    std::vector<float> row(dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t i = 0; i < dim; i += 2) {
        // Box-Muller
        const double r = std::sqrt(-2.0 * std::log(uniform01(rng)));
        const double theta = 2.0 * std::numbers::pi * uniform01(rng);
        row[i] = static_cast<float>(r * std::cos(theta) * scale);
        if (i + 1 < dim) row[i + 1] = static_cast<float>(r * std::sin(theta) * scale);
    }
    return row;
}

BaselineProjectionProvider::BaselineProjectionProvider(const LexicalIndex& index, BaselineProjectionConfig config)
    : config_(std::move(config)) {
    if (config_.dim == 0) throw ParameterError("embedding dimension must be positive");
    for (TermId t = 0; t < index.num_terms(); ++t) {
        if (index.cf(t) < config_.min_occurrences) continue;
        const std::string& term = index.term(t);
        weights_.emplace(term, bm25_idf(index.num_docs(), index.df(t)));
        auto it = config_.concepts.find(term);
        const std::string& concept_name = it == config_.concepts.end() ? term : it->second;
        concept_of_.emplace(term, concept_name);
        if (!rows_.count(concept_name)) {
            rows_.emplace(concept_name, projection_row(concept_name, config_.dim, config_.seed));
        }
    }
}

std::vector<float> BaselineProjectionProvider::embed(const Tokens& tokens) const {
    std::map<std::string_view, double> counts;
    for (const auto& t : tokens) counts[t] += 1.0;
    std::vector<double> acc(config_.dim, 0.0);
    for (const auto& [term, n] : counts) {
        auto w = weights_.find(std::string(term));
        if (w == weights_.end()) continue;
        const auto& row = rows_.at(concept_of_.at(w->first));
        const double weight = n * w->second;
        for (std::size_t i = 0; i < config_.dim; ++i) acc[i] += weight * row[i];
    }
    return std::vector<float>(acc.begin(), acc.end());
}

std::vector<float> BaselineProjectionProvider::embed_query(std::string_view, const Tokens& tokens) const {
    return embed(tokens);
}

std::vector<float> BaselineProjectionProvider::embed_passage(std::string_view, const Tokens& tokens) const {
    return embed(tokens);
}

std::string BaselineProjectionProvider::describe() const {
    std::ostringstream s;
    s << "baseline:dim=" << config_.dim << ",seed=" << config_.seed << ",min_occ=" << config_.min_occurrences;
    if (!config_.concepts_source.empty()) s << ",concepts=" << config_.concepts_source;
    return s.str();
}

std::vector<std::string> BaselineProjectionProvider::vocabulary() const {
    std::vector<std::string> vocab;
    vocab.reserve(weights_.size());
    for (const auto& [term, _] : weights_) vocab.push_back(term);
    std::sort(vocab.begin(), vocab.end());
    return vocab;
}

PrecomputedProvider::PrecomputedProvider(std::size_t dim, std::string source) : dim_(dim), source_(std::move(source)) {
    if (dim == 0) throw ParameterError("embedding dimension must be positive");
}

void PrecomputedProvider::insert(std::string key, std::vector<float> vector) {
    if (vector.size() != dim_) {
        throw ParameterError("vector for \"" + key + "\" has dim " + std::to_string(vector.size()));
    }
    if (!vectors_.emplace(key, std::move(vector)).second) {
        throw LookupError("duplicate embedding key: " + key);
    }
}

const std::vector<float>& PrecomputedProvider::lookup(std::string_view key) const {
    auto it = vectors_.find(std::string(key));
    if (it == vectors_.end()) {
        throw LookupError("no precomputed embedding for key \"" + std::string(key) + "\"");
    }
    return it->second;
}

std::vector<float> PrecomputedProvider::embed_query(std::string_view key, const Tokens&) const {
    return lookup(key);
}

std::vector<float> PrecomputedProvider::embed_passage(std::string_view key, const Tokens&) const {
    return lookup(key);
}

PrecomputedProvider PrecomputedProvider::load_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<std::pair<std::string, std::vector<float>>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw IngestError(path.string() + ":" + std::to_string(line_no) + ": expected key<TAB>values");
        }
        std::vector<float> v;
        const char* p = line.data() + tab + 1;
        const char* end = line.data() + line.size();
        while (p < end) {
            while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
            if (p == end) break;
            float x = 0;
            auto [next, ec] = std::from_chars(p, end, x);
            if (ec != std::errc{}) {
                throw IngestError(path.string() + ":" + std::to_string(line_no) + ": bad number");
            }
            v.push_back(x);
            p = next;
        }
        rows.emplace_back(line.substr(0, tab), std::move(v));
    }
    if (rows.empty()) throw IngestError("no embeddings in " + path.string());
    PrecomputedProvider provider(rows.front().second.size(), "tsv:" + path.string());
    for (auto& [k, v] : rows) provider.insert(std::move(k), std::move(v));
    return provider;
}

PrecomputedProvider PrecomputedProvider::load_vector_file(const std::filesystem::path& path) {
    VectorFileReader reader(path);
    PrecomputedProvider provider(reader.dim(), "vectors:" + path.string());
    for (std::size_t i = 0; i < reader.size(); ++i) provider.insert(reader.passage_id(i), reader.vector(i));
    return provider;
}

std::map<std::string, std::string> load_concepts(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read concept file " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty() || line.front() == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw IngestError("concept line without TAB: " + line);
        std::string name = line.substr(0, tab);
        std::istringstream terms(line.substr(tab + 1));
        std::string term;
        while (terms >> term) out[term] = name;
    }
    return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(std::string_view spec, const LexicalIndex& index) {
    auto colon = spec.find(':');
    if (colon == std::string_view::npos) throw ParameterError("provider spec needs a kind prefix: " + std::string(spec));
    const auto kind = spec.substr(0, colon);
    const auto body = spec.substr(colon + 1);
    if (kind == "baseline") {
        BaselineProjectionConfig config;
        for (const auto& [k, v] : parse_kv(body)) {
            if (k == "dim") config.dim = parse_u64(v, "dim");
            else if (k == "seed") config.seed = parse_u64(v, "seed");
            else if (k == "min_occ") config.min_occurrences = parse_u64(v, "min_occ");
            else if (k == "concepts") {
                config.concepts = load_concepts(v);
                config.concepts_source = v;
            }
            else throw ParameterError("unknown baseline option: " + k);
        }
        return std::make_unique<BaselineProjectionProvider>(index, std::move(config));
    }
    if (kind == "tsv") return std::make_unique<PrecomputedProvider>(PrecomputedProvider::load_tsv(std::string(body)));
    if (kind == "vectors") {
        return std::make_unique<PrecomputedProvider>(PrecomputedProvider::load_vector_file(std::string(body)));
    }
    throw ParameterError("unknown provider kind: " + std::string(kind));
}

namespace {

void check_loss_inputs(int label, double target_score, double dot) {
    if (!std::isfinite(target_score) || !std::isfinite(dot)) throw ParameterError("pair_loss inputs must be finite");
    if (label != 0 && label != 1) throw ParameterError("label must be 0 or 1");
    if (target_score < 0.0 || target_score > 1.0) throw ParameterError("target score must lie in [0, 1]");
}

}  // namespace

double pair_loss(int label, double target_score, double dot) {
    check_loss_inputs(label, target_score, dot);
    // -y ln s(x) - (1-y) ln(1 - s(x)) = softplus(x) - y x, evaluated without overflow
    const double softplus = std::max(dot, 0.0) + std::log1p(std::exp(-std::abs(dot)));
    const double ce = softplus - static_cast<double>(label) * dot;
    const double err = target_score - dot;
    return ce + err * err;
}

double pair_loss_grad(int label, double target_score, double dot) {
    check_loss_inputs(label, target_score, dot);
    const double sigmoid = dot >= 0.0 ? 1.0 / (1.0 + std::exp(-dot)) : std::exp(dot) / (1.0 + std::exp(dot));
    return sigmoid - static_cast<double>(label) + 2.0 * (dot - target_score);
}

std::size_t embed_corpus(const EmbeddingProvider& provider, std::span<const Passage> passages,
                         const std::filesystem::path& out) {
    VectorFileWriter writer(out, provider.dim());
    std::size_t position = 0;
    for (const auto& p : passages) {
        const std::string id = p.passage_id();
        try {
            writer.write(id, p.doc_id, provider.embed_passage(id, p.tokens));
        } catch (const Error& e) {
            throw IoError("passage " + std::to_string(position) + " (" + id + "): " + e.what());
        }
        ++position;
    }
    return writer.finish();
}

std::size_t embed_corpus(const EmbeddingProvider& provider, const Corpus& corpus, const std::filesystem::path& out,
                         std::size_t window, std::size_t stride) {
    VectorFileWriter writer(out, provider.dim());
    std::size_t position = 0;
    for (const auto& doc : corpus.documents()) {
        for (const auto& p : split_passages(doc, window, stride)) {
            const std::string id = p.passage_id();
            try {
                writer.write(id, p.doc_id, provider.embed_passage(id, p.tokens));
            } catch (const Error& e) {
                throw IoError("passage " + std::to_string(position) + " (" + id + "): " + e.what());
            }
            ++position;
        }
    }
    return writer.finish();
}

}  // namespace hybridir
