#include "hybridir/dense.hpp"

#include "hybridir/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

namespace hybridir {

namespace {

bool hit_order(const PassageHit& a, const PassageHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.passage_id < b.passage_id;
}

double l2_sq(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return s;
}

std::uint32_t nearest_centroid(std::span<const float> v, const std::vector<float>& centroids, std::size_t dim) {
    const std::size_t n = centroids.size() / dim;
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
        const double d = l2_sq(v, std::span<const float>(centroids).subspan(c * dim, dim));
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::uint32_t>(c);
        }
    }
    return best;
}

}  // namespace

VectorIndex::VectorIndex(std::size_t dim, bool normalize) : dim_(dim), normalize_(normalize) {
    if (dim == 0) {
        throw ParameterError("vector dimension must be positive");
    }
}

void VectorIndex::add(std::string passage_id, std::string doc_id, std::span<const float> vector) {
    if (vector.size() != dim_) {
        throw ParameterError("vector of dim " + std::to_string(vector.size()) + " added to dim-" +
                             std::to_string(dim_) + " index");
    }
    if (lookup_.count(passage_id) != 0) {
        throw LookupError("duplicate passage_id: " + passage_id);
    }
    const std::size_t base = data_.size();
    data_.insert(data_.end(), vector.begin(), vector.end());
    if (normalize_) {
        double norm = 0.0;
        for (float x : vector) norm += static_cast<double>(x) * x;
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (std::size_t i = 0; i < dim_; ++i) {
                data_[base + i] = static_cast<float>(data_[base + i] / norm);
            }
        }
    }
    lookup_.emplace(passage_id, passage_ids_.size());
    passage_ids_.push_back(std::move(passage_id));
    doc_ids_.push_back(std::move(doc_id));
    ann_.reset();
}

std::optional<std::size_t> VectorIndex::find(std::string_view passage_id) const {
    auto it = lookup_.find(std::string(passage_id));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

double VectorIndex::dot(std::span<const float> query, std::size_t row) const {
    const float* v = data_.data() + row * dim_;
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += static_cast<double>(query[i]) * static_cast<double>(v[i]);
    return s;
}

std::vector<PassageHit> VectorIndex::select_top(std::span<const float> query, std::span<const std::uint32_t> rows,
                                                std::size_t k) const {
    struct Cand {
        double score;
        std::uint32_t row;
    };
    std::vector<Cand> cands;
    cands.reserve(rows.size());
    for (std::uint32_t r : rows) cands.push_back({dot(query, r), r});
    auto order = [this](const Cand& a, const Cand& b) {
        if (a.score != b.score) return a.score > b.score;
        return passage_ids_[a.row] < passage_ids_[b.row];
    };
    const std::size_t n = std::min(k, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(n), cands.end(), order);
    std::vector<PassageHit> hits;
    hits.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        hits.push_back({passage_ids_[cands[i].row], doc_ids_[cands[i].row], cands[i].score});
    }
    return hits;
}

std::vector<PassageHit> VectorIndex::knn_exact(std::span<const float> query, std::size_t k) const {
    if (k == 0) throw ParameterError("k must be positive");
    if (query.size() != dim_) throw ParameterError("query dimension mismatch");
    std::vector<std::uint32_t> rows(size());
    std::iota(rows.begin(), rows.end(), 0U);
    return select_top(query, rows, k);
}

void VectorIndex::assign_all(IvfState& state) const {
    state.assignment.assign(size(), 0);
    state.cells.assign(state.n_centroids, {});
    for (std::size_t r = 0; r < size(); ++r) {
        const std::uint32_t c = nearest_centroid(vector(r), state.centroids, dim_);
        state.assignment[r] = c;
        state.cells[c].push_back(static_cast<std::uint32_t>(r));
    }
}

void VectorIndex::build_ann(std::size_t n_centroids, std::uint64_t seed, const KMeansParams& params) {
    if (n_centroids == 0 || n_centroids > size()) {
        throw ParameterError("k-means needs 1 <= n_centroids <= #records (" + std::to_string(size()) + ")");
    }
    IvfState state;
    state.n_centroids = n_centroids;
    state.seed = seed;

    // initial centroids: a seeded sample of distinct records
    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> order(size());
    std::iota(order.begin(), order.end(), 0U);
    for (std::size_t i = 0; i < n_centroids; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (order.size() - i));
        std::swap(order[i], order[j]);
    }
    state.centroids.resize(n_centroids * dim_);
    for (std::size_t c = 0; c < n_centroids; ++c) {
        auto v = vector(order[c]);
        std::copy(v.begin(), v.end(), state.centroids.begin() + static_cast<std::ptrdiff_t>(c * dim_));
    }

    std::vector<std::uint32_t> assignment(size(), std::numeric_limits<std::uint32_t>::max());
    std::vector<double> sums(n_centroids * dim_);
    std::vector<std::size_t> counts(n_centroids);
    for (std::size_t iter = 0; iter < params.max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t r = 0; r < size(); ++r) {
            const std::uint32_t c = nearest_centroid(vector(r), state.centroids, dim_);
            if (c != assignment[r]) {
                assignment[r] = c;
                changed = true;
            }
        }
        if (!changed) break;
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t r = 0; r < size(); ++r) {
            const std::size_t c = assignment[r];
            ++counts[c];
            auto v = vector(r);
            for (std::size_t i = 0; i < dim_; ++i) sums[c * dim_ + i] += v[i];
        }
        for (std::size_t c = 0; c < n_centroids; ++c) {
            // an empty cell keeps its previous centroid
            if (counts[c] == 0) continue;
            for (std::size_t i = 0; i < dim_; ++i) {
                state.centroids[c * dim_ + i] = static_cast<float>(sums[c * dim_ + i] / static_cast<double>(counts[c]));
            }
        }
    }
    assign_all(state);
    ann_ = std::move(state);
}

const IvfState& VectorIndex::ann() const {
    if (!ann_) throw StateError("ANN state has not been built");
    return *ann_;
}

void VectorIndex::set_centroids(std::size_t n_centroids, std::uint64_t seed, std::vector<float> centroids) {
    if (n_centroids == 0 || centroids.size() != n_centroids * dim_) {
        throw ParameterError("centroid buffer does not match n_centroids * dim");
    }
    IvfState state;
    state.n_centroids = n_centroids;
    state.seed = seed;
    state.centroids = std::move(centroids);
    assign_all(state);
    ann_ = std::move(state);
}

std::vector<PassageHit> VectorIndex::knn_approx(std::span<const float> query, std::size_t k, std::size_t n_probe) const {
    if (!ann_) throw StateError("knn_approx requires build_ann first");
    if (k == 0) throw ParameterError("k must be positive");
    if (query.size() != dim_) throw ParameterError("query dimension mismatch");
    if (n_probe == 0 || n_probe > ann_->n_centroids) {
        throw ParameterError("n_probe must lie in [1, n_centroids]");
    }
    std::vector<std::pair<double, std::uint32_t>> cell_scores;
    cell_scores.reserve(ann_->n_centroids);
    for (std::size_t c = 0; c < ann_->n_centroids; ++c) {
        auto centroid = std::span<const float>(ann_->centroids).subspan(c * dim_, dim_);
        double s = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) s += static_cast<double>(query[i]) * centroid[i];
        cell_scores.emplace_back(s, static_cast<std::uint32_t>(c));
    }
    std::partial_sort(cell_scores.begin(), cell_scores.begin() + static_cast<std::ptrdiff_t>(n_probe),
                      cell_scores.end(), [](const auto& a, const auto& b) {
                          return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < n_probe; ++i) {
        const auto& cell = ann_->cells[cell_scores[i].second];
        rows.insert(rows.end(), cell.begin(), cell.end());
    }
    return select_top(query, rows, k);
}

void VectorIndex::save(const std::filesystem::path& path) const {
    VectorFileWriter writer(path, dim_);
    for (std::size_t r = 0; r < size(); ++r) writer.write(passage_ids_[r], doc_ids_[r], vector(r));
    writer.finish();
}

VectorIndex VectorIndex::load(const std::filesystem::path& path, bool normalize) {
    VectorFileReader reader(path);
    VectorIndex index(reader.dim(), normalize);
    index.data_.reserve(reader.size() * reader.dim());
    for (std::size_t i = 0; i < reader.size(); ++i) {
        auto v = reader.vector(i);
        index.add(reader.passage_id(i), reader.doc_id(i), v);
    }
    return index;
}

void VectorIndex::save_ann(const std::filesystem::path& path) const {
    const IvfState& state = ann();
    BinaryWriter out(path);
    out.bytes({kIvfFileMagic, sizeof(kIvfFileMagic)});
    out.u32(1);
    out.u32(static_cast<std::uint32_t>(dim_));
    out.u64(state.n_centroids);
    out.u64(size());
    out.u64(state.seed);
    for (float x : state.centroids) out.f32(x);
    out.close();
}

void VectorIndex::load_ann(const std::filesystem::path& path) {
    BinaryReader in(path);
    if (in.bytes(sizeof(kIvfFileMagic)) != std::string_view(kIvfFileMagic, sizeof(kIvfFileMagic))) {
        throw IoError("not an IVF file: " + path.string());
    }
    if (in.u32() != 1) throw IoError("unsupported IVF file version: " + path.string());
    if (in.u32() != dim_) throw IoError("IVF file dimension differs from the vector index");
    const std::uint64_t n = in.u64();
    if (in.u64() != size()) throw IoError("IVF file was built for a different record count");
    const std::uint64_t seed = in.u64();
    std::vector<float> centroids(n * dim_);
    for (auto& x : centroids) x = in.f32();
    in.expect_end();
    set_centroids(n, seed, std::move(centroids));
}

ScoredList aggregate_to_docs(std::span<const PassageHit> hits, std::size_t c) {
    std::unordered_map<std::string_view, std::size_t> slot;
    std::vector<ScoredDoc> docs;
    for (const auto& h : hits) {
        auto [it, inserted] = slot.emplace(h.doc_id, docs.size());
        if (inserted) docs.push_back({h.doc_id, 0.0});
        docs[it->second].score += h.score;
    }
    return ScoredList::top(std::move(docs), c);
}

// --- vector file -----------------------------------------------------------

struct VectorFileWriter::Impl {
    explicit Impl(const std::filesystem::path& path) : out(path) {}
    BinaryWriter out;
};

VectorFileWriter::VectorFileWriter(const std::filesystem::path& path, std::size_t dim)
    : path_(path), dim_(dim), impl_(std::make_unique<Impl>(path)) {
    if (dim == 0) throw ParameterError("vector dimension must be positive");
    impl_->out.bytes(std::string(kVectorFileHeaderSize, '\0'));
}

VectorFileWriter::~VectorFileWriter() {
    if (!finished_) {
        try {
            finish();
        } catch (...) {
        }
    }
}

std::uint64_t VectorFileWriter::intern(std::string_view s) {
    const std::uint64_t offset = strings_.size();
    unsigned char len[4];
    store_le32(static_cast<std::uint32_t>(s.size()), len);
    strings_.append(reinterpret_cast<const char*>(len), 4);
    strings_.append(s);
    return offset;
}

void VectorFileWriter::write(std::string_view passage_id, std::string_view doc_id, std::span<const float> vector) {
    if (finished_) throw StateError("vector file already finished");
    if (vector.size() != dim_) {
        throw ParameterError("record " + std::to_string(count_) + " has dim " + std::to_string(vector.size()) +
                             ", expected " + std::to_string(dim_));
    }
    impl_->out.u64(intern(passage_id));
    impl_->out.u64(intern(doc_id));
    for (float x : vector) impl_->out.f32(x);
    ++count_;
}

std::size_t VectorFileWriter::finish() {
    if (finished_) return count_;
    finished_ = true;
    const std::uint64_t table_offset = impl_->out.position();
    impl_->out.bytes(strings_);
    impl_->out.seek(0);
    impl_->out.bytes({kVectorFileMagic, sizeof(kVectorFileMagic)});
    impl_->out.u32(kVectorFileVersion);
    impl_->out.u32(static_cast<std::uint32_t>(dim_));
    impl_->out.u64(count_);
    impl_->out.u64(table_offset);
    impl_->out.u64(strings_.size());
    impl_->out.close();
    return count_;
}

struct VectorFileReader::Impl {
    explicit Impl(const std::filesystem::path& path) : file(path) {}
    MappedFile file;
};

VectorFileReader::VectorFileReader(const std::filesystem::path& path) : impl_(std::make_unique<Impl>(path)) {
    auto bytes = impl_->file.data();
    if (bytes.size() < kVectorFileHeaderSize ||
        std::memcmp(bytes.data(), kVectorFileMagic, sizeof(kVectorFileMagic)) != 0) {
        throw IoError("not a vector file: " + path.string());
    }
    const std::uint32_t version = load_le32(bytes.data() + 8);
    if (version != kVectorFileVersion) {
        throw IoError("unsupported vector file version " + std::to_string(version));
    }
    dim_ = load_le32(bytes.data() + 12);
    count_ = load_le64(bytes.data() + 16);
    table_offset_ = load_le64(bytes.data() + 24);
    table_size_ = load_le64(bytes.data() + 32);
    const std::uint64_t record_size = 16 + 4ULL * dim_;
    if (dim_ == 0 || table_offset_ != kVectorFileHeaderSize + count_ * record_size ||
        table_offset_ + table_size_ != bytes.size()) {
        throw IoError("corrupt vector file header: " + path.string());
    }
}

VectorFileReader::~VectorFileReader() = default;
VectorFileReader::VectorFileReader(VectorFileReader&&) noexcept = default;
VectorFileReader& VectorFileReader::operator=(VectorFileReader&&) noexcept = default;

const unsigned char* VectorFileReader::record(std::size_t i) const {
    if (i >= count_) throw LookupError("vector record out of range: " + std::to_string(i));
    return impl_->file.data().data() + kVectorFileHeaderSize + i * (16 + 4 * dim_);
}

std::string VectorFileReader::table_string(std::uint64_t offset) const {
    if (offset + 4 > table_size_) throw IoError("string offset outside table");
    const unsigned char* base = impl_->file.data().data() + table_offset_;
    const std::uint32_t len = load_le32(base + offset);
    if (offset + 4 + len > table_size_) throw IoError("string overruns table");
    return std::string(reinterpret_cast<const char*>(base + offset + 4), len);
}

std::string VectorFileReader::passage_id(std::size_t i) const {
    return table_string(load_le64(record(i)));
}

std::string VectorFileReader::doc_id(std::size_t i) const {
    return table_string(load_le64(record(i) + 8));
}

std::vector<float> VectorFileReader::vector(std::size_t i) const {
    const unsigned char* p = record(i) + 16;
    std::vector<float> v(dim_);
    for (std::size_t j = 0; j < dim_; ++j) v[j] = std::bit_cast<float>(load_le32(p + 4 * j));
    return v;
}

}  // namespace hybridir
