#pragma once

#include "hybridir/common.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace hybridir {

struct PassageHit {
    std::string passage_id;
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const PassageHit&, const PassageHit&) = default;
};

/// Coarse quantizer of an IVF-flat index.
struct IvfState {
    std::size_t n_centroids = 0;
    std::uint64_t seed = 0;
    std::vector<float> centroids;                  // n_centroids * dim, row-major
    std::vector<std::uint32_t> assignment;         // record -> centroid
    std::vector<std::vector<std::uint32_t>> cells;  // centroid -> records, ascending
};

struct KMeansParams {
    std::size_t max_iterations = 25;
};

/// Inner-product passage store with exact search and IVF-flat approximate
/// search. Vectors live in one contiguous float buffer.
class VectorIndex {
public:
    /// With `normalize` set, vectors are scaled to unit length on add so inner
    /// product equals cosine.
    explicit VectorIndex(std::size_t dim, bool normalize = false);

    /// Throws ParameterError on a dimension mismatch and LookupError on a
    /// repeated passage_id. Invalidates any built ANN state.
    void add(std::string passage_id, std::string doc_id, std::span<const float> vector);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return passage_ids_.size(); }
    bool empty() const { return passage_ids_.empty(); }
    bool normalizes() const { return normalize_; }
    std::span<const float> vector(std::size_t row) const {
        return std::span<const float>(data_).subspan(row * dim_, dim_);
    }
    const std::string& passage_id(std::size_t row) const { return passage_ids_[row]; }
    const std::string& doc_id(std::size_t row) const { return doc_ids_[row]; }
    std::optional<std::size_t> find(std::string_view passage_id) const;

    /// Top-k by inner product, ties by ascending passage_id.
    std::vector<PassageHit> knn_exact(std::span<const float> query, std::size_t k) const;

    /// Trains a k-means coarse quantizer. Deterministic for a fixed seed.
    void build_ann(std::size_t n_centroids, std::uint64_t seed, const KMeansParams& params = {});
    bool has_ann() const { return ann_.has_value(); }
    const IvfState& ann() const;
    /// Installs a previously trained quantizer (assignments are recomputed).
    void set_centroids(std::size_t n_centroids, std::uint64_t seed, std::vector<float> centroids);

    /// Exact top-k restricted to the n_probe cells whose centroids have the
    /// largest inner product with the query.
    std::vector<PassageHit> knn_approx(std::span<const float> query, std::size_t k, std::size_t n_probe) const;

    /// Writes the vector file; the ANN state is not part of it.
    void save(const std::filesystem::path& path) const;
    static VectorIndex load(const std::filesystem::path& path, bool normalize = false);

    void save_ann(const std::filesystem::path& path) const;
    void load_ann(const std::filesystem::path& path);

private:
    double dot(std::span<const float> query, std::size_t row) const;
    std::vector<PassageHit> select_top(std::span<const float> query, std::span<const std::uint32_t> rows,
                                       std::size_t k) const;
    void assign_all(IvfState& state) const;

    std::size_t dim_;
    bool normalize_;
    std::vector<float> data_;
    std::vector<std::string> passage_ids_;
    std::vector<std::string> doc_ids_;
    std::unordered_map<std::string, std::size_t> lookup_;
    std::optional<IvfState> ann_;
};

/// Sums passage scores per document and keeps the top-c documents.
ScoredList aggregate_to_docs(std::span<const PassageHit> hits, std::size_t c);

inline constexpr char kVectorFileMagic[8] = {'H', 'I', 'R', 'V', 'E', 'C', '0', '1'};
inline constexpr std::uint32_t kVectorFileVersion = 1;
inline constexpr std::size_t kVectorFileHeaderSize = 40;
inline constexpr char kIvfFileMagic[8] = {'H', 'I', 'R', 'I', 'V', 'F', '0', '1'};

/// Streams records into the vector file format:
///   header  magic[8] | u32 version | u32 dim | u64 count |
///           u64 string_table_offset | u64 string_table_size
///   record  u64 passage_id_offset | u64 doc_id_offset | f32[dim]
///   strings u32 length | bytes   (offsets are relative to the table start)
/// All fields little-endian.
class VectorFileWriter {
public:
    VectorFileWriter(const std::filesystem::path& path, std::size_t dim);
    ~VectorFileWriter();
    VectorFileWriter(const VectorFileWriter&) = delete;
    VectorFileWriter& operator=(const VectorFileWriter&) = delete;

    void write(std::string_view passage_id, std::string_view doc_id, std::span<const float> vector);
    /// Writes the string table and patches the header. Returns the record count.
    std::size_t finish();

private:
    std::uint64_t intern(std::string_view s);

    std::filesystem::path path_;
    std::size_t dim_;
    std::size_t count_ = 0;
    bool finished_ = false;
    std::string strings_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Memory-mapped read access to a vector file.
class VectorFileReader {
public:
    explicit VectorFileReader(const std::filesystem::path& path);
    ~VectorFileReader();
    VectorFileReader(VectorFileReader&&) noexcept;
    VectorFileReader& operator=(VectorFileReader&&) noexcept;

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return count_; }
    std::string passage_id(std::size_t i) const;
    std::string doc_id(std::size_t i) const;
    /// Copies record i's vector.
    std::vector<float> vector(std::size_t i) const;

private:
    std::string table_string(std::uint64_t offset) const;
    const unsigned char* record(std::size_t i) const;

    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::size_t dim_ = 0;
    std::size_t count_ = 0;
    std::uint64_t table_offset_ = 0;
    std::uint64_t table_size_ = 0;
};

}  // namespace hybridir
