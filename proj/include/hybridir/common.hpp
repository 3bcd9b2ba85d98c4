#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hybridir {

/// Base class of every error raised by the library. The CLI maps these to
/// exit status 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument value (window/stride, alpha, k, dimensions, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Unknown doc_id, passage_id or embedding key.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Malformed or duplicate input record.
class IngestError : public Error {
public:
    using Error::Error;
};

/// Operation invoked on an object that is not in the required state.
class StateError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Total order used by every ranked list: score descending, then doc_id
/// ascending.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.doc_id < b.doc_id;
}

/// A ranked list of unique documents ordered by `ranks_before`.
class ScoredList {
public:
    ScoredList() = default;

    /// Sorts `candidates` and keeps the first `limit` entries. Throws
    /// ParameterError if a doc_id appears twice.
    static ScoredList top(std::vector<ScoredDoc> candidates, std::size_t limit);

    /// Adopts entries that are already in rank order. Throws ParameterError
    /// when ordering or uniqueness is violated.
    static ScoredList from_ranked(std::vector<ScoredDoc> ranked);

    const std::vector<ScoredDoc>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const ScoredDoc& operator[](std::size_t i) const { return entries_[i]; }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    bool contains(std::string_view doc_id) const;
    std::vector<std::string> doc_ids() const;

    /// First `n` entries.
    ScoredList truncated(std::size_t n) const;

    friend bool operator==(const ScoredList&, const ScoredList&) = default;

private:
    std::vector<ScoredDoc> entries_;
};

/// 64-bit FNV-1a; stable across platforms and processes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

}  // namespace hybridir
