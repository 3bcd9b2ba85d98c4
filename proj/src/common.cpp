#include "hybridir/common.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_set>

namespace hybridir {

namespace {

void check_unique(const std::vector<ScoredDoc>& entries) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(entries.size());
    for (const auto& e : entries) {
        if (!seen.insert(e.doc_id).second) {
            throw ParameterError("duplicate doc_id in ranked list: " + e.doc_id);
        }
    }
}

}  // namespace

ScoredList ScoredList::top(std::vector<ScoredDoc> candidates, std::size_t limit) {
    check_unique(candidates);
    ScoredList out;
    if (limit < candidates.size()) {
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(limit),
                          candidates.end(), ranks_before);
        candidates.resize(limit);
    } else {
        std::sort(candidates.begin(), candidates.end(), ranks_before);
    }
    out.entries_ = std::move(candidates);
    return out;
}

ScoredList ScoredList::from_ranked(std::vector<ScoredDoc> ranked) {
    check_unique(ranked);
    for (std::size_t i = 1; i < ranked.size(); ++i) {
        if (ranks_before(ranked[i], ranked[i - 1])) {
            throw ParameterError("ranked list out of order at position " + std::to_string(i));
        }
    }
    ScoredList out;
    out.entries_ = std::move(ranked);
    return out;
}

bool ScoredList::contains(std::string_view doc_id) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const ScoredDoc& e) { return e.doc_id == doc_id; });
}

std::vector<std::string> ScoredList::doc_ids() const {
    std::vector<std::string> ids;
    ids.reserve(entries_.size());
    for (const auto& e : entries_) {
        ids.push_back(e.doc_id);
    }
    return ids;
}

ScoredList ScoredList::truncated(std::size_t n) const {
    ScoredList out;
    out.entries_.assign(entries_.begin(),
                        entries_.begin() + static_cast<std::ptrdiff_t>(std::min(n, entries_.size())));
    return out;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

}  // namespace hybridir
