#include "hybridir/trec.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace hybridir {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::string where(const std::string& source, std::size_t line_no) {
    return source + ":line " + std::to_string(line_no);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

std::string format_score(double score) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), score);
    return std::string(buf, ptr);
}

const std::unordered_set<std::string>& empty_set() {
    static const std::unordered_set<std::string> empty;
    return empty;
}

}  // namespace

Run parse_run(std::istream& in, const std::string& source) {
    std::map<std::string, std::vector<ScoredDoc>> pending;
    std::unordered_map<std::string, std::unordered_set<std::string>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != 6) {
            throw IngestError(where(source, line_no) + ": expected 6 fields, found " + std::to_string(fields.size()));
        }
        long rank = 0;
        double score = 0.0;
        if (!parse_number(fields[3], rank)) throw IngestError(where(source, line_no) + ": bad rank");
        if (!parse_number(fields[4], score)) throw IngestError(where(source, line_no) + ": bad score");
        std::string qid(fields[0]);
        std::string doc(fields[2]);
        if (!seen[qid].insert(doc).second) {
            throw IngestError(where(source, line_no) + ": duplicate document " + doc + " for query " + qid);
        }
        pending[qid].push_back({std::move(doc), score});
    }
    Run run;
    for (auto& [qid, docs] : pending) {
        const std::size_t n = docs.size();
        run.emplace(qid, ScoredList::top(std::move(docs), n));
    }
    return run;
}

Run read_run(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_run(in, path.string());
}

void write_run(std::ostream& out, const std::string& query_id, const ScoredList& list, const std::string& tag) {
    for (std::size_t r = 0; r < list.size(); ++r) {
        out << query_id << " Q0 " << list[r].doc_id << ' ' << (r + 1) << ' ' << format_score(list[r].score) << ' '
            << tag << '\n';
    }
}

void write_run(const std::filesystem::path& path, const Run& run, const std::string& tag) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& [qid, list] : run) write_run(out, qid, list, tag);
    if (!out) throw IoError("write failed: " + path.string());
}

Qrels Qrels::parse(std::istream& in, const std::string& source) {
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto fields = split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() != 4) {
            throw IngestError(where(source, line_no) + ": expected 4 fields, found " + std::to_string(fields.size()));
        }
        int rel = 0;
        if (!parse_number(fields[3], rel)) throw IngestError(where(source, line_no) + ": bad relevance");
        qrels.add(std::string(fields[0]), std::string(fields[2]), rel);
    }
    return qrels;
}

Qrels Qrels::load(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse(in, path.string());
}

void Qrels::add(const std::string& query_id, const std::string& doc_id, int relevance) {
    auto& set = relevant_[query_id];
    if (relevance >= 1) {
        set.insert(doc_id);
    } else {
        set.erase(doc_id);
    }
}

bool Qrels::is_relevant(const std::string& query_id, const std::string& doc_id) const {
    return relevant(query_id).count(doc_id) != 0;
}

std::size_t Qrels::num_relevant(const std::string& query_id) const { return relevant(query_id).size(); }

const std::unordered_set<std::string>& Qrels::relevant(const std::string& query_id) const {
    auto it = relevant_.find(query_id);
    return it == relevant_.end() ? empty_set() : it->second;
}

std::vector<std::string> Qrels::query_ids() const {
    std::vector<std::string> out;
    out.reserve(relevant_.size());
    for (const auto& [qid, _] : relevant_) out.push_back(qid);
    return out;
}

std::vector<Query> read_queries(const std::filesystem::path& path, const NormalizationConfig& config) {
    auto in = open_input(path);
    std::vector<Query> out;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw IngestError(where(path.string(), line_no) + ": expected qid<TAB>text");
        }
        std::string qid = line.substr(0, tab);
        if (!ids.insert(qid).second) throw IngestError(where(path.string(), line_no) + ": duplicate query " + qid);
        out.push_back(make_query(std::move(qid), line.substr(tab + 1), config));
    }
    return out;
}

}  // namespace hybridir
