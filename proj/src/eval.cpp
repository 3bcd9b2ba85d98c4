#include "hybridir/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace hybridir {

namespace {

const ScoredList& list_for(const Run& run, const std::string& qid) {
    static const ScoredList empty;
    auto it = run.find(qid);
    return it == run.end() ? empty : it->second;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string signed_pct(double v) {
    if (std::isinf(v)) return v > 0 ? "+inf%" : "-inf%";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%+.1f%%", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string edge_label(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

// mean recall per qid over the evaluable queries
std::map<std::string, double> recall_by_query(const Run& run, const Qrels& qrels, std::size_t c) {
    std::map<std::string, double> out;
    for (const auto& qid : qrels.query_ids()) {
        if (auto r = recall_at(list_for(run, qid), qrels, qid, c)) out.emplace(qid, *r);
    }
    return out;
}

double mean_of(const std::vector<double>& xs) {
    return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

std::optional<double> recall_at(const ScoredList& run, const Qrels& qrels, const std::string& query_id,
                                std::size_t c) {
    const std::size_t total = qrels.num_relevant(query_id);
    if (total == 0) return std::nullopt;
    return static_cast<double>(relevant_retrieved(run, qrels, query_id, c)) / static_cast<double>(total);
}

std::optional<double> map_at(const ScoredList& run, const Qrels& qrels, const std::string& query_id, std::size_t c) {
    const auto& rel = qrels.relevant(query_id);
    if (rel.empty()) return std::nullopt;
    const std::size_t depth = std::min(c, run.size());
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < depth; ++r) {
        if (rel.count(run[r].doc_id)) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    return sum / static_cast<double>(rel.size());
}

std::size_t relevant_retrieved(const ScoredList& run, const Qrels& qrels, const std::string& query_id,
                               std::size_t c) {
    const auto& rel = qrels.relevant(query_id);
    const std::size_t depth = std::min(c, run.size());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < depth; ++r) hits += rel.count(run[r].doc_id);
    return hits;
}

double reliability_of_improvement(std::span<const double> deltas) {
    if (deltas.empty()) throw ParameterError("reliability_of_improvement needs at least one delta");
    long balance = 0;
    for (double d : deltas) {
        if (d > 0) ++balance;
        if (d < 0) --balance;
    }
    return static_cast<double>(balance) / static_cast<double>(deltas.size());
}

nlohmann::json RunSummary::to_json() const {
    nlohmann::json queries = nlohmann::json::array();
    for (const auto& q : per_query) {
        queries.push_back({{"query_id", q.query_id},
                           {"recall", q.recall},
                           {"ap", q.ap},
                           {"rel_retrieved", q.rel_retrieved},
                           {"num_relevant", q.num_relevant}});
    }
    return {{"name", name},       {"c", c},
            {"recall", mean_recall}, {"map", map},
            {"rel_retrieved", rel_retrieved}, {"queries", per_query.size()},
            {"excluded", excluded}, {"per_query", queries}};
}

RunSummary evaluate_run(const Run& run, const Qrels& qrels, std::size_t c, const std::string& name) {
    RunSummary s;
    s.name = name;
    s.c = c;
    for (const auto& qid : qrels.query_ids()) {
        const std::size_t total = qrels.num_relevant(qid);
        if (total == 0) continue;
        const auto& list = list_for(run, qid);
        QueryMetrics m;
        m.query_id = qid;
        m.num_relevant = total;
        m.rel_retrieved = relevant_retrieved(list, qrels, qid, c);
        m.recall = *recall_at(list, qrels, qid, c);
        m.ap = *map_at(list, qrels, qid, c);
        s.per_query.push_back(std::move(m));
    }
    for (const auto& [qid, _] : run) {
        if (qrels.num_relevant(qid) == 0) s.excluded.push_back(qid);
    }
    for (const auto& m : s.per_query) {
        s.mean_recall += m.recall;
        s.map += m.ap;
        s.rel_retrieved += m.rel_retrieved;
    }
    if (!s.per_query.empty()) {
        s.mean_recall /= static_cast<double>(s.per_query.size());
        s.map /= static_cast<double>(s.per_query.size());
    }
    return s;
}

nlohmann::json RunComparison::to_json() const {
    nlohmann::json d = nlohmann::json::object();
    for (const auto& [qid, delta] : deltas) d[qid] = delta;
    return {{"baseline", baseline},
            {"test", test},
            {"c", c},
            {"recall_change_pct", std::isinf(recall_change_pct) ? nlohmann::json(nullptr) : nlohmann::json(recall_change_pct)},
            {"map_change_pct", std::isinf(map_change_pct) ? nlohmann::json(nullptr) : nlohmann::json(map_change_pct)},
            {"ri", ri},
            {"improved", improved},
            {"degraded", degraded},
            {"unchanged", unchanged},
            {"recall_deltas", d}};
}

RunComparison compare_runs(const RunSummary& baseline, const RunSummary& test) {
    if (baseline.c != test.c || baseline.per_query.size() != test.per_query.size()) {
        throw ParameterError("runs were evaluated under different settings");
    }
    RunComparison cmp;
    cmp.baseline = baseline.name;
    cmp.test = test.name;
    cmp.c = baseline.c;
    cmp.recall_change_pct = percent_change(baseline.mean_recall, test.mean_recall);
    cmp.map_change_pct = percent_change(baseline.map, test.map);
    std::vector<double> values;
    for (std::size_t i = 0; i < baseline.per_query.size(); ++i) {
        const auto& b = baseline.per_query[i];
        const auto& t = test.per_query[i];
        if (b.query_id != t.query_id) throw ParameterError("runs were evaluated over different queries");
        const double delta = t.recall - b.recall;
        cmp.deltas.emplace_back(b.query_id, delta);
        values.push_back(delta);
        if (delta > 0) {
            ++cmp.improved;
        } else if (delta < 0) {
            ++cmp.degraded;
        } else {
            ++cmp.unchanged;
        }
    }
    cmp.ri = values.empty() ? 0.0 : reliability_of_improvement(values);
    return cmp;
}

EvalReport evaluate_runs(std::span<const std::pair<std::string, Run>> runs, const Qrels& qrels,
                         std::span<const std::size_t> cutoffs) {
    if (runs.empty()) throw ParameterError("no runs to evaluate");
    if (cutoffs.empty()) throw ParameterError("no cutoffs given");
    EvalReport report;
    report.cutoffs.assign(cutoffs.begin(), cutoffs.end());
    for (std::size_t c : cutoffs) {
        if (c == 0) throw ParameterError("cutoff must be positive");
        std::vector<RunSummary> row;
        for (const auto& [name, run] : runs) row.push_back(evaluate_run(run, qrels, c, name));
        std::vector<RunComparison> cmp;
        for (std::size_t j = 1; j < row.size(); ++j) cmp.push_back(compare_runs(row[0], row[j]));
        report.summaries.push_back(std::move(row));
        report.comparisons.push_back(std::move(cmp));
    }
    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json out = {{"cutoffs", cutoffs}, {"results", nlohmann::json::array()}};
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        nlohmann::json entry = {{"c", cutoffs[i]}, {"runs", nlohmann::json::array()},
                                {"comparisons", nlohmann::json::array()}};
        for (const auto& s : summaries[i]) entry["runs"].push_back(s.to_json());
        for (const auto& c : comparisons[i]) entry["comparisons"].push_back(c.to_json());
        out["results"].push_back(std::move(entry));
    }
    return out;
}

std::string EvalReport::to_text() const {
    if (summaries.empty()) return {};
    std::vector<std::string> header = {"c"};
    for (std::size_t j = 0; j < summaries[0].size(); ++j) {
        const auto& name = summaries[0][j].name;
        header.push_back(name + " Recall");
        header.push_back(name + " MAP");
        header.push_back(name + " #Rel");
        if (j > 0) {
            header.push_back(name + " dRecall");
            header.push_back(name + " RI");
        }
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        std::vector<std::string> row = {std::to_string(cutoffs[i])};
        for (std::size_t j = 0; j < summaries[i].size(); ++j) {
            const auto& s = summaries[i][j];
            row.push_back(fixed(s.mean_recall, 3));
            row.push_back(fixed(s.map, 3));
            row.push_back(std::to_string(s.rel_retrieved));
            if (j > 0) {
                const auto& cmp = comparisons[i][j - 1];
                row.push_back(signed_pct(cmp.recall_change_pct));
                row.push_back(fixed(cmp.ri, 3));
            }
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> widths(header.size());
    for (std::size_t k = 0; k < header.size(); ++k) {
        widths[k] = header[k].size();
        for (const auto& row : rows) widths[k] = std::max(widths[k], row[k].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k) out << (k ? "  " : "") << pad(cells[k], widths[k]);
        out << '\n';
    };
    emit(header);
    for (const auto& row : rows) emit(row);
    return out.str();
}

std::array<QuartileGroup, 4> quartile_analysis(const Run& baseline, const Run& test, const Qrels& qrels,
                                               std::size_t c) {
    const auto base = recall_by_query(baseline, qrels, c);
    const auto other = recall_by_query(test, qrels, c);
    if (base.size() < 4) throw ParameterError("quartile analysis needs at least 4 evaluable queries");
    std::vector<std::pair<double, std::string>> order;
    for (const auto& [qid, r] : base) order.emplace_back(r, qid);
    std::sort(order.begin(), order.end());

    std::array<QuartileGroup, 4> groups;
    const std::size_t n = order.size();
    std::size_t pos = 0;
    for (std::size_t g = 0; g < 4; ++g) {
        const std::size_t size = n / 4 + (g < n % 4 ? 1 : 0);
        std::vector<double> b, t;
        for (std::size_t k = 0; k < size; ++k, ++pos) {
            const auto& qid = order[pos].second;
            groups[g].query_ids.push_back(qid);
            b.push_back(base.at(qid));
            t.push_back(other.at(qid));
        }
        groups[g].baseline_mean = mean_of(b);
        groups[g].test_mean = mean_of(t);
    }
    return groups;
}

std::string quartile_table(const std::array<QuartileGroup, 4>& groups, const std::string& baseline_name,
                           const std::string& test_name) {
    std::ostringstream out;
    const std::size_t w = std::max<std::size_t>({10, baseline_name.size(), test_name.size()});
    out << pad("group", 5) << "  " << pad("queries", 7) << "  " << pad(baseline_name, w) << "  " << pad(test_name, w)
        << "  " << pad("change", 8) << '\n';
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& grp = groups[g];
        out << pad("Q" + std::to_string(g + 1), 5) << "  " << pad(std::to_string(grp.query_ids.size()), 7) << "  "
            << pad(fixed(grp.baseline_mean, 3), w) << "  " << pad(fixed(grp.test_mean, 3), w) << "  "
            << pad(signed_pct(percent_change(grp.baseline_mean, grp.test_mean)), 8) << '\n';
    }
    return out.str();
}

double percent_change(double base, double test) {
    if (base == 0.0) {
        if (test == 0.0) return 0.0;
        return test > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
    return (test - base) / std::abs(base) * 100.0;
}

std::string Histogram::to_csv() const {
    std::string out = "bucket,count\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out += '"' + labels[i] + "\"," + std::to_string(counts[i]) + '\n';
    }
    return out;
}

Histogram histogram(std::span<const double> values, std::span<const double> edges) {
    if (edges.empty()) throw ParameterError("histogram needs at least one edge");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i - 1] < edges[i])) throw ParameterError("histogram edges must be strictly increasing");
    }
    for (double e : edges) {
        if (!std::isfinite(e)) throw ParameterError("histogram edges must be finite");
    }
    // interval k covers [edges[k-1], edges[k]) with open ends at k = 0 and k = edges.size()
    const std::size_t n_intervals = edges.size() + 1;
    auto interval_of = [&](double v) {
        return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
    };
    const std::size_t zero_slot = interval_of(0.0);

    Histogram h;
    std::vector<std::size_t> interval_counts(n_intervals, 0);
    std::size_t zeros = 0;
    for (double v : values) {
        if (std::isnan(v)) throw ParameterError("histogram value is NaN");
        if (v == 0.0) {
            ++zeros;
        } else {
            ++interval_counts[interval_of(v)];
        }
    }
    for (std::size_t k = 0; k < n_intervals; ++k) {
        if (k == zero_slot) {
            h.labels.push_back("0");
            h.counts.push_back(zeros);
        }
        std::string label;
        if (k == 0) {
            label = "(-inf," + edge_label(edges[0]) + ")";
        } else if (k == edges.size()) {
            label = "[" + edge_label(edges.back()) + ",+inf)";
        } else {
            label = "[" + edge_label(edges[k - 1]) + "," + edge_label(edges[k]) + ")";
        }
        if (k == zero_slot) label += "\\0";
        h.labels.push_back(std::move(label));
        h.counts.push_back(interval_counts[k]);
    }
    return h;
}

Histogram improvement_histogram(const Run& baseline, const Run& test, const Qrels& qrels, std::size_t c,
                                std::span<const double> edges) {
    const auto base = recall_by_query(baseline, qrels, c);
    const auto other = recall_by_query(test, qrels, c);
    std::vector<double> changes;
    for (const auto& [qid, b] : base) changes.push_back(percent_change(b, other.at(qid)));
    return histogram(changes, edges);
}

QueryProperties query_properties(const Tokens& terms, const LexicalIndex& index) {
    if (terms.empty()) throw ParameterError("query_properties needs at least one term");
    QueryProperties p;
    p.n_terms = terms.size();
    std::vector<double> idfs;
    for (const auto& t : terms) idfs.push_back(bm25_idf(index.num_docs(), index.df(t)));
    p.mean_idf = mean_of(idfs);
    p.max_idf = *std::max_element(idfs.begin(), idfs.end());
    double var = 0.0;
    for (double v : idfs) var += (v - p.mean_idf) * (v - p.mean_idf);
    p.std_idf = std::sqrt(var / static_cast<double>(idfs.size()));
    return p;
}

std::vector<PropertyGroup> property_analysis(const RunComparison& comparison, std::span<const Query> queries,
                                             const LexicalIndex& index) {
    std::map<std::string, const Query*> by_id;
    for (const auto& q : queries) by_id.emplace(q.query_id, &q);
    std::vector<PropertyGroup> groups = {{"improved", 0, {}}, {"degraded", 0, {}}, {"unchanged", 0, {}}};
    for (const auto& [qid, delta] : comparison.deltas) {
        auto it = by_id.find(qid);
        if (it == by_id.end() || it->second->tokens.empty()) continue;
        auto& g = groups[delta > 0 ? 0 : (delta < 0 ? 1 : 2)];
        const auto p = query_properties(it->second->tokens, index);
        ++g.queries;
        g.mean.mean_idf += p.mean_idf;
        g.mean.max_idf += p.max_idf;
        g.mean.std_idf += p.std_idf;
        g.mean.n_terms += p.n_terms;
    }
    for (auto& g : groups) {
        if (g.queries == 0) continue;
        const double n = static_cast<double>(g.queries);
        g.mean.mean_idf /= n;
        g.mean.max_idf /= n;
        g.mean.std_idf /= n;
    }
    return groups;
}

std::string property_table(std::span<const PropertyGroup> groups) {
    std::ostringstream out;
    out << pad("group", 9) << "  " << pad("queries", 7) << "  " << pad("mean idf", 8) << "  " << pad("max idf", 8)
        << "  " << pad("std idf", 8) << "  " << pad("terms", 6) << '\n';
    for (const auto& g : groups) {
        const double terms = g.queries ? static_cast<double>(g.mean.n_terms) / static_cast<double>(g.queries) : 0.0;
        out << pad(g.name, 9) << "  " << pad(std::to_string(g.queries), 7) << "  " << pad(fixed(g.mean.mean_idf, 3), 8)
            << "  " << pad(fixed(g.mean.max_idf, 3), 8) << "  " << pad(fixed(g.mean.std_idf, 3), 8) << "  "
            << pad(fixed(terms, 2), 6) << '\n';
    }
    return out.str();
}

std::vector<std::pair<std::string, double>> representative_terms(std::span<const std::string> doc_ids,
                                                                 const LexicalIndex& index, std::size_t n,
                                                                 const NormalizationConfig& normalization) {
    if (doc_ids.empty()) throw ParameterError("representative_terms needs at least one document");
    std::map<TermId, double> mass;
    for (const auto& id : doc_ids) {
        const DocIndex d = index.doc_index(id);
        for (const auto& tc : index.doc_terms(d)) mass[tc.term] += tc.tf;
    }
    std::vector<std::pair<std::string, double>> scored;
    for (const auto& [term, tf_sum] : mass) {
        const auto& name = index.term(term);
        if (normalization.is_stopword(name)) continue;
        scored.emplace_back(name, tf_sum * bm25_idf(index.num_docs(), index.df(term)));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (scored.size() > n) scored.resize(n);
    return scored;
}

double jaccard(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.empty() || b.empty()) throw ParameterError("jaccard needs non-empty lists");
    const std::set<std::string_view> sa(a.begin(), a.end());
    const std::set<std::string_view> sb(b.begin(), b.end());
    std::size_t common = 0;
    for (auto t : sa) common += sb.count(t);
    return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

std::string LengthProfile::to_csv(const std::string& name_a, const std::string& name_b) const {
    std::string out = "index," + name_a + "," + name_b + "\n";
    const std::size_t rows = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < rows; ++i) {
        out += std::to_string(i) + ",";
        if (i < a.size()) out += std::to_string(a[i]);
        out += ",";
        if (i < b.size()) out += std::to_string(b[i]);
        out += "\n";
    }
    return out;
}

LengthProfile relevant_length_profile(const Run& a, const Run& b, const Qrels& qrels, const LexicalIndex& index,
                                      std::size_t per_query) {
    auto collect = [&](const Run& run) {
        std::vector<std::uint32_t> lengths;
        for (const auto& [qid, list] : run) {
            const auto& rel = qrels.relevant(qid);
            std::size_t taken = 0;
            for (const auto& e : list) {
                if (taken == per_query) break;
                if (!rel.count(e.doc_id)) continue;
                lengths.push_back(index.doc_len(index.doc_index(e.doc_id)));
                ++taken;
            }
        }
        std::sort(lengths.begin(), lengths.end());
        return lengths;
    };
    return {collect(a), collect(b)};
}

std::vector<UniqueRelevantPoint> unique_relevant_curve(const Run& lexical, const Run& semantic, const Qrels& qrels,
                                                       std::span<const std::size_t> lexical_cs,
                                                       std::size_t semantic_c) {
    std::vector<UniqueRelevantPoint> points;
    for (std::size_t c : lexical_cs) {
        UniqueRelevantPoint p;
        p.lexical_c = c;
        for (const auto& qid : qrels.query_ids()) {
            const auto& rel = qrels.relevant(qid);
            if (rel.empty()) continue;
            const auto lex = list_for(lexical, qid).truncated(c);
            const auto& sem = list_for(semantic, qid);
            std::set<std::string_view> in_lexical;
            for (const auto& e : lex) in_lexical.insert(e.doc_id);
            p.lexical_relevant += relevant_retrieved(lex, qrels, qid, c);
            const std::size_t depth = std::min(semantic_c, sem.size());
            for (std::size_t r = 0; r < depth; ++r) {
                if (rel.count(sem[r].doc_id) && !in_lexical.count(sem[r].doc_id)) ++p.semantic_unique_relevant;
            }
        }
        points.push_back(p);
    }
    return points;
}

std::string unique_relevant_csv(std::span<const UniqueRelevantPoint> points) {
    std::string out = "lexical_c,lexical_relevant,semantic_unique_relevant\n";
    for (const auto& p : points) {
        out += std::to_string(p.lexical_c) + "," + std::to_string(p.lexical_relevant) + "," +
               std::to_string(p.semantic_unique_relevant) + "\n";
    }
    return out;
}

}  // namespace hybridir
