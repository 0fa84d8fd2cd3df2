#include "secheader/report.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace secheader::report {

namespace {

using json = nlohmann::json;

struct NameCount {
    std::string display;  // first-seen casing
    long total = 0;
    long open = 0;
    long closed = 0;
};

// folded name -> counts, each name at most once per response
std::map<std::string, NameCount> count_fields(const scanner::ScanCorpus& corpus) {
    std::map<std::string, NameCount> counts;
    for (const auto& record : corpus.records) {
        const auto* resp = record.response();
        if (!resp) continue;
        std::unordered_set<std::string> seen;
        for (const auto& h : resp->headers) {
            if (!seen.insert(h.name.folded()).second) continue;
            auto& c = counts[h.name.folded()];
            if (c.display.empty()) c.display = h.name.str();
            ++c.total;
            if (record.group == scanner::UrlGroup::Open) {
                ++c.open;
            } else {
                ++c.closed;
            }
        }
    }
    return counts;
}

std::string md_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '|') out += '\\';
        out += c;
    }
    return out;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

int pct_round_half_up(long count, long total) {
    if (total <= 0) return 0;
    return static_cast<int>((200 * count + total) / (2 * total));
}

std::vector<PrevalenceRow> prevalence(const scanner::ScanCorpus& corpus,
                                      const catalog::Catalog& cat) {
    auto counts = count_fields(corpus);

    std::vector<std::pair<std::string, NameCount>> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second.total != b.second.total) return a.second.total > b.second.total;
        return a.first < b.first;
    });

    std::vector<PrevalenceRow> rows;
    rows.reserve(sorted.size());
    int rank = 0;
    long prev_occ = -1;
    for (const auto& [folded, c] : sorted) {
        if (c.total != prev_occ) {
            ++rank;  // dense ranking: equal occurrences share a rank
            prev_occ = c.total;
        }
        PrevalenceRow row;
        row.rank = rank;
        row.occurrences = c.total;
        row.name = c.display;
        if (auto entry = cat.classify(HeaderName(c.display))) {
            row.purpose = entry->purpose;
            row.relevance = entry->relevance;
            row.note = entry->note;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<SecurityPrevalenceRow> security_prevalence(
    const scanner::ScanCorpus& corpus, const catalog::Catalog& cat) {
    long open_total = 0, closed_total = 0;
    for (const auto& r : corpus.records) {
        // NoResponse records stay in the denominators
        if (r.group == scanner::UrlGroup::Open) {
            ++open_total;
        } else {
            ++closed_total;
        }
    }
    auto counts = count_fields(corpus);

    std::vector<SecurityPrevalenceRow> rows;
    for (const auto& entry : cat.security_entries()) {
        auto it = counts.find(entry.name.folded());
        if (it == counts.end()) continue;
        const auto& c = it->second;
        SecurityPrevalenceRow row;
        row.name = entry.name.str();
        row.threat = *entry.threat;
        row.counts = {c.total, c.open, c.closed};
        row.total_pct = pct_round_half_up(c.total, open_total + closed_total);
        row.open_pct = pct_round_half_up(c.open, open_total);
        row.closed_pct = pct_round_half_up(c.closed, closed_total);
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        if (a.counts.total != b.counts.total) return a.counts.total > b.counts.total;
        return a.name < b.name;
    });
    return rows;
}

std::vector<SecurityPrevalenceRow> security_rows_from_catalog(
    const catalog::Catalog& cat) {
    std::vector<SecurityPrevalenceRow> rows;
    for (const auto& entry : cat.security_entries()) {
        const auto& c = *entry.security_counts;
        SecurityPrevalenceRow row;
        row.name = entry.name.str();
        row.threat = *entry.threat;
        row.counts = {c.total, c.open, c.closed};
        // group percentages are recomputed; the total column is carried
        // verbatim because the source table's own rounding is inconsistent
        row.total_pct = c.total_pct;
        row.open_pct = pct_round_half_up(c.open, catalog::kOpenUrlTotal);
        row.closed_pct = pct_round_half_up(c.closed, catalog::kClosedUrlTotal);
        rows.push_back(std::move(row));
    }
    return rows;
}

int non_adoption_average(std::span<const SecurityPrevalenceRow> rows,
                         const catalog::Catalog& cat) {
    long sum = 0;
    long n = 0;
    for (const auto& entry : cat.mitigation_entries()) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) {
            return ascii_iequals(r.name, entry.name.str());
        });
        if (it == rows.end()) {
            throw ReportError("non_adoption_average: missing mitigation field " +
                              entry.name.str());
        }
        sum += 100 - it->total_pct;
        ++n;
    }
    // round-half-up mean
    return static_cast<int>((2 * sum + n) / (2 * n));
}

ResponseFindings findings(const scanner::ProbeRecord& record,
                          const catalog::Catalog& cat) {
    const auto* resp = record.response();
    if (!resp) {
        throw ReportError("findings: record for " + record.url + " has no response");
    }
    ResponseFindings f;
    f.url = record.url;
    f.leaks = policy::evaluate_version_leaks(resp->headers, policy::LeakMode::Audit);

    std::unordered_set<std::string> present;
    for (const auto& h : resp->headers) present.insert(h.name.folded());
    for (const auto& entry : cat.mitigation_entries()) {
        if (present.contains(entry.name.folded())) {
            f.mitigations_present.insert(entry.name.folded());
        } else {
            f.mitigations_absent.insert(entry.name.folded());
        }
    }

    // A for <= 2 missing mitigations, one letter per further two missing,
    // one more letter for any version leak; floor F
    int missing = static_cast<int>(f.mitigations_absent.size());
    int step = missing <= 2 ? 0 : (missing - 1) / 2;  // 0-2 -> A, 3-4 -> B, ...
    if (!f.leaks.empty()) ++step;
    f.grade = static_cast<char>('A' + std::min(step, 5));
    return f;
}

Format format_from_string(std::string_view s) {
    if (ascii_iequals(s, "markdown") || ascii_iequals(s, "md")) return Format::Markdown;
    if (ascii_iequals(s, "csv")) return Format::Csv;
    if (ascii_iequals(s, "json")) return Format::Json;
    throw UnsupportedFormatError("unsupported format: " + std::string(s));
}

std::string render_prevalence(std::span<const PrevalenceRow> rows, Format f) {
    std::ostringstream out;
    switch (f) {
        case Format::Markdown: {
            out << "| Rank | # Occ. | Header field | Purpose | Relevant to security |\n";
            out << "|---|---|---|---|---|\n";
            for (const auto& r : rows) {
                out << "| " << r.rank << " | " << r.occurrences << " | "
                    << md_escape(r.name) << " | "
                    << (r.purpose ? catalog::to_string(*r.purpose) : "") << " | ";
                if (r.relevance) {
                    out << catalog::to_string(*r.relevance) << ": " << md_escape(r.note);
                }
                out << " |\n";
            }
            break;
        }
        case Format::Csv: {
            out << "rank,occurrences,name,purpose,relevance,note\n";
            for (const auto& r : rows) {
                out << r.rank << ',' << r.occurrences << ',' << csv_field(r.name) << ','
                    << (r.purpose ? catalog::to_string(*r.purpose) : "") << ','
                    << (r.relevance ? catalog::to_string(*r.relevance) : "") << ','
                    << csv_field(r.note) << '\n';
            }
            break;
        }
        case Format::Json: {
            json arr = json::array();
            for (const auto& r : rows) {
                json j = {{"rank", r.rank},
                          {"occurrences", r.occurrences},
                          {"name", r.name}};
                if (r.purpose) j["purpose"] = catalog::to_string(*r.purpose);
                if (r.relevance) {
                    j["relevance"] = catalog::to_string(*r.relevance);
                    j["note"] = r.note;
                }
                arr.push_back(std::move(j));
            }
            out << arr.dump(2) << '\n';
            break;
        }
    }
    return out.str();
}

std::string render_security(std::span<const SecurityPrevalenceRow> rows, Format f) {
    std::ostringstream out;
    switch (f) {
        case Format::Markdown: {
            out << "| Header | Threat | # Responses | % URLs |\n";
            out << "|---|---|---|---|\n";
            for (const auto& r : rows) {
                out << "| " << md_escape(r.name) << " | "
                    << catalog::to_string(r.threat) << " | " << r.counts.total
                    << " (" << r.counts.open << " / " << r.counts.closed << ") | "
                    << r.total_pct << "% (" << r.open_pct << "% / " << r.closed_pct
                    << "%) |\n";
            }
            break;
        }
        case Format::Csv: {
            out << "name,threat,total,open,closed,total_pct,open_pct,closed_pct\n";
            for (const auto& r : rows) {
                out << csv_field(r.name) << ',' << catalog::to_string(r.threat) << ','
                    << r.counts.total << ',' << r.counts.open << ',' << r.counts.closed
                    << ',' << r.total_pct << ',' << r.open_pct << ',' << r.closed_pct
                    << '\n';
            }
            break;
        }
        case Format::Json: {
            json arr = json::array();
            for (const auto& r : rows) {
                arr.push_back({{"name", r.name},
                               {"threat", catalog::to_string(r.threat)},
                               {"total", r.counts.total},
                               {"open", r.counts.open},
                               {"closed", r.counts.closed},
                               {"total_pct", r.total_pct},
                               {"open_pct", r.open_pct},
                               {"closed_pct", r.closed_pct}});
            }
            out << arr.dump(2) << '\n';
            break;
        }
    }
    return out.str();
}

std::string render_findings_jsonl(std::span<const ResponseFindings> rows) {
    std::string out;
    for (const auto& f : rows) {
        json leaks = json::array();
        for (const auto& leak : f.leaks) {
            json j = {{"header", leak.header.str()}, {"product", leak.product}};
            if (leak.version) j["version"] = *leak.version;
            if (leak.comment) j["comment"] = *leak.comment;
            leaks.push_back(std::move(j));
        }
        json j = {{"url", f.url},
                  {"leaks", leaks},
                  {"mitigations_present",
                   std::vector<std::string>(f.mitigations_present.begin(),
                                            f.mitigations_present.end())},
                  {"mitigations_absent",
                   std::vector<std::string>(f.mitigations_absent.begin(),
                                            f.mitigations_absent.end())},
                  {"grade", std::string(1, f.grade)}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string render_findings_text(const ResponseFindings& f) {
    std::ostringstream out;
    out << "url: " << f.url << "\n";
    for (const auto& leak : f.leaks) {
        out << "leak: " << leak.header.str() << " " << leak.product;
        if (leak.version) out << "/" << *leak.version;
        if (leak.comment) out << " (" << *leak.comment << ")";
        out << "\n";
    }
    out << "mitigations present (" << f.mitigations_present.size() << "/12):";
    for (const auto& m : f.mitigations_present) out << " " << m;
    out << "\n";
    out << "mitigations absent (" << f.mitigations_absent.size() << "/12):";
    for (const auto& m : f.mitigations_absent) out << " " << m;
    out << "\n";
    out << "grade: " << f.grade << "\n";
    return out.str();
}

}  // namespace secheader::report
