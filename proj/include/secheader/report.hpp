#pragma once

#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "secheader/catalog.hpp"
#include "secheader/policy.hpp"
#include "secheader/scanner.hpp"

namespace secheader::report {

/// round-half-up integer percent of count/total; 0 when total is 0.
int pct_round_half_up(long count, long total);

struct PrevalenceRow {
    int rank = 0;  // dense: equal occurrences share a rank
    long occurrences = 0;
    std::string name;
    std::optional<catalog::Purpose> purpose;      // joined from the catalog
    std::optional<catalog::Relevance> relevance;  // joined from the catalog
    std::string note;
};

struct GroupCounts {
    long total = 0;
    long open = 0;
    long closed = 0;
};

struct SecurityPrevalenceRow {
    std::string name;
    catalog::ThreatClass threat = catalog::ThreatClass::DataLeak;
    GroupCounts counts;
    int total_pct = 0;
    int open_pct = 0;
    int closed_pct = 0;
};

struct ResponseFindings {
    std::string url;
    std::vector<parse::VersionLeak> leaks;
    std::set<std::string> mitigations_present;  // folded names
    std::set<std::string> mitigations_absent;
    char grade = 'F';
};

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Field prevalence over the corpus: each field name counts once per
/// response (case-insensitive); NoResponse records contribute nothing.
/// Sorted by occurrences descending, ties share a dense rank and order by
/// folded name.
std::vector<PrevalenceRow> prevalence(
    const scanner::ScanCorpus& corpus,
    const catalog::Catalog& cat = catalog::Catalog::embedded());

/// One row per security field seen at least once; counts split by group,
/// denominators include NoResponse records. All percentages recomputed
/// round-half-up from the corpus.
std::vector<SecurityPrevalenceRow> security_prevalence(
    const scanner::ScanCorpus& corpus,
    const catalog::Catalog& cat = catalog::Catalog::embedded());

/// The sixteen rows rebuilt from the catalog's embedded counts: group
/// percentages recomputed from the counts, the total percentage taken
/// verbatim from the catalog.
std::vector<SecurityPrevalenceRow> security_rows_from_catalog(
    const catalog::Catalog& cat = catalog::Catalog::embedded());

/// Mean non-adoption percentage over the twelve mitigation rows,
/// round-half-up. Throws ReportError if any of the twelve is missing.
int non_adoption_average(
    std::span<const SecurityPrevalenceRow> rows,
    const catalog::Catalog& cat = catalog::Catalog::embedded());

/// Per-response security findings. Grade rubric (ours, not a study result):
/// start at A for >= 10 of the 12 mitigation fields present, one letter down
/// per two further missing fields, floor F; any version leak costs one more
/// letter. Throws ReportError for NoResponse records.
ResponseFindings findings(
    const scanner::ProbeRecord& record,
    const catalog::Catalog& cat = catalog::Catalog::embedded());

enum class Format { Markdown, Csv, Json };

class UnsupportedFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws UnsupportedFormatError for anything but markdown/csv/json.
Format format_from_string(std::string_view s);

std::string render_prevalence(std::span<const PrevalenceRow> rows, Format f);
std::string render_security(std::span<const SecurityPrevalenceRow> rows, Format f);
std::string render_findings_jsonl(std::span<const ResponseFindings> rows);
std::string render_findings_text(const ResponseFindings& f);

}  // namespace secheader::report
