#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "secheader/parse.hpp"

namespace secheader::scanner {

using Clock = std::function<std::int64_t()>;  // epoch seconds

enum class UrlGroup { Open, Closed };

std::string_view to_string(UrlGroup g);
std::optional<UrlGroup> group_from_string(std::string_view s);

struct UrlEntry {
    std::string url;  // absolute http/https URL
    UrlGroup group = UrlGroup::Closed;

    bool operator==(const UrlEntry&) const = default;
};

struct ProbeConfig {
    double timeout_s = 30.0;
    int max_concurrency = 8;
    std::string user_agent = "secheader-scanner/0.1.0";
    bool follow_redirects = false;
    int max_redirects = 5;
    bool tls_verify = true;
    Clock clock;  // defaults to system time
};

enum class NoResponseReason { Timeout, Dns, Connect, Tls, Protocol };

std::string_view to_string(NoResponseReason r);
std::optional<NoResponseReason> reason_from_string(std::string_view s);

struct Response {
    int status = 0;
    std::vector<parse::RawHeader> headers;  // order preserved as received
    std::int64_t latency_ms = 0;
};

struct NoResponse {
    NoResponseReason reason = NoResponseReason::Protocol;
};

struct ProbeRecord {
    std::string url;
    UrlGroup group = UrlGroup::Closed;
    std::variant<Response, NoResponse> outcome;
    std::int64_t fetched_at = 0;

    bool responded() const { return std::holds_alternative<Response>(outcome); }
    const Response* response() const { return std::get_if<Response>(&outcome); }
    const NoResponse* no_response() const {
        return std::get_if<NoResponse>(&outcome);
    }
};

struct ScanCorpus {
    std::vector<ProbeRecord> records;
    std::int64_t started_at = 0;
    std::int64_t finished_at = 0;
    ProbeConfig config;
};

class UrlListError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses `group,url` CSV lines. Blank lines and `#` comments are skipped;
/// invalid rows are skipped and reported via `diagnostics` with their line
/// numbers. Throws UrlListError on I/O failure or when no valid row remains.
std::vector<UrlEntry> load_url_list(const std::filesystem::path& path,
                                    std::vector<std::string>* diagnostics = nullptr);

/// Removes exact-string duplicates (first occurrence kept). URLs differing
/// in path or query stay distinct.
std::vector<UrlEntry> dedupe_urls(std::vector<UrlEntry> entries);

/// One GET request. Failures never throw; they classify into a NoResponse
/// record, mirroring the empty-file convention for non-responders.
ProbeRecord probe(const UrlEntry& entry, const ProbeConfig& config);

/// Probes all (deduped) entries with at most `max_concurrency` in flight.
/// One record per entry, input order preserved; individual failures never
/// abort the scan.
ScanCorpus scan(std::vector<UrlEntry> entries, const ProbeConfig& config);

/// JSON Lines, one object per record.
std::string corpus_to_jsonl(const ScanCorpus& corpus);
ScanCorpus corpus_from_jsonl(std::string_view text);

/// One file per URL (name = hex SHA-256 of the URL); empty on NoResponse,
/// otherwise the raw header block.
void dump_per_url(const ScanCorpus& corpus, const std::filesystem::path& dir);

std::string url_digest_hex(std::string_view url);

}  // namespace secheader::scanner
