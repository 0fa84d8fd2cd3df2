#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "secheader/parse.hpp"

namespace secheader::policy {

using Timestamp = std::int64_t;  // epoch seconds

struct HstsEntry {
    std::string host;  // folded, no scheme/port
    Timestamp expires_at = 0;
    bool include_subdomains = false;

    bool operator==(const HstsEntry&) const = default;
};

enum class HstsUpdateResult {
    Applied,
    Removed,           // max-age=0 eviction
    IgnoredInsecure,   // header arrived over plain http
    IgnoredIpLiteral,  // IP-literal hosts are out of HSTS scope
    NoEntry,           // max-age=0 for an unknown host
};

/// Host -> policy map backing the client-side HSTS white-list. Optionally
/// persisted to a TSV file (`host<TAB>expires_at<TAB>0|1`), written under an
/// advisory lock. Concurrent readers, single writer.
class HstsStore {
public:
    HstsStore() = default;
    explicit HstsStore(std::filesystem::path store_path);

    /// Loads the file if it exists; a missing file yields an empty store.
    static HstsStore load(const std::filesystem::path& store_path);

    HstsUpdateResult update(std::string_view host, const parse::HstsDirectives& d,
                            bool over_secure_transport, Timestamp now);

    /// Rewrites http URLs of known hosts to https; everything else passes
    /// through unchanged. Expired entries are evicted on lookup.
    std::string rewrite(std::string_view url, Timestamp now);

    /// True if `host` is covered by an unexpired entry at `now`.
    bool covers(std::string_view host, Timestamp now);

    void purge(Timestamp now);

    /// Imports `host[,includeSubDomains]` lines; far-future expiry.
    std::size_t import_preload(const std::filesystem::path& file, Timestamp now);

    /// Persists to the store path. Throws std::runtime_error on I/O failure;
    /// the in-memory state is unaffected either way.
    void save() const;

    std::map<std::string, HstsEntry> entries() const;
    std::size_t size() const;
    const std::optional<std::filesystem::path>& store_path() const {
        return store_path_;
    }

    bool operator==(const HstsStore& other) const;

private:
    void save_unlocked() const;
    void persist_if_configured() const;

    mutable std::shared_mutex mutex_;
    std::map<std::string, HstsEntry> entries_;
    std::optional<std::filesystem::path> store_path_;

public:
    HstsStore(const HstsStore& other);
    HstsStore& operator=(const HstsStore& other);
};

enum class LeakMode { Strict, Audit, Ignore };

std::string_view to_string(LeakMode m);
std::optional<LeakMode> leak_mode_from_string(std::string_view s);

/// Raised in Strict mode when a response carries version-leak fields.
class StrictLeakError : public std::runtime_error {
public:
    explicit StrictLeakError(std::vector<parse::VersionLeak> findings);
    const std::vector<parse::VersionLeak>& findings() const { return findings_; }

private:
    std::vector<parse::VersionLeak> findings_;
};

/// Audit -> one finding per leak field present; Ignore -> empty;
/// Strict -> throws StrictLeakError if any leak field is present.
std::vector<parse::VersionLeak> evaluate_version_leaks(
    std::span<const parse::RawHeader> headers, LeakMode mode);

struct UpgradeDecision {
    bool upgrade = false;
    std::string protocol;  // only when upgrade

    bool operator==(const UpgradeDecision&) const = default;
};

/// First server-offered protocol the client is capable of, preserving the
/// server's preference order. Token comparison is case-insensitive.
UpgradeDecision evaluate_upgrade(const parse::UpgradeTargets& offered,
                                 const std::set<std::string>& client_capable);

struct CorsResponseHeaders {
    std::optional<parse::CorsOrigin> allow_origin;
    bool allow_credentials = false;
    std::vector<std::string> expose_headers;
};

struct CorsDecision {
    bool allowed = false;
    std::string reason;
    std::vector<std::string> exposed_headers;
    bool credentials_permitted = false;
};

CorsDecision evaluate_cors(std::string_view request_origin,
                           const CorsResponseHeaders& headers);

/// Collects the CORS-relevant parsed fields out of a raw header list.
CorsResponseHeaders collect_cors_headers(std::span<const parse::RawHeader> headers);

}  // namespace secheader::policy
