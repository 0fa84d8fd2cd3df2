#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "secheader/header_name.hpp"

namespace secheader::catalog {

// Group sizes of the underlying URL dataset.
inline constexpr long kOpenUrlTotal = 1230;
inline constexpr long kClosedUrlTotal = 8486;
inline constexpr long kUrlTotal = kOpenUrlTotal + kClosedUrlTotal;

enum class Purpose {
    PerformanceOptimization,
    Debugging,
    Security,
    Advertisement,
    DataPresentation,
    CookieManagement,
    ContentRedirection,
    Privacy,
};

enum class ThreatClass {
    VersionLeak,
    CodeExecution,
    ClickJacking,
    DataLeak,
};

enum class Relevance { Minor, Major };

enum class SupportLevel { Full, Limited, Unsupported };

enum class ClientId {
    Glide,
    HttpComponents,
    Ion,
    LoopJ,
    OkHttp,
    RetroFit,
    Volley,
    HttpsUrlConnection,
    HttpUrlConnection,
    Socket,
    UrlConnection,
    AndroidWebView,
    GoogleChrome,
    MicrosoftEdge,
    MozillaFirefox,
};

inline constexpr int kClientCount = 15;

std::string_view to_string(Purpose p);
std::string_view to_string(ThreatClass t);
std::string_view to_string(Relevance r);
std::string_view to_string(SupportLevel s);
std::string_view to_string(ClientId c);

std::optional<Purpose> purpose_from_string(std::string_view s);
std::optional<ThreatClass> threat_from_string(std::string_view s);
std::optional<SupportLevel> support_from_string(std::string_view s);
std::optional<ClientId> client_from_string(std::string_view s);

/// Prevalence counts of a security field, split by app provenance group.
struct SecurityCounts {
    long total = 0;
    long open = 0;
    long closed = 0;
    // Printed percentage columns, stored verbatim. The group percentages
    // agree with round-half-up recomputation from the counts; the total
    // column does not for every row, so it is never recomputed.
    int total_pct = 0;
    int open_pct = 0;
    int closed_pct = 0;
};

struct CatalogEntry {
    HeaderName name;
    int rank = 0;
    long occurrences = 0;
    Purpose purpose = Purpose::PerformanceOptimization;
    Relevance relevance = Relevance::Minor;
    std::string note;
    std::optional<ThreatClass> threat;
    std::optional<SecurityCounts> security_counts;

    bool is_security_field() const { return threat.has_value(); }
};

class CatalogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnknownHeaderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The header-field taxonomy: ranked prevalence entries, threat classes for
/// the security fields, and the client support matrix. Immutable after load.
class Catalog {
public:
    /// Catalog built from the data files compiled into the library.
    static const Catalog& embedded();

    /// Loads `catalog.csv` and `support.csv` from a directory.
    static Catalog load(const std::filesystem::path& dir);

    static Catalog from_csv(std::string_view catalog_csv,
                            std::string_view support_csv);

    std::optional<CatalogEntry> classify(const HeaderName& name) const;
    std::optional<ThreatClass> threat_of(const HeaderName& name) const;

    /// Throws UnknownHeaderError unless `name` is a security field.
    SupportLevel client_support(ClientId client, const HeaderName& name) const;

    /// All ranked entries, in printed order.
    const std::vector<CatalogEntry>& entries() const { return entries_; }

    /// The sixteen security fields, sorted by prevalence.
    std::vector<CatalogEntry> security_entries() const;

    /// Security fields that mitigate a threat (everything but version leaks).
    std::vector<CatalogEntry> mitigation_entries() const;

    bool is_version_leak_field(const HeaderName& name) const;

private:
    Catalog() = default;
    void index();
    void validate() const;

    std::vector<CatalogEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_folded_name_;
    // folded security-field name -> 15 cells in ClientId order
    std::unordered_map<std::string, std::vector<SupportLevel>> support_;
};

}  // namespace secheader::catalog
