#include "secheader/catalog.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "secheader/catalog_data.hpp"

namespace secheader::catalog {

namespace {

constexpr std::array<std::pair<Purpose, std::string_view>, 8> kPurposeNames{{
    {Purpose::PerformanceOptimization, "performance-optimization"},
    {Purpose::Debugging, "debugging"},
    {Purpose::Security, "security"},
    {Purpose::Advertisement, "advertisement"},
    {Purpose::DataPresentation, "data-presentation"},
    {Purpose::CookieManagement, "cookie-management"},
    {Purpose::ContentRedirection, "content-redirection"},
    {Purpose::Privacy, "privacy"},
}};

constexpr std::array<std::pair<ThreatClass, std::string_view>, 4> kThreatNames{{
    {ThreatClass::VersionLeak, "version-leak"},
    {ThreatClass::CodeExecution, "code-execution"},
    {ThreatClass::ClickJacking, "click-jacking"},
    {ThreatClass::DataLeak, "data-leak"},
}};

constexpr std::array<std::pair<SupportLevel, std::string_view>, 3> kSupportNames{{
    {SupportLevel::Full, "full"},
    {SupportLevel::Limited, "limited"},
    {SupportLevel::Unsupported, "unsupported"},
}};

constexpr std::array<std::pair<ClientId, std::string_view>, kClientCount> kClientNames{{
    {ClientId::Glide, "Glide"},
    {ClientId::HttpComponents, "HttpComponents"},
    {ClientId::Ion, "Ion"},
    {ClientId::LoopJ, "LoopJ"},
    {ClientId::OkHttp, "OkHttp"},
    {ClientId::RetroFit, "RetroFit"},
    {ClientId::Volley, "Volley"},
    {ClientId::HttpsUrlConnection, "HttpsURLConnection"},
    {ClientId::HttpUrlConnection, "HttpURLConnection"},
    {ClientId::Socket, "Socket"},
    {ClientId::UrlConnection, "URLConnection"},
    {ClientId::AndroidWebView, "Android WebView"},
    {ClientId::GoogleChrome, "Google Chrome"},
    {ClientId::MicrosoftEdge, "Microsoft Edge"},
    {ClientId::MozillaFirefox, "Mozilla Firefox"},
}};

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
    for (const auto& [e, n] : table) {
        if (e == v) return n;
    }
    return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const std::array<std::pair<E, std::string_view>, N>& table,
                          std::string_view s) {
    for (const auto& [e, n] : table) {
        if (ascii_iequals(n, s)) return e;
    }
    return std::nullopt;
}

// Splits one CSV record; supports double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

long parse_long(std::string_view s, std::string_view what) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) {
        throw CatalogError("bad " + std::string(what) + " value: '" + std::string(s) + "'");
    }
    return v;
}

std::string trim_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

std::string_view to_string(Purpose p) { return name_of(kPurposeNames, p); }
std::string_view to_string(ThreatClass t) { return name_of(kThreatNames, t); }
std::string_view to_string(Relevance r) { return r == Relevance::Major ? "Major" : "Minor"; }
std::string_view to_string(SupportLevel s) { return name_of(kSupportNames, s); }
std::string_view to_string(ClientId c) { return name_of(kClientNames, c); }

std::optional<Purpose> purpose_from_string(std::string_view s) {
    return value_of(kPurposeNames, s);
}
std::optional<ThreatClass> threat_from_string(std::string_view s) {
    return value_of(kThreatNames, s);
}
std::optional<SupportLevel> support_from_string(std::string_view s) {
    return value_of(kSupportNames, s);
}
std::optional<ClientId> client_from_string(std::string_view s) {
    return value_of(kClientNames, s);
}

const Catalog& Catalog::embedded() {
    static const Catalog instance =
        from_csv(data::kCatalogCsv, data::kSupportCsv);
    return instance;
}

Catalog Catalog::load(const std::filesystem::path& dir) {
    auto read = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw CatalogError("cannot open " + p.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    return from_csv(read(dir / "catalog.csv"), read(dir / "support.csv"));
}

Catalog Catalog::from_csv(std::string_view catalog_csv, std::string_view support_csv) {
    Catalog cat;

    std::istringstream in{std::string(catalog_csv)};
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        line = trim_cr(line);
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        auto f = split_csv_line(line);
        if (f.size() != 13) {
            throw CatalogError("catalog.csv: expected 13 columns, got " +
                               std::to_string(f.size()) + " in: " + line);
        }
        CatalogEntry e{HeaderName(f[2])};
        e.rank = static_cast<int>(parse_long(f[0], "rank"));
        e.occurrences = parse_long(f[1], "occurrences");
        auto purpose = purpose_from_string(f[3]);
        if (!purpose) throw CatalogError("catalog.csv: unknown purpose '" + f[3] + "'");
        e.purpose = *purpose;
        if (ascii_iequals(f[4], "Major")) {
            e.relevance = Relevance::Major;
        } else if (ascii_iequals(f[4], "Minor")) {
            e.relevance = Relevance::Minor;
        } else {
            throw CatalogError("catalog.csv: unknown relevance '" + f[4] + "'");
        }
        e.note = f[5];
        if (!f[6].empty()) {
            auto threat = threat_from_string(f[6]);
            if (!threat) throw CatalogError("catalog.csv: unknown threat '" + f[6] + "'");
            e.threat = *threat;
            SecurityCounts c;
            c.total = parse_long(f[7], "total");
            c.open = parse_long(f[8], "open");
            c.closed = parse_long(f[9], "closed");
            c.total_pct = static_cast<int>(parse_long(f[10], "total_pct"));
            c.open_pct = static_cast<int>(parse_long(f[11], "open_pct"));
            c.closed_pct = static_cast<int>(parse_long(f[12], "closed_pct"));
            e.security_counts = c;
        }
        cat.entries_.push_back(std::move(e));
    }

    std::istringstream sin{std::string(support_csv)};
    header = true;
    std::vector<ClientId> columns;
    while (std::getline(sin, line)) {
        line = trim_cr(line);
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (header) {
            header = false;
            if (f.size() != kClientCount + 1) {
                throw CatalogError("support.csv: expected 16 columns");
            }
            for (std::size_t i = 1; i < f.size(); ++i) {
                auto c = client_from_string(f[i]);
                if (!c) throw CatalogError("support.csv: unknown client '" + f[i] + "'");
                columns.push_back(*c);
            }
            continue;
        }
        if (f.size() != kClientCount + 1) {
            throw CatalogError("support.csv: bad row: " + line);
        }
        std::vector<SupportLevel> cells(kClientCount, SupportLevel::Unsupported);
        for (std::size_t i = 1; i < f.size(); ++i) {
            auto level = support_from_string(f[i]);
            if (!level) throw CatalogError("support.csv: unknown level '" + f[i] + "'");
            cells[static_cast<std::size_t>(columns[i - 1])] = *level;
        }
        cat.support_[ascii_lower(f[0])] = std::move(cells);
    }

    cat.index();
    cat.validate();
    return cat;
}

void Catalog::index() {
    by_folded_name_.clear();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        by_folded_name_.emplace(entries_[i].name.folded(), i);
    }
}

void Catalog::validate() const {
    std::size_t security = 0;
    std::size_t version_leaks = 0;
    for (const auto& e : entries_) {
        if (e.threat.has_value() != e.security_counts.has_value()) {
            throw CatalogError("threat and counts must appear together: " + e.name.str());
        }
        if (e.security_counts) {
            const auto& c = *e.security_counts;
            if (c.open + c.closed != c.total) {
                throw CatalogError("open + closed != total for " + e.name.str());
            }
            if (c.open > kOpenUrlTotal || c.closed > kClosedUrlTotal || c.total > kUrlTotal) {
                throw CatalogError("counts exceed group totals for " + e.name.str());
            }
            ++security;
            if (*e.threat == ThreatClass::VersionLeak) ++version_leaks;
        }
    }
    if (security != 16) {
        throw CatalogError("expected 16 security fields, got " + std::to_string(security));
    }
    if (version_leaks != 4) {
        throw CatalogError("expected 4 version-leak fields");
    }
    if (support_.size() != 16) {
        throw CatalogError("expected 16 support matrix rows");
    }
    for (const auto& [name, cells] : support_) {
        if (!by_folded_name_.contains(name)) {
            throw CatalogError("support row for unknown field: " + name);
        }
        if (cells.size() != kClientCount) {
            throw CatalogError("support row with wrong width: " + name);
        }
    }
}

std::optional<CatalogEntry> Catalog::classify(const HeaderName& name) const {
    auto it = by_folded_name_.find(name.folded());
    if (it == by_folded_name_.end()) return std::nullopt;
    return entries_[it->second];
}

std::optional<ThreatClass> Catalog::threat_of(const HeaderName& name) const {
    auto it = by_folded_name_.find(name.folded());
    if (it == by_folded_name_.end()) return std::nullopt;
    return entries_[it->second].threat;
}

SupportLevel Catalog::client_support(ClientId client, const HeaderName& name) const {
    auto it = support_.find(name.folded());
    if (it == support_.end()) {
        throw UnknownHeaderError("not a security header field: " + name.str());
    }
    return it->second[static_cast<std::size_t>(client)];
}

std::vector<CatalogEntry> Catalog::security_entries() const {
    std::vector<CatalogEntry> out;
    for (const auto& e : entries_) {
        if (e.is_security_field()) out.push_back(e);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.security_counts->total > b.security_counts->total;
    });
    return out;
}

std::vector<CatalogEntry> Catalog::mitigation_entries() const {
    std::vector<CatalogEntry> out;
    for (const auto& e : security_entries()) {
        if (*e.threat != ThreatClass::VersionLeak) out.push_back(e);
    }
    return out;
}

bool Catalog::is_version_leak_field(const HeaderName& name) const {
    auto t = threat_of(name);
    return t && *t == ThreatClass::VersionLeak;
}

}  // namespace secheader::catalog
