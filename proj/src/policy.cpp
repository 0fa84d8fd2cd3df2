#include "secheader/policy.hpp"

#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "secheader/url.hpp"

namespace secheader::policy {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

// "a.example.com" matches "example.com" on a label boundary;
// "badexample.com" does not.
bool host_matches(std::string_view url_host, const HstsEntry& entry) {
    if (url_host == entry.host) return true;
    if (!entry.include_subdomains) return false;
    if (url_host.size() <= entry.host.size()) return false;
    if (!url_host.ends_with(entry.host)) return false;
    return url_host[url_host.size() - entry.host.size() - 1] == '.';
}

}  // namespace

HstsStore::HstsStore(std::filesystem::path store_path)
    : store_path_(std::move(store_path)) {}

HstsStore::HstsStore(const HstsStore& other) {
    std::shared_lock lock(other.mutex_);
    entries_ = other.entries_;
    store_path_ = other.store_path_;
}

HstsStore& HstsStore::operator=(const HstsStore& other) {
    if (this == &other) return *this;
    std::map<std::string, HstsEntry> entries;
    std::optional<std::filesystem::path> path;
    {
        std::shared_lock lock(other.mutex_);
        entries = other.entries_;
        path = other.store_path_;
    }
    std::unique_lock lock(mutex_);
    entries_ = std::move(entries);
    store_path_ = std::move(path);
    return *this;
}

HstsStore HstsStore::load(const std::filesystem::path& store_path) {
    HstsStore store(store_path);
    std::ifstream in(store_path);
    if (!in) return store;  // missing file == empty store
    std::string line;
    while (std::getline(in, line)) {
        std::string_view v = trim(line);
        if (v.empty() || v.front() == '#') continue;
        auto tab1 = v.find('\t');
        auto tab2 = tab1 == std::string_view::npos ? std::string_view::npos
                                                   : v.find('\t', tab1 + 1);
        if (tab2 == std::string_view::npos) {
            throw std::runtime_error("malformed HSTS store line: " + std::string(v));
        }
        HstsEntry e;
        e.host = ascii_lower(v.substr(0, tab1));
        std::string_view expires = v.substr(tab1 + 1, tab2 - tab1 - 1);
        auto [p, ec] = std::from_chars(expires.data(), expires.data() + expires.size(),
                                       e.expires_at);
        if (ec != std::errc{} || p != expires.data() + expires.size()) {
            throw std::runtime_error("malformed HSTS store expiry: " + std::string(v));
        }
        std::string_view flag = v.substr(tab2 + 1);
        e.include_subdomains = flag == "1";
        store.entries_[e.host] = e;
    }
    return store;
}

HstsUpdateResult HstsStore::update(std::string_view host,
                                   const parse::HstsDirectives& d,
                                   bool over_secure_transport, Timestamp now) {
    if (!over_secure_transport) return HstsUpdateResult::IgnoredInsecure;
    std::string folded = ascii_lower(trim(host));
    if (folded.empty() || is_ip_literal(folded)) {
        return HstsUpdateResult::IgnoredIpLiteral;
    }
    HstsUpdateResult result;
    {
        std::unique_lock lock(mutex_);
        if (d.max_age == 0) {
            result = entries_.erase(folded) > 0 ? HstsUpdateResult::Removed
                                                : HstsUpdateResult::NoEntry;
        } else {
            entries_[folded] =
                HstsEntry{folded, now + d.max_age, d.include_subdomains};
            result = HstsUpdateResult::Applied;
        }
    }
    persist_if_configured();
    return result;
}

bool HstsStore::covers(std::string_view host, Timestamp now) {
    std::string folded = ascii_lower(trim(host));
    std::unique_lock lock(mutex_);
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (it->second.expires_at <= now) {
            it = entries_.erase(it);
            continue;
        }
        if (host_matches(folded, it->second)) return true;
        ++it;
    }
    return false;
}

std::string HstsStore::rewrite(std::string_view url, Timestamp now) {
    auto parsed = parse_url(url);
    if (!parsed || parsed->scheme != "http") return std::string(url);
    if (!covers(parsed->host, now)) return std::string(url);
    parsed->scheme = "https";
    if (parsed->port && *parsed->port == 80) parsed->port = 443;
    return parsed->to_string();
}

void HstsStore::purge(Timestamp now) {
    std::unique_lock lock(mutex_);
    std::erase_if(entries_, [now](const auto& kv) {
        return kv.second.expires_at <= now;
    });
}

std::size_t HstsStore::import_preload(const std::filesystem::path& file,
                                      Timestamp now) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open preload file: " + file.string());
    // preload entries do not expire on their own; give them a far horizon
    const Timestamp horizon = now + parse::kMaxHstsAge;
    std::size_t imported = 0;
    std::string line;
    {
        std::unique_lock lock(mutex_);
        while (std::getline(in, line)) {
            std::string_view v = trim(line);
            if (v.empty() || v.front() == '#') continue;
            bool subdomains = false;
            auto comma = v.find(',');
            if (comma != std::string_view::npos) {
                subdomains = ascii_iequals(trim(v.substr(comma + 1)), "includeSubDomains");
                v = trim(v.substr(0, comma));
            }
            std::string folded = ascii_lower(v);
            if (folded.empty() || is_ip_literal(folded)) continue;
            entries_[folded] = HstsEntry{folded, horizon, subdomains};
            ++imported;
        }
    }
    persist_if_configured();
    return imported;
}

void HstsStore::persist_if_configured() const {
    if (store_path_) save();
}

void HstsStore::save() const {
    std::shared_lock lock(mutex_);
    save_unlocked();
}

void HstsStore::save_unlocked() const {
    if (!store_path_) {
        throw std::runtime_error("HSTS store has no file path configured");
    }
    if (store_path_->has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(store_path_->parent_path(), ec);
    }
    FILE* f = std::fopen(store_path_->c_str(), "w");
    if (!f) {
        throw std::runtime_error("cannot write HSTS store " + store_path_->string() +
                                 ": " + std::strerror(errno));
    }
    // advisory lock: the store file is shared per user
    flock(fileno(f), LOCK_EX);
    std::ostringstream out;
    out << "# secheader HSTS store: host<TAB>expires_at_epoch_seconds<TAB>0|1\n";
    for (const auto& [host, e] : entries_) {
        out << host << '\t' << e.expires_at << '\t'
            << (e.include_subdomains ? '1' : '0') << '\n';
    }
    const std::string text = out.str();
    bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    flock(fileno(f), LOCK_UN);
    ok = std::fclose(f) == 0 && ok;
    if (!ok) {
        throw std::runtime_error("failed writing HSTS store " + store_path_->string());
    }
}

std::map<std::string, HstsEntry> HstsStore::entries() const {
    std::shared_lock lock(mutex_);
    return entries_;
}

std::size_t HstsStore::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

bool HstsStore::operator==(const HstsStore& other) const {
    return entries() == other.entries();
}

std::string_view to_string(LeakMode m) {
    switch (m) {
        case LeakMode::Strict: return "strict";
        case LeakMode::Audit: return "audit";
        case LeakMode::Ignore: return "ignore";
    }
    return "?";
}

std::optional<LeakMode> leak_mode_from_string(std::string_view s) {
    if (ascii_iequals(s, "strict")) return LeakMode::Strict;
    if (ascii_iequals(s, "audit")) return LeakMode::Audit;
    if (ascii_iequals(s, "ignore")) return LeakMode::Ignore;
    return std::nullopt;
}

StrictLeakError::StrictLeakError(std::vector<parse::VersionLeak> findings)
    : std::runtime_error(
          "version-leak header field present in strict mode (" +
          std::to_string(findings.size()) + " finding(s), first: " +
          (findings.empty() ? std::string("?") : findings.front().header.str()) + ")"),
      findings_(std::move(findings)) {}

std::vector<parse::VersionLeak> evaluate_version_leaks(
    std::span<const parse::RawHeader> headers, LeakMode mode) {
    if (mode == LeakMode::Ignore) return {};
    std::vector<parse::VersionLeak> findings;
    for (const auto& h : headers) {
        if (parse::is_version_leak_field_name(h.name)) {
            findings.push_back(parse::extract_version_leak(h.name, h.value));
        }
    }
    if (mode == LeakMode::Strict && !findings.empty()) {
        throw StrictLeakError(std::move(findings));
    }
    return findings;
}

UpgradeDecision evaluate_upgrade(const parse::UpgradeTargets& offered,
                                 const std::set<std::string>& client_capable) {
    for (const auto& protocol : offered.protocols) {
        for (const auto& capable : client_capable) {
            if (ascii_iequals(protocol, capable)) {
                return {true, protocol};
            }
        }
    }
    return {};
}

CorsDecision evaluate_cors(std::string_view request_origin,
                           const CorsResponseHeaders& headers) {
    CorsDecision d;
    if (!headers.allow_origin) {
        d.reason = "no Access-Control-Allow-Origin header";
        return d;
    }
    const auto& acao = *headers.allow_origin;
    switch (acao.kind) {
        case parse::CorsOrigin::Kind::Wildcard:
            if (headers.allow_credentials) {
                // the wildcard origin must not be combined with credentials
                d.reason = "wildcard origin cannot be combined with credentials";
                return d;
            }
            d.allowed = true;
            d.reason = "wildcard origin";
            break;
        case parse::CorsOrigin::Kind::Null:
            if (request_origin != "null") {
                d.reason = "origin mismatch: response allows only 'null'";
                return d;
            }
            d.allowed = true;
            d.reason = "null origin match";
            break;
        case parse::CorsOrigin::Kind::Origin:
            if (acao.origin != request_origin) {
                d.reason = "origin mismatch: response allows " + acao.origin;
                return d;
            }
            d.allowed = true;
            d.reason = "origin match";
            break;
    }
    d.exposed_headers = headers.expose_headers;
    d.credentials_permitted =
        headers.allow_credentials && acao.kind == parse::CorsOrigin::Kind::Origin;
    return d;
}

CorsResponseHeaders collect_cors_headers(std::span<const parse::RawHeader> headers) {
    CorsResponseHeaders out;
    bool seen_credentials = false;
    for (const auto& h : headers) {
        const std::string& n = h.name.folded();
        // first occurrence wins for policy
        if (n == "access-control-allow-origin" && !out.allow_origin) {
            auto r = parse::parse_security_header(h);
            if (r.value) out.allow_origin = std::get<parse::CorsOrigin>(*r.value);
        } else if (n == "access-control-allow-credentials" && !seen_credentials) {
            seen_credentials = true;
            auto r = parse::parse_security_header(h);
            if (r.value) {
                out.allow_credentials = std::get<parse::CorsCredentials>(*r.value).allow;
            }
        } else if (n == "access-control-expose-headers" && out.expose_headers.empty()) {
            auto r = parse::parse_security_header(h);
            if (r.value) {
                out.expose_headers = std::get<parse::ExposedHeaders>(*r.value).names;
            }
        }
    }
    return out;
}

}  // namespace secheader::policy
