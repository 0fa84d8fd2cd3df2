#include "secheader/scanner.hpp"

#include <curl/curl.h>
#include <netdb.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "secheader/guard.hpp"
#include "secheader/url.hpp"

namespace secheader::scanner {

namespace {

using json = nlohmann::json;

std::int64_t system_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void curl_init_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

struct CurlDeleter {
    void operator()(CURL* h) const { curl_easy_cleanup(h); }
};
using CurlHandle = std::unique_ptr<CURL, CurlDeleter>;

struct HeaderCapture {
    std::vector<parse::RawHeader> headers;
    int status = 0;
};

std::size_t header_callback(char* buffer, std::size_t size, std::size_t nitems,
                            void* userdata) {
    auto* cap = static_cast<HeaderCapture*>(userdata);
    std::string_view line(buffer, size * nitems);
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
        line.remove_suffix(1);
    }
    if (line.starts_with("HTTP/")) {
        // a fresh status line (redirect hop or 1xx): restart the capture so
        // only the final response's headers are recorded
        cap->headers.clear();
        auto sp = line.find(' ');
        if (sp != std::string_view::npos) {
            cap->status = std::atoi(std::string(line.substr(sp + 1, 3)).c_str());
        }
        return size * nitems;
    }
    auto colon = line.find(':');
    if (colon == std::string_view::npos) return size * nitems;
    std::string_view name = line.substr(0, colon);
    std::string_view value = line.substr(colon + 1);
    while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) {
        value.remove_prefix(1);
    }
    if (auto n = HeaderName::make(name)) {
        cap->headers.emplace_back(std::move(*n), std::string(value));
    }
    return size * nitems;
}

std::size_t discard_body(char*, std::size_t size, std::size_t nitems, void*) {
    return size * nitems;
}

bool dns_resolves(const std::string& host) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* result = nullptr;
    int rc = getaddrinfo(host.c_str(), nullptr, &hints, &result);
    if (result) freeaddrinfo(result);
    return rc == 0;
}

NoResponseReason classify_curl_error(CURLcode code) {
    switch (code) {
        case CURLE_OPERATION_TIMEDOUT:
            return NoResponseReason::Timeout;
        case CURLE_COULDNT_RESOLVE_HOST:
        case CURLE_COULDNT_RESOLVE_PROXY:
            return NoResponseReason::Dns;
        case CURLE_COULDNT_CONNECT:
            return NoResponseReason::Connect;
        case CURLE_SSL_CONNECT_ERROR:
        case CURLE_PEER_FAILED_VERIFICATION:
        case CURLE_SSL_CERTPROBLEM:
        case CURLE_SSL_CIPHER:
        case CURLE_SSL_ISSUER_ERROR:
        case CURLE_SSL_INVALIDCERTSTATUS:
            return NoResponseReason::Tls;
        default:
            return NoResponseReason::Protocol;
    }
}

}  // namespace

std::string_view to_string(UrlGroup g) {
    return g == UrlGroup::Open ? "open" : "closed";
}

std::optional<UrlGroup> group_from_string(std::string_view s) {
    if (ascii_iequals(s, "open")) return UrlGroup::Open;
    if (ascii_iequals(s, "closed")) return UrlGroup::Closed;
    return std::nullopt;
}

std::string_view to_string(NoResponseReason r) {
    switch (r) {
        case NoResponseReason::Timeout: return "timeout";
        case NoResponseReason::Dns: return "dns";
        case NoResponseReason::Connect: return "connect";
        case NoResponseReason::Tls: return "tls";
        case NoResponseReason::Protocol: return "protocol";
    }
    return "?";
}

std::optional<NoResponseReason> reason_from_string(std::string_view s) {
    if (s == "timeout") return NoResponseReason::Timeout;
    if (s == "dns") return NoResponseReason::Dns;
    if (s == "connect") return NoResponseReason::Connect;
    if (s == "tls") return NoResponseReason::Tls;
    if (s == "protocol") return NoResponseReason::Protocol;
    return std::nullopt;
}

std::vector<UrlEntry> load_url_list(const std::filesystem::path& path,
                                    std::vector<std::string>* diagnostics) {
    std::ifstream in(path);
    if (!in) throw UrlListError("cannot open URL list: " + path.string());
    std::vector<UrlEntry> entries;
    std::string line;
    int lineno = 0;
    auto report = [&](const std::string& msg) {
        if (diagnostics) {
            diagnostics->push_back("line " + std::to_string(lineno) + ": " + msg);
        }
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view v = line;
        while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
        if (v.empty() || v.front() == '#') continue;
        auto comma = v.find(',');
        if (comma == std::string_view::npos) {
            report("missing ',' separator; row skipped");
            continue;
        }
        auto group = group_from_string(v.substr(0, comma));
        if (!group) {
            report("unknown group '" + std::string(v.substr(0, comma)) + "'; row skipped");
            continue;
        }
        std::string_view url = v.substr(comma + 1);
        while (!url.empty() && (url.front() == ' ' || url.front() == '\t')) {
            url.remove_prefix(1);
        }
        while (!url.empty() && (url.back() == ' ' || url.back() == '\t')) {
            url.remove_suffix(1);
        }
        if (!parse_url(url)) {
            report("not an absolute http/https URL: '" + std::string(url) + "'; row skipped");
            continue;
        }
        entries.push_back({std::string(url), *group});
    }
    if (entries.empty()) {
        throw UrlListError("URL list contains no valid rows: " + path.string());
    }
    return entries;
}

std::vector<UrlEntry> dedupe_urls(std::vector<UrlEntry> entries) {
    std::unordered_set<std::string> seen;
    std::vector<UrlEntry> out;
    out.reserve(entries.size());
    for (auto& e : entries) {
        if (seen.insert(e.url).second) out.push_back(std::move(e));
    }
    return out;
}

ProbeRecord probe(const UrlEntry& entry, const ProbeConfig& config) {
    curl_init_once();
    const Clock clock = config.clock ? config.clock : Clock(system_now);

    ProbeRecord record;
    record.url = entry.url;
    record.group = entry.group;
    record.fetched_at = clock();

    auto parsed = parse_url(entry.url);
    if (!parsed) {
        record.outcome = NoResponse{NoResponseReason::Protocol};
        return record;
    }
    // classify name-resolution failures explicitly; libcurl folds them into
    // a generic connect error on some builds
    if (!is_ip_literal(parsed->host) && !dns_resolves(parsed->host)) {
        record.outcome = NoResponse{NoResponseReason::Dns};
        return record;
    }

    CurlHandle handle(curl_easy_init());
    if (!handle) {
        record.outcome = NoResponse{NoResponseReason::Protocol};
        return record;
    }
    HeaderCapture capture;
    CURL* h = handle.get();
    curl_easy_setopt(h, CURLOPT_URL, entry.url.c_str());
    curl_easy_setopt(h, CURLOPT_HTTPGET, 1L);
    curl_easy_setopt(h, CURLOPT_USERAGENT, config.user_agent.c_str());
    curl_easy_setopt(h, CURLOPT_TIMEOUT_MS,
                     static_cast<long>(config.timeout_s * 1000));
    curl_easy_setopt(h, CURLOPT_CONNECTTIMEOUT_MS,
                     static_cast<long>(config.timeout_s * 1000));
    curl_easy_setopt(h, CURLOPT_FOLLOWLOCATION, config.follow_redirects ? 1L : 0L);
    curl_easy_setopt(h, CURLOPT_MAXREDIRS, static_cast<long>(config.max_redirects));
    curl_easy_setopt(h, CURLOPT_SSL_VERIFYPEER, config.tls_verify ? 1L : 0L);
    curl_easy_setopt(h, CURLOPT_SSL_VERIFYHOST, config.tls_verify ? 2L : 0L);
    curl_easy_setopt(h, CURLOPT_HEADERFUNCTION, header_callback);
    curl_easy_setopt(h, CURLOPT_HEADERDATA, &capture);
    curl_easy_setopt(h, CURLOPT_WRITEFUNCTION, discard_body);
    curl_easy_setopt(h, CURLOPT_NOSIGNAL, 1L);
    // only Host, User-Agent and the default Accept: */* go out
    curl_easy_setopt(h, CURLOPT_ACCEPT_ENCODING, nullptr);

    const auto t0 = std::chrono::steady_clock::now();
    CURLcode code = curl_easy_perform(h);
    const auto t1 = std::chrono::steady_clock::now();

    if (code != CURLE_OK) {
        record.outcome = NoResponse{classify_curl_error(code)};
        return record;
    }
    long status = 0;
    curl_easy_getinfo(h, CURLINFO_RESPONSE_CODE, &status);
    Response resp;
    resp.status = static_cast<int>(status);
    resp.headers = std::move(capture.headers);
    resp.latency_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    record.outcome = std::move(resp);
    return record;
}

ScanCorpus scan(std::vector<UrlEntry> entries, const ProbeConfig& config) {
    const Clock clock = config.clock ? config.clock : Clock(system_now);
    entries = dedupe_urls(std::move(entries));

    ScanCorpus corpus;
    corpus.config = config;
    corpus.started_at = clock();
    corpus.records.resize(entries.size());

    const int workers =
        std::max(1, std::min<int>(config.max_concurrency,
                                  static_cast<int>(entries.size())));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= entries.size()) break;
                corpus.records[i] = probe(entries[i], config);
            }
        });
    }
    for (auto& t : pool) t.join();
    corpus.finished_at = clock();
    return corpus;
}

std::string corpus_to_jsonl(const ScanCorpus& corpus) {
    std::string out;
    for (const auto& r : corpus.records) {
        json j;
        j["url"] = r.url;
        j["group"] = to_string(r.group);
        if (const auto* resp = r.response()) {
            json headers = json::array();
            for (const auto& h : resp->headers) {
                headers.push_back({h.name.str(), h.value});
            }
            j["outcome"] = {{"status", resp->status},
                            {"headers", headers},
                            {"latency_ms", resp->latency_ms}};
        } else {
            j["outcome"] = {{"no_response", to_string(r.no_response()->reason)}};
        }
        j["fetched_at"] = r.fetched_at;
        out += j.dump();
        out += '\n';
    }
    return out;
}

ScanCorpus corpus_from_jsonl(std::string_view text) {
    ScanCorpus corpus;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        ProbeRecord r;
        r.url = j.at("url").get<std::string>();
        auto group = group_from_string(j.at("group").get<std::string>());
        if (!group) throw std::runtime_error("corpus: unknown group in record");
        r.group = *group;
        const auto& outcome = j.at("outcome");
        if (outcome.contains("no_response")) {
            auto reason = reason_from_string(outcome.at("no_response").get<std::string>());
            if (!reason) throw std::runtime_error("corpus: unknown no_response reason");
            r.outcome = NoResponse{*reason};
        } else {
            Response resp;
            resp.status = outcome.at("status").get<int>();
            resp.latency_ms = outcome.value("latency_ms", 0);
            for (const auto& h : outcome.at("headers")) {
                auto name = HeaderName::make(h.at(0).get<std::string>());
                if (!name) continue;
                resp.headers.emplace_back(std::move(*name), h.at(1).get<std::string>());
            }
            r.outcome = std::move(resp);
        }
        r.fetched_at = j.value("fetched_at", 0);
        corpus.records.push_back(std::move(r));
    }
    return corpus;
}

std::string url_digest_hex(std::string_view url) {
    auto digest = guard::sha256(url);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(digest.size() * 2);
    for (auto b : digest) {
        out += hex[b >> 4];
        out += hex[b & 0xf];
    }
    return out;
}

void dump_per_url(const ScanCorpus& corpus, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& r : corpus.records) {
        std::ofstream out(dir / url_digest_hex(r.url), std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write dump file in " + dir.string());
        }
        if (const auto* resp = r.response()) {
            for (const auto& h : resp->headers) {
                out << h.name.str() << ": " << h.value << "\n";
            }
        }
        // NoResponse leaves an empty file
    }
}

}  // namespace secheader::scanner
