// End-to-end acceptance checks. Each criterion prints one pass/fail line;
// the process exits non-zero if any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "secheader/catalog.hpp"
#include "secheader/fixture.hpp"
#include "secheader/guard.hpp"
#include "secheader/policy.hpp"
#include "secheader/report.hpp"
#include "secheader/scanner.hpp"

using namespace secheader;

namespace {

namespace fs = std::filesystem;

struct Criterion {
    int number;
    std::string failure;  // empty = pass

    void fail(const std::string& why) {
        if (failure.empty()) failure = why;
    }
    template <typename T, typename U>
    void expect_eq(const T& got, const U& want, const std::string& what) {
        if (!(got == static_cast<T>(want))) {
            std::ostringstream s;
            s << what << ": got " << got << ", want " << want;
            fail(s.str());
        }
    }
    void expect(bool ok, const std::string& what) {
        if (!ok) fail(what);
    }
};

// ---- criterion 1: catalog fidelity ----------------------------------------

void criterion_catalog(Criterion& c) {
    const auto& cat = catalog::Catalog::embedded();
    using catalog::ClientId;
    using catalog::SupportLevel;

    const auto& entries = cat.entries();
    c.expect_eq(entries.size(), std::size_t{53}, "ranked entry count");
    std::set<int> ranks;
    for (const auto& e : entries) ranks.insert(e.rank);
    c.expect_eq(ranks.size(), std::size_t{50}, "distinct rank count");
    c.expect(!ranks.empty() && *ranks.begin() == 1 && *ranks.rbegin() == 50,
             "ranks span 1..50");
    c.expect_eq(cat.security_entries().size(), std::size_t{16},
                "security field count");
    c.expect_eq(cat.mitigation_entries().size(), std::size_t{12},
                "mitigation field count");

    int cells = 0;
    for (const auto& e : cat.security_entries()) {
        for (int i = 0; i < catalog::kClientCount; ++i) {
            cat.client_support(static_cast<ClientId>(i), e.name);
            ++cells;
        }
    }
    c.expect_eq(cells, 240, "support matrix cell count");

    // sampled literals
    auto occ = [&](const char* name) {
        auto e = cat.classify(HeaderName(name));
        return e ? e->occurrences : -1L;
    };
    auto rank = [&](const char* name) {
        auto e = cat.classify(HeaderName(name));
        return e ? e->rank : -1;
    };
    c.expect_eq(occ("Server"), 6978L, "Server occurrences");
    c.expect_eq(rank("Server"), 3, "Server rank");
    c.expect_eq(occ("Date"), 7567L, "Date occurrences");
    c.expect_eq(rank("Date"), 1, "Date rank");
    c.expect_eq(occ("Content-Type"), 7189L, "Content-Type occurrences");
    c.expect_eq(occ("X-Frame-Options"), 1289L, "X-Frame-Options occurrences");
    c.expect_eq(occ("Strict-Transport-Security"), 787L,
                "Strict-Transport-Security occurrences");
    c.expect_eq(occ("X-XSS-Protection"), 1519L, "X-XSS-Protection occurrences");
    c.expect_eq(rank("x-timer"), 50, "X-Timer rank");
    c.expect(cat.client_support(ClientId::OkHttp,
                                HeaderName("Strict-Transport-Security")) ==
                 SupportLevel::Limited,
             "OkHttp x Strict-Transport-Security is limited");
    c.expect(cat.client_support(ClientId::Socket, HeaderName("Server")) ==
                 SupportLevel::Unsupported,
             "Socket x Server is unsupported");
    c.expect(cat.client_support(ClientId::GoogleChrome,
                                HeaderName("X-Frame-Options")) ==
                 SupportLevel::Full,
             "Google Chrome x X-Frame-Options is full");
    c.expect(cat.threat_of(HeaderName("X-Powered-By-Plesk")) ==
                 catalog::ThreatClass::VersionLeak,
             "X-Powered-By-Plesk threat class");
}

// ---- criterion 2: the 32 group percentage cells ----------------------------

void criterion_percentages(Criterion& c) {
    const auto& cat = catalog::Catalog::embedded();
    int checked = 0;
    for (const auto& e : cat.security_entries()) {
        const auto& sc = *e.security_counts;
        int open = report::pct_round_half_up(sc.open, catalog::kOpenUrlTotal);
        int closed = report::pct_round_half_up(sc.closed, catalog::kClosedUrlTotal);
        c.expect_eq(open, sc.open_pct, e.name.str() + " open group pct");
        c.expect_eq(closed, sc.closed_pct, e.name.str() + " closed group pct");
        checked += 2;
    }
    c.expect_eq(checked, 32, "group percentage cell count");
}

// ---- criterion 3: non-adoption aggregate -----------------------------------

void criterion_non_adoption(Criterion& c) {
    auto rows = report::security_rows_from_catalog();
    c.expect_eq(report::non_adoption_average(rows), 93,
                "mean non-adoption over the mitigation fields");
}

// ---- criterion 4: HSTS store behaviour over generated sequences ------------

void criterion_hsts_sequences(Criterion& c) {
    struct ModelEntry {
        policy::Timestamp expires_at;
        bool subs;
    };
    std::mt19937 rng(1905);
    const std::vector<std::string> hosts = {
        "example.com", "api.example.com", "deep.api.example.com",
        "other.net",   "example.com.evil", "10.0.0.7"};
    std::uniform_int_distribution<int> host_pick(0, static_cast<int>(hosts.size()) - 1);
    std::uniform_int_distribution<long> age_pick(0, 400);
    std::bernoulli_distribution coin(0.5);

    int sequences = 0;
    for (int seq = 0; seq < 250 && c.failure.empty(); ++seq, ++sequences) {
        policy::HstsStore store;
        std::map<std::string, ModelEntry> model;
        policy::Timestamp now = 0;
        for (int step = 0; step < 30; ++step) {
            now += std::uniform_int_distribution<long>(0, 80)(rng);
            const auto& host = hosts[host_pick(rng)];
            if (coin(rng)) {
                parse::HstsDirectives d{age_pick(rng), coin(rng), false};
                bool secure = coin(rng);
                store.update(host, d, secure, now);
                bool is_ip =
                    host.find_first_not_of("0123456789.") == std::string::npos;
                if (secure && !is_ip) {
                    if (d.max_age == 0) {
                        model.erase(host);
                    } else {
                        model[host] = {now + d.max_age, d.include_subdomains};
                    }
                }
            }
            const auto& q = hosts[host_pick(rng)];
            bool expected = false;
            for (const auto& [h, e] : model) {
                if (e.expires_at <= now) continue;
                if (q == h ||
                    (e.subs && q.size() > h.size() &&
                     q.compare(q.size() - h.size(), h.size(), h) == 0 &&
                     q[q.size() - h.size() - 1] == '.')) {
                    expected = true;
                }
            }
            if (store.covers(q, now) != expected) {
                std::ostringstream s;
                s << "sequence " << seq << " step " << step << ": covers(" << q
                  << ", " << now << ") disagrees with the reference model";
                c.fail(s.str());
                break;
            }
            // rewrite must agree with covers
            std::string url = "http://" + q + "/p";
            bool rewritten = store.rewrite(url, now) != url;
            if (rewritten != store.covers(q, now)) {
                c.fail("rewrite/covers disagreement for " + q);
                break;
            }
        }
    }
    c.expect(sequences >= 200, "at least 200 generated sequences");
}

// ---- criterion 5: guarded body sink matrices --------------------------------

void criterion_guard(Criterion& c) {
    using parse::InterpretationPolicy;
    using parse::PersistencePolicy;

    auto interp_allows = [](const InterpretationPolicy& p, const char* lang) {
        guard::GuardedBody b("x", p, {}, "https://o/");
        try {
            b.interpret_as(lang);
            return true;
        } catch (const guard::SinkDenied&) {
            return false;
        }
    };
    InterpretationPolicy any{InterpretationPolicy::Kind::Any, {}};
    InterpretationPolicy none{InterpretationPolicy::Kind::NoneAllowed, {}};
    InterpretationPolicy json_only{InterpretationPolicy::Kind::Allow, {"json"}};
    InterpretationPolicy two{InterpretationPolicy::Kind::Allow, {"json", "html"}};

    // interpretation matrix: policy x interpreter
    const struct {
        const InterpretationPolicy* policy;
        const char* lang;
        bool want;
    } interp_cases[] = {
        {&any, "json", true},       {&any, "javascript", true},
        {&none, "json", false},     {&none, "javascript", false},
        {&json_only, "json", true}, {&json_only, "JSON", true},
        {&json_only, "javascript", false},
        {&two, "html", true},       {&two, "css", false},
    };
    for (const auto& t : interp_cases) {
        if (interp_allows(*t.policy, t.lang) != t.want) {
            c.fail(std::string("interpretation matrix cell: ") + t.lang);
        }
    }

    auto persist_allows = [](PersistencePolicy::Kind k, bool hashed) {
        guard::GuardedBody b("x", {}, {k}, "https://o/");
        try {
            if (hashed) {
                b.persist_hashed("sink", "sha256");
            } else {
                b.persist("sink");
            }
            return true;
        } catch (const guard::SinkDenied&) {
            return false;
        }
    };
    // persistence matrix: policy x (plain, hashed)
    const struct {
        PersistencePolicy::Kind kind;
        bool plain, hashed;
    } persist_cases[] = {
        {PersistencePolicy::Kind::Any, true, true},
        {PersistencePolicy::Kind::OnlyHashed, false, true},
        {PersistencePolicy::Kind::NonePersist, false, false},
    };
    for (const auto& t : persist_cases) {
        if (persist_allows(t.kind, false) != t.plain ||
            persist_allows(t.kind, true) != t.hashed) {
            c.fail("persistence matrix row");
        }
    }

    // absent headers impose no restriction; empty values fail closed
    std::vector<parse::RawHeader> no_headers;
    auto open_body = guard::GuardedBody::from_response("d", no_headers, "u");
    c.expect(open_body.interpretation().kind == InterpretationPolicy::Kind::Any,
             "absent interpretation header defaults to any");
    c.expect(open_body.persistence().kind == PersistencePolicy::Kind::Any,
             "absent persistence header defaults to any");

    std::vector<parse::RawHeader> empty_headers = {
        {"X-Allowed-Interpretation", ""}, {"X-Allowed-Persistence", ""}};
    auto closed_body = guard::GuardedBody::from_response("d", empty_headers, "u");
    c.expect(closed_body.interpretation().kind ==
                 InterpretationPolicy::Kind::NoneAllowed,
             "empty interpretation value fails closed");
    c.expect(closed_body.persistence().kind == PersistencePolicy::Kind::NonePersist,
             "empty persistence value fails closed");
}

// ---- criterion 6: fixture scan fidelity -------------------------------------

void criterion_scan(Criterion& c) {
    std::map<std::string, fixture::FixtureResponse> routes;
    // eight reachable endpoints with distinct header sets, including
    // repeated field names
    std::map<std::string, std::multiset<std::pair<std::string, std::string>>> want;
    for (int i = 0; i < 8; ++i) {
        fixture::FixtureResponse r;
        r.status = 200;
        r.headers = {
            {"Server", "srv/" + std::to_string(i)},
            {"X-Index", std::to_string(i)},
            {"Set-Cookie", "a=" + std::to_string(i)},
            {"Set-Cookie", "b=" + std::to_string(i)},
        };
        if (i % 2 == 0) r.headers.push_back({"X-Frame-Options", "DENY"});
        r.body = "body " + std::to_string(i);
        std::string path = "/u" + std::to_string(i);
        routes[path] = r;
        for (const auto& h : r.headers) want[path].insert(h);
    }
    fixture::FixtureServer server(std::move(routes));
    server.start();

    std::vector<scanner::UrlEntry> entries;
    for (int i = 0; i < 8; ++i) {
        entries.push_back({server.base_url() + "/u" + std::to_string(i),
                           i < 4 ? scanner::UrlGroup::Open
                                 : scanner::UrlGroup::Closed});
    }
    // two non-responders: connection refused and unresolvable name
    entries.push_back({"http://127.0.0.1:1/", scanner::UrlGroup::Open});
    entries.push_back({"http://no-such-host.invalid/", scanner::UrlGroup::Closed});

    for (int concurrency : {1, 4, 8}) {
        scanner::ProbeConfig cfg;
        cfg.timeout_s = 10.0;
        cfg.max_concurrency = concurrency;
        auto corpus = scanner::scan(entries, cfg);

        c.expect_eq(corpus.records.size(), std::size_t{10}, "record count");
        int responses = 0, empty = 0;
        for (std::size_t i = 0; i < corpus.records.size(); ++i) {
            const auto& rec = corpus.records[i];
            c.expect(rec.url == entries[i].url, "input order preserved");
            if (!rec.responded()) {
                ++empty;
                continue;
            }
            ++responses;
            // recorded header multiset must equal the configured one exactly
            std::multiset<std::pair<std::string, std::string>> got;
            for (const auto& h : rec.response()->headers) {
                got.insert({h.name.str(), h.value});
            }
            auto path = rec.url.substr(rec.url.rfind('/'));
            if (got != want[path]) {
                c.fail("header multiset mismatch for " + rec.url +
                       " at concurrency " + std::to_string(concurrency));
            }
        }
        c.expect_eq(responses, 8, "responding URLs");
        c.expect_eq(empty, 2, "non-responding URLs");
        // levels run in ascending order, so the server's running peak must
        // stay within the current bound
        if (server.max_in_flight() > concurrency) {
            c.fail("concurrency bound exceeded: peak " +
                   std::to_string(server.max_in_flight()) + " > " +
                   std::to_string(concurrency));
        }
    }
    server.stop();
}

// ---- criterion 7: CLI strict-mode contract ----------------------------------

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    std::string cmd = std::string(SECHEADER_CLI_PATH) + " " + args + " 2>&1";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf;
    while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) {
        r.output.append(buf.data(), n);
    }
    int status = pclose(pipe);
    if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
    return r;
}

void criterion_cli(Criterion& c) {
    auto server = fixture::FixtureServer::from_config_file(
        fs::path(SECHEADER_FIXTURES_DIR) / "listing1.json");
    server.start();
    std::string url = server.base_url() + "/v2/networks/nextbike-leipzig";

    auto strict = run_cli("audit " + url + " --strict --no-store --timeout 10");
    c.expect_eq(strict.exit_code, 1, "strict audit exit code");
    c.expect(strict.output.find("leak: Server nginx/1.15.9 (Ubuntu)") !=
                 std::string::npos,
             "strict audit names the Server leak");

    auto lenient = run_cli("audit " + url + " --no-store --timeout 10");
    c.expect_eq(lenient.exit_code, 0, "non-strict audit exit code");
    c.expect(lenient.output.find("leak: Server nginx/1.15.9 (Ubuntu)") !=
                 std::string::npos,
             "non-strict audit still reports the leak");
    server.stop();

    c.expect_eq(run_cli("audit http://127.0.0.1:1/ --no-store --timeout 2").exit_code,
                3, "unreachable target exit code");
    c.expect_eq(run_cli("report /nonexistent.jsonl --format xml").exit_code, 2,
                "unsupported format exit code");
    c.expect_eq(run_cli("scan /nonexistent.csv").exit_code, 3,
                "missing URL list exit code");
}

// ---- criterion 8: prevalence vs independent recount -------------------------

void criterion_prevalence(Criterion& c) {
    const auto& cat = catalog::Catalog::embedded();
    std::vector<std::string> names;
    for (const auto& e : cat.entries()) names.push_back(e.name.str());
    names.push_back("X-Unlisted-Field");

    std::mt19937 rng(86420);
    std::uniform_int_distribution<int> n_records(0, 50);
    std::uniform_int_distribution<int> n_headers(0, 8);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(names.size()) - 1);
    std::bernoulli_distribution coin(0.5);

    for (int trial = 0; trial < 100 && c.failure.empty(); ++trial) {
        scanner::ScanCorpus corpus;
        int n = n_records(rng);
        for (int i = 0; i < n; ++i) {
            scanner::ProbeRecord rec;
            rec.url = "http://u" + std::to_string(i) + "/";
            rec.group = coin(rng) ? scanner::UrlGroup::Open
                                  : scanner::UrlGroup::Closed;
            if (coin(rng) && coin(rng)) {
                rec.outcome =
                    scanner::NoResponse{scanner::NoResponseReason::Connect};
            } else {
                scanner::Response resp;
                resp.status = 200;
                int hn = n_headers(rng);
                for (int h = 0; h < hn; ++h) {
                    resp.headers.emplace_back(names[pick(rng)], "v");
                }
                rec.outcome = std::move(resp);
            }
            corpus.records.push_back(std::move(rec));
        }

        // independent recount, sharing no code with the report module
        std::map<std::string, long> expected;
        for (const auto& rec : corpus.records) {
            const auto* resp = rec.response();
            if (!resp) continue;
            std::set<std::string> seen;
            for (const auto& h : resp->headers) seen.insert(ascii_lower(h.name.str()));
            for (const auto& s : seen) ++expected[s];
        }

        auto rows = report::prevalence(corpus, cat);
        std::map<std::string, long> got;
        for (const auto& r : rows) got[ascii_lower(r.name)] = r.occurrences;
        if (got != expected) {
            c.fail("prevalence recount mismatch in trial " + std::to_string(trial));
            break;
        }
        long prev = -1;
        for (const auto& r : rows) {
            if (prev >= 0 && r.occurrences > prev) {
                c.fail("prevalence rows not sorted in trial " +
                       std::to_string(trial));
                break;
            }
            prev = r.occurrences;
        }
    }
}

}  // namespace

int main() {
    struct Entry {
        const char* label;
        void (*run)(Criterion&);
    };
    const Entry checks[] = {
        {"catalog tables reproduce", criterion_catalog},
        {"group percentage cells reproduce", criterion_percentages},
        {"non-adoption aggregate is 93%", criterion_non_adoption},
        {"HSTS store matches reference model", criterion_hsts_sequences},
        {"guarded body sink matrices", criterion_guard},
        {"fixture scan fidelity and concurrency", criterion_scan},
        {"CLI strict-mode contract", criterion_cli},
        {"prevalence matches independent recount", criterion_prevalence},
    };

    int failures = 0;
    int number = 0;
    for (const auto& check : checks) {
        Criterion c{++number, ""};
        try {
            check.run(c);
        } catch (const std::exception& e) {
            c.fail(std::string("unhandled exception: ") + e.what());
        }
        if (c.failure.empty()) {
            std::cout << "criterion " << c.number << ": PASS (" << check.label
                      << ")\n";
        } else {
            std::cout << "criterion " << c.number << ": FAIL (" << check.label
                      << ") - " << c.failure << "\n";
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}
