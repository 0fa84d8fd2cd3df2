#include "secheader/scanner.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "secheader/fixture.hpp"

using namespace secheader;
using namespace secheader::scanner;
using fixture::FixtureResponse;
using fixture::FixtureServer;

namespace {

namespace fs = std::filesystem;

ProbeConfig fast_config() {
    ProbeConfig cfg;
    cfg.timeout_s = 5.0;
    cfg.tls_verify = false;  // fixture cert is self-signed
    return cfg;
}

fs::path write_temp(const std::string& name, const std::string& content) {
    auto path = fs::temp_directory_path() /
                ("secheader-scan-" + std::to_string(::getpid()) + "-" + name);
    std::ofstream out(path);
    out << content;
    return path;
}

TEST(UrlListTest, ParsesGroupsSkipsBadRows) {
    auto path = write_temp("urls.csv",
                           "# comment\n"
                           "open,http://a.example/\n"
                           "closed,https://b.example/x\n"
                           "\n"
                           "bogus-group,http://c.example/\n"
                           "closed,not-a-url\n"
                           "closed\n"
                           "open,http://d.example/\n");
    std::vector<std::string> diagnostics;
    auto entries = load_url_list(path, &diagnostics);
    fs::remove(path);

    ASSERT_EQ(entries.size(), 3u);
    EXPECT_EQ(entries[0], (UrlEntry{"http://a.example/", UrlGroup::Open}));
    EXPECT_EQ(entries[1], (UrlEntry{"https://b.example/x", UrlGroup::Closed}));
    EXPECT_EQ(entries[2], (UrlEntry{"http://d.example/", UrlGroup::Open}));
    ASSERT_EQ(diagnostics.size(), 3u);
    EXPECT_NE(diagnostics[0].find("line 5"), std::string::npos);
    EXPECT_NE(diagnostics[1].find("line 6"), std::string::npos);
    EXPECT_NE(diagnostics[2].find("line 7"), std::string::npos);
}

TEST(UrlListTest, MissingFileThrows) {
    EXPECT_THROW(load_url_list("/nonexistent/urls.csv"), UrlListError);
}

TEST(UrlListTest, NoValidRowsThrows) {
    auto path = write_temp("empty.csv", "# nothing here\n");
    EXPECT_THROW(load_url_list(path), UrlListError);
    fs::remove(path);
}

TEST(UrlListTest, Dedupe) {
    std::vector<UrlEntry> entries = {
        {"http://a.example/", UrlGroup::Open},
        {"http://a.example/", UrlGroup::Closed},  // exact duplicate URL
        {"http://a.example/x", UrlGroup::Open},   // different path stays
        {"http://a.example/?q=1", UrlGroup::Open},
    };
    auto deduped = dedupe_urls(entries);
    ASSERT_EQ(deduped.size(), 3u);
    EXPECT_EQ(deduped[0].group, UrlGroup::Open);  // first occurrence kept
}

TEST(ProbeTest, RecordsHeadersInOrder) {
    FixtureServer server(
        {{"/probe",
          {200,
           "OK",
           {{"Server", "nginx/1.15.9 (Ubuntu)"},
            {"X-Frame-Options", "DENY"},
            {"Set-Cookie", "a=1"},
            {"Set-Cookie", "b=2"}},
           "hello",
           0}}});
    server.start();
    auto record = probe({server.base_url() + "/probe", UrlGroup::Open},
                        fast_config());
    server.stop();

    ASSERT_TRUE(record.responded());
    const auto& resp = *record.response();
    EXPECT_EQ(resp.status, 200);
    ASSERT_EQ(resp.headers.size(), 4u);
    EXPECT_EQ(resp.headers[0].name.str(), "Server");
    EXPECT_EQ(resp.headers[0].value, "nginx/1.15.9 (Ubuntu)");
    EXPECT_EQ(resp.headers[1].name.str(), "X-Frame-Options");
    EXPECT_EQ(resp.headers[2].value, "a=1");
    EXPECT_EQ(resp.headers[3].value, "b=2");
    EXPECT_GE(resp.latency_ms, 0);
}

TEST(ProbeTest, ConnectRefused) {
    // nothing listens on port 1
    auto record = probe({"http://127.0.0.1:1/", UrlGroup::Closed}, fast_config());
    ASSERT_FALSE(record.responded());
    EXPECT_EQ(record.no_response()->reason, NoResponseReason::Connect);
}

TEST(ProbeTest, DnsFailure) {
    auto record = probe({"http://does-not-exist.invalid/", UrlGroup::Closed},
                        fast_config());
    ASSERT_FALSE(record.responded());
    EXPECT_EQ(record.no_response()->reason, NoResponseReason::Dns);
}

TEST(ProbeTest, Timeout) {
    FixtureServer server({{"/slow", {200, "OK", {}, "x", 3000}}});
    server.start();
    auto cfg = fast_config();
    cfg.timeout_s = 1.0;
    auto record = probe({server.base_url() + "/slow", UrlGroup::Open}, cfg);
    server.stop();
    ASSERT_FALSE(record.responded());
    EXPECT_EQ(record.no_response()->reason, NoResponseReason::Timeout);
}

TEST(ProbeTest, TlsFailure) {
    // certificate verification against the self-signed fixture cert fails
    FixtureServer server({{"/", {200, "OK", {}, "x", 0}}});
    server.start(0, /*tls=*/true);
    auto cfg = fast_config();
    cfg.tls_verify = true;
    auto record = probe({server.base_url() + "/", UrlGroup::Closed}, cfg);
    server.stop();
    ASSERT_FALSE(record.responded());
    EXPECT_EQ(record.no_response()->reason, NoResponseReason::Tls);
}

TEST(ProbeTest, TlsFixtureWorksWithVerificationOff) {
    FixtureServer server({{"/tls", {200, "OK", {{"Server", "secure"}}, "x", 0}}});
    server.start(0, /*tls=*/true);
    auto record = probe({server.base_url() + "/tls", UrlGroup::Open}, fast_config());
    server.stop();
    ASSERT_TRUE(record.responded());
    ASSERT_EQ(record.response()->headers.size(), 1u);
    EXPECT_EQ(record.response()->headers[0].value, "secure");
}

TEST(ScanTest, PreservesInputOrderAndSurvivesFailures) {
    FixtureServer server({{"/a", {200, "OK", {{"X-A", "1"}}, "", 0}},
                          {"/b", {200, "OK", {{"X-B", "1"}}, "", 0}}});
    server.start();
    std::vector<UrlEntry> entries = {
        {server.base_url() + "/a", UrlGroup::Open},
        {"http://127.0.0.1:1/", UrlGroup::Closed},
        {server.base_url() + "/b", UrlGroup::Closed},
    };
    auto corpus = scan(entries, fast_config());
    server.stop();

    ASSERT_EQ(corpus.records.size(), 3u);
    EXPECT_EQ(corpus.records[0].url, entries[0].url);
    EXPECT_TRUE(corpus.records[0].responded());
    EXPECT_FALSE(corpus.records[1].responded());
    EXPECT_TRUE(corpus.records[2].responded());
    EXPECT_EQ(corpus.records[2].group, UrlGroup::Closed);
    EXPECT_LE(corpus.started_at, corpus.finished_at);
}

TEST(ScanTest, ConcurrencyIsBounded) {
    FixtureServer server({{"/w", {200, "OK", {}, "", 150}}});
    server.start();
    std::vector<UrlEntry> entries;
    for (int i = 0; i < 8; ++i) {
        entries.push_back({server.base_url() + "/w?i=" + std::to_string(i),
                           UrlGroup::Open});
    }
    auto cfg = fast_config();
    cfg.max_concurrency = 2;
    scan(entries, cfg);
    int peak = server.max_in_flight();
    server.stop();
    EXPECT_LE(peak, 2);
    EXPECT_GE(peak, 1);
}

TEST(CorpusTest, JsonlRoundTrip) {
    FixtureServer server(
        {{"/r", {200, "OK", {{"Server", "s/1"}, {"X-Frame-Options", "DENY"}}, "", 0}}});
    server.start();
    std::vector<UrlEntry> entries = {
        {server.base_url() + "/r", UrlGroup::Open},
        {"http://127.0.0.1:1/", UrlGroup::Closed},
    };
    auto corpus = scan(entries, fast_config());
    server.stop();

    auto text = corpus_to_jsonl(corpus);
    auto back = corpus_from_jsonl(text);
    ASSERT_EQ(back.records.size(), corpus.records.size());
    for (std::size_t i = 0; i < back.records.size(); ++i) {
        const auto& a = corpus.records[i];
        const auto& b = back.records[i];
        EXPECT_EQ(a.url, b.url);
        EXPECT_EQ(a.group, b.group);
        EXPECT_EQ(a.responded(), b.responded());
        if (a.responded()) {
            EXPECT_EQ(a.response()->status, b.response()->status);
            ASSERT_EQ(a.response()->headers.size(), b.response()->headers.size());
            for (std::size_t h = 0; h < a.response()->headers.size(); ++h) {
                EXPECT_EQ(a.response()->headers[h].name, b.response()->headers[h].name);
                EXPECT_EQ(a.response()->headers[h].value,
                          b.response()->headers[h].value);
            }
        } else {
            EXPECT_EQ(a.no_response()->reason, b.no_response()->reason);
        }
    }
}

TEST(CorpusTest, PerUrlDumpUsesDigestNames) {
    FixtureServer server({{"/d", {200, "OK", {{"X-D", "1"}}, "", 0}}});
    server.start();
    std::string good = server.base_url() + "/d";
    auto corpus = scan({{good, UrlGroup::Open},
                        {"http://127.0.0.1:1/", UrlGroup::Closed}},
                       fast_config());
    server.stop();

    auto dir = fs::temp_directory_path() /
               ("secheader-dump-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    dump_per_url(corpus, dir);

    auto good_file = dir / url_digest_hex(good);
    auto bad_file = dir / url_digest_hex("http://127.0.0.1:1/");
    ASSERT_TRUE(fs::exists(good_file));
    ASSERT_TRUE(fs::exists(bad_file));
    EXPECT_GT(fs::file_size(good_file), 0u);
    EXPECT_EQ(fs::file_size(bad_file), 0u);  // empty file marks a non-responder

    std::ifstream in(good_file);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    EXPECT_NE(content.find("X-D: 1"), std::string::npos);
    fs::remove_all(dir);
}

TEST(CorpusTest, DigestIsHexSha256) {
    EXPECT_EQ(url_digest_hex("abc"),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(FixtureConfigTest, LoadsListingFile) {
    auto path = fs::path(SECHEADER_FIXTURES_DIR) / "listing1.json";
    auto server = FixtureServer::from_config_file(path);
    server.start();
    auto record = probe({server.base_url() + "/v2/networks/nextbike-leipzig",
                         UrlGroup::Open},
                        fast_config());
    server.stop();
    ASSERT_TRUE(record.responded());
    const auto& headers = record.response()->headers;
    ASSERT_EQ(headers.size(), 10u);
    EXPECT_EQ(headers[2].name.str(), "Server");
    EXPECT_EQ(headers[2].value, "nginx/1.15.9 (Ubuntu)");
    EXPECT_EQ(headers[4].name.str(), "Access-Control-Allow-Origin");
    EXPECT_EQ(headers[4].value, "*");
    EXPECT_EQ(headers[1].value, "5613");
}

TEST(FixtureConfigTest, UnknownPathGets404) {
    FixtureServer server({{"/known", {200, "OK", {}, "", 0}}});
    server.start();
    auto record = probe({server.base_url() + "/other", UrlGroup::Open},
                        fast_config());
    server.stop();
    ASSERT_TRUE(record.responded());
    EXPECT_EQ(record.response()->status, 404);
}

}  // namespace
