#include "secheader/report.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <map>
#include <random>
#include <set>

using namespace secheader;
using namespace secheader::report;
using scanner::NoResponse;
using scanner::ProbeRecord;
using scanner::Response;
using scanner::ScanCorpus;
using scanner::UrlGroup;

namespace {

ProbeRecord respond(std::string url, UrlGroup group,
                    std::vector<parse::RawHeader> headers) {
    ProbeRecord r;
    r.url = std::move(url);
    r.group = group;
    Response resp;
    resp.status = 200;
    resp.headers = std::move(headers);
    r.outcome = std::move(resp);
    return r;
}

ProbeRecord unreachable(std::string url, UrlGroup group) {
    ProbeRecord r;
    r.url = std::move(url);
    r.group = group;
    r.outcome = NoResponse{scanner::NoResponseReason::Connect};
    return r;
}

TEST(PctTest, RoundHalfUp) {
    EXPECT_EQ(pct_round_half_up(1, 2), 50);
    EXPECT_EQ(pct_round_half_up(1, 3), 33);
    EXPECT_EQ(pct_round_half_up(2, 3), 67);
    EXPECT_EQ(pct_round_half_up(1, 200), 1);   // 0.5 rounds up
    EXPECT_EQ(pct_round_half_up(1, 201), 0);   // just below .5
    EXPECT_EQ(pct_round_half_up(3, 200), 2);   // 1.5 rounds up
    EXPECT_EQ(pct_round_half_up(0, 10), 0);
    EXPECT_EQ(pct_round_half_up(10, 10), 100);
    EXPECT_EQ(pct_round_half_up(5, 0), 0);
}

TEST(CatalogRowsTest, GroupPercentagesReproduce) {
    auto rows = security_rows_from_catalog();
    ASSERT_EQ(rows.size(), 16u);
    std::map<std::string, SecurityPrevalenceRow> by_name;
    for (const auto& r : rows) by_name[ascii_lower(r.name)] = r;

    // spot checks against the embedded counts
    const auto& server = by_name.at("server");
    EXPECT_EQ(server.counts.total, 6978);
    EXPECT_EQ(server.counts.open, 909);
    EXPECT_EQ(server.counts.closed, 6069);
    EXPECT_EQ(server.open_pct, 74);
    EXPECT_EQ(server.closed_pct, 72);
    EXPECT_EQ(server.total_pct, 70);  // carried verbatim

    // every row's group percentages follow from its counts
    for (const auto& r : rows) {
        EXPECT_EQ(r.open_pct, pct_round_half_up(r.counts.open, catalog::kOpenUrlTotal))
            << r.name;
        EXPECT_EQ(r.closed_pct,
                  pct_round_half_up(r.counts.closed, catalog::kClosedUrlTotal))
            << r.name;
    }
}

TEST(CatalogRowsTest, NonAdoptionAverage) {
    auto rows = security_rows_from_catalog();
    EXPECT_EQ(non_adoption_average(rows), 93);
}

TEST(CatalogRowsTest, NonAdoptionRequiresAllMitigations) {
    auto rows = security_rows_from_catalog();
    std::erase_if(rows, [](const auto& r) {
        return ascii_iequals(r.name, "X-Frame-Options");
    });
    EXPECT_THROW(non_adoption_average(rows), ReportError);
}

TEST(PrevalenceTest, CountsOncePerResponse) {
    ScanCorpus corpus;
    corpus.records.push_back(respond("http://a/", UrlGroup::Open,
                                     {{"Server", "nginx"},
                                      {"server", "apache"},  // same field twice
                                      {"Date", "now"}}));
    corpus.records.push_back(
        respond("http://b/", UrlGroup::Closed, {{"SERVER", "iis"}}));
    corpus.records.push_back(unreachable("http://c/", UrlGroup::Closed));

    auto rows = prevalence(corpus);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].name, "Server");  // first-seen casing
    EXPECT_EQ(rows[0].occurrences, 2);  // once per response, case-folded
    EXPECT_EQ(rows[0].rank, 1);
    ASSERT_TRUE(rows[0].purpose);
    EXPECT_EQ(*rows[0].purpose, catalog::Purpose::Advertisement);
    EXPECT_EQ(rows[1].name, "Date");
    EXPECT_EQ(rows[1].occurrences, 1);
    EXPECT_EQ(rows[1].rank, 2);
}

TEST(PrevalenceTest, DenseRankingWithTies) {
    ScanCorpus corpus;
    corpus.records.push_back(respond("http://a/", UrlGroup::Open,
                                     {{"Alpha", "1"}, {"Beta", "1"}, {"Gamma", "1"}}));
    corpus.records.push_back(
        respond("http://b/", UrlGroup::Open, {{"Alpha", "1"}, {"Beta", "1"}}));
    auto rows = prevalence(corpus);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].rank, 1);
    EXPECT_EQ(rows[1].rank, 1);  // tie shares the rank
    EXPECT_EQ(rows[0].name, "Alpha");  // tie order: folded name
    EXPECT_EQ(rows[1].name, "Beta");
    EXPECT_EQ(rows[2].rank, 2);  // dense: next rank, no gap
    EXPECT_EQ(rows[2].name, "Gamma");
}

TEST(SecurityPrevalenceTest, DenominatorsIncludeNoResponse) {
    ScanCorpus corpus;
    corpus.records.push_back(
        respond("http://a/", UrlGroup::Open, {{"Server", "nginx"}}));
    corpus.records.push_back(unreachable("http://b/", UrlGroup::Open));
    corpus.records.push_back(
        respond("http://c/", UrlGroup::Closed, {{"Server", "nginx"}}));
    corpus.records.push_back(unreachable("http://d/", UrlGroup::Closed));

    auto rows = security_prevalence(corpus);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].name, "Server");
    EXPECT_EQ(rows[0].counts.total, 2);
    EXPECT_EQ(rows[0].counts.open, 1);
    EXPECT_EQ(rows[0].counts.closed, 1);
    EXPECT_EQ(rows[0].open_pct, 50);    // 1 of 2 open URLs, not 1 of 1
    EXPECT_EQ(rows[0].closed_pct, 50);
    EXPECT_EQ(rows[0].total_pct, 50);
}

TEST(FindingsTest, GradeRubric) {
    const auto& cat = catalog::Catalog::embedded();
    auto mitigations = cat.mitigation_entries();
    ASSERT_EQ(mitigations.size(), 12u);

    auto with_n_mitigations = [&](std::size_t n, bool leak) {
        std::vector<parse::RawHeader> headers;
        for (std::size_t i = 0; i < n; ++i) {
            headers.emplace_back(mitigations[i].name, "x");
        }
        if (leak) headers.emplace_back(HeaderName("Server"), "nginx/1.0");
        return respond("http://g/", UrlGroup::Open, std::move(headers));
    };

    // missing <= 2 -> A; each further 2 missing -> one letter
    EXPECT_EQ(findings(with_n_mitigations(12, false)).grade, 'A');
    EXPECT_EQ(findings(with_n_mitigations(10, false)).grade, 'A');
    EXPECT_EQ(findings(with_n_mitigations(9, false)).grade, 'B');
    EXPECT_EQ(findings(with_n_mitigations(8, false)).grade, 'B');
    EXPECT_EQ(findings(with_n_mitigations(7, false)).grade, 'C');
    EXPECT_EQ(findings(with_n_mitigations(6, false)).grade, 'C');
    EXPECT_EQ(findings(with_n_mitigations(5, false)).grade, 'D');
    EXPECT_EQ(findings(with_n_mitigations(3, false)).grade, 'E');
    EXPECT_EQ(findings(with_n_mitigations(1, false)).grade, 'F');
    EXPECT_EQ(findings(with_n_mitigations(0, false)).grade, 'F');

    // any version leak costs one more letter; floor F
    EXPECT_EQ(findings(with_n_mitigations(12, true)).grade, 'B');
    EXPECT_EQ(findings(with_n_mitigations(9, true)).grade, 'C');
    EXPECT_EQ(findings(with_n_mitigations(0, true)).grade, 'F');
}

TEST(FindingsTest, ListsLeaksAndMitigations) {
    auto rec = respond("http://f/", UrlGroup::Open,
                       {{"Server", "nginx/1.15.9 (Ubuntu)"},
                        {"X-Content-Type-Options", "nosniff"}});
    auto f = findings(rec);
    ASSERT_EQ(f.leaks.size(), 1u);
    EXPECT_EQ(f.leaks[0].product, "nginx");
    EXPECT_EQ(*f.leaks[0].version, "1.15.9");
    EXPECT_TRUE(f.mitigations_present.contains("x-content-type-options"));
    EXPECT_EQ(f.mitigations_present.size(), 1u);
    EXPECT_EQ(f.mitigations_absent.size(), 11u);
}

TEST(FindingsTest, NoResponseThrows) {
    EXPECT_THROW(findings(unreachable("http://x/", UrlGroup::Open)), ReportError);
}

TEST(FormatTest, FromString) {
    EXPECT_EQ(format_from_string("markdown"), Format::Markdown);
    EXPECT_EQ(format_from_string("md"), Format::Markdown);
    EXPECT_EQ(format_from_string("CSV"), Format::Csv);
    EXPECT_EQ(format_from_string("json"), Format::Json);
    EXPECT_THROW(format_from_string("xml"), UnsupportedFormatError);
    EXPECT_THROW(format_from_string(""), UnsupportedFormatError);
}

TEST(RenderTest, Deterministic) {
    auto rows = security_rows_from_catalog();
    for (Format f : {Format::Markdown, Format::Csv, Format::Json}) {
        EXPECT_EQ(render_security(rows, f), render_security(rows, f));
    }
    EXPECT_NE(render_security(rows, Format::Csv).find(
                  "name,threat,total,open,closed,total_pct,open_pct,closed_pct"),
              std::string::npos);
    EXPECT_NE(render_security(rows, Format::Markdown).find("| Server |"),
              std::string::npos);
}

TEST(RenderTest, FindingsText) {
    auto rec = respond("http://f/", UrlGroup::Open,
                       {{"Server", "nginx/1.15.9 (Ubuntu)"}});
    auto text = render_findings_text(findings(rec));
    EXPECT_NE(text.find("leak: Server nginx/1.15.9 (Ubuntu)"), std::string::npos);
    EXPECT_NE(text.find("grade: "), std::string::npos);
}

// independent recount: brute force over raw records, no shared code with
// the report implementation
TEST(PrevalenceTest, RandomCorporaMatchBruteForceRecount) {
    std::mt19937 rng(424242);
    const std::vector<std::string> pool = {
        "Server",       "Date",          "X-Frame-Options", "Content-Type",
        "x-powered-by", "Cache-Control", "STRICT-TRANSPORT-SECURITY"};
    std::uniform_int_distribution<int> n_records(0, 30);
    std::uniform_int_distribution<int> n_headers(0, 6);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
    std::bernoulli_distribution coin(0.5);

    for (int trial = 0; trial < 60; ++trial) {
        ScanCorpus corpus;
        int n = n_records(rng);
        for (int i = 0; i < n; ++i) {
            auto group = coin(rng) ? UrlGroup::Open : UrlGroup::Closed;
            std::string url = "http://u" + std::to_string(i) + "/";
            if (coin(rng) && coin(rng)) {
                corpus.records.push_back(unreachable(url, group));
                continue;
            }
            std::vector<parse::RawHeader> headers;
            int hn = n_headers(rng);
            for (int h = 0; h < hn; ++h) headers.emplace_back(pool[pick(rng)], "v");
            corpus.records.push_back(respond(url, group, std::move(headers)));
        }

        std::map<std::string, long> expected;
        for (const auto& r : corpus.records) {
            const auto* resp = r.response();
            if (!resp) continue;
            std::set<std::string> seen;
            for (const auto& h : resp->headers) seen.insert(h.name.folded());
            for (const auto& s : seen) ++expected[s];
        }

        auto rows = prevalence(corpus);
        std::map<std::string, long> got;
        for (const auto& r : rows) got[ascii_lower(r.name)] = r.occurrences;
        EXPECT_EQ(got, expected) << "trial " << trial;

        long prev = std::numeric_limits<long>::max();
        int prev_rank = 0;
        for (const auto& r : rows) {
            EXPECT_LE(r.occurrences, prev);
            EXPECT_EQ(r.rank, r.occurrences == prev ? prev_rank : prev_rank + 1);
            if (r.occurrences != prev) ++prev_rank;
            prev = r.occurrences;
        }
    }
}

}  // namespace
