#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "secheader/catalog.hpp"
#include "secheader/fixture.hpp"
#include "secheader/policy.hpp"
#include "secheader/report.hpp"
#include "secheader/scanner.hpp"
#include "secheader/url.hpp"

namespace {

namespace fs = std::filesystem;
using namespace secheader;

constexpr int kExitOk = 0;
constexpr int kExitPolicyViolation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct CommonProbeFlags {
    double timeout_s = 30.0;
    int concurrency = 8;
    std::string user_agent = "secheader-scanner/0.1.0";
    bool follow_redirects = false;
    int max_redirects = 5;
    bool no_tls_verify = false;
    std::int64_t clock_epoch = -1;

    void attach(CLI::App* app) {
        app->add_option("--timeout", timeout_s, "request timeout in seconds")
            ->check(CLI::PositiveNumber);
        app->add_option("--concurrency", concurrency, "max requests in flight")
            ->check(CLI::PositiveNumber);
        app->add_option("--user-agent", user_agent, "User-Agent request header");
        app->add_flag("--follow-redirects", follow_redirects, "follow HTTP redirects");
        app->add_option("--max-redirects", max_redirects, "redirect limit");
        app->add_flag("--no-tls-verify", no_tls_verify,
                      "disable TLS certificate verification");
        app->add_option("--clock-epoch", clock_epoch,
                        "fixed epoch timestamp for deterministic output");
    }

    scanner::ProbeConfig to_config() const {
        scanner::ProbeConfig cfg;
        cfg.timeout_s = timeout_s;
        cfg.max_concurrency = concurrency;
        cfg.user_agent = user_agent;
        cfg.follow_redirects = follow_redirects;
        cfg.max_redirects = max_redirects;
        cfg.tls_verify = !no_tls_verify;
        if (clock_epoch >= 0) {
            auto epoch = clock_epoch;
            cfg.clock = [epoch] { return epoch; };
        }
        return cfg;
    }
};

fs::path default_hsts_store_path() {
    if (const char* env = std::getenv("SECHEADER_HSTS_STORE")) return fs::path(env);
    if (const char* home = std::getenv("HOME")) {
        return fs::path(home) / ".secheader" / "hsts.tsv";
    }
    return fs::path("hsts.tsv");
}

std::int64_t now_or(std::int64_t epoch) {
    if (epoch >= 0) return epoch;
    return static_cast<std::int64_t>(std::time(nullptr));
}

const catalog::Catalog& catalog_for(const std::string& dir) {
    if (dir.empty()) return catalog::Catalog::embedded();
    static catalog::Catalog loaded = catalog::Catalog::load(dir);
    return loaded;
}

int run_scan(const std::string& urls_path, const std::string& out_path,
             const std::string& dump_dir, const CommonProbeFlags& flags) {
    std::vector<std::string> diagnostics;
    std::vector<scanner::UrlEntry> entries;
    try {
        entries = scanner::load_url_list(urls_path, &diagnostics);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    for (const auto& d : diagnostics) std::cerr << urls_path << ": " << d << "\n";

    auto corpus = scanner::scan(std::move(entries), flags.to_config());

    std::size_t responses = 0;
    for (const auto& r : corpus.records) {
        if (r.responded()) ++responses;
    }

    try {
        if (out_path.empty() || out_path == "-") {
            std::cout << scanner::corpus_to_jsonl(corpus);
        } else {
            std::ofstream out(out_path, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + out_path);
            out << scanner::corpus_to_jsonl(corpus);
            if (!out) throw std::runtime_error("failed writing " + out_path);
        }
        if (!dump_dir.empty()) scanner::dump_per_url(corpus, dump_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }

    std::cout << "scanned " << corpus.records.size() << " urls, " << responses
              << " responses, " << (corpus.records.size() - responses) << " empty\n";
    return kExitOk;
}

int run_audit(const std::string& url, bool strict, const std::string& store_flag,
              bool no_store, const std::string& catalog_dir,
              const CommonProbeFlags& flags) {
    if (!parse_url(url)) {
        std::cerr << "error: not an absolute http/https URL: " << url << "\n";
        return kExitUsage;
    }
    const std::int64_t now = now_or(flags.clock_epoch);

    policy::HstsStore store;
    if (!no_store) {
        fs::path path = store_flag.empty() ? default_hsts_store_path() : fs::path(store_flag);
        try {
            store = policy::HstsStore::load(path);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitIo;
        }
    }

    std::string target = store.rewrite(url, now);
    if (target != url) {
        std::cout << "hsts: rewritten to " << target << "\n";
    }

    auto record = scanner::probe({target, scanner::UrlGroup::Closed}, flags.to_config());
    const auto* resp = record.response();
    if (!resp) {
        std::cerr << "error: no response (" << scanner::to_string(record.no_response()->reason)
                  << ") from " << target << "\n";
        return kExitIo;
    }
    std::cout << "status: " << resp->status << "\n";

    // remember an HSTS policy delivered over a secure transport
    auto parsed = parse_url(target);
    if (parsed && parsed->scheme == "https" && !no_store) {
        for (const auto& h : resp->headers) {
            if (h.name.folded() == "strict-transport-security") {
                auto d = parse::parse_hsts(h.value);
                auto result = store.update(parsed->host, d, true, now);
                if (result == policy::HstsUpdateResult::Applied) {
                    std::cout << "hsts: stored policy for " << parsed->host << "\n";
                } else if (result == policy::HstsUpdateResult::Removed) {
                    std::cout << "hsts: evicted " << parsed->host << "\n";
                }
                break;
            }
        }
    }

    const auto& cat = catalog_for(catalog_dir);
    auto f = report::findings(record, cat);
    std::cout << report::render_findings_text(f);

    if (strict && !f.leaks.empty()) {
        std::cerr << "strict mode: version-leak header field present\n";
        return kExitPolicyViolation;
    }
    return kExitOk;
}

int run_report(const std::string& corpus_path, const std::string& format_name,
               const std::string& out_dir, const std::string& catalog_dir) {
    report::Format format;
    try {
        format = report::format_from_string(format_name);
    } catch (const report::UnsupportedFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    scanner::ScanCorpus corpus;
    try {
        std::ifstream in(corpus_path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open corpus: " + corpus_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        corpus = scanner::corpus_from_jsonl(buf.str());
        if (corpus.records.empty()) {
            throw std::runtime_error("corpus is empty: " + corpus_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }

    const auto& cat = catalog_for(catalog_dir);
    auto prevalence_rows = report::prevalence(corpus, cat);
    auto security_rows = report::security_prevalence(corpus, cat);
    std::vector<report::ResponseFindings> all_findings;
    for (const auto& r : corpus.records) {
        if (r.responded()) all_findings.push_back(report::findings(r, cat));
    }

    const char* ext = format == report::Format::Markdown
                          ? "md"
                          : format == report::Format::Csv ? "csv" : "json";
    try {
        fs::create_directories(out_dir);
        auto write = [&](const std::string& name, const std::string& content) {
            fs::path p = fs::path(out_dir) / name;
            std::ofstream out(p, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write " + p.string());
            out << content;
        };
        write(std::string("prevalence.") + ext,
              report::render_prevalence(prevalence_rows, format));
        write(std::string("security.") + ext,
              report::render_security(security_rows, format));
        write("findings.jsonl", report::render_findings_jsonl(all_findings));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    std::cout << "wrote prevalence." << ext << ", security." << ext
              << ", findings.jsonl to " << out_dir << "\n";
    return kExitOk;
}

int run_hsts(const std::string& action, const std::string& store_flag,
             const std::string& arg, std::int64_t clock_epoch) {
    fs::path path = store_flag.empty() ? default_hsts_store_path() : fs::path(store_flag);
    const std::int64_t now = now_or(clock_epoch);
    try {
        auto store = policy::HstsStore::load(path);
        if (action == "list") {
            for (const auto& [host, e] : store.entries()) {
                std::cout << host << '\t' << e.expires_at << '\t'
                          << (e.include_subdomains ? '1' : '0') << '\n';
            }
        } else if (action == "import") {
            auto n = store.import_preload(arg, now);
            store.save();
            std::cout << "imported " << n << " preload entries\n";
        } else if (action == "purge") {
            store.purge(now);
            store.save();
            std::cout << store.size() << " entries remain\n";
        } else if (action == "rewrite") {
            std::cout << store.rewrite(arg, now) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

int run_fixture(const std::string& config_path, int port, bool tls) {
    try {
        auto owned = fixture::FixtureServer::from_config_file(config_path);
        owned.set_request_logger(
            [](const std::string& line) { std::cout << line << std::endl; });
        int bound = owned.start(port, tls);
        std::cout << "fixture listening on " << owned.base_url()
                  << " (port " << bound << ")" << std::endl;
        // serve until interrupted
        sigset_t set;
        sigemptyset(&set);
        sigaddset(&set, SIGINT);
        sigaddset(&set, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set, nullptr);
        int sig = 0;
        sigwait(&set, &sig);
        owned.stop();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HTTP security-header scanner and client-side policy toolkit"};
    app.require_subcommand(1);

    std::string catalog_dir;
    app.add_option("--catalog-dir", catalog_dir,
                   "directory with catalog.csv and support.csv (default: embedded)");

    // scan
    auto* scan_cmd = app.add_subcommand("scan", "probe a URL list and record headers");
    std::string urls_path, scan_out, dump_dir;
    CommonProbeFlags scan_flags;
    scan_cmd->add_option("urls", urls_path, "CSV file of group,url rows")->required();
    scan_cmd->add_option("--out", scan_out, "corpus JSONL output path (default: stdout)");
    scan_cmd->add_option("--dump-dir", dump_dir, "write one file per URL here");
    scan_flags.attach(scan_cmd);

    // audit
    auto* audit_cmd = app.add_subcommand("audit", "probe one URL and grade its headers");
    std::string audit_url, audit_store;
    bool strict = false, no_store = false;
    CommonProbeFlags audit_flags;
    audit_cmd->add_option("url", audit_url, "URL to audit")->required();
    audit_cmd->add_flag("--strict", strict, "exit 1 when a version-leak field is present");
    audit_cmd->add_option("--store", audit_store, "HSTS store file path");
    audit_cmd->add_flag("--no-store", no_store, "do not read or write the HSTS store");
    audit_flags.attach(audit_cmd);

    // report
    auto* report_cmd = app.add_subcommand("report", "build report tables from a corpus");
    std::string corpus_path, format_name = "markdown", report_out = "reports";
    report_cmd->add_option("corpus", corpus_path, "corpus JSONL file")->required();
    report_cmd->add_option("--format", format_name, "markdown, csv, or json");
    report_cmd->add_option("--out", report_out, "output directory");

    // hsts
    auto* hsts_cmd = app.add_subcommand("hsts", "inspect or maintain the HSTS store");
    std::string hsts_action, hsts_store, hsts_arg;
    std::int64_t hsts_epoch = -1;
    hsts_cmd->add_option("action", hsts_action, "list, import, purge, or rewrite")
        ->required()
        ->check(CLI::IsMember({"list", "import", "purge", "rewrite"}));
    hsts_cmd->add_option("arg", hsts_arg, "import file or URL to rewrite");
    hsts_cmd->add_option("--store", hsts_store, "HSTS store file path");
    hsts_cmd->add_option("--clock-epoch", hsts_epoch, "fixed epoch timestamp");

    // fixture
    auto* fixture_cmd = app.add_subcommand("fixture", "serve canned responses for tests");
    std::string fixture_config;
    int fixture_port = 0;
    bool fixture_tls = false;
    fixture_cmd->add_option("config", fixture_config, "JSON path->response map")->required();
    fixture_cmd->add_option("--port", fixture_port, "listen port (0 = ephemeral)");
    fixture_cmd->add_flag("--tls", fixture_tls, "serve TLS with a self-signed certificate");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (scan_cmd->parsed()) {
            return run_scan(urls_path, scan_out, dump_dir, scan_flags);
        }
        if (audit_cmd->parsed()) {
            return run_audit(audit_url, strict, audit_store, no_store, catalog_dir,
                             audit_flags);
        }
        if (report_cmd->parsed()) {
            return run_report(corpus_path, format_name, report_out, catalog_dir);
        }
        if (hsts_cmd->parsed()) {
            if ((hsts_action == "import" || hsts_action == "rewrite") && hsts_arg.empty()) {
                std::cerr << "error: '" << hsts_action << "' requires an argument\n";
                return kExitUsage;
            }
            return run_hsts(hsts_action, hsts_store, hsts_arg, hsts_epoch);
        }
        if (fixture_cmd->parsed()) {
            return run_fixture(fixture_config, fixture_port, fixture_tls);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitUsage;
}
