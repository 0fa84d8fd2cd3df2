#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace secheader::fixture {

struct FixtureResponse {
    int status = 200;
    std::string reason = "OK";
    // Sent verbatim, nothing added, so probes record exactly this multiset.
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
    int delay_ms = 0;
};

/// Canned-response HTTP server for tests and the `fixture` subcommand.
/// Speaks just enough HTTP/1.1 to serve one response per connection
/// (close-delimited bodies, no connection reuse). Responses are written
/// byte-exactly from the configuration. Optionally serves TLS with a
/// self-signed certificate generated at startup.
class FixtureServer {
public:
    FixtureServer() = default;
    explicit FixtureServer(std::map<std::string, FixtureResponse> routes);

    /// Config file: JSON object mapping request path to
    /// {status, headers: [[name, value]...], body, delay_ms}.
    static FixtureServer from_config_file(const std::filesystem::path& path);
    static FixtureServer from_config_json(const std::string& json_text);

    ~FixtureServer();
    FixtureServer(const FixtureServer&) = delete;
    FixtureServer& operator=(const FixtureServer&) = delete;

    /// Binds and serves on a background thread; returns the bound port
    /// (ephemeral when `port` is 0). Throws std::runtime_error on bind
    /// failure.
    int start(int port = 0, bool tls = false);
    void stop();

    int port() const { return port_; }
    std::string base_url() const;

    /// Peak simultaneous in-flight requests observed since start.
    int max_in_flight() const { return max_in_flight_.load(); }
    std::size_t request_count() const { return request_count_.load(); }
    std::vector<std::string> request_log() const;

    void set_request_logger(std::function<void(const std::string&)> logger);

private:
    void serve_loop();
    void handle_connection(int fd);

    std::map<std::string, FixtureResponse> routes_;
    int listen_fd_ = -1;
    int port_ = 0;
    bool tls_ = false;
    std::thread thread_;
    std::atomic<bool> running_{false};
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
    std::atomic<std::size_t> request_count_{0};
    mutable std::mutex log_mutex_;
    std::vector<std::string> request_log_;
    std::function<void(const std::string&)> logger_;
    struct TlsState;
    std::shared_ptr<TlsState> tls_state_;
    std::vector<std::thread> workers_;
    std::mutex workers_mutex_;
};

}  // namespace secheader::fixture
