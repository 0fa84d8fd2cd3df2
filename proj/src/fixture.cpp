#include "secheader/fixture.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/ssl.h>
#include <openssl/x509.h>

#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace secheader::fixture {

namespace {

using json = nlohmann::json;

std::string reason_for(int status) {
    switch (status) {
        case 200: return "OK";
        case 204: return "No Content";
        case 301: return "Moved Permanently";
        case 302: return "Found";
        case 304: return "Not Modified";
        case 400: return "Bad Request";
        case 403: return "Forbidden";
        case 404: return "Not Found";
        case 500: return "Internal Server Error";
        default: return "Status";
    }
}

struct EvpKeyDeleter {
    void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};
struct X509Deleter {
    void operator()(X509* c) const { X509_free(c); }
};

// Self-signed certificate, generated fresh per server start. Probes are
// expected to run with verification disabled against this server.
std::pair<EVP_PKEY*, X509*> make_self_signed() {
    EVP_PKEY* key = EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA", 2048UL);
    if (!key) throw std::runtime_error("fixture: key generation failed");
    X509* cert = X509_new();
    if (!cert) {
        EVP_PKEY_free(key);
        throw std::runtime_error("fixture: X509_new failed");
    }
    X509_set_version(cert, 2);
    ASN1_INTEGER_set(X509_get_serialNumber(cert), 1);
    X509_gmtime_adj(X509_getm_notBefore(cert), -3600);
    X509_gmtime_adj(X509_getm_notAfter(cert), 24L * 3600L);
    X509_set_pubkey(cert, key);
    X509_NAME* name = X509_get_subject_name(cert);
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC,
                               reinterpret_cast<const unsigned char*>("localhost"),
                               -1, -1, 0);
    X509_set_issuer_name(cert, name);
    X509_sign(cert, key, EVP_sha256());
    return {key, cert};
}

}  // namespace

struct FixtureServer::TlsState {
    SSL_CTX* ctx = nullptr;
    std::unique_ptr<EVP_PKEY, EvpKeyDeleter> key;
    std::unique_ptr<X509, X509Deleter> cert;

    TlsState() {
        ctx = SSL_CTX_new(TLS_server_method());
        if (!ctx) throw std::runtime_error("fixture: SSL_CTX_new failed");
        auto [k, c] = make_self_signed();
        key.reset(k);
        cert.reset(c);
        if (SSL_CTX_use_certificate(ctx, cert.get()) != 1 ||
            SSL_CTX_use_PrivateKey(ctx, key.get()) != 1) {
            SSL_CTX_free(ctx);
            ctx = nullptr;
            throw std::runtime_error("fixture: certificate setup failed");
        }
    }
    ~TlsState() {
        if (ctx) SSL_CTX_free(ctx);
    }
};

FixtureServer::FixtureServer(std::map<std::string, FixtureResponse> routes)
    : routes_(std::move(routes)) {}

FixtureServer FixtureServer::from_config_json(const std::string& json_text) {
    json j = json::parse(json_text);
    std::map<std::string, FixtureResponse> routes;
    for (const auto& [path, cfg] : j.items()) {
        FixtureResponse r;
        r.status = cfg.value("status", 200);
        r.reason = cfg.value("reason", reason_for(r.status));
        r.body = cfg.value("body", std::string{});
        r.delay_ms = cfg.value("delay_ms", 0);
        if (cfg.contains("headers")) {
            for (const auto& h : cfg.at("headers")) {
                r.headers.emplace_back(h.at(0).get<std::string>(),
                                       h.at(1).get<std::string>());
            }
        }
        routes[path] = std::move(r);
    }
    return FixtureServer(std::move(routes));
}

FixtureServer FixtureServer::from_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open fixture config: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_config_json(buf.str());
}

FixtureServer::~FixtureServer() { stop(); }

int FixtureServer::start(int port, bool tls) {
    tls_ = tls;
    if (tls_) tls_state_ = std::make_shared<TlsState>();

    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("fixture: socket() failed");
    int one = 1;
    setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listen_fd_, 64) != 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
        throw std::runtime_error("fixture: cannot bind port " + std::to_string(port));
    }
    socklen_t len = sizeof(addr);
    getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    running_ = true;
    thread_ = std::thread([this] { serve_loop(); });
    return port_;
}

void FixtureServer::stop() {
    if (!running_.exchange(false)) {
        if (thread_.joinable()) thread_.join();
        return;
    }
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
    if (thread_.joinable()) thread_.join();
    std::lock_guard lock(workers_mutex_);
    for (auto& w : workers_) {
        if (w.joinable()) w.join();
    }
    workers_.clear();
}

std::string FixtureServer::base_url() const {
    return std::string(tls_ ? "https" : "http") + "://127.0.0.1:" +
           std::to_string(port_);
}

void FixtureServer::set_request_logger(std::function<void(const std::string&)> logger) {
    std::lock_guard lock(log_mutex_);
    logger_ = std::move(logger);
}

std::vector<std::string> FixtureServer::request_log() const {
    std::lock_guard lock(log_mutex_);
    return request_log_;
}

void FixtureServer::serve_loop() {
    while (running_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_) break;
            continue;
        }
        std::lock_guard lock(workers_mutex_);
        workers_.emplace_back([this, fd] { handle_connection(fd); });
    }
}

void FixtureServer::handle_connection(int fd) {
    int count = ++in_flight_;
    int expected = max_in_flight_.load();
    while (count > expected &&
           !max_in_flight_.compare_exchange_weak(expected, count)) {
    }
    ++request_count_;

    SSL* ssl = nullptr;
    auto read_some = [&](char* buf, int n) -> int {
        return ssl ? SSL_read(ssl, buf, n)
                   : static_cast<int>(::recv(fd, buf, static_cast<size_t>(n), 0));
    };
    auto write_all = [&](std::string_view data) {
        std::size_t off = 0;
        while (off < data.size()) {
            int n = ssl ? SSL_write(ssl, data.data() + off,
                                    static_cast<int>(data.size() - off))
                        : static_cast<int>(::send(fd, data.data() + off,
                                                  data.size() - off, MSG_NOSIGNAL));
            if (n <= 0) break;
            off += static_cast<std::size_t>(n);
        }
    };

    if (tls_) {
        ssl = SSL_new(tls_state_->ctx);
        SSL_set_fd(ssl, fd);
        if (SSL_accept(ssl) != 1) {
            SSL_free(ssl);
            ::close(fd);
            --in_flight_;
            return;
        }
    }

    // read until end of request headers
    std::string request;
    char buf[4096];
    while (request.find("\r\n\r\n") == std::string::npos &&
           request.size() < 65536) {
        int n = read_some(buf, sizeof(buf));
        if (n <= 0) break;
        request.append(buf, static_cast<std::size_t>(n));
    }

    std::string request_line = request.substr(0, request.find("\r\n"));
    {
        std::lock_guard lock(log_mutex_);
        request_log_.push_back(request_line);
        if (logger_) logger_(request_line);
    }

    std::string target;
    {
        auto first_sp = request_line.find(' ');
        auto second_sp = first_sp == std::string::npos
                             ? std::string::npos
                             : request_line.find(' ', first_sp + 1);
        if (second_sp != std::string::npos) {
            target = request_line.substr(first_sp + 1, second_sp - first_sp - 1);
        }
    }

    const FixtureResponse* route = nullptr;
    auto it = routes_.find(target);
    if (it != routes_.end()) route = &it->second;

    FixtureResponse not_found;
    if (!route) {
        not_found.status = 404;
        not_found.reason = "Not Found";
        not_found.headers = {{"Server", "fixture"}};
        not_found.body = "not found\n";
        route = &not_found;
    }

    if (route->delay_ms > 0 && running_) {
        std::this_thread::sleep_for(std::chrono::milliseconds(route->delay_ms));
    }

    // the configured headers go out verbatim and nothing else; the body is
    // close-delimited so the recorded header multiset equals the config
    std::string response = "HTTP/1.1 " + std::to_string(route->status) + " " +
                           route->reason + "\r\n";
    for (const auto& [name, value] : route->headers) {
        response += name + ": " + value + "\r\n";
    }
    response += "\r\n";
    response += route->body;
    write_all(response);

    if (ssl) {
        SSL_shutdown(ssl);
        SSL_free(ssl);
    }
    ::shutdown(fd, SHUT_RDWR);
    ::close(fd);
    --in_flight_;
}

}  // namespace secheader::fixture
