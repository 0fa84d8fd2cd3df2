#include "secheader/url.hpp"

#include <cctype>
#include <charconv>

#include "secheader/header_name.hpp"

namespace secheader {

int Url::effective_port() const {
    if (port) return *port;
    return scheme == "https" ? 443 : 80;
}

std::string Url::to_string() const {
    std::string s = scheme + "://" + host;
    if (port) s += ":" + std::to_string(*port);
    s += path_query;
    return s;
}

std::optional<Url> parse_url(std::string_view s) {
    auto scheme_end = s.find("://");
    if (scheme_end == std::string_view::npos || scheme_end == 0) return std::nullopt;
    Url u;
    u.scheme = ascii_lower(s.substr(0, scheme_end));
    if (u.scheme != "http" && u.scheme != "https") return std::nullopt;

    std::string_view rest = s.substr(scheme_end + 3);
    auto path_start = rest.find_first_of("/?#");
    std::string_view authority = path_start == std::string_view::npos
                                     ? rest
                                     : rest.substr(0, path_start);
    if (authority.empty() || authority.find('@') != std::string_view::npos) {
        return std::nullopt;
    }

    std::string_view host = authority;
    if (!authority.empty() && authority.front() == '[') {
        auto close = authority.find(']');
        if (close == std::string_view::npos) return std::nullopt;
        host = authority.substr(0, close + 1);
        authority = authority.substr(close + 1);
        if (!authority.empty()) {
            if (authority.front() != ':') return std::nullopt;
            authority = authority.substr(1);
        } else {
            authority = {};
        }
    } else {
        auto colon = authority.find(':');
        if (colon != std::string_view::npos) {
            host = authority.substr(0, colon);
            authority = authority.substr(colon + 1);
        } else {
            authority = {};
        }
    }
    if (host.empty()) return std::nullopt;
    u.host = ascii_lower(host);

    if (!authority.empty()) {
        int port = 0;
        auto [p, ec] = std::from_chars(authority.data(),
                                       authority.data() + authority.size(), port);
        if (ec != std::errc{} || p != authority.data() + authority.size() ||
            port <= 0 || port > 65535) {
            return std::nullopt;
        }
        u.port = port;
    }

    u.path_query = path_start == std::string_view::npos
                       ? std::string("/")
                       : std::string(rest.substr(path_start));
    if (u.path_query.empty() || u.path_query.front() == '?' ||
        u.path_query.front() == '#') {
        u.path_query.insert(u.path_query.begin(), '/');
    }
    return u;
}

bool is_ip_literal(std::string_view host) {
    if (host.empty()) return false;
    if (host.front() == '[' && host.back() == ']') return true;  // IPv6
    // IPv4: four dot-separated decimal octets
    int octets = 0;
    std::size_t i = 0;
    while (i <= host.size()) {
        std::size_t j = i;
        int value = 0;
        int digits = 0;
        while (j < host.size() && std::isdigit(static_cast<unsigned char>(host[j]))) {
            value = value * 10 + (host[j] - '0');
            ++digits;
            ++j;
        }
        if (digits == 0 || digits > 3 || value > 255) return false;
        ++octets;
        if (j == host.size()) break;
        if (host[j] != '.') return false;
        i = j + 1;
        if (i == host.size()) return false;  // trailing dot
        continue;
    }
    return octets == 4;
}

}  // namespace secheader
