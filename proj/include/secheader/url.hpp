#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace secheader {

/// Minimal split of an absolute http/https URL; enough for host matching
/// and scheme rewriting, not a general-purpose URL parser.
struct Url {
    std::string scheme;              // folded
    std::string host;                // folded
    std::optional<int> port;         // explicit port only
    std::string path_query;          // "/path?query", "/" if absent

    int effective_port() const;
    std::string to_string() const;
};

std::optional<Url> parse_url(std::string_view s);

/// IPv4 dotted-quad or bracketed IPv6 literal.
bool is_ip_literal(std::string_view host);

}  // namespace secheader
