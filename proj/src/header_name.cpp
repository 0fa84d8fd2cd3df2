#include "secheader/header_name.hpp"

#include <cctype>

namespace secheader {

bool is_token_char(char c) {
    if (std::isalnum(static_cast<unsigned char>(c))) return true;
    switch (c) {
        case '!': case '#': case '$': case '%': case '&': case '\'':
        case '*': case '+': case '-': case '.': case '^': case '_':
        case '`': case '|': case '~':
            return true;
        default:
            return false;
    }
}

bool is_token(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!is_token_char(c)) return false;
    }
    return true;
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
    }
    return out;
}

bool ascii_iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        char x = a[i], y = b[i];
        if (x >= 'A' && x <= 'Z') x += 'a' - 'A';
        if (y >= 'A' && y <= 'Z') y += 'a' - 'A';
        if (x != y) return false;
    }
    return true;
}

HeaderName::HeaderName(std::string name) : name_(std::move(name)) {
    if (!is_token(name_)) {
        throw std::invalid_argument("invalid header field name: '" + name_ + "'");
    }
    folded_ = ascii_lower(name_);
}

std::optional<HeaderName> HeaderName::make(std::string_view name) {
    if (!is_token(name)) return std::nullopt;
    return HeaderName(std::string(name));
}

}  // namespace secheader
