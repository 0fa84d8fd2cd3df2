#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace secheader {

/// True for RFC 7230 tchar: the characters allowed in a header field name.
bool is_token_char(char c);

/// True if the whole string is a non-empty RFC 7230 token.
bool is_token(std::string_view s);

/// ASCII-only lowercasing; leaves non-ASCII bytes untouched.
std::string ascii_lower(std::string_view s);

bool ascii_iequals(std::string_view a, std::string_view b);

/// An HTTP header field name. Case-insensitive for comparison, original
/// casing preserved for display.
class HeaderName {
public:
    /// Throws std::invalid_argument unless `name` is a valid token.
    explicit HeaderName(std::string name);

    static std::optional<HeaderName> make(std::string_view name);

    const std::string& str() const { return name_; }
    const std::string& folded() const { return folded_; }

    friend bool operator==(const HeaderName& a, const HeaderName& b) {
        return a.folded_ == b.folded_;
    }
    friend auto operator<=>(const HeaderName& a, const HeaderName& b) {
        return a.folded_ <=> b.folded_;
    }

private:
    std::string name_;
    std::string folded_;
};

struct HeaderNameHash {
    std::size_t operator()(const HeaderName& n) const {
        return std::hash<std::string>{}(n.folded());
    }
};

}  // namespace secheader
