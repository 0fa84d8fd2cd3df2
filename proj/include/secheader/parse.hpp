#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "secheader/header_name.hpp"

namespace secheader::parse {

/// One header field as received on the wire. Invalid value bytes are kept
/// verbatim for diagnostics.
struct RawHeader {
    HeaderName name;
    std::string value;

    RawHeader(std::string n, std::string v)
        : name(std::move(n)), value(std::move(v)) {}
    RawHeader(HeaderName n, std::string v)
        : name(std::move(n)), value(std::move(v)) {}
};

struct ParseIssue {
    enum class Kind { Malformed, UnknownToken, EmptyValue, DuplicateDirective };
    HeaderName field;
    Kind kind;
    std::string detail;
};

std::string_view to_string(ParseIssue::Kind k);

inline constexpr long kMaxHstsAge = 2147483647L;  // 2^31 - 1 cap

struct HstsDirectives {
    long max_age = 0;
    bool include_subdomains = false;
    bool preload = false;

    bool operator==(const HstsDirectives&) const = default;
};

/// Which interpreters may consume the payload (X-Allowed-Interpretation).
struct InterpretationPolicy {
    enum class Kind { Any, NoneAllowed, Allow };
    Kind kind = Kind::Any;
    std::set<std::string> languages;  // case-folded, only for Allow

    bool operator==(const InterpretationPolicy&) const = default;
};

/// Whether the payload may be stored (X-Allowed-Persistence).
struct PersistencePolicy {
    enum class Kind { Any, OnlyHashed, NonePersist };
    Kind kind = Kind::Any;

    bool operator==(const PersistencePolicy&) const = default;
};

struct FrameOptions {
    enum class Kind { Deny, SameOrigin, AllowFrom };
    Kind kind = Kind::Deny;
    std::string origin;  // only for AllowFrom

    bool operator==(const FrameOptions&) const = default;
};

struct VersionLeak {
    HeaderName header;
    std::string product;
    std::optional<std::string> version;
    std::optional<std::string> comment;

    bool operator==(const VersionLeak&) const = default;
};

struct ContentTypeOptions {
    bool nosniff = false;
    bool operator==(const ContentTypeOptions&) const = default;
};

struct XssProtection {
    enum class Mode { Off, On, Block };
    Mode mode = Mode::Off;
    bool operator==(const XssProtection&) const = default;
};

struct CorsOrigin {
    enum class Kind { Wildcard, Null, Origin };
    Kind kind = Kind::Wildcard;
    std::string origin;  // only for Origin
    bool operator==(const CorsOrigin&) const = default;
};

struct CorsCredentials {
    bool allow = false;
    bool operator==(const CorsCredentials&) const = default;
};

struct ExposedHeaders {
    std::vector<std::string> names;
    bool operator==(const ExposedHeaders&) const = default;
};

struct CspDirective {
    std::string name;  // folded
    std::vector<std::string> sources;  // raw source expressions
    bool operator==(const CspDirective&) const = default;
};

/// Directive-level CSP view: names plus raw source lists, order preserved.
struct CspPolicy {
    std::vector<CspDirective> directives;
    bool operator==(const CspPolicy&) const = default;
};

struct ExpectCt {
    long max_age = 0;
    bool enforce = false;
    std::optional<std::string> report_uri;
    bool operator==(const ExpectCt&) const = default;
};

enum class ReferrerPolicyToken {
    NoReferrer,
    NoReferrerWhenDowngrade,
    Origin,
    OriginWhenCrossOrigin,
    SameOrigin,
    StrictOrigin,
    StrictOriginWhenCrossOrigin,
    UnsafeUrl,
};

std::string_view to_string(ReferrerPolicyToken t);
std::optional<ReferrerPolicyToken> referrer_policy_from_string(std::string_view s);

struct ReferrerPolicy {
    ReferrerPolicyToken token = ReferrerPolicyToken::NoReferrer;
    bool operator==(const ReferrerPolicy&) const = default;
};

struct TimingAllowOrigin {
    bool wildcard = false;
    std::vector<std::string> origins;
    bool operator==(const TimingAllowOrigin&) const = default;
};

struct UpgradeTargets {
    std::vector<std::string> protocols;  // server preference order
    bool operator==(const UpgradeTargets&) const = default;
};

using ParsedSecurityHeader =
    std::variant<HstsDirectives, InterpretationPolicy, PersistencePolicy,
                 FrameOptions, VersionLeak, ContentTypeOptions, XssProtection,
                 CorsOrigin, CorsCredentials, ExposedHeaders, CspPolicy,
                 ExpectCt, ReferrerPolicy, TimingAllowOrigin, UpgradeTargets>;

struct ParseResult {
    std::optional<ParsedSecurityHeader> value;
    std::vector<ParseIssue> issues;
};

/// Dispatches on the field name. Security fields (including the two
/// proposed ones) yield the matching variant; anything else yields an
/// absent value. Lenient: malformed values produce a best-effort parse
/// plus issues, never an exception.
ParseResult parse_security_header(const RawHeader& h);

HstsDirectives parse_hsts(std::string_view value,
                          std::vector<ParseIssue>* issues = nullptr);

InterpretationPolicy parse_interpretation(std::string_view value,
                                          std::vector<ParseIssue>* issues = nullptr);

PersistencePolicy parse_persistence(std::string_view value,
                                    std::vector<ParseIssue>* issues = nullptr);

FrameOptions parse_frame_options(std::string_view value,
                                 std::vector<ParseIssue>* issues = nullptr);

/// Throws UnknownHeaderError (from catalog.hpp) unless `name` is one of the
/// four version-leak fields.
VersionLeak extract_version_leak(const HeaderName& name, std::string_view value);

bool is_version_leak_field_name(const HeaderName& name);

/// Canonical text form of a parsed value; parsing it again is a fixed point.
std::string canonical(const ParsedSecurityHeader& v);

}  // namespace secheader::parse
