#include "secheader/parse.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <sstream>

#include "secheader/catalog.hpp"

namespace secheader::parse {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

void add_issue(std::vector<ParseIssue>* issues, const HeaderName& field,
               ParseIssue::Kind kind, std::string detail) {
    if (issues) issues->push_back({field, kind, std::move(detail)});
}

const HeaderName& hsts_name() {
    static const HeaderName n{"Strict-Transport-Security"};
    return n;
}

constexpr std::array<std::string_view, 4> kVersionLeakFields{
    "server", "x-powered-by", "x-aspnet-version", "x-powered-by-plesk"};

constexpr std::array<std::pair<ReferrerPolicyToken, std::string_view>, 8>
    kReferrerTokens{{
        {ReferrerPolicyToken::NoReferrer, "no-referrer"},
        {ReferrerPolicyToken::NoReferrerWhenDowngrade, "no-referrer-when-downgrade"},
        {ReferrerPolicyToken::Origin, "origin"},
        {ReferrerPolicyToken::OriginWhenCrossOrigin, "origin-when-cross-origin"},
        {ReferrerPolicyToken::SameOrigin, "same-origin"},
        {ReferrerPolicyToken::StrictOrigin, "strict-origin"},
        {ReferrerPolicyToken::StrictOriginWhenCrossOrigin,
         "strict-origin-when-cross-origin"},
        {ReferrerPolicyToken::UnsafeUrl, "unsafe-url"},
    }};

}  // namespace

std::string_view to_string(ParseIssue::Kind k) {
    switch (k) {
        case ParseIssue::Kind::Malformed: return "malformed";
        case ParseIssue::Kind::UnknownToken: return "unknown-token";
        case ParseIssue::Kind::EmptyValue: return "empty-value";
        case ParseIssue::Kind::DuplicateDirective: return "duplicate-directive";
    }
    return "?";
}

std::string_view to_string(ReferrerPolicyToken t) {
    for (const auto& [tok, name] : kReferrerTokens) {
        if (tok == t) return name;
    }
    return "?";
}

std::optional<ReferrerPolicyToken> referrer_policy_from_string(std::string_view s) {
    for (const auto& [tok, name] : kReferrerTokens) {
        if (ascii_iequals(name, s)) return tok;
    }
    return std::nullopt;
}

bool is_version_leak_field_name(const HeaderName& name) {
    return std::find(kVersionLeakFields.begin(), kVersionLeakFields.end(),
                     name.folded()) != kVersionLeakFields.end();
}

HstsDirectives parse_hsts(std::string_view value, std::vector<ParseIssue>* issues) {
    const HeaderName& field = hsts_name();
    HstsDirectives d;
    bool saw_max_age = false, saw_subdomains = false, saw_preload = false;
    for (auto part : split(value, ';')) {
        part = trim(part);
        if (part.empty()) continue;
        auto eq = part.find('=');
        std::string_view name = trim(eq == std::string_view::npos ? part : part.substr(0, eq));
        std::string_view arg = eq == std::string_view::npos
                                   ? std::string_view{}
                                   : trim(part.substr(eq + 1));
        if (!arg.empty() && arg.size() >= 2 && arg.front() == '"' && arg.back() == '"') {
            arg = arg.substr(1, arg.size() - 2);
        }
        if (ascii_iequals(name, "max-age")) {
            if (saw_max_age) {
                add_issue(issues, field, ParseIssue::Kind::DuplicateDirective,
                          "duplicate max-age; first value kept");
                continue;
            }
            saw_max_age = true;
            unsigned long long v = 0;
            auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), v);
            if (ec == std::errc::result_out_of_range &&
                p == arg.data() + arg.size()) {
                // a valid but enormous number still clamps to the cap
                ec = std::errc{};
                v = static_cast<unsigned long long>(kMaxHstsAge) + 1;
            }
            if (ec != std::errc{} || p != arg.data() + arg.size() || arg.empty()) {
                add_issue(issues, field, ParseIssue::Kind::Malformed,
                          "max-age is not a non-negative integer: '" + std::string(arg) + "'");
                d.max_age = 0;
            } else if (v > static_cast<unsigned long long>(kMaxHstsAge)) {
                add_issue(issues, field, ParseIssue::Kind::Malformed,
                          "max-age exceeds 2^31-1; clamped");
                d.max_age = kMaxHstsAge;
            } else {
                d.max_age = static_cast<long>(v);
            }
        } else if (ascii_iequals(name, "includeSubDomains")) {
            if (saw_subdomains) {
                add_issue(issues, field, ParseIssue::Kind::DuplicateDirective,
                          "duplicate includeSubDomains");
                continue;
            }
            saw_subdomains = true;
            d.include_subdomains = true;
        } else if (ascii_iequals(name, "preload")) {
            if (saw_preload) {
                add_issue(issues, field, ParseIssue::Kind::DuplicateDirective,
                          "duplicate preload");
                continue;
            }
            saw_preload = true;
            d.preload = true;
        }
        // unknown directives are ignored per RFC 6797
    }
    if (!saw_max_age) {
        add_issue(issues, field, ParseIssue::Kind::Malformed,
                  "missing required max-age directive");
        d.max_age = 0;
    }
    return d;
}

InterpretationPolicy parse_interpretation(std::string_view value,
                                          std::vector<ParseIssue>* issues) {
    static const HeaderName field{"X-Allowed-Interpretation"};
    InterpretationPolicy p;
    std::string_view v = trim(value);
    if (v.empty()) {
        // an empty value means no interpreter is acceptable
        add_issue(issues, field, ParseIssue::Kind::EmptyValue,
                  "empty value; no interpreter accepted");
        p.kind = InterpretationPolicy::Kind::NoneAllowed;
        return p;
    }
    if (ascii_iequals(v, "any")) {
        p.kind = InterpretationPolicy::Kind::Any;
        return p;
    }
    if (ascii_iequals(v, "none")) {
        p.kind = InterpretationPolicy::Kind::NoneAllowed;
        return p;
    }
    p.kind = InterpretationPolicy::Kind::Allow;
    for (auto part : split(v, ',')) {
        part = trim(part);
        if (part.empty()) {
            add_issue(issues, field, ParseIssue::Kind::EmptyValue,
                      "empty list segment dropped");
            continue;
        }
        p.languages.insert(ascii_lower(part));
    }
    if (p.languages.empty()) {
        add_issue(issues, field, ParseIssue::Kind::Malformed,
                  "no usable language token; no interpreter accepted");
        p.kind = InterpretationPolicy::Kind::NoneAllowed;
    }
    return p;
}

PersistencePolicy parse_persistence(std::string_view value,
                                    std::vector<ParseIssue>* issues) {
    static const HeaderName field{"X-Allowed-Persistence"};
    PersistencePolicy p;
    std::string_view v = trim(value);
    if (v.empty()) {
        add_issue(issues, field, ParseIssue::Kind::EmptyValue,
                  "empty value; treated as none");
        p.kind = PersistencePolicy::Kind::NonePersist;
        return p;
    }
    if (ascii_iequals(v, "any")) {
        p.kind = PersistencePolicy::Kind::Any;
    } else if (ascii_iequals(v, "only-hashed")) {
        p.kind = PersistencePolicy::Kind::OnlyHashed;
    } else if (ascii_iequals(v, "none")) {
        p.kind = PersistencePolicy::Kind::NonePersist;
    } else {
        add_issue(issues, field, ParseIssue::Kind::UnknownToken,
                  "unknown token '" + std::string(v) + "'; treated as none");
        p.kind = PersistencePolicy::Kind::NonePersist;
    }
    return p;
}

FrameOptions parse_frame_options(std::string_view value,
                                 std::vector<ParseIssue>* issues) {
    static const HeaderName field{"X-Frame-Options"};
    FrameOptions f;
    std::string_view v = trim(value);
    if (ascii_iequals(v, "deny")) {
        f.kind = FrameOptions::Kind::Deny;
    } else if (ascii_iequals(v, "sameorigin")) {
        f.kind = FrameOptions::Kind::SameOrigin;
    } else if (v.size() > 10 && ascii_iequals(v.substr(0, 10), "allow-from")) {
        auto origin = trim(v.substr(10));
        auto scheme_end = origin.find("://");
        if (origin.empty() || scheme_end == std::string_view::npos ||
            scheme_end == 0 || scheme_end + 3 >= origin.size()) {
            add_issue(issues, field, ParseIssue::Kind::Malformed,
                      "ALLOW-FROM origin is not an absolute URI; treated as DENY");
            f.kind = FrameOptions::Kind::Deny;
        } else {
            f.kind = FrameOptions::Kind::AllowFrom;
            f.origin = std::string(origin);
        }
    } else {
        add_issue(issues, field, ParseIssue::Kind::UnknownToken,
                  "unknown token '" + std::string(v) + "'; treated as DENY");
        f.kind = FrameOptions::Kind::Deny;
    }
    return f;
}

VersionLeak extract_version_leak(const HeaderName& name, std::string_view value) {
    if (!is_version_leak_field_name(name)) {
        throw catalog::UnknownHeaderError("not a version-leak field: " + name.str());
    }
    VersionLeak leak{name, "", std::nullopt, std::nullopt};
    std::string_view v = trim(value);

    // comment: parenthesized remainder
    auto open = v.find('(');
    if (open != std::string_view::npos) {
        auto close = v.rfind(')');
        std::string_view inner = close != std::string_view::npos && close > open
                                     ? v.substr(open + 1, close - open - 1)
                                     : v.substr(open + 1);
        leak.comment = std::string(trim(inner));
        v = trim(v.substr(0, open));
    }

    if (name.folded() == "x-aspnet-version") {
        // value is the bare version string; the product is implicit
        leak.product = "ASP.NET";
        if (!v.empty()) leak.version = std::string(v);
        return leak;
    }

    auto slash = v.find('/');
    if (slash == std::string_view::npos) {
        leak.product = std::string(v);
        return leak;
    }
    leak.product = std::string(trim(v.substr(0, slash)));
    auto rest = v.substr(slash + 1);
    auto ws = rest.find_first_of(" \t");
    leak.version = std::string(ws == std::string_view::npos ? rest : rest.substr(0, ws));
    return leak;
}

namespace {

ContentTypeOptions parse_content_type_options(std::string_view value,
                                              std::vector<ParseIssue>* issues) {
    static const HeaderName field{"X-Content-Type-Options"};
    std::string_view v = trim(value);
    if (ascii_iequals(v, "nosniff")) return {true};
    add_issue(issues, field,
              v.empty() ? ParseIssue::Kind::EmptyValue : ParseIssue::Kind::UnknownToken,
              "expected 'nosniff', got '" + std::string(v) + "'");
    return {false};
}

XssProtection parse_xss_protection(std::string_view value,
                                   std::vector<ParseIssue>* issues) {
    static const HeaderName field{"X-XSS-Protection"};
    XssProtection x;
    auto parts = split(value, ';');
    std::string_view head = parts.empty() ? std::string_view{} : trim(parts[0]);
    if (head == "0") {
        x.mode = XssProtection::Mode::Off;
    } else if (head == "1") {
        x.mode = XssProtection::Mode::On;
        for (std::size_t i = 1; i < parts.size(); ++i) {
            auto p = trim(parts[i]);
            auto eq = p.find('=');
            if (eq != std::string_view::npos &&
                ascii_iequals(trim(p.substr(0, eq)), "mode") &&
                ascii_iequals(trim(p.substr(eq + 1)), "block")) {
                x.mode = XssProtection::Mode::Block;
            }
        }
    } else {
        add_issue(issues, field,
                  head.empty() ? ParseIssue::Kind::EmptyValue : ParseIssue::Kind::UnknownToken,
                  "expected '0' or '1', got '" + std::string(head) + "'");
        x.mode = XssProtection::Mode::Off;
    }
    return x;
}

CorsOrigin parse_cors_origin(std::string_view value, std::vector<ParseIssue>* issues) {
    static const HeaderName field{"Access-Control-Allow-Origin"};
    CorsOrigin o;
    std::string_view v = trim(value);
    if (v == "*") {
        o.kind = CorsOrigin::Kind::Wildcard;
    } else if (ascii_iequals(v, "null")) {
        o.kind = CorsOrigin::Kind::Null;
    } else if (v.empty()) {
        add_issue(issues, field, ParseIssue::Kind::EmptyValue, "empty origin");
        o.kind = CorsOrigin::Kind::Null;
    } else {
        o.kind = CorsOrigin::Kind::Origin;
        o.origin = std::string(v);
    }
    return o;
}

CorsCredentials parse_cors_credentials(std::string_view value,
                                       std::vector<ParseIssue>* issues) {
    static const HeaderName field{"Access-Control-Allow-Credentials"};
    std::string_view v = trim(value);
    if (ascii_iequals(v, "true")) return {true};
    if (!v.empty() && !ascii_iequals(v, "false")) {
        add_issue(issues, field, ParseIssue::Kind::UnknownToken,
                  "only 'true' is defined; got '" + std::string(v) + "'");
    }
    return {false};
}

ExposedHeaders parse_exposed_headers(std::string_view value,
                                     std::vector<ParseIssue>* issues) {
    static const HeaderName field{"Access-Control-Expose-Headers"};
    ExposedHeaders e;
    for (auto part : split(value, ',')) {
        part = trim(part);
        if (part.empty()) {
            add_issue(issues, field, ParseIssue::Kind::EmptyValue,
                      "empty list segment dropped");
            continue;
        }
        e.names.emplace_back(part);
    }
    return e;
}

CspPolicy parse_csp(std::string_view value, std::vector<ParseIssue>* issues) {
    static const HeaderName field{"Content-Security-Policy"};
    CspPolicy policy;
    for (auto part : split(value, ';')) {
        part = trim(part);
        if (part.empty()) continue;
        auto sp = part.find_first_of(" \t");
        std::string name = ascii_lower(sp == std::string_view::npos ? part : part.substr(0, sp));
        auto dup = std::find_if(policy.directives.begin(), policy.directives.end(),
                                [&](const CspDirective& d) { return d.name == name; });
        if (dup != policy.directives.end()) {
            add_issue(issues, field, ParseIssue::Kind::DuplicateDirective,
                      "duplicate directive '" + name + "'; first occurrence kept");
            continue;
        }
        CspDirective d{std::move(name), {}};
        if (sp != std::string_view::npos) {
            std::string_view rest = part.substr(sp + 1);
            std::size_t i = 0;
            while (i < rest.size()) {
                while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t')) ++i;
                std::size_t j = i;
                while (j < rest.size() && rest[j] != ' ' && rest[j] != '\t') ++j;
                if (j > i) d.sources.emplace_back(rest.substr(i, j - i));
                i = j;
            }
        }
        policy.directives.push_back(std::move(d));
    }
    if (policy.directives.empty()) {
        add_issue(issues, field, ParseIssue::Kind::EmptyValue, "no directives");
    }
    return policy;
}

ExpectCt parse_expect_ct(std::string_view value, std::vector<ParseIssue>* issues) {
    static const HeaderName field{"Expect-CT"};
    ExpectCt e;
    bool saw_max_age = false;
    for (auto part : split(value, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        auto eq = part.find('=');
        std::string_view name = trim(eq == std::string_view::npos ? part : part.substr(0, eq));
        std::string_view arg = eq == std::string_view::npos
                                   ? std::string_view{}
                                   : trim(part.substr(eq + 1));
        if (!arg.empty() && arg.size() >= 2 && arg.front() == '"' && arg.back() == '"') {
            arg = arg.substr(1, arg.size() - 2);
        }
        if (ascii_iequals(name, "max-age")) {
            if (saw_max_age) {
                add_issue(issues, field, ParseIssue::Kind::DuplicateDirective,
                          "duplicate max-age");
                continue;
            }
            saw_max_age = true;
            long v = 0;
            auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), v);
            if (ec != std::errc{} || p != arg.data() + arg.size()) {
                add_issue(issues, field, ParseIssue::Kind::Malformed,
                          "bad max-age '" + std::string(arg) + "'");
            } else {
                e.max_age = v;
            }
        } else if (ascii_iequals(name, "enforce")) {
            e.enforce = true;
        } else if (ascii_iequals(name, "report-uri")) {
            e.report_uri = std::string(arg);
        }
    }
    if (!saw_max_age) {
        add_issue(issues, field, ParseIssue::Kind::Malformed, "missing max-age");
    }
    return e;
}

ReferrerPolicy parse_referrer_policy(std::string_view value,
                                     std::vector<ParseIssue>* issues) {
    static const HeaderName field{"Referrer-Policy"};
    // multiple tokens: the last recognized one wins
    std::optional<ReferrerPolicyToken> chosen;
    for (auto part : split(value, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        if (auto t = referrer_policy_from_string(part)) {
            chosen = *t;
        } else {
            add_issue(issues, field, ParseIssue::Kind::UnknownToken,
                      "unknown policy token '" + std::string(part) + "'");
        }
    }
    if (!chosen) {
        add_issue(issues, field, ParseIssue::Kind::Malformed,
                  "no recognized policy token; treated as no-referrer");
        return {ReferrerPolicyToken::NoReferrer};
    }
    return {*chosen};
}

TimingAllowOrigin parse_timing_allow_origin(std::string_view value,
                                            std::vector<ParseIssue>* issues) {
    static const HeaderName field{"Timing-Allow-Origin"};
    TimingAllowOrigin t;
    for (auto part : split(value, ',')) {
        part = trim(part);
        if (part.empty()) {
            add_issue(issues, field, ParseIssue::Kind::EmptyValue,
                      "empty list segment dropped");
            continue;
        }
        if (part == "*") {
            t.wildcard = true;
        } else {
            t.origins.emplace_back(part);
        }
    }
    return t;
}

UpgradeTargets parse_upgrade(std::string_view value, std::vector<ParseIssue>* issues) {
    static const HeaderName field{"Upgrade"};
    UpgradeTargets u;
    for (auto part : split(value, ',')) {
        part = trim(part);
        if (part.empty()) {
            add_issue(issues, field, ParseIssue::Kind::EmptyValue,
                      "empty list segment dropped");
            continue;
        }
        u.protocols.emplace_back(part);
    }
    if (u.protocols.empty()) {
        add_issue(issues, field, ParseIssue::Kind::EmptyValue, "no protocol tokens");
    }
    return u;
}

}  // namespace

ParseResult parse_security_header(const RawHeader& h) {
    ParseResult r;
    const std::string& n = h.name.folded();
    auto* issues = &r.issues;

    if (is_version_leak_field_name(h.name)) {
        r.value = extract_version_leak(h.name, h.value);
    } else if (n == "strict-transport-security") {
        r.value = parse_hsts(h.value, issues);
    } else if (n == "x-allowed-interpretation") {
        r.value = parse_interpretation(h.value, issues);
    } else if (n == "x-allowed-persistence") {
        r.value = parse_persistence(h.value, issues);
    } else if (n == "x-frame-options") {
        r.value = parse_frame_options(h.value, issues);
    } else if (n == "x-content-type-options") {
        r.value = parse_content_type_options(h.value, issues);
    } else if (n == "x-xss-protection") {
        r.value = parse_xss_protection(h.value, issues);
    } else if (n == "access-control-allow-origin") {
        r.value = parse_cors_origin(h.value, issues);
    } else if (n == "access-control-allow-credentials") {
        r.value = parse_cors_credentials(h.value, issues);
    } else if (n == "access-control-expose-headers") {
        r.value = parse_exposed_headers(h.value, issues);
    } else if (n == "content-security-policy") {
        r.value = parse_csp(h.value, issues);
    } else if (n == "expect-ct") {
        r.value = parse_expect_ct(h.value, issues);
    } else if (n == "referrer-policy") {
        r.value = parse_referrer_policy(h.value, issues);
    } else if (n == "timing-allow-origin") {
        r.value = parse_timing_allow_origin(h.value, issues);
    } else if (n == "upgrade") {
        r.value = parse_upgrade(h.value, issues);
    }
    return r;
}

namespace {

struct CanonicalRenderer {
    std::string operator()(const HstsDirectives& d) const {
        std::string s = "max-age=" + std::to_string(d.max_age);
        if (d.include_subdomains) s += "; includeSubDomains";
        if (d.preload) s += "; preload";
        return s;
    }
    std::string operator()(const InterpretationPolicy& p) const {
        switch (p.kind) {
            case InterpretationPolicy::Kind::Any: return "any";
            case InterpretationPolicy::Kind::NoneAllowed: return "none";
            case InterpretationPolicy::Kind::Allow: break;
        }
        std::string s;
        for (const auto& lang : p.languages) {
            if (!s.empty()) s += ",";
            s += lang;
        }
        return s;
    }
    std::string operator()(const PersistencePolicy& p) const {
        switch (p.kind) {
            case PersistencePolicy::Kind::Any: return "any";
            case PersistencePolicy::Kind::OnlyHashed: return "only-hashed";
            case PersistencePolicy::Kind::NonePersist: return "none";
        }
        return "none";
    }
    std::string operator()(const FrameOptions& f) const {
        switch (f.kind) {
            case FrameOptions::Kind::Deny: return "DENY";
            case FrameOptions::Kind::SameOrigin: return "SAMEORIGIN";
            case FrameOptions::Kind::AllowFrom: return "ALLOW-FROM " + f.origin;
        }
        return "DENY";
    }
    std::string operator()(const VersionLeak& v) const {
        if (v.header.folded() == "x-aspnet-version") {
            std::string s = v.version.value_or("");
            if (v.comment) s += " (" + *v.comment + ")";
            return s;
        }
        std::string s = v.product;
        if (v.version) s += "/" + *v.version;
        if (v.comment) s += " (" + *v.comment + ")";
        return s;
    }
    std::string operator()(const ContentTypeOptions& c) const {
        return c.nosniff ? "nosniff" : "";
    }
    std::string operator()(const XssProtection& x) const {
        switch (x.mode) {
            case XssProtection::Mode::Off: return "0";
            case XssProtection::Mode::On: return "1";
            case XssProtection::Mode::Block: return "1; mode=block";
        }
        return "0";
    }
    std::string operator()(const CorsOrigin& o) const {
        switch (o.kind) {
            case CorsOrigin::Kind::Wildcard: return "*";
            case CorsOrigin::Kind::Null: return "null";
            case CorsOrigin::Kind::Origin: return o.origin;
        }
        return "*";
    }
    std::string operator()(const CorsCredentials& c) const {
        return c.allow ? "true" : "false";
    }
    std::string operator()(const ExposedHeaders& e) const {
        std::string s;
        for (const auto& n : e.names) {
            if (!s.empty()) s += ", ";
            s += n;
        }
        return s;
    }
    std::string operator()(const CspPolicy& p) const {
        std::string s;
        for (const auto& d : p.directives) {
            if (!s.empty()) s += "; ";
            s += d.name;
            for (const auto& src : d.sources) s += " " + src;
        }
        return s;
    }
    std::string operator()(const ExpectCt& e) const {
        std::string s = "max-age=" + std::to_string(e.max_age);
        if (e.enforce) s += ", enforce";
        if (e.report_uri) s += ", report-uri=\"" + *e.report_uri + "\"";
        return s;
    }
    std::string operator()(const ReferrerPolicy& r) const {
        return std::string(to_string(r.token));
    }
    std::string operator()(const TimingAllowOrigin& t) const {
        std::string s;
        if (t.wildcard) s = "*";
        for (const auto& o : t.origins) {
            if (!s.empty()) s += ", ";
            s += o;
        }
        return s;
    }
    std::string operator()(const UpgradeTargets& u) const {
        std::string s;
        for (const auto& p : u.protocols) {
            if (!s.empty()) s += ", ";
            s += p;
        }
        return s;
    }
};

}  // namespace

std::string canonical(const ParsedSecurityHeader& v) {
    return std::visit(CanonicalRenderer{}, v);
}

}  // namespace secheader::parse
