#include "secheader/guard.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <fstream>

namespace secheader::guard {

namespace {

std::int64_t system_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

std::string_view to_string(SinkError::Kind k) {
    switch (k) {
        case SinkError::Kind::InterpreterDenied: return "interpreter-denied";
        case SinkError::Kind::PersistenceDenied: return "persistence-denied";
        case SinkError::Kind::HashingRequired: return "hashing-required";
        case SinkError::Kind::UnsupportedAlgorithm: return "unsupported-algorithm";
    }
    return "?";
}

SinkDenied::SinkDenied(SinkError e)
    : std::runtime_error(std::string(to_string(e.kind)) +
                         (e.requested.empty() ? "" : ": " + e.requested) +
                         " [policy: " + e.policy_summary + "]"),
      error_(std::move(e)) {}

AuditLog::AuditLog(std::filesystem::path path, std::function<std::int64_t()> clock)
    : path_(std::move(path)), clock_(clock ? std::move(clock) : system_now) {}

void AuditLog::append(std::string_view origin_url, std::string_view sink_kind,
                      std::string_view requested, bool allowed) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) return;  // audit failure must not disturb the sink decision
    out << clock_() << '\t' << origin_url << '\t' << sink_kind << '\t'
        << requested << '\t' << (allowed ? "allow" : "deny") << '\n';
}

std::string policy_summary(const parse::InterpretationPolicy& p) {
    return "X-Allowed-Interpretation=" +
           parse::canonical(parse::ParsedSecurityHeader{p});
}

std::string policy_summary(const parse::PersistencePolicy& p) {
    return "X-Allowed-Persistence=" +
           parse::canonical(parse::ParsedSecurityHeader{p});
}

std::vector<std::uint8_t> sha256(std::string_view data) {
    std::vector<std::uint8_t> digest(EVP_MAX_MD_SIZE);
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr);
    digest.resize(len);
    return digest;
}

GuardedBody GuardedBody::from_response(std::string bytes,
                                       std::span<const parse::RawHeader> headers,
                                       std::string origin_url,
                                       std::shared_ptr<AuditLog> audit) {
    // absent headers impose no restriction
    parse::InterpretationPolicy interpretation{parse::InterpretationPolicy::Kind::Any, {}};
    parse::PersistencePolicy persistence{parse::PersistencePolicy::Kind::Any};
    bool saw_interpretation = false, saw_persistence = false;
    for (const auto& h : headers) {
        if (!saw_interpretation && h.name.folded() == "x-allowed-interpretation") {
            saw_interpretation = true;
            interpretation = parse::parse_interpretation(h.value);
        } else if (!saw_persistence && h.name.folded() == "x-allowed-persistence") {
            saw_persistence = true;
            persistence = parse::parse_persistence(h.value);
        }
    }
    return GuardedBody(std::move(bytes), std::move(interpretation), persistence,
                       std::move(origin_url), std::move(audit));
}

GuardedBody::GuardedBody(std::string bytes, parse::InterpretationPolicy interpretation,
                         parse::PersistencePolicy persistence, std::string origin_url,
                         std::shared_ptr<AuditLog> audit)
    : bytes_(std::move(bytes)),
      interpretation_(std::move(interpretation)),
      persistence_(persistence),
      origin_url_(std::move(origin_url)),
      audit_(std::move(audit)) {}

void GuardedBody::log(std::string_view sink_kind, std::string_view requested,
                      bool allowed) const {
    if (audit_) audit_->append(origin_url_, sink_kind, requested, allowed);
}

std::string GuardedBody::interpret_as(std::string_view language) const {
    const std::string folded = ascii_lower(language);
    bool allowed = false;
    switch (interpretation_.kind) {
        case parse::InterpretationPolicy::Kind::Any:
            allowed = true;
            break;
        case parse::InterpretationPolicy::Kind::NoneAllowed:
            allowed = false;
            break;
        case parse::InterpretationPolicy::Kind::Allow:
            allowed = interpretation_.languages.contains(folded);
            break;
    }
    log("interpret", folded, allowed);
    if (!allowed) {
        throw SinkDenied({SinkError::Kind::InterpreterDenied, folded,
                          policy_summary(interpretation_)});
    }
    return bytes_;
}

void GuardedBody::persist(std::string_view sink_label) const {
    switch (persistence_.kind) {
        case parse::PersistencePolicy::Kind::Any:
            log("persist", sink_label, true);
            return;
        case parse::PersistencePolicy::Kind::OnlyHashed:
            log("persist", sink_label, false);
            throw SinkDenied({SinkError::Kind::HashingRequired,
                              std::string(sink_label),
                              policy_summary(persistence_)});
        case parse::PersistencePolicy::Kind::NonePersist:
            log("persist", sink_label, false);
            throw SinkDenied({SinkError::Kind::PersistenceDenied,
                              std::string(sink_label),
                              policy_summary(persistence_)});
    }
}

std::vector<std::uint8_t> GuardedBody::persist_hashed(
    std::string_view sink_label, std::string_view digest_algorithm) const {
    if (persistence_.kind == parse::PersistencePolicy::Kind::NonePersist) {
        log("persist-hashed", sink_label, false);
        throw SinkDenied({SinkError::Kind::PersistenceDenied,
                          std::string(sink_label), policy_summary(persistence_)});
    }
    if (!ascii_iequals(digest_algorithm, "sha256") &&
        !ascii_iequals(digest_algorithm, "sha-256")) {
        log("persist-hashed", sink_label, false);
        throw SinkDenied({SinkError::Kind::UnsupportedAlgorithm,
                          std::string(digest_algorithm),
                          policy_summary(persistence_)});
    }
    log("persist-hashed", sink_label, true);
    return sha256(bytes_);
}

}  // namespace secheader::guard
