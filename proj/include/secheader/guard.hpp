#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "secheader/parse.hpp"

namespace secheader::guard {

struct SinkError {
    enum class Kind {
        InterpreterDenied,
        PersistenceDenied,
        HashingRequired,
        UnsupportedAlgorithm,
    };
    Kind kind;
    std::string requested;
    std::string policy_summary;
};

std::string_view to_string(SinkError::Kind k);

class SinkDenied : public std::runtime_error {
public:
    explicit SinkDenied(SinkError e);
    const SinkError& error() const { return error_; }

private:
    SinkError error_;
};

/// Append-only sink-decision log:
/// `timestamp<TAB>origin_url<TAB>sink_kind<TAB>requested<TAB>allow|deny`.
class AuditLog {
public:
    explicit AuditLog(std::filesystem::path path,
                      std::function<std::int64_t()> clock = nullptr);

    void append(std::string_view origin_url, std::string_view sink_kind,
                std::string_view requested, bool allowed);

private:
    std::mutex mutex_;
    std::filesystem::path path_;
    std::function<std::int64_t()> clock_;
};

/// Response bytes bound to the interpretation/persistence policies carried
/// by the response. The raw bytes are reachable only through interpret_as
/// under a permitting policy; denied sinks throw SinkDenied. Immutable.
class GuardedBody {
public:
    /// Policies come from X-Allowed-Interpretation / X-Allowed-Persistence
    /// when present; an absent header imposes no restriction.
    static GuardedBody from_response(std::string bytes,
                                     std::span<const parse::RawHeader> headers,
                                     std::string origin_url,
                                     std::shared_ptr<AuditLog> audit = nullptr);

    GuardedBody(std::string bytes, parse::InterpretationPolicy interpretation,
                parse::PersistencePolicy persistence, std::string origin_url,
                std::shared_ptr<AuditLog> audit = nullptr);

    /// Returns the payload for consumption by the named interpreter.
    std::string interpret_as(std::string_view language) const;

    /// Checks the persistence policy for a plain-text store.
    void persist(std::string_view sink_label) const;

    /// Digest of the payload for storage. `digest_algorithm` currently
    /// supports "sha256".
    std::vector<std::uint8_t> persist_hashed(std::string_view sink_label,
                                             std::string_view digest_algorithm) const;

    std::size_t inspect_len() const { return bytes_.size(); }

    const parse::InterpretationPolicy& interpretation() const {
        return interpretation_;
    }
    const parse::PersistencePolicy& persistence() const { return persistence_; }
    const std::string& origin_url() const { return origin_url_; }

private:
    void log(std::string_view sink_kind, std::string_view requested,
             bool allowed) const;

    std::string bytes_;
    parse::InterpretationPolicy interpretation_;
    parse::PersistencePolicy persistence_;
    std::string origin_url_;
    std::shared_ptr<AuditLog> audit_;
};

std::string policy_summary(const parse::InterpretationPolicy& p);
std::string policy_summary(const parse::PersistencePolicy& p);

std::vector<std::uint8_t> sha256(std::string_view data);

}  // namespace secheader::guard
