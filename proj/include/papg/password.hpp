#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "papg/time.hpp"

namespace papg {

struct KdfParams {
    std::string algorithm = "argon2id13";
    std::uint64_t opslimit = 0;
    std::uint64_t memlimit = 0;

    static KdfParams interactive();
    // Smallest cost libsodium accepts; for tests only.
    static KdfParams minimal();

    friend bool operator==(const KdfParams&, const KdfParams&) = default;
};

/// Salt, KDF cost and a BLAKE2b digest of the derived key, all hex encoded.
/// The passphrase itself is never stored.
struct PasswordRecord {
    std::string kdf_salt;
    KdfParams kdf_params;
    std::string derived_key_digest;

    friend bool operator==(const PasswordRecord&, const PasswordRecord&) = default;
};

PasswordRecord make_password_record(std::string_view passphrase, const KdfParams& params);
bool verify_password(const PasswordRecord& record, std::string_view passphrase);

/// Random 128-bit session tokens, hex encoded, valid for a fixed lifetime.
class SessionRegistry {
public:
    static constexpr std::chrono::seconds kDefaultLifetime{12 * 3600};

    explicit SessionRegistry(std::chrono::seconds lifetime = kDefaultLifetime) : lifetime_(lifetime) {}

    std::string issue(Timestamp now);
    [[nodiscard]] bool valid(std::string_view token, Timestamp now) const;
    void revoke_all();

private:
    std::chrono::seconds lifetime_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, Timestamp> expiry_;
};

}  // namespace papg
