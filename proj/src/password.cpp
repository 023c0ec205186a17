#include "papg/password.hpp"

#include <sodium.h>

#include <array>
#include <stdexcept>
#include <vector>

#include "papg/error.hpp"

namespace papg {

namespace {

void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) throw std::runtime_error("libsodium initialization failed");
}

std::string to_hex(const unsigned char* data, std::size_t len) {
    std::string out(len * 2 + 1, '\0');
    sodium_bin2hex(out.data(), out.size(), data, len);
    out.pop_back();
    return out;
}

std::optional<std::vector<unsigned char>> from_hex(std::string_view hex) {
    std::vector<unsigned char> out(hex.size() / 2);
    std::size_t len = 0;
    if (hex.size() % 2 != 0 ||
        sodium_hex2bin(out.data(), out.size(), hex.data(), hex.size(), nullptr, &len, nullptr) != 0 ||
        len != out.size()) {
        return std::nullopt;
    }
    return out;
}

constexpr std::size_t kKeyBytes = 32;

std::optional<std::array<unsigned char, crypto_generichash_BYTES>> derive_digest(std::string_view passphrase,
                                                                                 const unsigned char* salt,
                                                                                 const KdfParams& params) {
    if (params.algorithm != "argon2id13") return std::nullopt;
    std::array<unsigned char, kKeyBytes> key{};
    if (crypto_pwhash(key.data(), key.size(), passphrase.data(), passphrase.size(), salt, params.opslimit,
                      static_cast<std::size_t>(params.memlimit), crypto_pwhash_ALG_ARGON2ID13) != 0) {
        return std::nullopt;
    }
    std::array<unsigned char, crypto_generichash_BYTES> digest{};
    crypto_generichash(digest.data(), digest.size(), key.data(), key.size(), nullptr, 0);
    sodium_memzero(key.data(), key.size());
    return digest;
}

}  // namespace

KdfParams KdfParams::interactive() {
    return {"argon2id13", crypto_pwhash_OPSLIMIT_INTERACTIVE, crypto_pwhash_MEMLIMIT_INTERACTIVE};
}

KdfParams KdfParams::minimal() { return {"argon2id13", crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN}; }

PasswordRecord make_password_record(std::string_view passphrase, const KdfParams& params) {
    ensure_sodium();
    std::array<unsigned char, crypto_pwhash_SALTBYTES> salt{};
    randombytes_buf(salt.data(), salt.size());
    auto digest = derive_digest(passphrase, salt.data(), params);
    if (!digest) throw Error(Errc::InvalidArgument, "key derivation failed (unsupported KDF parameters?)");
    return PasswordRecord{to_hex(salt.data(), salt.size()), params, to_hex(digest->data(), digest->size())};
}

bool verify_password(const PasswordRecord& record, std::string_view passphrase) {
    ensure_sodium();
    const auto salt = from_hex(record.kdf_salt);
    const auto expected = from_hex(record.derived_key_digest);
    if (!salt || salt->size() != crypto_pwhash_SALTBYTES || !expected ||
        expected->size() != crypto_generichash_BYTES) {
        return false;
    }
    const auto digest = derive_digest(passphrase, salt->data(), record.kdf_params);
    if (!digest) return false;
    return sodium_memcmp(digest->data(), expected->data(), digest->size()) == 0;
}

std::string SessionRegistry::issue(Timestamp now) {
    ensure_sodium();
    std::array<unsigned char, 16> raw{};
    randombytes_buf(raw.data(), raw.size());
    std::string token = to_hex(raw.data(), raw.size());
    std::lock_guard lock(mutex_);
    std::erase_if(expiry_, [now](const auto& kv) { return kv.second <= now; });
    expiry_[token] = now + lifetime_;
    return token;
}

bool SessionRegistry::valid(std::string_view token, Timestamp now) const {
    if (token.empty()) return false;
    std::lock_guard lock(mutex_);
    auto it = expiry_.find(std::string(token));
    return it != expiry_.end() && now < it->second;
}

void SessionRegistry::revoke_all() {
    std::lock_guard lock(mutex_);
    expiry_.clear();
}

}  // namespace papg
