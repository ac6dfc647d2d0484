#include "vsort/signing.hpp"

#include <sodium.h>

#include <fstream>
#include <stdexcept>
#include <string>

namespace vsort::signing {

SigningKey SigningKey::generate() {
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  Hash32 seed;
  randombytes_buf(seed.data(), seed.size());
  return from_seed(seed);
}

SigningKey SigningKey::from_seed(const Hash32& seed) {
  if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  SigningKey k;
  k.seed_ = seed;
  crypto_sign_ed25519_seed_keypair(k.pk_.data(), k.sk_.data(), seed.data());
  return k;
}

SigningKey SigningKey::load_or_create(const std::filesystem::path& path) {
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string hex;
    in >> hex;
    if (!in) throw std::runtime_error("cannot read signing key " + path.string());
    return from_seed(hash32_from_hex(hex));
  }
  SigningKey k = generate();
  k.save(path);
  return k;
}

void SigningKey::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write signing key " + path.string());
    out << to_hex(seed_) << '\n';
  }
  std::filesystem::permissions(path, std::filesystem::perms::owner_read |
                                         std::filesystem::perms::owner_write);
}

Signature SigningKey::sign(std::span<const std::uint8_t> message) const {
  Signature sig;
  crypto_sign_ed25519_detached(sig.data(), nullptr, message.data(), message.size(), sk_.data());
  return sig;
}

bool verify(const PublicKey& key, std::span<const std::uint8_t> message, const Signature& sig) {
  if (sodium_init() < 0) return false;
  return crypto_sign_ed25519_verify_detached(sig.data(), message.data(), message.size(),
                                             key.data()) == 0;
}

}  // namespace vsort::signing
