#pragma once

// Ed25519 signatures (deterministic) for receipts and transcripts.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

#include "vsort/bytes.hpp"

namespace vsort::signing {

using PublicKey = std::array<std::uint8_t, 32>;
using Signature = std::array<std::uint8_t, 64>;

class SigningKey {
 public:
  static SigningKey generate();
  static SigningKey from_seed(const Hash32& seed);
  /// Reads a hex-encoded 32-byte seed, or generates and writes one (mode 0600).
  static SigningKey load_or_create(const std::filesystem::path& path);

  void save(const std::filesystem::path& path) const;
  const PublicKey& public_key() const { return pk_; }
  Signature sign(std::span<const std::uint8_t> message) const;

 private:
  SigningKey() = default;
  Hash32 seed_{};
  std::array<std::uint8_t, 64> sk_{};
  PublicKey pk_{};
};

bool verify(const PublicKey& key, std::span<const std::uint8_t> message, const Signature& sig);

}  // namespace vsort::signing
