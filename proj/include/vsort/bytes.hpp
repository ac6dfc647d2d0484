#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace vsort {

using Bytes = std::vector<std::uint8_t>;
using Hash32 = std::array<std::uint8_t, 32>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

void append(Bytes& out, std::span<const std::uint8_t> data);
void append(Bytes& out, std::string_view data);
void append_le32(Bytes& out, std::uint32_t v);
void append_le64(Bytes& out, std::uint64_t v);
void append_be32(Bytes& out, std::uint32_t v);

std::string to_hex(std::span<const std::uint8_t> data);
/// Throws std::invalid_argument on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);
Hash32 hash32_from_hex(std::string_view hex);

std::string to_base64(std::span<const std::uint8_t> data);
Bytes from_base64(std::string_view b64);

/// Big-endian magnitude with no leading zero byte; zero maps to the empty string.
Bytes magnitude_bytes(const mpz_class& x);
mpz_class from_magnitude_bytes(std::span<const std::uint8_t> data);

/// sign byte || BE32 length || big-endian magnitude.
void encode_int(Bytes& out, const mpz_class& x);
/// Parses one encoded integer at `pos`, advancing it. Rejects leading zero
/// bytes and negative zero so the encoding stays canonical.
mpz_class decode_int(std::span<const std::uint8_t> in, std::size_t& pos);

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  Sha256& update(std::span<const std::uint8_t> data);
  Sha256& update(std::string_view data);
  Sha256& update(std::uint8_t byte);
  Hash32 finish();

 private:
  alignas(16) std::array<unsigned char, 128> state_{};
};

Hash32 sha256(std::span<const std::uint8_t> data);
Hash32 sha256(std::string_view data);

}  // namespace vsort
