#include "vsort/bytes.hpp"

#include <sodium.h>

#include <stdexcept>

namespace vsort {
namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  }
};

void ensure_sodium() { static SodiumInit init; }

static_assert(sizeof(crypto_hash_sha256_state) <= 128);

}  // namespace

void append(Bytes& out, std::span<const std::uint8_t> data) {
  out.insert(out.end(), data.begin(), data.end());
}

void append(Bytes& out, std::string_view data) { out.insert(out.end(), data.begin(), data.end()); }

void append_le32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_le64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_be32(Bytes& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(data.size() * 2);
  for (auto b : data) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xf]);
  }
  return s;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("hex string has odd length");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("invalid hex character");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return out;
}

Hash32 hash32_from_hex(std::string_view hex) {
  Bytes b = from_hex(hex);
  if (b.size() != 32) throw std::invalid_argument("expected 32-byte hex value");
  Hash32 h;
  std::copy(b.begin(), b.end(), h.begin());
  return h;
}

std::string to_base64(std::span<const std::uint8_t> data) {
  ensure_sodium();
  const auto variant = sodium_base64_VARIANT_ORIGINAL;
  std::string s(sodium_base64_ENCODED_LEN(data.size(), variant), '\0');
  sodium_bin2base64(s.data(), s.size(), data.data(), data.size(), variant);
  s.resize(s.size() - 1);  // trailing NUL
  return s;
}

Bytes from_base64(std::string_view b64) {
  ensure_sodium();
  Bytes out(b64.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), b64.data(), b64.size(), nullptr, &len, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != b64.data() + b64.size())
    throw std::invalid_argument("invalid base64");
  out.resize(len);
  return out;
}

Bytes magnitude_bytes(const mpz_class& x) {
  if (sgn(x) == 0) return {};
  Bytes out((mpz_sizeinbase(x.get_mpz_t(), 2) + 7) / 8);
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, x.get_mpz_t());
  out.resize(written);
  return out;
}

mpz_class from_magnitude_bytes(std::span<const std::uint8_t> data) {
  mpz_class x;
  if (!data.empty()) mpz_import(x.get_mpz_t(), data.size(), 1, 1, 1, 0, data.data());
  return x;
}

void encode_int(Bytes& out, const mpz_class& x) {
  out.push_back(sgn(x) < 0 ? 0x01 : 0x00);
  Bytes mag = magnitude_bytes(x);
  append_be32(out, static_cast<std::uint32_t>(mag.size()));
  append(out, mag);
}

mpz_class decode_int(std::span<const std::uint8_t> in, std::size_t& pos) {
  if (in.size() - pos < 5) throw std::invalid_argument("truncated integer header");
  const std::uint8_t sign = in[pos];
  if (sign > 1) throw std::invalid_argument("invalid sign byte");
  std::uint32_t len = 0;
  for (int i = 1; i <= 4; ++i) len = len << 8 | in[pos + i];
  pos += 5;
  if (in.size() - pos < len) throw std::invalid_argument("truncated integer magnitude");
  auto mag = in.subspan(pos, len);
  if (len > 0 && mag[0] == 0) throw std::invalid_argument("non-canonical leading zero");
  if (len == 0 && sign == 1) throw std::invalid_argument("negative zero");
  pos += len;
  mpz_class x = from_magnitude_bytes(mag);
  return sign ? mpz_class(-x) : x;
}

Sha256::Sha256() {
  ensure_sodium();
  crypto_hash_sha256_init(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()));
}

Sha256& Sha256::update(std::span<const std::uint8_t> data) {
  crypto_hash_sha256_update(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()),
                            data.data(), data.size());
  return *this;
}

Sha256& Sha256::update(std::string_view data) {
  return update(std::span(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

Sha256& Sha256::update(std::uint8_t byte) { return update(std::span(&byte, 1)); }

Hash32 Sha256::finish() {
  Hash32 h;
  crypto_hash_sha256_final(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()), h.data());
  return h;
}

Hash32 sha256(std::span<const std::uint8_t> data) { return Sha256().update(data).finish(); }

Hash32 sha256(std::string_view data) { return Sha256().update(data).finish(); }

}  // namespace vsort
