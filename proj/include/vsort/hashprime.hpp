#pragma once

// Deterministic hash-to-prime with iteration counting, and the hinted variant
// that skips the primality tests of all candidates before the published index.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <gmpxx.h>

#include "vsort/bytes.hpp"

namespace vsort::hashprime {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The published hint does not land on a probable prime.
class HintInvalid : public Error {
 public:
  using Error::Error;
};

inline constexpr std::uint64_t kIterationCap = 1ull << 20;

/// Low bits of every candidate are forced to `residue` modulo `modulus`
/// (a power of two).
struct Congruence {
  std::uint32_t residue = 7;
  std::uint32_t modulus = 8;
};

struct Params {
  unsigned bits = 1024;
  std::optional<Congruence> congruence;
  unsigned mr_rounds = 50;

  /// Throws Error if bits < 16, rounds == 0, or the congruence is malformed.
  void validate() const;
};

struct Result {
  mpz_class prime;
  std::uint64_t iterations = 0;  // 1-based index of the accepted candidate
};

/// Per-call instrumentation, owned by the caller.
struct Stats {
  std::uint64_t primality_tests = 0;
  std::uint64_t expansions = 0;
};

/// Candidate j: SHA-256(seed || LE64(j) || k) blocks for k = 0, 1, ... read
/// as a big-endian bit string, truncated to `bits`, top bit set, congruence
/// bits forced.
mpz_class expand(std::span<const std::uint8_t> seed, std::uint64_t j, unsigned bits,
                 const std::optional<Congruence>& congruence);

/// Miller-Rabin with bases 2 + (SHA-256(magnitude(n) || LE32(round)) mod (n - 3)).
bool miller_rabin(const mpz_class& n, unsigned rounds);

Result hash_to_prime(std::span<const std::uint8_t> seed, const Params& params,
                     Stats* stats = nullptr);

/// Expands candidates 0 .. hint-1 and tests only the last one. Throws
/// HintInvalid when it is composite or the hint is outside [1, kIterationCap].
mpz_class hash_to_prime_with_hint(std::span<const std::uint8_t> seed, const Params& params,
                                  std::uint64_t hint, Stats* stats = nullptr);

/// Runs hash_to_prime over many seeds. The parallel variant distributes seeds
/// across OpenMP threads; the serial one is the reference it is checked against.
std::vector<Result> hash_to_prime_batch(std::span<const Bytes> seeds, const Params& params);
std::vector<Result> hash_to_prime_batch_serial(std::span<const Bytes> seeds,
                                               const Params& params);

}  // namespace vsort::hashprime
