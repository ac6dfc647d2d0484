#pragma once

// Wesolowski-style verifiable delay function over the class group.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <string_view>

#include <gmpxx.h>

#include "vsort/bytes.hpp"
#include "vsort/classgroup.hpp"
#include "vsort/hashprime.hpp"

namespace vsort::vdf {

using classgroup::Discriminant;
using classgroup::QuadraticForm;

inline constexpr unsigned kDefaultDiscriminantBits = 1024;
inline constexpr unsigned kChallengeBits = 128;

struct Params {
  Discriminant d;
  std::uint64_t T = 0;
  unsigned discriminant_bits = kDefaultDiscriminantBits;
  std::uint64_t d_iterations = 0;  // hash-to-prime hint for |d|, echoed into the output
};

struct Output {
  QuadraticForm y;
  QuadraticForm proof;
  std::uint64_t d_iterations = 0;
  std::uint64_t challenge_iterations = 0;
};

struct DerivedDiscriminant {
  Discriminant d;
  std::uint64_t iterations = 0;
};

struct Challenge {
  mpz_class prime;
  std::uint64_t iterations = 0;
};

hashprime::Params discriminant_prime_params(unsigned bits);
hashprime::Params challenge_prime_params();

/// "discr" || seed
Bytes discriminant_seed(std::span<const std::uint8_t> seed);
/// d = -H_prime("discr" || seed) with candidates forced to 7 mod 8.
DerivedDiscriminant derive_discriminant(std::span<const std::uint8_t> seed, unsigned bits);

/// "chal" || enc(d) || enc(g) || enc(y) || LE64(T)
Bytes challenge_seed(const Discriminant& d, const QuadraticForm& y, std::uint64_t T);
Challenge challenge(const Discriminant& d, const QuadraticForm& y, std::uint64_t T);

Params make_params(std::span<const std::uint8_t> seed, std::uint64_t T, unsigned bits);

class Cancelled : public std::runtime_error {
 public:
  Cancelled() : std::runtime_error("evaluation cancelled") {}
};

struct EvalOptions {
  /// Called with (steps done, total steps); total is 2T (output chain, then proof).
  std::function<void(std::uint64_t, std::uint64_t)> progress;
  std::uint64_t progress_interval = 1 << 14;
  std::stop_token stop;
  /// When nonzero, tracks the full proof quotient and checks
  /// 2^steps = quotient * l + r every `invariant_check_stride` steps.
  std::uint64_t invariant_check_stride = 0;
};

struct EvalStats {
  std::uint64_t output_squarings = 0;
  std::uint64_t proof_squarings = 0;
  std::uint64_t proof_multiplications = 0;
  std::uint64_t invariant_checks = 0;
};

/// y = g^(2^T) by T squarings, then pi = g^floor(2^T / l) by online long division.
Output eval(const Params& params, const EvalOptions& options = {}, EvalStats* stats = nullptr);

enum class Reason { accepted, bad_encoding, hint_invalid, equation_failed };
std::string_view to_string(Reason r);

struct Verdict {
  Reason reason = Reason::accepted;
  std::string detail;

  bool accepted() const { return reason == Reason::accepted; }
  explicit operator bool() const { return accepted(); }
};

/// Accepts iff pi^l * g^(2^T mod l) = y. Cost is independent of T apart from
/// one modular exponentiation on integers. In strict mode the challenge prime
/// is searched from scratch and the published hint must match it exactly.
Verdict verify(const Params& params, const Output& output, bool strict = false);

}  // namespace vsort::vdf
