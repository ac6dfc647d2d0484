#include "vsort/hashprime.hpp"

#include <exception>
#include <string>

namespace vsort::hashprime {

void Params::validate() const {
  if (bits < 16) throw Error("hash-to-prime bit length must be at least 16");
  if (mr_rounds == 0) throw Error("at least one Miller-Rabin round is required");
  if (congruence) {
    const auto m = congruence->modulus;
    if (m == 0 || m > 256 || (m & (m - 1)) != 0)
      throw Error("congruence modulus must be a power of two <= 256");
    if (congruence->residue >= m) throw Error("congruence residue out of range");
  }
}

mpz_class expand(std::span<const std::uint8_t> seed, std::uint64_t j, unsigned bits,
                 const std::optional<Congruence>& congruence) {
  const std::size_t nbytes = (bits + 7) / 8;
  Bytes stream;
  stream.reserve(nbytes + 32);
  Bytes prefix(seed.begin(), seed.end());
  append_le64(prefix, j);
  for (unsigned k = 0; stream.size() < nbytes; ++k) {
    Hash32 block = Sha256().update(prefix).update(static_cast<std::uint8_t>(k)).finish();
    append(stream, block);
  }
  stream.resize(nbytes);

  mpz_class x = from_magnitude_bytes(stream);
  mpz_fdiv_q_2exp(x.get_mpz_t(), x.get_mpz_t(), nbytes * 8 - bits);
  mpz_setbit(x.get_mpz_t(), bits - 1);
  if (congruence) {
    // modulus is a power of two: clear the low bits, then or in the residue.
    const mpz_class mask_off = x % congruence->modulus;
    x -= mask_off;
    x += congruence->residue;
  }
  return x;
}

bool miller_rabin(const mpz_class& n, unsigned rounds) {
  if (n < 2) throw Error("primality test requires n >= 2");
  if (n < 4) return true;
  if (mpz_even_p(n.get_mpz_t())) return false;

  const Bytes nbytes = magnitude_bytes(n);
  const mpz_class n_minus_1 = n - 1;
  const mpz_class n_minus_3 = n - 3;

  mpz_class odd = n_minus_1;
  const mp_bitcnt_t s = mpz_scan1(odd.get_mpz_t(), 0);
  mpz_fdiv_q_2exp(odd.get_mpz_t(), odd.get_mpz_t(), s);

  mpz_class base, x;
  for (std::uint32_t round = 0; round < rounds; ++round) {
    Bytes input = nbytes;
    append_le32(input, round);
    Hash32 h = sha256(input);
    base = from_magnitude_bytes(h);
    base %= n_minus_3;
    base += 2;

    mpz_powm(x.get_mpz_t(), base.get_mpz_t(), odd.get_mpz_t(), n.get_mpz_t());
    if (x == 1 || x == n_minus_1) continue;
    bool witness = true;
    for (mp_bitcnt_t i = 1; i < s; ++i) {
      mpz_powm_ui(x.get_mpz_t(), x.get_mpz_t(), 2, n.get_mpz_t());
      if (x == n_minus_1) {
        witness = false;
        break;
      }
      if (x == 1) break;
    }
    if (witness) return false;
  }
  return true;
}

Result hash_to_prime(std::span<const std::uint8_t> seed, const Params& params, Stats* stats) {
  params.validate();
  for (std::uint64_t j = 0; j < kIterationCap; ++j) {
    mpz_class candidate = expand(seed, j, params.bits, params.congruence);
    if (stats) {
      ++stats->expansions;
      ++stats->primality_tests;
    }
    if (miller_rabin(candidate, params.mr_rounds)) return {std::move(candidate), j + 1};
  }
  throw Error("hash-to-prime iteration cap exceeded");
}

mpz_class hash_to_prime_with_hint(std::span<const std::uint8_t> seed, const Params& params,
                                  std::uint64_t hint, Stats* stats) {
  params.validate();
  if (hint == 0 || hint > kIterationCap)
    throw HintInvalid("iteration hint out of range: " + std::to_string(hint));
  mpz_class candidate;
  for (std::uint64_t j = 0; j < hint; ++j) {
    candidate = expand(seed, j, params.bits, params.congruence);
    if (stats) ++stats->expansions;
  }
  if (stats) ++stats->primality_tests;
  if (!miller_rabin(candidate, params.mr_rounds))
    throw HintInvalid("candidate " + std::to_string(hint) + " is composite");
  return candidate;
}

std::vector<Result> hash_to_prime_batch_serial(std::span<const Bytes> seeds,
                                               const Params& params) {
  std::vector<Result> out;
  out.reserve(seeds.size());
  for (const auto& seed : seeds) out.push_back(hash_to_prime(seed, params));
  return out;
}

std::vector<Result> hash_to_prime_batch(std::span<const Bytes> seeds, const Params& params) {
  params.validate();
  std::vector<Result> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  const auto n = static_cast<std::int64_t>(seeds.size());
  // Iteration counts are geometric, hence dynamic scheduling.
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[i] = hash_to_prime(seeds[i], params);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace vsort::hashprime
