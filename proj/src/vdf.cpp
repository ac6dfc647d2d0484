#include "vsort/vdf.hpp"

#include <string>

namespace vsort::vdf {

using classgroup::GroupContext;

hashprime::Params discriminant_prime_params(unsigned bits) {
  return {.bits = bits, .congruence = hashprime::Congruence{7, 8}, .mr_rounds = 50};
}

hashprime::Params challenge_prime_params() {
  return {.bits = kChallengeBits, .congruence = std::nullopt, .mr_rounds = 50};
}

Bytes discriminant_seed(std::span<const std::uint8_t> seed) {
  Bytes s = to_bytes("discr");
  append(s, seed);
  return s;
}

DerivedDiscriminant derive_discriminant(std::span<const std::uint8_t> seed, unsigned bits) {
  auto r = hashprime::hash_to_prime(discriminant_seed(seed), discriminant_prime_params(bits));
  return {Discriminant(-r.prime), r.iterations};
}

Bytes challenge_seed(const Discriminant& d, const QuadraticForm& y, std::uint64_t T) {
  Bytes s = to_bytes("chal");
  encode_int(s, d.value());
  classgroup::encode_form(s, classgroup::generator(d));
  classgroup::encode_form(s, y);
  append_le64(s, T);
  return s;
}

Challenge challenge(const Discriminant& d, const QuadraticForm& y, std::uint64_t T) {
  auto r = hashprime::hash_to_prime(challenge_seed(d, y, T), challenge_prime_params());
  return {std::move(r.prime), r.iterations};
}

Params make_params(std::span<const std::uint8_t> seed, std::uint64_t T, unsigned bits) {
  auto derived = derive_discriminant(seed, bits);
  return {std::move(derived.d), T, bits, derived.iterations};
}

Output eval(const Params& params, const EvalOptions& options, EvalStats* stats) {
  const Discriminant& d = params.d;
  const QuadraticForm g = classgroup::generator(d);
  GroupContext ctx(d);
  const std::uint64_t T = params.T;
  const std::uint64_t total = 2 * T;
  const std::uint64_t interval = options.progress_interval ? options.progress_interval : 1;

  auto tick = [&](std::uint64_t done) {
    if (done % interval != 0) return;
    if (options.stop.stop_requested()) throw Cancelled();
    if (options.progress) options.progress(done, total);
  };

  QuadraticForm y = g;
  for (std::uint64_t i = 0; i < T; ++i) {
    ctx.square(y);
    if (stats) ++stats->output_squarings;
    tick(i + 1);
  }

  Challenge chal = challenge(d, y, T);
  const mpz_class& l = chal.prime;

  // Long division of 2^T by l, one bit per step: r stays below l, and each
  // quotient bit b multiplies g into the running proof.
  QuadraticForm proof = classgroup::identity(d);
  mpz_class r = 1;
  mpz_class quotient;  // only tracked when checking the invariant
  mpz_class check;
  const std::uint64_t stride = options.invariant_check_stride;
  for (std::uint64_t i = 0; i < T; ++i) {
    r <<= 1;
    const bool bit = r >= l;
    if (bit) r -= l;
    ctx.square(proof);
    if (stats) ++stats->proof_squarings;
    if (bit) {
      ctx.mul_inplace(proof, g);
      if (stats) ++stats->proof_multiplications;
    }
    if (stride) {
      quotient <<= 1;
      if (bit) quotient += 1;
      if ((i + 1) % stride == 0 || i + 1 == T) {
        mpz_ui_pow_ui(check.get_mpz_t(), 2, i + 1);
        if (check != quotient * l + r)
          throw std::logic_error("proof long-division invariant violated at step " +
                                 std::to_string(i + 1));
        if (stats) ++stats->invariant_checks;
      }
    }
    tick(T + i + 1);
  }
  if (options.progress && total % interval != 0) options.progress(total, total);

  return {std::move(y), std::move(proof), params.d_iterations, chal.iterations};
}

std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::accepted:
      return "accepted";
    case Reason::bad_encoding:
      return "bad-encoding";
    case Reason::hint_invalid:
      return "hint-invalid";
    case Reason::equation_failed:
      return "equation-failed";
  }
  return "unknown";
}

namespace {

bool valid_element(const QuadraticForm& f, const Discriminant& d) {
  return sgn(f.a) > 0 && f.discriminant() == d.value() && classgroup::is_reduced(f) &&
         classgroup::is_primitive(f);
}

}  // namespace

Verdict verify(const Params& params, const Output& output, bool strict) {
  const Discriminant& d = params.d;
  if (!d.is_one_mod_8()) return {Reason::bad_encoding, "discriminant is not 1 mod 8"};
  if (!valid_element(output.y, d)) return {Reason::bad_encoding, "y is not a reduced form of d"};
  if (!valid_element(output.proof, d))
    return {Reason::bad_encoding, "proof is not a reduced form of d"};

  mpz_class l;
  const Bytes seed = challenge_seed(d, output.y, params.T);
  if (strict) {
    auto full = hashprime::hash_to_prime(seed, challenge_prime_params());
    if (full.iterations != output.challenge_iterations)
      return {Reason::hint_invalid, "challenge hint " + std::to_string(output.challenge_iterations) +
                                        " differs from search result " +
                                        std::to_string(full.iterations)};
    l = std::move(full.prime);
  } else {
    try {
      l = hashprime::hash_to_prime_with_hint(seed, challenge_prime_params(),
                                             output.challenge_iterations);
    } catch (const hashprime::HintInvalid& e) {
      return {Reason::hint_invalid, e.what()};
    }
  }

  mpz_class r;
  const mpz_class two = 2;
  const mpz_class T = mpz_class(std::to_string(params.T));
  mpz_powm(r.get_mpz_t(), two.get_mpz_t(), T.get_mpz_t(), l.get_mpz_t());

  const QuadraticForm g = classgroup::generator(d);
  GroupContext ctx(d);
  QuadraticForm lhs = classgroup::power(output.proof, l, d);
  ctx.mul_inplace(lhs, classgroup::power(g, r, d));
  if (lhs != output.y) return {Reason::equation_failed, "pi^l * g^r != y"};
  return {};
}

}  // namespace vsort::vdf
