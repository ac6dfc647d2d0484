#pragma once

// Ideal class group of an imaginary quadratic order, represented by reduced
// positive definite binary quadratic forms a x^2 + b xy + c y^2.

#include <span>
#include <stdexcept>
#include <string>

#include <gmpxx.h>

#include "vsort/bytes.hpp"

namespace vsort::classgroup {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Negative discriminant with d = 1 (mod 4). Primality of |d| is not checked
/// here; production discriminants come from hash-to-prime.
class Discriminant {
 public:
  explicit Discriminant(mpz_class d);
  static Discriminant from_string(const std::string& decimal);

  const mpz_class& value() const { return d_; }
  bool is_one_mod_8() const;
  std::size_t bits() const;

  friend bool operator==(const Discriminant&, const Discriminant&) = default;

 private:
  mpz_class d_;
};

/// c is kept alongside (a, b) for arithmetic; only (a, b) is serialized.
struct QuadraticForm {
  mpz_class a;
  mpz_class b;
  mpz_class c;

  /// Derives c = (b^2 - d) / 4a. Throws Error if a <= 0 or the division is inexact.
  static QuadraticForm from_ab(const mpz_class& a, const mpz_class& b, const Discriminant& d);

  mpz_class discriminant() const { return b * b - 4 * a * c; }
  std::string to_string() const;

  friend bool operator==(const QuadraticForm& x, const QuadraticForm& y) {
    return x.a == y.a && x.b == y.b && x.c == y.c;
  }
};

bool is_reduced(const QuadraticForm& f);
bool is_primitive(const QuadraticForm& f);

QuadraticForm identity(const Discriminant& d);
/// reduce((2, 1, (1 - d) / 8)); requires d = 1 (mod 8).
QuadraticForm generator(const Discriminant& d);

/// Unique reduced form equivalent to f. Throws Error unless a > 0 and b^2 - 4ac < 0.
QuadraticForm reduce(QuadraticForm f);

QuadraticForm compose(const QuadraticForm& f, const QuadraticForm& g, const Discriminant& d);
QuadraticForm square(const QuadraticForm& f, const Discriminant& d);
QuadraticForm power(const QuadraticForm& f, const mpz_class& e, const Discriminant& d);
QuadraticForm inverse(const QuadraticForm& f);

Bytes encode_form(const QuadraticForm& f);
void encode_form(Bytes& out, const QuadraticForm& f);
/// Rejects trailing bytes, non-reduced or non-primitive forms and b^2 != d (mod 4a).
QuadraticForm decode_form(std::span<const std::uint8_t> bytes, const Discriminant& d);

/// Reusable scratch space for the hot squaring loop. Operands must already be
/// reduced forms of the context's discriminant; no validation is done.
class GroupContext {
 public:
  explicit GroupContext(Discriminant d);

  const Discriminant& discriminant() const { return d_; }

  void reduce(QuadraticForm& f);
  void square(QuadraticForm& f);
  /// out may alias neither f nor g.
  void compose(const QuadraticForm& f, const QuadraticForm& g, QuadraticForm& out);
  void mul_inplace(QuadraticForm& f, const QuadraticForm& g);

 private:
  Discriminant d_;
  mpz_class q_, r_, t_, s_, n_, u_, v_, dd_, x2_, y2_, d1_, v1_, v2_;
  QuadraticForm tmp_;
};

}  // namespace vsort::classgroup
