#include "vsort/classgroup.hpp"

#include <utility>

namespace vsort::classgroup {
namespace {

bool is_normal(const mpz_class& a, const mpz_class& b) {
  // -a < b <= a
  if (mpz_cmp(b.get_mpz_t(), a.get_mpz_t()) > 0) return false;
  return !(sgn(b) < 0 && mpz_cmpabs(b.get_mpz_t(), a.get_mpz_t()) >= 0);
}

// Classical reduction: normalize b into (-a, a], swap a and c while a > c.
void reduce_in_place(QuadraticForm& f, mpz_class& q, mpz_class& r, mpz_class& t) {
  mpz_ptr a = f.a.get_mpz_t();
  mpz_ptr b = f.b.get_mpz_t();
  mpz_ptr c = f.c.get_mpz_t();
  for (;;) {
    if (!is_normal(f.a, f.b)) {
      mpz_mul_2exp(t.get_mpz_t(), a, 1);
      mpz_fdiv_qr(q.get_mpz_t(), r.get_mpz_t(), b, t.get_mpz_t());
      if (mpz_cmp(r.get_mpz_t(), a) > 0) {
        mpz_sub(r.get_mpz_t(), r.get_mpz_t(), t.get_mpz_t());
        mpz_add_ui(q.get_mpz_t(), q.get_mpz_t(), 1);
      }
      // c -= q (b + r) / 2
      mpz_add(t.get_mpz_t(), b, r.get_mpz_t());
      mpz_divexact_ui(t.get_mpz_t(), t.get_mpz_t(), 2);
      mpz_submul(c, q.get_mpz_t(), t.get_mpz_t());
      mpz_swap(b, r.get_mpz_t());
    }
    const int ac = mpz_cmp(a, c);
    if (ac > 0) {
      mpz_swap(a, c);
      mpz_neg(b, b);
      continue;
    }
    if (ac == 0 && mpz_sgn(b) < 0) mpz_neg(b, b);
    return;
  }
}

}  // namespace

Discriminant::Discriminant(mpz_class d) : d_(std::move(d)) {
  if (sgn(d_) >= 0) throw Error("discriminant must be negative");
  if (mpz_fdiv_ui(d_.get_mpz_t(), 4) != 1) throw Error("discriminant must be 1 mod 4");
}

Discriminant Discriminant::from_string(const std::string& decimal) {
  mpz_class d;
  if (d.set_str(decimal, 10) != 0) throw Error("invalid discriminant literal");
  return Discriminant(d);
}

bool Discriminant::is_one_mod_8() const { return mpz_fdiv_ui(d_.get_mpz_t(), 8) == 1; }

std::size_t Discriminant::bits() const { return mpz_sizeinbase(d_.get_mpz_t(), 2); }

QuadraticForm QuadraticForm::from_ab(const mpz_class& a, const mpz_class& b,
                                     const Discriminant& d) {
  if (sgn(a) <= 0) throw Error("form coefficient a must be positive");
  mpz_class num = b * b - d.value();
  mpz_class den = 4 * a;
  if (!mpz_divisible_p(num.get_mpz_t(), den.get_mpz_t()))
    throw Error("b^2 is not congruent to d mod 4a");
  mpz_class c;
  mpz_divexact(c.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  return {a, b, c};
}

std::string QuadraticForm::to_string() const {
  return "(" + a.get_str() + ", " + b.get_str() + ", " + c.get_str() + ")";
}

bool is_reduced(const QuadraticForm& f) {
  if (sgn(f.a) <= 0 || !is_normal(f.a, f.b)) return false;
  const int ac = cmp(f.a, f.c);
  if (ac > 0) return false;
  return !(ac == 0 && sgn(f.b) < 0);
}

bool is_primitive(const QuadraticForm& f) {
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), f.a.get_mpz_t(), f.b.get_mpz_t());
  mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), f.c.get_mpz_t());
  return g == 1;
}

QuadraticForm identity(const Discriminant& d) {
  mpz_class c = (1 - d.value()) / 4;
  return {1, 1, c};
}

QuadraticForm generator(const Discriminant& d) {
  if (!d.is_one_mod_8()) throw Error("generator requires d = 1 mod 8");
  mpz_class c = (1 - d.value()) / 8;
  return reduce({2, 1, c});
}

QuadraticForm reduce(QuadraticForm f) {
  if (sgn(f.a) <= 0) throw Error("form is not positive definite");
  if (sgn(f.discriminant()) >= 0) throw Error("form discriminant must be negative");
  mpz_class q, r, t;
  reduce_in_place(f, q, r, t);
  return f;
}

namespace {

void require_discriminant(const QuadraticForm& f, const Discriminant& d) {
  if (f.discriminant() != d.value()) throw Error("discriminant mismatch");
}

}  // namespace

QuadraticForm compose(const QuadraticForm& f, const QuadraticForm& g, const Discriminant& d) {
  require_discriminant(f, d);
  require_discriminant(g, d);
  GroupContext ctx(d);
  QuadraticForm out;
  ctx.compose(f, g, out);
  return out;
}

QuadraticForm square(const QuadraticForm& f, const Discriminant& d) {
  require_discriminant(f, d);
  GroupContext ctx(d);
  QuadraticForm out = f;
  ctx.square(out);
  return out;
}

QuadraticForm power(const QuadraticForm& f, const mpz_class& e, const Discriminant& d) {
  require_discriminant(f, d);
  if (sgn(e) < 0) throw Error("negative exponent");
  GroupContext ctx(d);
  QuadraticForm base = f;
  ctx.reduce(base);
  QuadraticForm acc = identity(d);
  for (long i = static_cast<long>(mpz_sizeinbase(e.get_mpz_t(), 2)) - 1; i >= 0; --i) {
    ctx.square(acc);
    if (mpz_tstbit(e.get_mpz_t(), static_cast<mp_bitcnt_t>(i))) ctx.mul_inplace(acc, base);
  }
  return acc;
}

QuadraticForm inverse(const QuadraticForm& f) { return reduce({f.a, -f.b, f.c}); }

void encode_form(Bytes& out, const QuadraticForm& f) {
  encode_int(out, f.a);
  encode_int(out, f.b);
}

Bytes encode_form(const QuadraticForm& f) {
  Bytes out;
  encode_form(out, f);
  return out;
}

QuadraticForm decode_form(std::span<const std::uint8_t> bytes, const Discriminant& d) {
  std::size_t pos = 0;
  mpz_class a, b;
  try {
    a = decode_int(bytes, pos);
    b = decode_int(bytes, pos);
  } catch (const std::invalid_argument& e) {
    throw Error(std::string("malformed form encoding: ") + e.what());
  }
  if (pos != bytes.size()) throw Error("trailing bytes after form encoding");
  QuadraticForm f = QuadraticForm::from_ab(a, b, d);
  if (!is_reduced(f)) throw Error("form is not reduced");
  if (!is_primitive(f)) throw Error("form is not primitive");
  return f;
}

GroupContext::GroupContext(Discriminant d) : d_(std::move(d)) {}

void GroupContext::reduce(QuadraticForm& f) { reduce_in_place(f, q_, r_, t_); }

void GroupContext::compose(const QuadraticForm& f, const QuadraticForm& g, QuadraticForm& out) {
  const QuadraticForm* f1 = &f;
  const QuadraticForm* f2 = &g;
  if (f1->a > f2->a) std::swap(f1, f2);
  const mpz_class& a1 = f1->a;
  const mpz_class& a2 = f2->a;
  const mpz_class& b2 = f2->b;
  const mpz_class& c2 = f2->c;

  // s = (b1 + b2) / 2, n = b2 - s
  mpz_add(s_.get_mpz_t(), f1->b.get_mpz_t(), b2.get_mpz_t());
  mpz_divexact_ui(s_.get_mpz_t(), s_.get_mpz_t(), 2);
  mpz_sub(n_.get_mpz_t(), b2.get_mpz_t(), s_.get_mpz_t());

  // u a2 + v a1 = dd = gcd(a2, a1); y1 = u
  if (mpz_divisible_p(a2.get_mpz_t(), a1.get_mpz_t())) {
    u_ = 0;
    dd_ = a1;
  } else {
    mpz_gcdext(dd_.get_mpz_t(), u_.get_mpz_t(), v_.get_mpz_t(), a2.get_mpz_t(), a1.get_mpz_t());
  }

  // x2 s + y2 dd = d1 = gcd(s, dd); y2 = -y2
  if (mpz_divisible_p(s_.get_mpz_t(), dd_.get_mpz_t())) {
    y2_ = -1;
    x2_ = 0;
    d1_ = dd_;
  } else {
    mpz_gcdext(d1_.get_mpz_t(), x2_.get_mpz_t(), y2_.get_mpz_t(), s_.get_mpz_t(),
               dd_.get_mpz_t());
    mpz_neg(y2_.get_mpz_t(), y2_.get_mpz_t());
  }

  mpz_divexact(v1_.get_mpz_t(), a1.get_mpz_t(), d1_.get_mpz_t());
  mpz_divexact(v2_.get_mpz_t(), a2.get_mpz_t(), d1_.get_mpz_t());

  // r = (y1 y2 n - x2 c2) mod v1
  mpz_mul(t_.get_mpz_t(), u_.get_mpz_t(), y2_.get_mpz_t());
  mpz_mul(t_.get_mpz_t(), t_.get_mpz_t(), n_.get_mpz_t());
  mpz_submul(t_.get_mpz_t(), x2_.get_mpz_t(), c2.get_mpz_t());
  mpz_fdiv_r(r_.get_mpz_t(), t_.get_mpz_t(), v1_.get_mpz_t());

  // a3 = v1 v2, b3 = b2 + 2 v2 r, c3 = (c2 d1 + r (b2 + v2 r)) / v1
  mpz_mul(out.a.get_mpz_t(), v1_.get_mpz_t(), v2_.get_mpz_t());
  mpz_mul(t_.get_mpz_t(), v2_.get_mpz_t(), r_.get_mpz_t());
  mpz_mul_2exp(out.b.get_mpz_t(), t_.get_mpz_t(), 1);
  mpz_add(out.b.get_mpz_t(), out.b.get_mpz_t(), b2.get_mpz_t());
  mpz_add(t_.get_mpz_t(), t_.get_mpz_t(), b2.get_mpz_t());
  mpz_mul(t_.get_mpz_t(), t_.get_mpz_t(), r_.get_mpz_t());
  mpz_addmul(t_.get_mpz_t(), c2.get_mpz_t(), d1_.get_mpz_t());
  mpz_divexact(out.c.get_mpz_t(), t_.get_mpz_t(), v1_.get_mpz_t());

  reduce(out);
}

void GroupContext::square(QuadraticForm& f) {
  const mpz_class& a = f.a;
  const mpz_class& b = f.b;
  const mpz_class& c = f.c;

  // Composition with itself: y1 = 0, dd = a, s = b, n = 0.
  if (mpz_divisible_p(b.get_mpz_t(), a.get_mpz_t())) {
    x2_ = 0;
    d1_ = a;
  } else {
    mpz_gcdext(d1_.get_mpz_t(), x2_.get_mpz_t(), y2_.get_mpz_t(), b.get_mpz_t(), a.get_mpz_t());
  }
  mpz_divexact(v1_.get_mpz_t(), a.get_mpz_t(), d1_.get_mpz_t());

  // r = -x2 c mod v1
  mpz_mul(t_.get_mpz_t(), x2_.get_mpz_t(), c.get_mpz_t());
  mpz_neg(t_.get_mpz_t(), t_.get_mpz_t());
  mpz_fdiv_r(r_.get_mpz_t(), t_.get_mpz_t(), v1_.get_mpz_t());

  mpz_mul(tmp_.a.get_mpz_t(), v1_.get_mpz_t(), v1_.get_mpz_t());
  mpz_mul(t_.get_mpz_t(), v1_.get_mpz_t(), r_.get_mpz_t());
  mpz_mul_2exp(tmp_.b.get_mpz_t(), t_.get_mpz_t(), 1);
  mpz_add(tmp_.b.get_mpz_t(), tmp_.b.get_mpz_t(), b.get_mpz_t());
  mpz_add(t_.get_mpz_t(), t_.get_mpz_t(), b.get_mpz_t());
  mpz_mul(t_.get_mpz_t(), t_.get_mpz_t(), r_.get_mpz_t());
  mpz_addmul(t_.get_mpz_t(), c.get_mpz_t(), d1_.get_mpz_t());
  mpz_divexact(tmp_.c.get_mpz_t(), t_.get_mpz_t(), v1_.get_mpz_t());

  std::swap(f, tmp_);
  reduce(f);
}

void GroupContext::mul_inplace(QuadraticForm& f, const QuadraticForm& g) {
  compose(f, g, tmp_);
  std::swap(f, tmp_);
}

}  // namespace vsort::classgroup
