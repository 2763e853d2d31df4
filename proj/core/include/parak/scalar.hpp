#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace parak {

using boost::multiprecision::cpp_int;
using cplx = std::complex<double>;

// Numerical tolerances shared across the library. eps is the float equality
// tolerance, kappa the relative kernel threshold for rank decisions.
struct Tol {
  double eps = 1e-9;
  double kappa = 1e-6;
};

// ---------------------------------------------------------------------------
// Exact rational over arbitrary-precision integers. den > 0, gcd(num,den) = 1.

struct Rat {
  cpp_int num{0};
  cpp_int den{1};

  Rat() = default;
  Rat(long long n) : num(n), den(1) {}
  Rat(cpp_int n, cpp_int d) : num(std::move(n)), den(std::move(d)) { reduce(); }

  void reduce() {
    if (den == 0) throw std::domain_error("Rat: zero denominator");
    if (den < 0) { num = -num; den = -den; }
    cpp_int g = boost::multiprecision::gcd(num < 0 ? cpp_int(-num) : num, den);
    if (g > 1) { num /= g; den /= g; }
  }

  bool is_zero() const { return num == 0; }
  bool is_integer() const { return den == 1; }

  friend Rat operator+(const Rat& a, const Rat& b) { return Rat(a.num * b.den + b.num * a.den, a.den * b.den); }
  friend Rat operator-(const Rat& a, const Rat& b) { return Rat(a.num * b.den - b.num * a.den, a.den * b.den); }
  friend Rat operator*(const Rat& a, const Rat& b) { return Rat(a.num * b.num, a.den * b.den); }
  friend Rat operator/(const Rat& a, const Rat& b) {
    if (b.num == 0) throw std::domain_error("Rat: division by zero");
    return Rat(a.num * b.den, a.den * b.num);
  }
  Rat operator-() const { Rat r; r.num = -num; r.den = den; return r; }
  friend bool operator==(const Rat& a, const Rat& b) { return a.num == b.num && a.den == b.den; }
  friend bool operator!=(const Rat& a, const Rat& b) { return !(a == b); }
  friend bool operator<(const Rat& a, const Rat& b) { return a.num * b.den < b.num * a.den; }

  double to_double() const {
    // Scale down so that cpp_int -> double conversion stays in range.
    return num.convert_to<double>() / den.convert_to<double>();
  }
  std::string str() const {
    std::string s = num.str();
    if (den != 1) s += "/" + den.str();
    return s;
  }
};

// Gaussian rational a + b*i with exact components.
struct GQ {
  Rat re, im;

  GQ() = default;
  GQ(Rat r) : re(std::move(r)) {}
  GQ(Rat r, Rat i) : re(std::move(r)), im(std::move(i)) {}
  GQ(long long r, long long i = 0) : re(r), im(i) {}

  bool is_zero() const { return re.is_zero() && im.is_zero(); }
  bool is_real() const { return im.is_zero(); }

  friend GQ operator+(const GQ& a, const GQ& b) { return {a.re + b.re, a.im + b.im}; }
  friend GQ operator-(const GQ& a, const GQ& b) { return {a.re - b.re, a.im - b.im}; }
  friend GQ operator*(const GQ& a, const GQ& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  GQ conj() const { return {re, -im}; }
  Rat norm2() const { return re * re + im * im; }
  friend GQ operator/(const GQ& a, const GQ& b) {
    Rat n = b.norm2();
    if (n.is_zero()) throw std::domain_error("GQ: division by zero");
    GQ p = a * b.conj();
    return {p.re / n, p.im / n};
  }
  GQ operator-() const { return {-re, -im}; }
  friend bool operator==(const GQ& a, const GQ& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const GQ& a, const GQ& b) { return !(a == b); }

  cplx to_complex() const { return {re.to_double(), im.to_double()}; }
  std::string str() const {
    if (im.is_zero()) return re.str();
    std::string s = re.str();
    s += (im.num < 0) ? "-" : "+";
    Rat ai = im; if (ai.num < 0) ai.num = -ai.num;
    s += ai.str() + "i";
    return s;
  }
};

// ---------------------------------------------------------------------------
// Scalar: complex double, optionally carrying an exact Gaussian-rational
// payload. Arithmetic keeps exactness only when both operands carry it.

struct Scalar {
  cplx v{0.0, 0.0};
  std::optional<GQ> ex;

  Scalar() = default;
  Scalar(double re, double im = 0.0) : v(re, im) {}
  Scalar(cplx z) : v(z) {}
  Scalar(GQ q) : v(q.to_complex()), ex(std::move(q)) {}
  static Scalar exact_int(long long re, long long im = 0) { return Scalar(GQ(re, im)); }

  bool exact() const { return ex.has_value(); }

  friend Scalar operator+(const Scalar& a, const Scalar& b) {
    Scalar r(a.v + b.v);
    if (a.ex && b.ex) { r.ex = *a.ex + *b.ex; r.v = r.ex->to_complex(); }
    return r;
  }
  friend Scalar operator-(const Scalar& a, const Scalar& b) {
    Scalar r(a.v - b.v);
    if (a.ex && b.ex) { r.ex = *a.ex - *b.ex; r.v = r.ex->to_complex(); }
    return r;
  }
  friend Scalar operator*(const Scalar& a, const Scalar& b) {
    Scalar r(a.v * b.v);
    if (a.ex && b.ex) { r.ex = *a.ex * *b.ex; r.v = r.ex->to_complex(); }
    return r;
  }
  friend Scalar operator/(const Scalar& a, const Scalar& b) {
    Scalar r(a.v / b.v);
    if (a.ex && b.ex) { r.ex = *a.ex / *b.ex; r.v = r.ex->to_complex(); }
    return r;
  }
  Scalar operator-() const {
    Scalar r(-v);
    if (ex) r.ex = -*ex;
    return r;
  }
  Scalar conj() const {
    Scalar r(std::conj(v));
    if (ex) r.ex = ex->conj();
    return r;
  }
  double abs() const { return std::abs(v); }
  bool is_zero(double eps = 1e-9) const {
    if (ex) return ex->is_zero();
    return std::abs(v) < eps;
  }
};

// ---------------------------------------------------------------------------
// Continued-fraction rational reconstruction: best rational p/q approximating
// x with q <= max_den; returns nullopt when the residual exceeds tol.
inline std::optional<Rat> reconstruct_rational(double x, long long max_den, double tol) {
  if (!std::isfinite(x)) return std::nullopt;
  long long p0 = 1, q0 = 0;       // convergent h_{-1}
  long long p1 = (long long)std::floor(x), q1 = 1;
  double frac = x - std::floor(x);
  for (int it = 0; it < 64; ++it) {
    if (std::abs(x - (double)p1 / (double)q1) <= tol) break;
    if (frac < 1e-15) break;
    double inv = 1.0 / frac;
    long long a = (long long)std::floor(inv);
    frac = inv - std::floor(inv);
    long long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den || q2 <= 0) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
  }
  if (std::abs(x - (double)p1 / (double)q1) <= tol) return Rat(p1, q1);
  return std::nullopt;
}

// Gaussian-rational reconstruction of a complex double, componentwise.
inline std::optional<GQ> reconstruct_gq(cplx z, long long max_den, double tol) {
  auto r = reconstruct_rational(z.real(), max_den, tol);
  auto i = reconstruct_rational(z.imag(), max_den, tol);
  if (!r || !i) return std::nullopt;
  return GQ(*r, *i);
}

}  // namespace parak
