#include "parak/heis.hpp"

namespace parak {

namespace {
const Scalar kHalf(GQ(Rat(1, 2), Rat(0)));
}

HeisElement heis_mul(const HeisElement& g, const HeisElement& h) {
  return {g.a + h.a, g.b + h.b + g.a * h.c, g.c + h.c};
}

HeisElement heis_inv(const HeisElement& g) {
  return {-g.a, g.a * g.c - g.b, -g.c};
}

HeisElement heis_pow(const HeisElement& g, long long n) {
  if (n < 0) return heis_pow(heis_inv(g), -n);
  HeisElement acc;  // identity
  HeisElement base = g;
  while (n > 0) {
    if (n & 1) acc = heis_mul(acc, base);
    base = heis_mul(base, base);
    n >>= 1;
  }
  return acc;
}

HeisElement heis_comm(const HeisElement& g, const HeisElement& h) {
  Scalar z(GQ(0));
  return {z, g.a * h.c - h.a * g.c, z};
}

HeisElement heis_exp(const HeisAlgebraElement& x) {
  return {x.a, x.b + kHalf * x.a * x.c, x.c};
}

HeisAlgebraElement heis_log(const HeisElement& g) {
  return {g.a, g.b - kHalf * g.a * g.c, g.c};
}

Mat3 heis_to_matrix(const HeisElement& g) {
  Mat3 m = Mat3::identity();
  m(0, 1) = g.a;
  m(0, 2) = g.b;
  m(1, 2) = g.c;
  return m;
}

HeisElement heis_from_matrix(const Mat3& m, const Tol& tol) {
  // Normalize the projective scale by the (0,0) entry, then demand the
  // unipotent upper-triangular shape.
  if (m(0, 0).abs() < tol.eps)
    throw Error("NotHeisenberg", "heis_from_matrix: vanishing (0,0) entry");
  Scalar s = Scalar(GQ(1)) / m(0, 0);
  auto e = [&](int i, int j) { return s * m(i, j); };
  double off = std::max({e(1, 0).abs(), e(2, 0).abs(), e(2, 1).abs(),
                         std::abs(e(1, 1).v - 1.0), std::abs(e(2, 2).v - 1.0)});
  if (off > tol.eps)
    throw Error("NotHeisenberg", "heis_from_matrix: not upper unipotent within tolerance");
  return {e(0, 1), e(0, 2), e(1, 2)};
}

HeisElement heis_from_map(const PseudoProjMap& g, const Tol& tol) {
  return heis_from_matrix(g.lift, tol);
}

UPlusElement uplus_from_map(const PseudoProjMap& g, const Tol& tol) {
  const Mat3& m = g.lift;
  double scale = g.lift.frobenius();
  double off = std::max({m(1, 0).abs(), m(2, 0).abs(), m(2, 1).abs()});
  if (off > tol.eps * scale)
    throw Error("NotTriangular", "uplus_from_map: lower entries present");
  double dmin = std::min({m(0, 0).abs(), m(1, 1).abs(), m(2, 2).abs()});
  if (dmin < tol.eps * scale)
    throw Error("Singular", "uplus_from_map: vanishing diagonal entry");
  return {m};
}

MoebiusAffine control_pi(const HeisElement& g) {
  return {Scalar(GQ(1)), g.c};
}

MoebiusAffine control_pi_star(const UPlusElement& g) {
  return {g.lambda12(), g.lift(0, 1) / g.lift(1, 1)};
}

Mat3 ell_element(const Scalar& w, const Scalar& mu) {
  Scalar mu2 = mu * mu;
  Mat3 m = Mat3::zero();
  m(0, 0) = mu;
  m(0, 1) = mu * w;
  m(1, 1) = mu;
  m(2, 2) = Scalar(GQ(1)) / mu2;
  return m;
}

}  // namespace parak
