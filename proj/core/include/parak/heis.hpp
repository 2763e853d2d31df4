#pragma once

#include "parak/projective.hpp"

namespace parak {

// Upper unipotent group coordinates: (a, b, c) stands for
// [[1, a, b], [0, 1, c], [0, 0, 1]].
struct HeisElement {
  Scalar a, b, c;

  HeisElement() : a(GQ(0)), b(GQ(0)), c(GQ(0)) {}
  HeisElement(Scalar a_, Scalar b_, Scalar c_) : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)) {}
  bool exact() const { return a.exact() && b.exact() && c.exact(); }
};

// Lie algebra coordinates for the same layout with zero diagonal.
struct HeisAlgebraElement {
  Scalar a, b, c;
};

// Invertible upper-triangular map; the diagonal is kept as given and all
// derived quantities below use scale-invariant entry ratios.
struct UPlusElement {
  Mat3 lift;

  Scalar lambda12() const { return lift(0, 0) / lift(1, 1); }
  Scalar lambda23() const { return lift(1, 1) / lift(2, 2); }
  Scalar lambda13() const { return lift(0, 0) / lift(2, 2); }
};

// z -> slope * z + offset on the control line.
struct MoebiusAffine {
  Scalar slope, offset;
};

HeisElement heis_mul(const HeisElement& g, const HeisElement& h);
HeisElement heis_inv(const HeisElement& g);
HeisElement heis_pow(const HeisElement& g, long long n);
HeisElement heis_comm(const HeisElement& g, const HeisElement& h);
HeisElement heis_exp(const HeisAlgebraElement& x);
HeisAlgebraElement heis_log(const HeisElement& g);

Mat3 heis_to_matrix(const HeisElement& g);
HeisElement heis_from_matrix(const Mat3& m, const Tol& tol = {});
HeisElement heis_from_map(const PseudoProjMap& g, const Tol& tol = {});

UPlusElement uplus_from_map(const PseudoProjMap& g, const Tol& tol = {});

MoebiusAffine control_pi(const HeisElement& g);
MoebiusAffine control_pi_star(const UPlusElement& g);

// [[mu, mu*w, 0], [0, mu, 0], [0, 0, mu^-2]]
Mat3 ell_element(const Scalar& w, const Scalar& mu);

}  // namespace parak
