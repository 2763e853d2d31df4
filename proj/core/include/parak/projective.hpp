#pragma once

#include "parak/mat.hpp"

#include <string>
#include <vector>

namespace parak {

// Library-wide error with a stable machine-readable code ("Singular",
// "KernelHit", ...). The CLI maps codes to exit statuses.
struct Error : std::runtime_error {
  std::string code;
  Error(std::string c, const std::string& what) : std::runtime_error(what), code(std::move(c)) {}
};

// Canonical form of a nonzero complex 3-vector: unit Euclidean norm and the
// first coordinate of (near-)maximal modulus has argument 0. The modulus band
// for "maximal" is relative 1e-6 so the chosen index is stable along
// convergent sequences.
Eigen::Vector3cd canonical_vec(const Eigen::Vector3cd& v);
// Same normalization for matrices, Frobenius norm 1, row-major entry order.
Eigen::Matrix3cd canonical_mat(const Eigen::Matrix3cd& m);

struct ProjPoint {
  Eigen::Vector3cd canon;        // canonical normalized coordinates
  std::optional<Vec3> exact_lift;  // unnormalized exact coordinates, if any

  ProjPoint() : canon(1, 0, 0) {}
  explicit ProjPoint(const Eigen::Vector3cd& v) : canon(canonical_vec(v)) {}
  explicit ProjPoint(const Vec3& v);

  bool exact() const { return exact_lift.has_value(); }
  static ProjPoint e(int i) {
    Eigen::Vector3cd v = Eigen::Vector3cd::Zero(); v(i) = 1.0;
    return ProjPoint(v);
  }
};

// Lines carry dual homogeneous coordinates; incidence is the plain bilinear
// form l . z = 0.
struct ProjLine {
  Eigen::Vector3cd canon;
  std::optional<Vec3> exact_lift;

  ProjLine() : canon(0, 0, 1) {}
  explicit ProjLine(const Eigen::Vector3cd& v) : canon(canonical_vec(v)) {}
  explicit ProjLine(const Vec3& v);
};

struct ProjSubspace {
  enum class Kind { Empty, Point, Line } kind = Kind::Empty;
  ProjPoint point;
  ProjLine line;

  static ProjSubspace empty() { return {}; }
  static ProjSubspace of_point(ProjPoint p) { ProjSubspace s; s.kind = Kind::Point; s.point = std::move(p); return s; }
  static ProjSubspace of_line(ProjLine l) { ProjSubspace s; s.kind = Kind::Line; s.line = std::move(l); return s; }
  int proj_dim() const { return kind == Kind::Empty ? -1 : kind == Kind::Point ? 0 : 1; }
};

// Nonzero 3x3 complex matrix modulo scalar. Stores the raw lift (for exact
// work) plus the canonical double form and the SVD-derived kernel dimension.
struct PseudoProjMap {
  Mat3 lift;                 // raw representative
  Eigen::Matrix3cd canon;    // canonical normalized form
  int kernelDim = 0;         // number of singular values below kappa * sigma1
  double sigma[3] = {0, 0, 0};

  PseudoProjMap() : PseudoProjMap(Mat3::identity()) {}
  explicit PseudoProjMap(const Mat3& m, double kappa = 1e-6);
  explicit PseudoProjMap(const Eigen::Matrix3cd& m, double kappa = 1e-6)
      : PseudoProjMap(Mat3::from_eigen(m), kappa) {}

  bool invertible() const { return kernelDim == 0; }
  bool exact() const { return lift.exact(); }
  PseudoProjMap inverse() const;
  friend PseudoProjMap operator*(const PseudoProjMap& a, const PseudoProjMap& b) {
    return PseudoProjMap(a.lift * b.lift);
  }
};

struct LambdaPair {
  PseudoProjMap P, Q;
  double a = 0.0, b = 0.0;   // exponent gaps, <= 0, -inf allowed
  bool nondegenerate = true; // false when the tail never leaves PSL(3,C)
  double relation_residual = 0.0;  // worst membership residual of the 4 relations
};

// --- operations -----------------------------------------------------------

ProjPoint apply(const PseudoProjMap& m, const ProjPoint& p, double eps = 1e-9);
ProjLine line_through(const ProjPoint& p, const ProjPoint& q, double eps = 1e-9);
ProjSubspace kernel(const PseudoProjMap& m, double kappa = 1e-6);
// Image of a degenerate map: Point for rank 1, Line for rank 2, Line-free
// (Empty used to signal full rank; callers treat it as all of P^2).
ProjSubspace image(const PseudoProjMap& m, double kappa = 1e-6);
PseudoProjMap dual_map(const PseudoProjMap& g);

// Determinant-1 lift of an invertible map; cube-root phase chosen with
// argument in (-pi/3, pi/3].
Eigen::Matrix3cd det1_lift(const PseudoProjMap& g);

LambdaPair svd_limit(const std::vector<PseudoProjMap>& seq, const Tol& tol = {});

double proj_distance(const ProjPoint& x, const ProjPoint& y);
double proj_distance(const ProjLine& x, const ProjLine& y);
double proj_distance(const PseudoProjMap& x, const PseudoProjMap& y);

// Distance from a point to the zero set of a line (chordal point-line gap).
double point_line_gap(const ProjPoint& p, const ProjLine& l);

// Projective equality of exact lifts (no norms involved); falls back to the
// metric test at eps when either side lacks exact data.
bool proj_equal(const PseudoProjMap& a, const PseudoProjMap& b, double eps = 1e-9);

}  // namespace parak
