#include "parak/projective.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace parak {

namespace {

// First index whose modulus is within relative band 1e-6 of the maximum.
// The band keeps the index stable along convergent sequences.
template <typename V>
int leading_index(const V& v, int n) {
  double mx = 0;
  for (int i = 0; i < n; ++i) mx = std::max(mx, std::abs(v(i)));
  for (int i = 0; i < n; ++i)
    if (std::abs(v(i)) >= mx * (1.0 - 1e-6)) return i;
  return 0;
}

}  // namespace

Eigen::Vector3cd canonical_vec(const Eigen::Vector3cd& v) {
  double n = v.norm();
  if (n == 0) throw Error("ZeroVector", "canonical_vec: zero vector");
  Eigen::Vector3cd w = v / n;
  int k = leading_index(w, 3);
  cplx ph = w(k) / std::abs(w(k));
  return w / ph;
}

Eigen::Matrix3cd canonical_mat(const Eigen::Matrix3cd& m) {
  double n = m.norm();
  if (n == 0) throw Error("ZeroMatrix", "canonical_mat: zero matrix");
  Eigen::Matrix3cd w = m / n;
  Eigen::Matrix<cplx, 9, 1> flat;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) flat(3 * i + j) = w(i, j);
  int k = leading_index(flat, 9);
  cplx ph = flat(k) / std::abs(flat(k));
  return w / ph;
}

ProjPoint::ProjPoint(const Vec3& v) : canon(canonical_vec(v.to_eigen())) {
  if (v.exact()) exact_lift = v;
}

ProjLine::ProjLine(const Vec3& v) : canon(canonical_vec(v.to_eigen())) {
  if (v.exact()) exact_lift = v;
}

PseudoProjMap::PseudoProjMap(const Mat3& m, double kappa) : lift(m) {
  Eigen::Matrix3cd e = m.to_eigen();
  canon = canonical_mat(e);
  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(canon);
  for (int i = 0; i < 3; ++i) sigma[i] = svd.singularValues()(i);
  kernelDim = 0;
  for (int i = 0; i < 3; ++i)
    if (sigma[i] < kappa * sigma[0]) ++kernelDim;
}

PseudoProjMap PseudoProjMap::inverse() const {
  if (kernelDim > 0) throw Error("Singular", "inverse of a degenerate map");
  return PseudoProjMap(lift.inverse());
}

ProjPoint apply(const PseudoProjMap& m, const ProjPoint& p, double eps) {
  Eigen::Vector3cd w = m.canon * p.canon;
  if (w.norm() < eps) throw Error("KernelHit", "apply: point lies in the kernel");
  ProjPoint r(w);
  if (m.exact() && p.exact()) {
    Vec3 ew = m.lift * *p.exact_lift;
    if (!(ew[0].is_zero() && ew[1].is_zero() && ew[2].is_zero())) r.exact_lift = ew;
  }
  return r;
}

ProjLine line_through(const ProjPoint& p, const ProjPoint& q, double eps) {
  Eigen::Vector3cd c = p.canon.cross(q.canon);  // plain bilinear cross product
  if (c.norm() < eps) throw Error("DegeneratePair", "line_through: equal points");
  ProjLine r(c);
  if (p.exact() && q.exact()) {
    const Vec3& a = *p.exact_lift;
    const Vec3& b = *q.exact_lift;
    Vec3 e;
    e[0] = a[1] * b[2] - a[2] * b[1];
    e[1] = a[2] * b[0] - a[0] * b[2];
    e[2] = a[0] * b[1] - a[1] * b[0];
    if (!(e[0].is_zero() && e[1].is_zero() && e[2].is_zero())) r.exact_lift = e;
  }
  return r;
}

ProjSubspace kernel(const PseudoProjMap& m, double kappa) {
  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(m.canon, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int k = 0;
  for (int i = 0; i < 3; ++i)
    if (s(i) < kappa * s(0)) ++k;
  if (k == 0) return ProjSubspace::empty();
  if (k == 1) return ProjSubspace::of_point(ProjPoint(svd.matrixV().col(2)));
  // Two-dimensional kernel: the plane orthogonal to the top right singular
  // vector; its dual coordinates are the conjugate of that vector.
  Eigen::Vector3cd l = svd.matrixV().col(0).conjugate();
  return ProjSubspace::of_line(ProjLine(l));
}

ProjSubspace image(const PseudoProjMap& m, double kappa) {
  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(m.canon, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < 3; ++i)
    if (s(i) >= kappa * s(0)) ++rank;
  if (rank >= 3) return ProjSubspace::empty();  // full rank: image is all of P^2
  if (rank == 1) return ProjSubspace::of_point(ProjPoint(svd.matrixU().col(0)));
  Eigen::Vector3cd l = svd.matrixU().col(0).cross(svd.matrixU().col(1));
  return ProjSubspace::of_line(ProjLine(l));
}

PseudoProjMap dual_map(const PseudoProjMap& g) {
  if (g.kernelDim > 0) throw Error("Singular", "dual_map: map is degenerate");
  return PseudoProjMap(g.lift.transpose().inverse());
}

Eigen::Matrix3cd det1_lift(const PseudoProjMap& g) {
  cplx d = g.canon.determinant();
  if (std::abs(d) == 0) throw Error("Singular", "det1_lift: zero determinant");
  double r = std::cbrt(std::abs(d));
  double th = std::arg(d) / 3.0;  // in (-pi/3, pi/3]
  cplx root = std::polar(r, th);
  return g.canon / root;
}

double proj_distance(const ProjPoint& x, const ProjPoint& y) {
  cplx ip = x.canon.dot(y.canon);  // Eigen's dot conjugates the left factor
  double c = std::min(1.0, std::abs(ip));
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * c));
}

double proj_distance(const ProjLine& x, const ProjLine& y) {
  cplx ip = x.canon.dot(y.canon);
  double c = std::min(1.0, std::abs(ip));
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * c));
}

double proj_distance(const PseudoProjMap& x, const PseudoProjMap& y) {
  cplx ip = (x.canon.adjoint() * y.canon).trace();
  double c = std::min(1.0, std::abs(ip));
  return std::sqrt(std::max(0.0, 2.0 - 2.0 * c));
}

double point_line_gap(const ProjPoint& p, const ProjLine& l) {
  // |l . p| over unit representatives: chordal distance from p to the line.
  return std::abs((l.canon.transpose() * p.canon)(0, 0));
}

bool proj_equal(const PseudoProjMap& a, const PseudoProjMap& b, double eps) {
  if (a.exact() && b.exact()) {
    // Find the first exactly-nonzero entry of b, scale, and compare exactly.
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (!b.lift(i, j).ex->is_zero()) {
          if (a.lift(i, j).ex->is_zero()) return false;
          GQ lam = *a.lift(i, j).ex / *b.lift(i, j).ex;
          for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
              if (*a.lift(r, c).ex != lam * *b.lift(r, c).ex) return false;
          return true;
        }
      }
    return false;  // b exactly zero cannot happen for a valid map
  }
  return proj_distance(a, b) < eps;
}

LambdaPair svd_limit(const std::vector<PseudoProjMap>& seq, const Tol& tol) {
  if (seq.size() < 2) throw Error("ShortSequence", "svd_limit: need at least 2 elements");
  size_t n = seq.size();
  size_t t0 = n >= 3 ? n - 3 : 0;

  auto cauchy = [&](auto&& get) {
    double worst = 0;
    for (size_t i = t0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        worst = std::max(worst, proj_distance(get(i), get(j)));
    return worst;
  };

  double fw = cauchy([&](size_t i) -> const PseudoProjMap& { return seq[i]; });
  if (fw > 10 * tol.eps) {
    // Not Cauchy. Distinguish the elliptic (bounded) pattern from a genuine
    // failure: bounded singular-value ratios mean no degeneration at all.
    double maxratio = 0;
    for (const auto& g : seq) maxratio = std::max(maxratio, g.sigma[0] / std::max(g.sigma[2], 1e-300));
    if (maxratio < 1e4) {
      LambdaPair lp;
      lp.P = seq.back();
      lp.Q = seq.back().invertible() ? seq.back().inverse() : seq.back();
      lp.a = std::log(lp.P.sigma[1] / lp.P.sigma[0]);
      lp.b = lp.a;
      lp.nondegenerate = false;
      return lp;
    }
    throw Error("NotConverging", "svd_limit: canonical tail is not Cauchy");
  }

  std::vector<PseudoProjMap> invs;
  invs.reserve(n - t0);
  for (size_t i = t0; i < n; ++i) {
    if (!seq[i].invertible()) throw Error("Singular", "svd_limit: sequence element degenerate");
    invs.push_back(seq[i].inverse());
  }
  double bw = 0;
  for (size_t i = 0; i < invs.size(); ++i)
    for (size_t j = i + 1; j < invs.size(); ++j)
      bw = std::max(bw, proj_distance(invs[i], invs[j]));
  if (bw > 10 * tol.eps) throw Error("NotConverging", "svd_limit: inverse tail is not Cauchy");

  LambdaPair lp;
  lp.P = PseudoProjMap(seq.back().canon, tol.kappa);
  lp.Q = PseudoProjMap(invs.back().canon, tol.kappa);
  double ra = lp.P.sigma[1] / lp.P.sigma[0];
  double rb = lp.Q.sigma[1] / lp.Q.sigma[0];
  lp.a = ra < tol.kappa ? -std::numeric_limits<double>::infinity() : std::log(ra);
  lp.b = rb < tol.kappa ? -std::numeric_limits<double>::infinity() : std::log(rb);
  lp.nondegenerate = lp.P.kernelDim > 0 || lp.Q.kernelDim > 0;

  // Membership residuals Im(P) subset Ker(Q) and Im(Q) subset Ker(P), using
  // singular bases of the canonical forms.
  auto residual = [&](const PseudoProjMap& A, const PseudoProjMap& B) {
    // max over image basis u of A of |B u| relative to sigma1(B)
    Eigen::JacobiSVD<Eigen::Matrix3cd> svd(A.canon, Eigen::ComputeFullU);
    int rank = 3 - A.kernelDim;
    double worst = 0;
    for (int i = 0; i < rank && i < 3; ++i) {
      Eigen::Vector3cd u = svd.matrixU().col(i);
      worst = std::max(worst, (B.canon * u).norm() / B.sigma[0]);
    }
    return worst;
  };
  if (lp.nondegenerate)
    lp.relation_residual = std::max(residual(lp.P, lp.Q), residual(lp.Q, lp.P));
  return lp;
}

}  // namespace parak
