#include "parak/classify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace parak {

namespace {

// Eigenvalues of a defective matrix leave the eigensolver with errors of
// order (backward error)^(1/3); clustering at 5e-4 absorbs that for
// conjugating matrices of condition number up to ~1e3 while keeping
// genuinely distinct spectra (separated by >= 1e-2 in practice) apart.
constexpr double kClusterTol = 5e-4;

struct Cluster {
  cplx value;        // multiplicity-refined representative
  int multiplicity;  // algebraic
};

std::vector<Cluster> cluster_eigenvalues(const Eigen::Matrix3cd& L) {
  Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(L, false);
  std::array<cplx, 3> ev{es.eigenvalues()(0), es.eigenvalues()(1), es.eigenvalues()(2)};
  double scale = std::max({std::abs(ev[0]), std::abs(ev[1]), std::abs(ev[2]), 1e-300});

  std::array<int, 3> rep = {0, 1, 2};
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (std::abs(ev[i] - ev[j]) < kClusterTol * scale) {
        int a = std::min(rep[i], rep[j]);
        int b = std::max(rep[i], rep[j]);
        for (auto& r : rep)
          if (r == b) r = a;
      }

  std::vector<Cluster> out;
  cplx tr = L.trace();
  for (int r = 0; r < 3; ++r) {
    if (rep[r] != r) continue;
    Cluster c{cplx(0, 0), 0};
    for (int i = 0; i < 3; ++i)
      if (rep[i] == r) {
        c.value += ev[i];
        c.multiplicity += 1;
      }
    c.value /= double(c.multiplicity);
    out.push_back(c);
  }

  // A defective eigenvalue of multiplicity m is recovered far more accurately
  // from the trace than from the raw eigensolver output: the simple
  // eigenvalues carry errors ~1e-14, so trace subtraction inherits that.
  if (out.size() == 1) {
    out[0].value = tr / 3.0;
  } else if (out.size() == 2) {
    int dbl = out[0].multiplicity == 2 ? 0 : 1;
    out[dbl].value = (tr - out[1 - dbl].value) / 2.0;
  }
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) {
    if (a.multiplicity != b.multiplicity) return a.multiplicity > b.multiplicity;
    if (std::abs(a.value.real() - b.value.real()) > 1e-12) return a.value.real() > b.value.real();
    return a.value.imag() > b.value.imag();
  });
  return out;
}

int rank_at(const Eigen::Matrix3cd& M, double kappa) {
  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(M);
  const auto& s = svd.singularValues();
  if (s(0) <= 0) return 0;
  int r = 0;
  for (int i = 0; i < 3; ++i)
    if (s(i) > kappa * s(0)) ++r;
  return r;
}

int lcm_int(int a, int b) { return a / std::gcd(a, b) * b; }

// Least common projective order of the eigenvalue ratios, or 0 if some ratio
// is not a root of unity within nMax.
int projective_order(const std::vector<Cluster>& cl, int nMax, const Tol& tol) {
  if (cl.size() == 1) return 1;
  int order = 1;
  for (size_t i = 1; i < cl.size(); ++i) {
    auto r = is_root_of_unity(Scalar(cl[i].value / cl[0].value), nMax, tol);
    if (!r.isRoot) return 0;
    order = lcm_int(order, r.order);
    if (order > nMax) return 0;
  }
  return order;
}

double sigma_ratio(const Eigen::Matrix3cd& M) {
  Eigen::JacobiSVD<Eigen::Matrix3cd> svd(M);
  const auto& s = svd.singularValues();
  return s(2) > 0 ? s(0) / s(2) : std::numeric_limits<double>::infinity();
}

}  // namespace

RootOfUnityResult is_root_of_unity(const Scalar& lambda, int nMax, const Tol& tol) {
  RootOfUnityResult res;
  res.nMax = nMax;
  double mod = std::abs(lambda.v);
  if (std::abs(std::log(std::max(mod, 1e-300))) > 1e-6)
    throw Error("OffCircle", "is_root_of_unity: |lambda| differs from 1 beyond tolerance");

  if (lambda.ex) {
    // Exact unit-modulus Gaussian rationals: lambda^n = 1 is decidable.
    GQ acc{Rat(1), Rat(0)};
    const GQ& l = *lambda.ex;
    for (int n = 1; n <= nMax; ++n) {
      acc = acc * l;
      if (acc.re == Rat(1) && acc.im == Rat(0)) {
        res.isRoot = true;
        res.order = n;
        return res;
      }
    }
    res.isRoot = false;
    // fall through to record the float CF approximation as a diagnostic
  }

  cplx acc(1, 0);
  double best = 2.0;
  for (int n = 1; n <= nMax; ++n) {
    acc *= lambda.v / mod;  // renormalized power, error stays ~n*eps_machine
    double d = std::abs(acc - cplx(1, 0));
    if (d < best) {
      best = d;
      res.bestP = 0;
      res.bestQ = n;
    }
    if (!lambda.ex && d < tol.eps) {
      res.isRoot = true;
      res.order = n;
      res.bestResidual = d;
      // recover p from the winding: n*arg(lambda) ~ 2 pi p
      res.bestP = std::llround(double(n) * std::arg(lambda.v) / (2.0 * M_PI));
      res.bestQ = n;
      return res;
    }
  }
  res.bestResidual = best;
  double theta = std::arg(lambda.v) / (2.0 * M_PI);
  res.bestP = std::llround(theta * double(res.bestQ));
  return res;
}

ElementClass classify_element(const PseudoProjMap& g, const Tol& tol, int nMax) {
  if (!g.invertible())
    throw Error("Singular", "classify_element: map is not invertible");

  ElementClass out;
  Eigen::Matrix3cd L = det1_lift(g);
  auto clusters = cluster_eigenvalues(L);

  {
    int k = 0;
    for (const auto& c : clusters)
      for (int i = 0; i < c.multiplicity; ++i) out.eigenvalues[k++] = c.value;
  }

  double margin = 0.0;
  for (const auto& c : clusters)
    margin = std::max(margin, std::abs(std::log(std::abs(c.value))));
  out.unitModulusMargin = margin;

  // Moduli within a factor-10 band around the tolerance are flagged: the
  // verdict below is still returned, but downstream callers can refuse it.
  double eps = std::max(tol.eps, 1e-12);
  if (margin > 0.1 * eps && margin < 10.0 * eps) {
    out.borderline = true;
    out.note = "eigenvalue modulus within the tolerance band of 1";
  }

  bool allUnit = margin <= eps;
  if (!allUnit) {
    out.kind = ElementKind::Loxodromic;
    return out;
  }

  if (clusters.size() == 3) {
    out.kind = ElementKind::Elliptic;
    out.ellipticOrder = projective_order(clusters, nMax, tol);
    return out;
  }

  if (clusters.size() == 1) {
    cplx l0 = clusters[0].value;
    int rk = rank_at(L - l0 * Eigen::Matrix3cd::Identity(), tol.kappa);
    if (rk == 0) {
      out.kind = ElementKind::Elliptic;
      out.ellipticOrder = 1;
      out.note = "projectively the identity";
      return out;
    }
    out.kind = ElementKind::Parabolic;
    out.subtype = rk == 1 ? ParabolicSubtype::UnipotentMinPoly2 : ParabolicSubtype::UnipotentMinPoly3;
    return out;
  }

  // One double, one simple unit eigenvalue.
  cplx ld = clusters[0].value;  // sorted by multiplicity: double first
  int rk = rank_at(L - ld * Eigen::Matrix3cd::Identity(), tol.kappa);
  if (rk <= 1) {
    out.kind = ElementKind::Elliptic;
    out.ellipticOrder = projective_order(clusters, nMax, tol);
    return out;
  }
  out.kind = ElementKind::Parabolic;
  // The projective multiplier of the screw part is the double eigenvalue of
  // any det-1 lift; cubing removes the cube-root-of-unity lift ambiguity.
  Scalar l3(ld * ld * ld);
  if (g.exact()) {
    // Recover the exact multiplier when the lift is exact: the double
    // eigenvalue equals trace minus the simple one, but exactness only
    // survives if the matrix is triangular; fall back to float otherwise.
    const Mat3& t = g.lift;
    bool lowerZero = t(1, 0).is_zero() && t(2, 0).is_zero() && t(2, 1).is_zero();
    if (lowerZero) {
      std::array<GQ, 3> d{*t(0, 0).ex, *t(1, 1).ex, *t(2, 2).ex};
      GQ dd = d[1];  // the repeated diagonal value
      if (d[0] == d[1] || d[0] == d[2]) dd = d[0];
      GQ det = d[0] * d[1] * d[2];
      GQ cube = (dd * dd * dd) / det;  // (lambda_double / det^{1/3})^3
      l3 = Scalar(cube);
    }
  }
  auto root = is_root_of_unity(l3, nMax, tol);
  out.subtype = root.isRoot ? ParabolicSubtype::ElliptoParabolicRational
                            : ParabolicSubtype::ElliptoParabolicIrrational;
  out.ellipticOrder = root.order;
  return out;
}

ElementClass classify_by_kulkarni(const PseudoProjMap& g, int budget, const Tol& tol) {
  if (!g.invertible())
    throw Error("Singular", "classify_by_kulkarni: map is not invertible");
  if (budget < 8)
    throw Error("BudgetTooSmall", "classify_by_kulkarni: budget must be at least 8");

  ElementClass out;
  Eigen::Matrix3cd L = det1_lift(g);
  Eigen::Matrix3cd Li = L.inverse();

  std::vector<double> ratios;
  Eigen::Matrix3cd p = Eigen::Matrix3cd::Identity();
  Eigen::Matrix3cd q = Eigen::Matrix3cd::Identity();
  for (int n = 1; n <= budget; ++n) {
    p = canonical_mat(p * L);
    q = canonical_mat(q * Li);
    ratios.push_back(sigma_ratio(p));
  }

  // Bounded orbits of the canonical powers mean equicontinuity: fit the
  // growth of log(sigma_1/sigma_3) against log n over the back half. A
  // conjugated elliptic stays bounded (slope ~0 plus oscillation), parabolic
  // grows like n or n^2, loxodromic like e^n.
  int h = budget / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int n = h; n < budget; ++n) {
    double x = std::log(double(n + 1));
    double y = std::log(std::max(ratios[size_t(n)], 1.0));
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++cnt;
  }
  double denom = cnt * sxx - sx * sx;
  double slope = denom > 1e-12 ? (cnt * sxy - sx * sy) / denom : 0.0;
  double last = ratios.back();

  if (slope < 0.2 && last < 1e8) {
    out.kind = ElementKind::Elliptic;
    out.note = "bounded canonical powers";
    return out;
  }

  // Diverging case: keep squaring the canonical power until the singular
  // value gap crosses the kernel threshold decisively, then compare the
  // forward and backward attractor images. One shared attracting subspace
  // means parabolic; disjoint attractors mean loxodromic.
  for (int it = 0; it < 100 && sigma_ratio(p) < 1e13; ++it) p = canonical_mat(p * p);
  for (int it = 0; it < 100 && sigma_ratio(q) < 1e13; ++it) q = canonical_mat(q * q);
  PseudoProjMap pf(Mat3::from_eigen(p), tol.kappa);
  PseudoProjMap pb(Mat3::from_eigen(q), tol.kappa);
  ProjSubspace imF = image(pf, tol.kappa);
  ProjSubspace imB = image(pb, tol.kappa);

  auto disjoint = [&](const ProjSubspace& a, const ProjSubspace& b) {
    if (a.kind == ProjSubspace::Kind::Empty || b.kind == ProjSubspace::Kind::Empty)
      return false;  // full-rank tail: no attractor resolved
    if (a.kind == ProjSubspace::Kind::Line && b.kind == ProjSubspace::Kind::Line)
      return false;  // two projective lines always meet
    if (a.kind == ProjSubspace::Kind::Point && b.kind == ProjSubspace::Kind::Point)
      return proj_distance(a.point, b.point) > 1e-3;
    const ProjPoint& pt = a.kind == ProjSubspace::Kind::Point ? a.point : b.point;
    const ProjLine& ln = a.kind == ProjSubspace::Kind::Line ? a.line : b.line;
    return point_line_gap(pt, ln) > 1e-3;
  };

  if (imF.kind == ProjSubspace::Kind::Empty && imB.kind == ProjSubspace::Kind::Empty) {
    out.kind = ElementKind::Elliptic;
    out.note = "powers diverge slowly but no attractor resolved at this budget";
    return out;
  }
  out.kind = disjoint(imF, imB) ? ElementKind::Loxodromic : ElementKind::Parabolic;
  out.note = "from forward/backward attractor comparison";
  return out;
}

}  // namespace parak
