#include "parak/lattice.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace parak {

namespace {

bool scalar_exact(const Scalar& s) { return s.exact(); }

std::vector<std::vector<double>> coord_rows(const AdditiveSubgroup& W) {
  std::vector<std::vector<double>> rows;
  if (W.ambient2) {
    for (const auto& g : W.gens2)
      rows.push_back({g[0].v.real(), g[0].v.imag(), g[1].v.real(), g[1].v.imag()});
  } else {
    for (const auto& g : W.gens) rows.push_back({g.v.real(), g.v.imag()});
  }
  return rows;
}

// Exact rational coordinate matrix with columns scaled integral.
ZMat exact_rows(const AdditiveSubgroup& W) {
  std::vector<std::vector<Rat>> rat;
  if (W.ambient2) {
    for (const auto& g : W.gens2)
      rat.push_back({g[0].ex->re, g[0].ex->im, g[1].ex->re, g[1].ex->im});
  } else {
    for (const auto& g : W.gens) rat.push_back({g.ex->re, g.ex->im});
  }
  size_t m = rat.size(), n = m ? rat[0].size() : 0;
  ZMat out(m, std::vector<cpp_int>(n, 0));
  for (size_t j = 0; j < n; ++j) {
    cpp_int L = 1;
    for (size_t i = 0; i < m; ++i) L = boost::multiprecision::lcm(L, rat[i][j].den);
    for (size_t i = 0; i < m; ++i) out[i][j] = rat[i][j].num * (L / rat[i][j].den);
  }
  return out;
}

std::vector<long long> to_ll(const std::vector<cpp_int>& v, size_t take) {
  std::vector<long long> out;
  out.reserve(take);
  for (size_t i = 0; i < take; ++i) {
    if (v[i] > std::numeric_limits<long long>::max() || v[i] < std::numeric_limits<long long>::min())
      throw Error("Overflow", "integer relation coefficient exceeds 64 bits");
    out.push_back(v[i].convert_to<long long>());
  }
  return out;
}

struct RelationDetect {
  std::vector<std::vector<long long>> relations;
  bool inconclusive = false;
  double graySignal = 0.0;
};

// Integer relations among r items with real residual coordinates rows[i].
// Embeds [I | K * coords / scale] rows, reduces, then verifies candidate
// combinations against the unrounded data. Residuals between the acceptance
// and rejection thresholds set the inconclusive flag.
RelationDetect detect_relations(const std::vector<std::vector<double>>& rows, double K,
                                double coeffBound) {
  RelationDetect out;
  size_t r = rows.size();
  if (r == 0) return out;
  size_t k = rows[0].size();

  double scale = 0;
  for (const auto& row : rows)
    for (double x : row) scale = std::max(scale, std::abs(x));
  if (scale == 0) {
    for (size_t i = 0; i < r; ++i) {
      std::vector<long long> e(r, 0);
      e[i] = 1;
      out.relations.push_back(std::move(e));
    }
    return out;
  }

  ZMat B(r, std::vector<cpp_int>(r + k, 0));
  for (size_t i = 0; i < r; ++i) {
    B[i][i] = 1;
    for (size_t j = 0; j < k; ++j)
      B[i][r + j] = cpp_int(std::llround(K * rows[i][j] / scale));
  }
  lll_reduce(B);

  double acceptTol = 1e3 / K;
  double grayTol = 1e5 / K;
  ZMat accepted;
  for (const auto& row : B) {
    bool small = true;
    double l1 = 0;
    for (size_t i = 0; i < r; ++i) {
      double c = std::abs(row[i].convert_to<double>());
      l1 += c;
      if (c > coeffBound) small = false;
    }
    if (!small || l1 == 0) continue;
    double worst = 0;
    for (size_t j = 0; j < k; ++j) {
      double s = 0;
      for (size_t i = 0; i < r; ++i) s += row[i].convert_to<double>() * rows[i][j];
      worst = std::max(worst, std::abs(s));
    }
    double rho = worst / scale;
    if (rho < acceptTol * (1.0 + l1)) {
      accepted.push_back(std::vector<cpp_int>(row.begin(), row.begin() + long(r)));
    } else if (rho < grayTol * (1.0 + l1)) {
      out.inconclusive = true;
      if (out.graySignal == 0 || rho < out.graySignal) out.graySignal = rho;
    }
  }
  if (!accepted.empty()) {
    HnfResult h = hnf(accepted);
    for (int i = 0; i < h.rank; ++i) out.relations.push_back(to_ll(h.H[size_t(i)], r));
  }
  return out;
}

cplx principal_direction(const std::vector<cplx>& vals) {
  cplx best(0, 0);
  for (const auto& v : vals)
    if (std::abs(v) > std::abs(best)) best = v;
  return best / std::abs(best);
}

}  // namespace

bool AdditiveSubgroup::exact() const {
  if (ambient2) {
    for (const auto& g : gens2)
      if (!scalar_exact(g[0]) || !scalar_exact(g[1])) return false;
  } else {
    for (const auto& g : gens)
      if (!scalar_exact(g)) return false;
  }
  return true;
}

RankResult z_rank(const AdditiveSubgroup& W, const Tol&) {
  RankResult out;
  int r = W.count();
  if (r == 0) return out;

  if (W.exact()) {
    ZMat A = exact_rows(W);
    out.rank = z_rank_exact(A);
    for (const auto& rel : left_kernel(A)) out.relations.push_back(to_ll(rel, size_t(r)));
    return out;
  }

  auto det = detect_relations(coord_rows(W), W.precision, W.coeffBound);
  out.relations = det.relations;
  out.inconclusive = det.inconclusive;
  out.graySignal = det.graySignal;
  out.rank = r - int(det.relations.size());
  return out;
}

namespace {

// Search for a short nonzero combination of the values below the witness
// threshold; retries over a few embedding scales.
void attach_density_witness(ClosureResult& res, const std::vector<cplx>& vals,
                            double coeffBound) {
  double scale = 0;
  for (const auto& v : vals) scale = std::max(scale, std::abs(v));
  double target = 1e-3 * std::max(1.0, scale);
  for (double K : {1e5, 1e6, 1e7, 1e8}) {
    size_t r = vals.size();
    ZMat B(r, std::vector<cpp_int>(r + 2, 0));
    for (size_t i = 0; i < r; ++i) {
      B[i][i] = 1;
      B[i][r] = cpp_int(std::llround(K * vals[i].real() / scale));
      B[i][r + 1] = cpp_int(std::llround(K * vals[i].imag() / scale));
    }
    lll_reduce(B);
    for (const auto& row : B) {
      bool small = true;
      bool nonzero = false;
      for (size_t i = 0; i < r; ++i) {
        if (abs(row[i].convert_to<double>()) > coeffBound) small = false;
        if (row[i] != 0) nonzero = true;
      }
      if (!small || !nonzero) continue;
      cplx s(0, 0);
      for (size_t i = 0; i < r; ++i) s += row[i].convert_to<double>() * vals[i];
      if (std::abs(s) > 1e-15 * scale && std::abs(s) < target) {
        res.witnessCombo = to_ll(row, r);
        res.witnessValue = std::abs(s);
        return;
      }
    }
  }
}

}  // namespace

ClosureResult closure_type(const AdditiveSubgroup& W, const Tol& tol) {
  if (W.ambient2) throw Error("BadInput", "closure_type: ambient C expected");
  ClosureResult out;

  // Keep original indexing for witness combos: zero generators participate
  // with coefficient 0.
  std::vector<cplx> vals;
  std::vector<size_t> idx;
  double scale = 0;
  for (const auto& g : W.gens) scale = std::max(scale, g.abs());
  for (size_t i = 0; i < W.gens.size(); ++i)
    if (W.gens[i].abs() > 1e-12 * std::max(scale, 1.0)) {
      vals.push_back(W.gens[i].v);
      idx.push_back(i);
    }
  if (vals.empty()) return out;  // Trivial

  AdditiveSubgroup Wr = AdditiveSubgroup::of({});
  for (const auto& v : vals) Wr.gens.push_back(Scalar(v));
  if (W.exact()) {
    for (size_t j = 0; j < idx.size(); ++j) Wr.gens[j] = W.gens[idx[j]];
  }
  Wr.precision = W.precision;
  Wr.coeffBound = W.coeffBound;

  RankResult rk = z_rank(Wr, tol);
  out.rank = rk.rank;
  out.inconclusive = rk.inconclusive;
  if (rk.rank == 0) return out;

  if (W.exact()) {
    // Finitely many Gaussian rationals span a discrete subgroup.
    out.kind = ClosureResult::Kind::DiscreteRank;
    return out;
  }

  // Real span of the values.
  Eigen::MatrixXd B(2, long(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) {
    B(0, long(i)) = vals[i].real();
    B(1, long(i)) = vals[i].imag();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
  int s = 0;
  for (int i = 0; i < 2; ++i)
    if (svd.singularValues()(i) > 1e-9 * svd.singularValues()(0)) ++s;

  if (s == 1) {
    out.direction = principal_direction(vals);
    if (rk.rank == 1) {
      out.kind = ClosureResult::Kind::DiscreteRank;
      return out;
    }
    out.kind = ClosureResult::Kind::DenseLine;
    attach_density_witness(out, vals, W.coeffBound);
  } else if (rk.rank == 2) {
    out.kind = ClosureResult::Kind::DiscreteRank;
    return out;
  } else {
    // Rank >= 3 spanning the plane: the closure is decided by the integer
    // points of the row space of B (characters of the closure).
    size_t r = vals.size();
    Eigen::MatrixXd N = svd.matrixV().rightCols(long(r) - 2);  // kernel of B
    std::vector<std::vector<double>> rows(r);
    for (size_t i = 0; i < r; ++i)
      for (long j = 0; j < N.cols(); ++j) rows[i].push_back(N(long(i), j));
    auto det = detect_relations(rows, W.precision, W.coeffBound);
    out.inconclusive = out.inconclusive || det.inconclusive;

    if (det.relations.empty()) {
      out.kind = ClosureResult::Kind::DensePlane;
      attach_density_witness(out, vals, W.coeffBound);
    } else if (det.relations.size() == 1) {
      out.kind = ClosureResult::Kind::LinePlusLattice;
      const auto& kvec = det.relations[0];
      // Integer character k_i = psi(w_i); divide by the value gcd so the
      // character image is exactly Z.
      long long g = 0;
      for (long long c : kvec) g = std::gcd(g, std::llabs(c));
      if (g == 0) g = 1;
      // Solve psi(z) = y1 Re z + y2 Im z with psi(w_i) = k_i / g by least
      // squares on the two-dimensional row space.
      Eigen::MatrixXd Bt = B.transpose();  // r x 2
      Eigen::VectorXd kv = Eigen::VectorXd::Zero(Eigen::Index(r));
      for (size_t i = 0; i < r; ++i) kv(Eigen::Index(i)) = double(kvec[i]) / double(g);
      Eigen::Vector2d y = (Bt.transpose() * Bt).ldlt().solve(Bt.transpose() * kv);
      cplx Y(y(0), y(1));
      out.direction = cplx(0, 1) * Y / std::abs(Y);
      out.transversal = Y / std::norm(Y);
      attach_density_witness(out, vals, W.coeffBound);
    } else {
      // Two independent characters would force discreteness, contradicting
      // rank >= 3; report the rank and flag the tension.
      out.kind = ClosureResult::Kind::DiscreteRank;
      out.inconclusive = true;
    }
  }

  // Re-express the witness combo in original generator indexing.
  if (!out.witnessCombo.empty() && idx.size() != W.gens.size()) {
    std::vector<long long> full(W.gens.size(), 0);
    for (size_t j = 0; j < idx.size(); ++j) full[idx[j]] = out.witnessCombo[j];
    out.witnessCombo = std::move(full);
  }
  return out;
}

LineRankResult line_rank_condition(const AdditiveSubgroup& W, const Tol& tol) {
  if (W.ambient2) throw Error("BadInput", "line_rank_condition: ambient C expected");
  LineRankResult out;

  std::vector<cplx> vals;
  double scale = 0;
  for (const auto& g : W.gens) scale = std::max(scale, g.abs());
  for (const auto& g : W.gens)
    if (g.abs() > 1e-12 * std::max(scale, 1.0)) vals.push_back(g.v);
  if (vals.size() < 3) return out;  // rank on any line is at most 2

  if (W.exact()) {
    // Gaussian-rational values on a common real line through 0 are rational
    // multiples of one another, so the intersection rank is at most 1.
    out.note = "exact Gaussian-rational generators: any line meets the group in rank <= 1";
    return out;
  }

  // Enumerate all combinations up to a coefficient height, bucket them by
  // direction modulo sign, and compute the rank of each bucket's coefficient
  // lattice directly. Deriving the line rank from the rank of off-line
  // offsets is unreliable here: four generic reals always admit pigeonhole
  // near-relations inside the detector's coefficient budget.
  size_t r = vals.size();
  int B = r == 3 ? 20 : r == 4 ? 10 : r == 5 ? 5 : r == 6 ? 3 : 2;
  struct Combo {
    cplx v;
    double ang;  // direction doubled: collinear mod sign means equal angle
    std::vector<int> n;
  };
  std::vector<Combo> combos;
  std::vector<int> n(r, -B);
  while (true) {
    cplx v(0, 0);
    for (size_t i = 0; i < r; ++i) v += double(n[i]) * vals[i];
    if (std::abs(v) > 1e-9 * scale) {
      cplx v2 = v * v;
      combos.push_back({v, std::atan2(v2.imag(), v2.real()), n});
    }
    size_t pos = 0;
    while (pos < r && n[pos] == B) n[pos++] = -B;
    if (pos == r) break;
    ++n[pos];
  }
  std::sort(combos.begin(), combos.end(),
            [](const Combo& a, const Combo& b) { return a.ang < b.ang; });

  auto bucket_rank = [&](size_t lo, size_t hi) {
    Eigen::MatrixXd M(hi - lo, long(r));
    for (size_t i = lo; i < hi; ++i)
      for (size_t j = 0; j < r; ++j) M(long(i - lo), long(j)) = double(combos[i].n[j]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-9);
    return int(lu.rank());
  };

  const double gap = 1e-8;
  size_t lo = 0;
  int best = 0;
  size_t m = combos.size();
  auto flush = [&](size_t a, size_t b) {
    if (b - a < 3) return;
    int rank = bucket_rank(a, b);
    if (rank > best) {
      best = rank;
      out.lineRank = rank;
      out.direction = combos[a].v / std::abs(combos[a].v);
      if (rank > 2) {
        out.holds = false;
        out.witnessCombos.clear();
        for (size_t i = a; i < b && out.witnessCombos.size() < 3; ++i) {
          std::vector<long long> w(combos[i].n.begin(), combos[i].n.end());
          out.witnessCombos.push_back(std::move(w));
        }
      }
    }
  };
  for (size_t i = 1; i < m; ++i) {
    if (combos[i].ang - combos[i - 1].ang > gap) {
      flush(lo, i);
      lo = i;
    }
  }
  flush(lo, m);
  // The doubled angle wraps at +-pi: merge the first and last buckets.
  if (!combos.empty() && combos.back().ang - combos.front().ang > 2 * M_PI - 2 * gap) {
    size_t tail = m;
    while (tail > 0 && combos.back().ang - combos[tail - 1].ang <= gap) --tail;
    size_t head = 0;
    while (head < m && combos[head].ang - combos.front().ang <= gap) ++head;
    if (tail < m && head > 0) {
      std::vector<Combo> merged(combos.begin() + long(tail), combos.end());
      merged.insert(merged.end(), combos.begin(), combos.begin() + long(head));
      std::vector<Combo> save = std::move(combos);
      combos = std::move(merged);
      flush(0, combos.size());
      combos = std::move(save);
    }
  }
  out.note = "verified at coefficient height <= " + std::to_string(B);
  return out;
}

RatlatResult ratlat_check(const Scalar& c, const Scalar& d, const Tol& tol) {
  RatlatResult out;
  auto to_rat = [&](const Scalar& s, const char* name) {
    if (s.ex) {
      if (!s.ex->is_real())
        throw Error("NotRational", std::string("ratlat_check: ") + name + " is not real");
      return s.ex->re;
    }
    if (std::abs(s.v.imag()) > tol.eps)
      throw Error("NotRational", std::string("ratlat_check: ") + name + " is not real");
    auto r = reconstruct_rational(s.v.real(), 1000000, 1e-9);
    if (!r)
      throw Error("NotRational",
                  std::string("ratlat_check: ") + name + " has no small rational reconstruction");
    return *r;
  };
  Rat rc = to_rat(c, "c");
  Rat rd = to_rat(d, "d");

  if (rd.is_zero()) {
    out.why = "d vanishes";
    return out;
  }
  cpp_int pd = rd.num, qd = rd.den;
  if (pd != 1 && pd != -1) {
    out.why = "d is not the reciprocal of an integer";
    return out;
  }
  cpp_int r = pd == 1 ? qd : cpp_int(-qd);
  cpp_int q2 = rc.den * rc.den;
  if (r % q2 != 0) {
    out.why = "q^2 does not divide r";
    return out;
  }
  out.yes = true;
  out.p = rc.num.convert_to<long long>();
  out.q = rc.den.convert_to<long long>();
  out.r = r.convert_to<long long>();
  // (0,1) = (-r p / q)(1,0) + r (c,d); (0,c) = (-r p^2/q^2)(1,0) + (r p / q)(c,d)
  cpp_int u1 = -(r / rc.den) * rc.num;
  cpp_int s2 = (r / rc.den) * rc.num;
  cpp_int s1 = -(r / q2) * rc.num * rc.num;
  out.witnessUnit = {u1.convert_to<long long>(), out.r};
  out.witnessSlope = {s1.convert_to<long long>(), s2.convert_to<long long>()};
  return out;
}

namespace {

std::optional<std::vector<long long>> combo_from_kernel(const ZMat& ker, size_t r) {
  if (ker.empty()) return std::nullopt;
  // Fold the kernel rows to a vector whose last coordinate is the gcd of all
  // last coordinates; membership needs that gcd to be 1.
  std::vector<cpp_int> acc;
  cpp_int t = 0;
  for (const auto& row : ker) {
    if (row[r] == 0) continue;
    if (acc.empty()) {
      acc = row;
      t = row[r];
      continue;
    }
    // extended gcd of (t, row[r])
    cpp_int a = t, b = row[r], x0 = 1, x1 = 0, y0 = 0, y1 = 1;
    while (b != 0) {
      cpp_int qq = a / b;
      a -= qq * b; std::swap(a, b);
      x0 -= qq * x1; std::swap(x0, x1);
      y0 -= qq * y1; std::swap(y0, y1);
    }
    std::vector<cpp_int> next(acc.size());
    for (size_t i = 0; i < acc.size(); ++i) next[i] = x0 * acc[i] + y0 * row[i];
    acc = std::move(next);
    t = acc[r];
  }
  if (acc.empty() || !(t == 1 || t == -1)) return std::nullopt;
  std::vector<long long> combo(r);
  for (size_t i = 0; i < r; ++i) {
    cpp_int v = t == 1 ? cpp_int(-acc[i]) : acc[i];
    combo[i] = v.convert_to<long long>();
  }
  return combo;
}

}  // namespace

std::optional<std::vector<long long>> lattice_membership(const AdditiveSubgroup& W,
                                                         const Scalar& target, const Tol& tol) {
  AdditiveSubgroup ext = W;
  ext.gens.push_back(target);
  size_t r = W.gens.size();
  if (ext.exact()) {
    ZMat A = exact_rows(ext);
    return combo_from_kernel(left_kernel(A), r);
  }
  auto det = detect_relations(coord_rows(ext), W.precision, W.coeffBound);
  ZMat ker;
  for (const auto& rel : det.relations)
    ker.push_back(std::vector<cpp_int>(rel.begin(), rel.end()));
  auto combo = combo_from_kernel(ker, r);
  if (!combo) return std::nullopt;
  // Confirm against the unrounded values.
  cplx s(0, 0);
  double scale = std::abs(target.v);
  for (size_t i = 0; i < r; ++i) {
    s += double((*combo)[i]) * W.gens[i].v;
    scale = std::max(scale, std::abs(W.gens[i].v));
  }
  if (std::abs(s - target.v) > 1e-6 * std::max(1.0, scale)) return std::nullopt;
  (void)tol;
  return combo;
}

std::optional<std::vector<long long>> lattice_membership2(const AdditiveSubgroup& W,
                                                          const std::array<Scalar, 2>& target,
                                                          const Tol& tol) {
  AdditiveSubgroup ext = W;
  ext.gens2.push_back(target);
  size_t r = W.gens2.size();
  if (ext.exact()) {
    ZMat A = exact_rows(ext);
    return combo_from_kernel(left_kernel(A), r);
  }
  auto det = detect_relations(coord_rows(ext), W.precision, W.coeffBound);
  ZMat ker;
  for (const auto& rel : det.relations)
    ker.push_back(std::vector<cpp_int>(rel.begin(), rel.end()));
  auto combo = combo_from_kernel(ker, r);
  if (!combo) return std::nullopt;
  cplx s0(0, 0), s1(0, 0);
  double scale = std::max(std::abs(target[0].v), std::abs(target[1].v));
  for (size_t i = 0; i < r; ++i) {
    s0 += double((*combo)[i]) * W.gens2[i][0].v;
    s1 += double((*combo)[i]) * W.gens2[i][1].v;
    scale = std::max({scale, std::abs(W.gens2[i][0].v), std::abs(W.gens2[i][1].v)});
  }
  if (std::abs(s0 - target[0].v) + std::abs(s1 - target[1].v) > 1e-6 * std::max(1.0, scale))
    return std::nullopt;
  (void)tol;
  return combo;
}

PseudoProjMap cobounded_limit(const std::vector<std::array<cplx, 2>>& seqA,
                              const std::vector<std::array<cplx, 2>>& seqB, long long k,
                              long long m, const Tol& tol) {
  if (k == 0 && m == 0) return PseudoProjMap(Mat3::identity());
  size_t n = seqA.size();
  if (n != seqB.size() || n < 3)
    throw Error("NotCobounded", "cobounded_limit: need matching sequences of length >= 3");

  auto norm1 = [](const std::array<cplx, 2>& p) { return std::abs(p[0]) + std::abs(p[1]); };

  double a0 = norm1(seqA.front()), aN = norm1(seqA.back());
  double x0 = norm1(seqB.front()), xN = norm1(seqB.back());
  if (aN < 10 * a0 || xN < 10 * x0 || aN < 10 || xN < 10)
    throw Error("NotCobounded", "cobounded_limit: norms do not diverge over the sample");

  double rmin = std::numeric_limits<double>::max(), rmax = 0;
  for (size_t i = 0; i < n; ++i) {
    double rho = norm1(seqA[i]) / norm1(seqB[i]);
    rmin = std::min(rmin, rho);
    rmax = std::max(rmax, rho);
  }
  if (!(rmin > 0) || rmax / rmin > 1e3)
    throw Error("NotCobounded", "cobounded_limit: norm ratio is not bounded over the sample");

  auto chord = [](const std::array<cplx, 2>& p, const std::array<cplx, 2>& q) {
    double cross = std::abs(p[0] * q[1] - p[1] * q[0]);
    double np = std::hypot(std::abs(p[0]), std::abs(p[1]));
    double nq = std::hypot(std::abs(q[0]), std::abs(q[1]));
    return cross / (np * nq);
  };
  if (chord(seqA[n - 1], seqA[n - 2]) > 1e-2 || chord(seqB[n - 1], seqB[n - 2]) > 1e-2)
    throw Error("NotCobounded", "cobounded_limit: direction sequences have not settled");
  if (chord(seqA[n - 1], seqB[n - 1]) < 1e-6)
    throw Error("NotCobounded", "cobounded_limit: direction limits coincide");

  auto sup = [](const std::array<cplx, 2>& p) {
    return std::max(std::abs(p[0]), std::abs(p[1]));
  };
  double rn = sup(seqA[n - 1]);
  double sn = sup(seqB[n - 1]);
  cplx a = seqA[n - 1][0] / rn, b = seqA[n - 1][1] / rn;
  cplx x = seqB[n - 1][0] / sn, y = seqB[n - 1][1] / sn;
  double w = sn / rn;  // scale twist between the two direction charts

  Mat3 lim = Mat3::zero();
  lim(0, 1) = Scalar(double(k) * a + double(m) * w * x);
  lim(0, 2) = Scalar(double(k) * b + double(m) * w * y);
  (void)tol;
  return PseudoProjMap(lim);
}

}  // namespace parak
