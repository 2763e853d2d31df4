#include "parak/group_engine.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <unordered_map>

namespace parak {

namespace {

std::string exact_key(const Mat3& m) {
  // Scale so the first nonzero entry is 1; the result is a projective
  // invariant of the exact lift.
  const GQ* lead = nullptr;
  for (int i = 0; i < 3 && !lead; ++i)
    for (int j = 0; j < 3 && !lead; ++j)
      if (!m(i, j).ex->is_zero()) lead = &*m(i, j).ex;
  std::string key;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      GQ v = *m(i, j).ex / *lead;
      key += v.str();
      key += '|';
    }
  return key;
}

std::string float_key(const Eigen::Matrix3cd& canon) {
  std::string key;
  key.reserve(160);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      key += std::to_string(llround(canon(i, j).real() * 1e6));
      key += ',';
      key += std::to_string(llround(canon(i, j).imag() * 1e6));
      key += ';';
    }
  return key;
}

std::string element_key(const PseudoProjMap& g, bool exactMode) {
  return exactMode ? exact_key(g.lift) : float_key(g.canon);
}

constexpr double kFlagTol = 1e-7;

struct EigCandidates {
  std::vector<Eigen::Vector3cd> points;
  std::vector<std::array<Eigen::Vector3cd, 2>> planes;
};

EigCandidates eigen_candidates(const Eigen::Matrix3cd& L) {
  EigCandidates out;
  Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(L, false);
  std::vector<cplx> vals{es.eigenvalues()(0), es.eigenvalues()(1), es.eigenvalues()(2)};
  // Merge eigenvalue clusters so defective eigenvalues are probed once.
  std::vector<cplx> uniq;
  for (const auto& v : vals) {
    bool fresh = true;
    for (const auto& u : uniq)
      if (std::abs(u - v) < 5e-4) fresh = false;
    if (fresh) uniq.push_back(v);
  }
  for (const auto& lam : uniq) {
    Eigen::Matrix3cd M = L - lam * Eigen::Matrix3cd::Identity();
    Eigen::JacobiSVD<Eigen::Matrix3cd> svd(M, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    int null = 0;
    for (int i = 0; i < 3; ++i)
      if (s(i) < 1e-8 * std::max(s(0), 1e-12)) ++null;
    if (null >= 2) {
      out.planes.push_back({svd.matrixV().col(1), svd.matrixV().col(2)});
    } else if (null == 1) {
      out.points.push_back(svd.matrixV().col(2));
    }
  }
  return out;
}

double fixed_residual(const Eigen::Matrix3cd& L, const Eigen::Vector3cd& p) {
  cplx mu = p.dot(L * p) / p.dot(p);  // Eigen's dot conjugates the left argument
  return (L * p - mu * p).norm() / (L.norm() * p.norm());
}

Eigen::Vector3cd bilinear_cross(const Eigen::Vector3cd& a, const Eigen::Vector3cd& b) {
  return Eigen::Vector3cd(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2),
                          a(0) * b(1) - a(1) * b(0));
}

// All candidate common eigenvectors for the family of matrices, standard
// basis vectors first for deterministic preference.
std::vector<Eigen::Vector3cd> common_fixed_candidates(const std::vector<Eigen::Matrix3cd>& Ls) {
  std::vector<Eigen::Vector3cd> cands;
  cands.push_back(Eigen::Vector3cd::Unit(0));
  cands.push_back(Eigen::Vector3cd::Unit(1));
  cands.push_back(Eigen::Vector3cd::Unit(2));
  std::vector<std::array<Eigen::Vector3cd, 2>> planes;
  for (const auto& L : Ls) {
    auto eig = eigen_candidates(L);
    for (const auto& p : eig.points) cands.push_back(p);
    for (const auto& pl : eig.planes) planes.push_back(pl);
  }
  // A two-dimensional eigenspace contributes through its intersections with
  // the other candidates' planes.
  for (size_t i = 0; i < planes.size(); ++i)
    for (size_t j = i + 1; j < planes.size(); ++j) {
      Eigen::Vector3cd li = bilinear_cross(planes[i][0], planes[i][1]);
      Eigen::Vector3cd lj = bilinear_cross(planes[j][0], planes[j][1]);
      Eigen::Vector3cd p = bilinear_cross(li, lj);
      if (p.norm() > 1e-9) cands.push_back(p);
    }
  // Planes also matter on their own when only one generator is present or
  // all planes coincide: offer their basis vectors too.
  for (const auto& pl : planes) {
    cands.push_back(pl[0]);
    cands.push_back(pl[1]);
  }
  return cands;
}

}  // namespace

MarkedGroup MarkedGroup::of(std::vector<PseudoProjMap> g, std::vector<std::string> names) {
  if (g.empty()) throw Error("BadInput", "MarkedGroup: no generators");
  MarkedGroup G;
  for (size_t i = 0; i < g.size(); ++i) {
    if (!g[i].invertible())
      throw Error("Singular", "MarkedGroup: generator " + std::to_string(i + 1) + " is singular");
    PseudoProjMap id(Mat3::identity());
    if (proj_equal(g[i], id, 1e-12))
      throw Error("BadInput",
                  "MarkedGroup: generator " + std::to_string(i + 1) + " is the identity");
  }
  G.gens = std::move(g);
  if (names.empty()) {
    for (size_t i = 0; i < G.gens.size(); ++i) G.labels.push_back(std::string(1, char('a' + i % 26)));
  } else {
    if (names.size() != G.gens.size())
      throw Error("BadInput", "MarkedGroup: label count mismatch");
    G.labels = std::move(names);
  }
  return G;
}

bool MarkedGroup::exact() const {
  for (const auto& g : gens)
    if (!g.exact()) return false;
  return true;
}

std::string Word::display(const MarkedGroup& G) const {
  if (letters.empty()) return "1";
  std::string out;
  for (int l : letters) {
    out += G.labels[size_t(std::abs(l) - 1)];
    if (l < 0) out += '\'';
  }
  return out;
}

WordBall enumerate_ball(const MarkedGroup& G, int radius, size_t cap) {
  if (radius < 0) throw Error("BadInput", "enumerate_ball: negative radius");
  bool exactMode = G.exact();

  WordBall ball;
  ball.radius = radius;

  std::unordered_map<std::string, size_t> seen;
  std::vector<PseudoProjMap> inv;
  for (const auto& g : G.gens) inv.push_back(g.inverse());

  BallElement id{Word{}, PseudoProjMap(Mat3::identity())};
  seen.emplace(element_key(id.map, exactMode), 0);
  ball.elements.push_back(std::move(id));

  size_t layerBegin = 0, layerEnd = 1;
  for (int r = 1; r <= radius; ++r) {
    for (size_t e = layerBegin; e < layerEnd; ++e) {
      for (size_t gi = 0; gi < G.gens.size(); ++gi) {
        for (int sign : {+1, -1}) {
          int letter = sign * int(gi + 1);
          const Word& w = ball.elements[e].word;
          if (!w.letters.empty() && w.letters.back() == -letter) continue;
          PseudoProjMap next = ball.elements[e].map * (sign > 0 ? G.gens[gi] : inv[gi]);
          std::string key = element_key(next, exactMode);
          if (seen.count(key)) continue;
          if (ball.elements.size() >= cap)
            throw Error("BudgetExceeded", "enumerate_ball: element cap reached");
          Word nw = w;
          nw.letters.push_back(letter);
          seen.emplace(std::move(key), ball.elements.size());
          ball.elements.push_back(BallElement{std::move(nw), std::move(next)});
        }
      }
    }
    layerBegin = layerEnd;
    layerEnd = ball.elements.size();
    if (layerBegin == layerEnd) break;  // group exhausted
  }
  return ball;
}

Flag find_invariant_flag(const MarkedGroup& G) {
  std::vector<Eigen::Matrix3cd> Ls, Lds;
  for (const auto& g : G.gens) {
    Eigen::Matrix3cd L = det1_lift(g);
    Ls.push_back(L);
    Lds.push_back(L.transpose().inverse());
  }

  auto passing = [&](const std::vector<Eigen::Matrix3cd>& mats,
                     std::vector<Eigen::Vector3cd> cands) {
    std::vector<Eigen::Vector3cd> out;
    for (const auto& c : cands) {
      double worst = 0;
      for (const auto& L : mats) worst = std::max(worst, fixed_residual(L, c));
      if (worst < kFlagTol) {
        bool dup = false;
        for (const auto& o : out) {
          double cross = bilinear_cross(o, c).norm() / (o.norm() * c.norm());
          if (cross < 1e-9) dup = true;
        }
        if (!dup) out.push_back(c.normalized());
      }
    }
    return out;
  };

  std::vector<Eigen::Vector3cd> points = passing(Ls, common_fixed_candidates(Ls));
  std::vector<Eigen::Vector3cd> lines = passing(Lds, common_fixed_candidates(Lds));

  if (points.empty() || lines.empty())
    throw Error("NoFlag", "find_invariant_flag: no common fixed point or line among candidates"
                          " (fixed points found: " + std::to_string(points.size()) +
                          ", invariant lines: " + std::to_string(lines.size()) + ")");

  auto snap = [](Eigen::Vector3cd v) {
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3cd e = Eigen::Vector3cd::Unit(i);
      if (1.0 - std::abs(v.normalized().dot(e)) < 1e-10) return e;
    }
    return v;
  };

  // Several flags can triangularize the group; prefer one whose conjugated
  // diagonal pattern is workable downstream (unipotent, or a repeated value
  // in the first two or last two slots) so the block structure survives.
  std::optional<Flag> fallback;
  for (const auto& p0 : points)
    for (const auto& l0 : lines) {
      Eigen::Vector3cd p = snap(p0);
      Eigen::Vector3cd l = snap(l0);
      cplx inc = l(0) * p(0) + l(1) * p(1) + l(2) * p(2);
      if (std::abs(inc) / (p.norm() * l.norm()) > kFlagTol) continue;

      Flag flag;
      flag.point = ProjPoint(p);
      flag.line = ProjLine(l);

      bool standard = (p - Eigen::Vector3cd::Unit(0)).norm() == 0 &&
                      (l - Eigen::Vector3cd::Unit(2)).norm() == 0;
      if (standard) {
        flag.basisChange = PseudoProjMap(Mat3::identity());
      } else {
        // Columns: the point, a second direction on the line, and the
        // conjugate of the line's coordinates (never on the line).
        Eigen::Vector3cd v1 = p.normalized();
        Eigen::JacobiSVD<Eigen::Matrix3cd> svd(
            (Eigen::Matrix3cd() << l.transpose(), Eigen::RowVector3cd::Zero(),
             Eigen::RowVector3cd::Zero())
                .finished(),
            Eigen::ComputeFullV);
        Eigen::Vector3cd n1 = svd.matrixV().col(1), n2 = svd.matrixV().col(2);
        Eigen::Vector3cd v2 = n1 - v1.dot(n1) * v1;
        if (v2.norm() < 1e-8) v2 = n2 - v1.dot(n2) * v1;
        v2.normalize();
        Eigen::Vector3cd v3 = l.conjugate().normalized();
        Eigen::Matrix3cd B;
        B.col(0) = v1;
        B.col(1) = v2;
        B.col(2) = v3;
        flag.basisChange = PseudoProjMap(Mat3::from_eigen(B.inverse()));
      }

      double worst = 0;
      bool all01 = true, all12 = true;
      Eigen::Matrix3cd H = flag.basisChange.canon;
      Eigen::Matrix3cd Hi = H.inverse();
      for (const auto& g : G.gens) {
        Eigen::Matrix3cd C = canonical_mat(H * g.canon * Hi);
        worst = std::max({worst, std::abs(C(1, 0)), std::abs(C(2, 0)), std::abs(C(2, 1))});
        all01 = all01 && std::abs(C(0, 0) / C(1, 1) - 1.0) < 1e-8;
        all12 = all12 && std::abs(C(1, 1) / C(2, 2) - 1.0) < 1e-8;
      }
      if (worst < 1e-6) {
        flag.residual = worst;
        if (all01 || all12) return flag;
        if (!fallback) fallback = flag;
      }
    }
  if (fallback) return *fallback;
  throw Error("NoFlag", "find_invariant_flag: no incident point-line pair triangularizes the group");
}

namespace {

bool ratio_is_one(const Scalar& s, double eps = 1e-8) { return std::abs(s.v - 1.0) < eps; }

}  // namespace

Decomposition decompose(const MarkedGroup& G, const Flag& flag) {
  Decomposition out;
  bool exactPath = G.exact() && flag.basisChange.exact();

  Mat3 h = flag.basisChange.lift;
  Mat3 hi = flag.basisChange.lift.inverse();
  std::vector<Mat3> conj;
  for (const auto& g : G.gens) conj.push_back(h * g.lift * hi);

  // Triangularity.
  for (size_t i = 0; i < conj.size(); ++i) {
    Eigen::Matrix3cd C = canonical_mat(conj[i].to_eigen());
    double leak = std::max({std::abs(C(1, 0)), std::abs(C(2, 0)), std::abs(C(2, 1))});
    if (leak > 1e-6)
      throw Error("NotHeisenberg",
                  "decompose: generator " + std::to_string(i + 1) + " is not triangular in the flag basis");
  }

  std::vector<Scalar> r01, r12;
  for (const auto& c : conj) {
    r01.push_back(c(0, 0) / c(1, 1));
    r12.push_back(c(1, 1) / c(2, 2));
  }
  bool allUni = true, all01 = true, all12 = true;
  for (size_t i = 0; i < conj.size(); ++i) {
    bool u01 = ratio_is_one(r01[i]), u12 = ratio_is_one(r12[i]);
    allUni = allUni && u01 && u12;
    all01 = all01 && u01;
    all12 = all12 && u12;
  }

  if (allUni) {
    // Unipotent coordinates and the translation-part control. Conjugation by
    // a float basis change can leave pattern residue near the flag residual,
    // so the shape check runs looser than the group's working tolerance.
    Tol shapeTol{std::max(G.tol.eps, 1e-6), G.tol.kappa};
    for (const auto& c : conj) out.heisGens.push_back(heis_from_matrix(c, shapeTol));
    for (const auto& hg : out.heisGens) out.controlValues.push_back(hg.c);

    AdditiveSubgroup Wc = AdditiveSubgroup::of(out.controlValues);
    RankResult rc = z_rank(Wc, G.tol);

    // Kernel generators: relation products plus commutators.
    for (const auto& rel : rc.relations) {
      HeisElement prod;
      for (size_t i = 0; i < out.heisGens.size(); ++i)
        if (rel[i] != 0) prod = heis_mul(prod, heis_pow(out.heisGens[i], rel[i]));
      if (prod.a.abs() + prod.b.abs() + prod.c.abs() > 1e-12) out.kernelGens.push_back(prod);
    }
    for (size_t i = 0; i < out.heisGens.size(); ++i)
      for (size_t j = i + 1; j < out.heisGens.size(); ++j) {
        HeisElement cm = heis_comm(out.heisGens[i], out.heisGens[j]);
        if (cm.b.abs() > 1e-12) out.kernelGens.push_back(cm);
      }

    std::vector<std::array<Scalar, 2>> kpairs;
    for (const auto& k : out.kernelGens) kpairs.push_back({k.a, k.b});
    out.kernelRank = kpairs.empty() ? 0 : z_rank(AdditiveSubgroup::of_pairs(kpairs), G.tol).rank;

    // Commuting blocks among control-nontrivial generators.
    double cScale = 0;
    for (const auto& v : out.controlValues) cScale = std::max(cScale, v.abs());
    std::vector<int> active;
    for (size_t i = 0; i < out.heisGens.size(); ++i)
      if (out.controlValues[i].abs() > 1e-9 * std::max(cScale, 1.0)) active.push_back(int(i));

    std::vector<int> comp(active.size());
    for (size_t i = 0; i < active.size(); ++i) comp[i] = int(i);
    std::function<int(int)> find = [&](int x) { return comp[size_t(x)] == x ? x : comp[size_t(x)] = find(comp[size_t(x)]); };
    for (size_t i = 0; i < active.size(); ++i)
      for (size_t j = i + 1; j < active.size(); ++j) {
        const HeisElement& gi = out.heisGens[size_t(active[i])];
        const HeisElement& gj = out.heisGens[size_t(active[j])];
        double commNorm = heis_comm(gi, gj).b.abs();
        double scale = std::max({gi.a.abs() * gj.c.abs(), gj.a.abs() * gi.c.abs(), 1e-30});
        if (commNorm < 1e-9 * std::max(scale, 1.0)) comp[size_t(find(int(j)))] = find(int(i));
      }
    std::unordered_map<int, std::vector<int>> byRoot;
    for (size_t i = 0; i < active.size(); ++i) byRoot[find(int(i))].push_back(active[i]);
    std::vector<std::vector<int>> blocks;
    for (auto& [root, members] : byRoot) blocks.push_back(members);
    std::sort(blocks.begin(), blocks.end());
    out.blocks = blocks;
    for (const auto& blk : out.blocks) {
      std::vector<Scalar> cs;
      for (int i : blk) cs.push_back(out.controlValues[size_t(i)]);
      out.blockRanks.push_back(z_rank(AdditiveSubgroup::of(cs), G.tol).rank);
    }
    out.totalRank = out.kernelRank;
    for (int k : out.blockRanks) out.totalRank += k;
    out.rankBoundViolated = out.totalRank > 6;
    if (exactPath) out.note = "exact unipotent decomposition";
    return out;
  }

  // Screw-type fallback: a common double eigenvalue with the coupling in one
  // off-diagonal slot; the control becomes the cubed multiplier.
  bool orientA = all01;  // diag (mu, mu, mu^-2), coupling at (0,1)
  bool orientC = all12;  // diag (al^-2, al, al), coupling at (1,2)
  if (!orientA && !orientC)
    throw Error("NotHeisenberg", "decompose: diagonal pattern is neither unipotent nor screw-type");

  out.ellipticCoordinates = true;
  out.note = "screw-type coordinates: control values are cubed multipliers";
  std::vector<Scalar> wvals;
  for (const auto& c : conj) {
    Scalar w = orientA ? c(0, 1) / c(1, 1) : c(1, 2) / c(2, 2);
    Scalar mu3 = orientA ? c(1, 1) / c(2, 2) : c(1, 1) / c(0, 0);
    wvals.push_back(w);
    out.controlValues.push_back(mu3);
    out.heisGens.push_back(HeisElement(w, Scalar(GQ(0)), mu3 - Scalar(GQ(1))));
  }
  std::vector<Scalar> kernelW;
  for (size_t i = 0; i < conj.size(); ++i)
    if (ratio_is_one(out.controlValues[i])) {
      out.kernelGens.push_back(HeisElement(wvals[i], Scalar(GQ(0)), Scalar(GQ(0))));
      kernelW.push_back(wvals[i]);
    }
  out.kernelRank = kernelW.empty() ? 0 : z_rank(AdditiveSubgroup::of(kernelW), G.tol).rank;
  int total = z_rank(AdditiveSubgroup::of(wvals), G.tol).rank;
  out.totalRank = total;
  std::vector<int> blk;
  for (size_t i = 0; i < conj.size(); ++i)
    if (!ratio_is_one(out.controlValues[i])) blk.push_back(int(i));
  if (!blk.empty()) {
    out.blocks.push_back(blk);
    out.blockRanks.push_back(total - out.kernelRank);
  }
  out.rankBoundViolated = out.totalRank > 6;
  return out;
}

ScanResult discreteness_scan(const MarkedGroup& G, int radius, double delta, size_t cap) {
  WordBall ball = enumerate_ball(G, radius, cap);
  ScanResult out;
  out.radius = radius;
  out.count = ball.elements.size();
  PseudoProjMap id(Mat3::identity());
  double best = std::numeric_limits<double>::max();
  for (size_t i = 1; i < ball.elements.size(); ++i) {
    double d = proj_distance(ball.elements[i].map, id);
    if (d < best) {
      best = d;
      out.word = ball.elements[i].word;
    }
  }
  out.distance = ball.elements.size() > 1 ? best : 0.0;
  out.violation = ball.elements.size() > 1 && best < delta;
  return out;
}

WitnessResult nondiscreteness_witness(const PseudoProjMap& g1, const PseudoProjMap& g2, int n,
                                      const Tol& tol) {
  if (n < 2) throw Error("BadInput", "nondiscreteness_witness: need n >= 2");
  MarkedGroup pair = MarkedGroup::of({g1, g2});
  pair.tol = tol;
  Flag flag;
  try {
    flag = find_invariant_flag(pair);
  } catch (const Error& e) {
    throw Error("ShapeMismatch", std::string("nondiscreteness_witness: no common flag: ") + e.what());
  }

  Eigen::Matrix3cd H = flag.basisChange.canon;
  Eigen::Matrix3cd Hi = H.inverse();
  auto conjOf = [&](const PseudoProjMap& g) { return Eigen::Matrix3cd(canonical_mat(H * g.canon * Hi)); };

  struct ShapeInfo {
    bool unipotent;
    bool u01, u12;
    cplx alpha3;
  };
  auto shapeOf = [&](const Eigen::Matrix3cd& C) {
    ShapeInfo s;
    cplx a01 = C(0, 0) / C(1, 1), a12 = C(1, 1) / C(2, 2);
    s.u01 = std::abs(a01 - 1.0) < 1e-8;
    s.u12 = std::abs(a12 - 1.0) < 1e-8;
    s.unipotent = s.u01 && s.u12;
    s.alpha3 = s.u01 ? a12 : (s.u12 ? 1.0 / a01 : a12);
    return s;
  };

  // Identify the unipotent generator u and the multiplier generator s.
  ShapeInfo s1 = shapeOf(conjOf(g1)), s2 = shapeOf(conjOf(g2));
  const PseudoProjMap *u = nullptr, *s = nullptr;
  ShapeInfo info{};
  if (s1.unipotent && !s2.unipotent) {
    u = &g1; s = &g2; info = s2;
  } else if (s2.unipotent && !s1.unipotent) {
    u = &g2; s = &g1; info = s1;
  } else if (s1.unipotent && s2.unipotent) {
    throw Error("ShapeMismatch", "nondiscreteness_witness: both generators are unipotent");
  } else {
    throw Error("ShapeMismatch", "nondiscreteness_witness: no unipotent generator");
  }

  cplx alpha3 = info.alpha3;
  if (std::abs(std::abs(alpha3) - 1.0) > 1e-9)
    throw Error("ShapeMismatch", "nondiscreteness_witness: diagonal multiplier is off the unit circle");
  auto root = is_root_of_unity(Scalar(alpha3), 200, tol);
  if (root.isRoot)
    throw Error("ShapeMismatch", "nondiscreteness_witness: diagonal multiplier has finite order "
                + std::to_string(root.order));

  WitnessResult out;
  PseudoProjMap sInv = s->inverse();

  auto conjSeq = [&](const PseudoProjMap& seed) {
    std::vector<PseudoProjMap> maps;
    PseudoProjMap cur = seed;
    for (int k2 = 1; k2 <= n; ++k2) {
      cur = PseudoProjMap(Mat3::from_eigen(canonical_mat((*s * cur * sInv).canon)));
      maps.push_back(cur);
    }
    return maps;
  };

  if (!info.u01 && !info.u12) {
    // Shape with diagonal (1, alpha^3, 1): lambda13 = 1, both ratios off 1.
    cplx a13 = 1.0;
    {
      Eigen::Matrix3cd C = conjOf(*s);
      a13 = C(0, 0) / C(2, 2);
    }
    if (std::abs(a13 - 1.0) > 1e-8)
      throw Error("ShapeMismatch", "nondiscreteness_witness: diagonal pattern matches no covered shape");
    // u must move: its conjugation orbit rotates the off-diagonal parts.
    Eigen::Matrix3cd U = conjOf(*u);
    if (std::abs(U(0, 1)) + std::abs(U(1, 2)) < 1e-9)
      throw Error("ShapeMismatch", "nondiscreteness_witness: the unipotent generator is central");
    out.maps = conjSeq(*u);
    out.mechanism = "conjugation orbit of the unipotent generator";
  } else {
    // Shapes with lambda12 = 1 or lambda23 = 1: conjugate a central element;
    // its central entry is scaled by a unit of infinite order.
    WordBall ball = enumerate_ball(pair, 4, 4000);
    const PseudoProjMap* central = nullptr;
    for (size_t i = 1; i < ball.elements.size() && !central; ++i) {
      Eigen::Matrix3cd C = canonical_mat(H * ball.elements[i].map.canon * Hi);
      double scale = C.norm();
      bool tri = std::max({std::abs(C(1, 0)), std::abs(C(2, 0)), std::abs(C(2, 1))}) < 1e-8 * scale;
      bool diagEq = std::abs(C(0, 0) - C(1, 1)) < 1e-8 * scale && std::abs(C(1, 1) - C(2, 2)) < 1e-8 * scale;
      bool offZero = std::abs(C(0, 1)) < 1e-8 * scale && std::abs(C(1, 2)) < 1e-8 * scale;
      if (tri && diagEq && offZero && std::abs(C(0, 2)) > 1e-6 * scale)
        central = &ball.elements[i].map;
    }
    if (central) {
      out.maps = conjSeq(*central);
      out.mechanism = "central conjugation orbit";
    } else {
      // No central element reachable: the multiplier generator itself is
      // elliptic of infinite order and its powers accumulate.
      ElementClass cls = classify_element(*s, tol);
      if (cls.kind != ElementKind::Elliptic)
        throw Error("ShapeMismatch", "nondiscreteness_witness: no central element and the multiplier"
                                     " generator is not elliptic");
      PseudoProjMap cur(Mat3::identity());
      for (int k2 = 1; k2 <= n; ++k2) {
        cur = PseudoProjMap(Mat3::from_eigen(canonical_mat((cur * *s).canon)));
        out.maps.push_back(cur);
      }
      out.mechanism = "elliptic power orbit";
    }
  }

  double best = std::numeric_limits<double>::max();
  int distinct = 0;
  for (size_t i = 0; i < out.maps.size(); ++i) {
    bool isDistinct = true;
    for (size_t j = 0; j < i; ++j) {
      double d = proj_distance(out.maps[i], out.maps[j]);
      if (d < best && d > 0) best = d;
      if (d < 1e-12) isDistinct = false;
    }
    if (isDistinct) ++distinct;
  }
  out.minPairDistance = out.maps.size() > 1 ? best : 0.0;
  out.distinctCount = distinct;
  return out;
}

}  // namespace parak
