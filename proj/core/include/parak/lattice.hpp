#pragma once

#include "parak/intlin.hpp"
#include "parak/projective.hpp"

#include <array>
#include <optional>

namespace parak {

// Finitely generated additive subgroup of C or C^2. When every generator
// carries exact Gaussian-rational data the analysis below is exact;
// otherwise integer relations are detected by lattice reduction at the given
// embedding precision and verified directly, with an explicit inconclusive
// band between "relation" and "no relation".
struct AdditiveSubgroup {
  std::vector<Scalar> gens;                  // ambient C
  std::vector<std::array<Scalar, 2>> gens2;  // ambient C^2
  bool ambient2 = false;
  double precision = 1e10;
  double coeffBound = 1e4;

  static AdditiveSubgroup of(std::vector<Scalar> g) {
    AdditiveSubgroup w;
    w.gens = std::move(g);
    return w;
  }
  static AdditiveSubgroup of_pairs(std::vector<std::array<Scalar, 2>> g) {
    AdditiveSubgroup w;
    w.gens2 = std::move(g);
    w.ambient2 = true;
    return w;
  }
  int count() const { return int(ambient2 ? gens2.size() : gens.size()); }
  bool exact() const;
};

struct RankResult {
  int rank = 0;
  std::vector<std::vector<long long>> relations;  // basis of the relation lattice found
  bool inconclusive = false;
  double graySignal = 0.0;  // best unverified near-relation residual, 0 if none
};

struct ClosureResult {
  enum class Kind { Trivial, DiscreteRank, DenseLine, LinePlusLattice, DensePlane };
  Kind kind = Kind::Trivial;
  int rank = 0;             // Z-rank of the group
  cplx direction{0, 0};     // unit direction of the dense line, when present
  cplx transversal{0, 0};   // step across the line for LinePlusLattice
  bool inconclusive = false;
  std::vector<long long> witnessCombo;  // nonzero combo evaluating below threshold
  double witnessValue = 0.0;
};

struct LineRankResult {
  bool holds = true;
  cplx direction{0, 0};  // violating line direction when holds is false
  int lineRank = 0;
  std::vector<std::vector<long long>> witnessCombos;
  bool inconclusive = false;
  std::string note;
};

struct RatlatResult {
  bool yes = false;
  long long p = 0, q = 1, r = 1;
  // (0,1) = u1*(1,0) + u2*(c,d) and (0,c) = s1*(1,0) + s2*(c,d)
  std::array<long long, 2> witnessUnit{0, 0};
  std::array<long long, 2> witnessSlope{0, 0};
  std::string why;
};

RankResult z_rank(const AdditiveSubgroup& W, const Tol& tol = {});

// Topological closure classification, ambient C only.
ClosureResult closure_type(const AdditiveSubgroup& W, const Tol& tol = {});

// Checks that no real line through 0 meets the group in a subgroup of rank
// larger than 2. Candidate lines come from small generator combinations, so
// "holds" means no violation was found over that candidate set.
LineRankResult line_rank_condition(const AdditiveSubgroup& W, const Tol& tol = {});

// Does Span_Z{(1,0),(c,d)} contain (0,1) and (0,c)? Decided by the
// arithmetic of c = p/q and d = 1/r with q^2 | r.
RatlatResult ratlat_check(const Scalar& c, const Scalar& d, const Tol& tol = {});

// Integer combination of the generators equal to the target, if one exists
// (at the subgroup's precision when float).
std::optional<std::vector<long long>> lattice_membership(const AdditiveSubgroup& W,
                                                         const Scalar& target,
                                                         const Tol& tol = {});
std::optional<std::vector<long long>> lattice_membership2(const AdditiveSubgroup& W,
                                                          const std::array<Scalar, 2>& target,
                                                          const Tol& tol = {});

// Limit of g_n^k h_n^m for the co-bounded translation-pair data
// (a_n, b_n), (x_n, y_n): both norms diverge with bounded ratio and the
// direction limits [a:b] != [x:y] exist. The limit is the rank-one map whose
// only nonzero row is (0, k a + m x w, k b + m y w), with the scale twist w
// recovered from the data; its image is e1.
PseudoProjMap cobounded_limit(const std::vector<std::array<cplx, 2>>& seqA,
                              const std::vector<std::array<cplx, 2>>& seqB,
                              long long k, long long m, const Tol& tol = {});

}  // namespace parak
