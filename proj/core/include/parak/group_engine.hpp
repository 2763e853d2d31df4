#pragma once

#include "parak/classify.hpp"
#include "parak/heis.hpp"
#include "parak/lattice.hpp"

namespace parak {

struct MarkedGroup {
  std::vector<PseudoProjMap> gens;
  std::vector<std::string> labels;
  Tol tol;

  static MarkedGroup of(std::vector<PseudoProjMap> g, std::vector<std::string> names = {});
  bool exact() const;
};

// Reduced word in the generators: 1-based index, negative for the inverse.
struct Word {
  std::vector<int> letters;
  std::string display(const MarkedGroup& G) const;
};

struct BallElement {
  Word word;
  PseudoProjMap map;
};

// Shortlex-ordered distinct group elements of word length <= radius,
// identity first. Dedup is projective: exact when the generators carry
// exact entries, metric otherwise.
struct WordBall {
  int radius = 0;
  std::vector<BallElement> elements;
};

WordBall enumerate_ball(const MarkedGroup& G, int radius, size_t cap = 200000);

struct Flag {
  ProjPoint point;
  ProjLine line;                // dual coordinates; point is incident
  PseudoProjMap basisChange;    // sends point -> e1 and line -> {z3 = 0}
  double residual = 0.0;        // worst lower-triangular leak after conjugation
};

Flag find_invariant_flag(const MarkedGroup& G);

struct Decomposition {
  std::vector<HeisElement> heisGens;     // conjugated generators, unipotent coordinates
  std::vector<Scalar> controlValues;     // control image per generator
  std::vector<HeisElement> kernelGens;   // generators of the control kernel found
  std::vector<std::vector<int>> blocks;  // generator indices per commuting control block
  std::vector<int> blockRanks;
  int kernelRank = 0;
  int totalRank = 0;
  bool rankBoundViolated = false;  // totalRank above 6 is reported, not asserted
  bool ellipticCoordinates = false;  // screw-type fallback: controls are cubed multipliers
  std::string note;
};

Decomposition decompose(const MarkedGroup& G, const Flag& flag);

struct ScanResult {
  bool violation = false;
  Word word;
  double distance = 0.0;  // closest nonidentity approach to the identity
  int radius = 0;
  size_t count = 0;
};

ScanResult discreteness_scan(const MarkedGroup& G, int radius, double delta,
                             size_t cap = 200000);

struct WitnessResult {
  std::vector<PseudoProjMap> maps;  // distinct elements in a bounded set
  double minPairDistance = 0.0;     // smallest pairwise separation observed
  int distinctCount = 0;
  std::string mechanism;  // which non-discreteness shape produced the sequence
};

// Certificate sequence for the two-generator non-discreteness shapes: a
// unipotent generator against a triangular generator with a unit-modulus,
// infinite-order diagonal multiplier. Throws ShapeMismatch when the pair
// fits none of the covered shapes.
WitnessResult nondiscreteness_witness(const PseudoProjMap& g1, const PseudoProjMap& g2, int n,
                                      const Tol& tol = {});

}  // namespace parak
