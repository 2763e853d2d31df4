#pragma once

#include "parak/group_engine.hpp"

namespace parak {

// The twelve families of finitely generated purely parabolic discrete
// groups, seven of them Kleinian, plus the honest "no match" verdict.
enum class Family {
  Torus,
  Elliptic,
  Kod0,
  Kod1,
  DualTorusK,
  Inoue,
  K1,
  DualTorusNK,
  ExtInoue,
  KTilde,
  HGroup,
  KGroup,
  Unclassified,
};

std::string family_name(Family f);
Family family_from_name(const std::string& name);
bool family_is_kleinian(Family f);

// Parameter bag; which fields are meaningful depends on the family:
//   Torus(wPairs) | Elliptic(w, mu) | Kod0(w, R, L) | Kod1(w, x, y, z) |
//   DualTorusK(wPairs) | Inoue(x, y, p, q, r) | K1(w, x, y, z) |
//   DualTorusNK(wPairs) | ExtInoue(wPairs, x, a, b, c) |
//   KTilde(w, x, a, b, c) | HGroup(w, x, a..f) | KGroup(w, x, a..j, witness)
// Morphism tables (mu, L) are value lists on the generator basis, extended
// additively.
struct FamilyTag {
  Family family = Family::Unclassified;
  std::vector<Scalar> w;                      // additive basis in C
  std::vector<std::array<Scalar, 2>> wPairs;  // additive basis in C^2
  std::vector<Scalar> mu;                     // unit multipliers per w entry
  std::vector<Scalar> R;                      // control basis (Kod0)
  std::vector<Scalar> L;                      // morphism values on R (Kod0)
  Scalar x, y, z;
  Scalar a, b, c, d, e, f, g, h, j;
  long long p = 0, q = 1, r = 1;
  std::vector<double> witness;  // stored reals for the KGroup g != 0 clause
};

struct ConstraintReport {
  bool ok = true;
  std::vector<std::string> failures;  // violated clauses, verbatim
  std::vector<std::string> notes;     // inconclusive or informational records
};

// Generator set exactly as displayed for the tagged family. Throws
// ConstraintViolation naming the failing clause.
MarkedGroup construct_family(const FamilyTag& tag);

// Checks every standing hypothesis of the tagged family. Total.
ConstraintReport validate_constraints(const FamilyTag& tag, const Tol& tol = {});

struct RecognitionReport {
  FamilyTag tag;
  PseudoProjMap conjugator;  // maps the input into the display coordinates
  int kernelRank = 0;
  int controlRank = 0;
  ClosureResult controlClosure;
  bool kleinian = false;
  int totalRank = 0;
  std::vector<std::string> diagnostics;
};

// Classifier pipeline: ball-2 element screen, invariant flag, triangular
// decomposition, then dispatch on kernel rank, control rank, and control
// closure. Returns Unclassified with diagnostics rather than guessing.
RecognitionReport recognize(const MarkedGroup& G, const Tol& tol = {});

struct EllParameters {
  AdditiveSubgroup W;
  std::vector<Scalar> mu;  // one unit multiplier per generator, mu(w_i)
};

// Reads off (W, mu) from a group whose elements all have the block-diagonal
// shape diag(alpha^-2, [alpha, alpha*w; 0, alpha]) with |alpha| = 1.
// Throws ShapeMismatch / NonUnitary.
EllParameters extract_ell_parameters(const MarkedGroup& G, const Tol& tol = {});

}  // namespace parak
