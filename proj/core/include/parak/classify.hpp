#pragma once

#include "parak/projective.hpp"

#include <array>

namespace parak {

enum class ElementKind { Elliptic, Parabolic, Loxodromic };

enum class ParabolicSubtype {
  None,
  UnipotentMinPoly2,
  UnipotentMinPoly3,
  ElliptoParabolicRational,
  ElliptoParabolicIrrational,
};

struct ElementClass {
  ElementKind kind = ElementKind::Elliptic;
  ParabolicSubtype subtype = ParabolicSubtype::None;
  int ellipticOrder = 0;  // 0 = infinite order
  std::array<cplx, 3> eigenvalues{};  // of the det-1 lift, multiplicity-refined
  bool borderline = false;
  double unitModulusMargin = 0.0;  // max |log|lambda|| over eigenvalues
  std::string note;
};

struct RootOfUnityResult {
  bool isRoot = false;
  int order = 0;       // smallest n with lambda^n = 1, when isRoot
  int nMax = 0;
  // best continued-fraction approximation of arg(lambda)/2pi found (float mode)
  long long bestP = 0, bestQ = 1;
  double bestResidual = 0.0;
};

ElementClass classify_element(const PseudoProjMap& g, const Tol& tol = {}, int nMax = 200);

RootOfUnityResult is_root_of_unity(const Scalar& lambda, int nMax, const Tol& tol = {});

ElementClass classify_by_kulkarni(const PseudoProjMap& g, int budget, const Tol& tol = {});

}  // namespace parak
