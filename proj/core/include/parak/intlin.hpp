#pragma once

#include "parak/scalar.hpp"

#include <vector>

namespace parak {

using ZMat = std::vector<std::vector<cpp_int>>;

// Row-style Hermite normal form H = U * A with U unimodular.
// Rows rank..m-1 of U form a basis of the left kernel lattice of A
// (saturated: every integer relation among the rows of A is a Z-combination
// of these).
struct HnfResult {
  ZMat H, U;
  int rank = 0;
};

HnfResult hnf(const ZMat& A);

// Basis of { x in Z^m : x * A = 0 }.
ZMat left_kernel(const ZMat& A);

int z_rank_exact(const ZMat& A);

// Lenstra-Lenstra-Lovasz reduction of the rows of B (assumed independent),
// exact rational Gram-Schmidt. In place; delta defaults to 99/100.
void lll_reduce(ZMat& B, const Rat& delta = Rat(99, 100));

}  // namespace parak
