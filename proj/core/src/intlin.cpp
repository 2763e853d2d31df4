#include "parak/intlin.hpp"

#include <algorithm>
#include <stdexcept>

namespace parak {

namespace {

cpp_int abs_int(const cpp_int& x) { return x < 0 ? cpp_int(-x) : x; }

// Floor division rounding toward negative infinity, for balanced reduction.
cpp_int round_div(const cpp_int& a, const cpp_int& b) {
  cpp_int q = a / b, r = a - q * b;
  cpp_int hb = abs_int(b);
  if (2 * abs_int(r) > hb) q += (a < 0) == (b < 0) ? 1 : -1;
  return q;
}

void row_axpy(std::vector<cpp_int>& dst, const std::vector<cpp_int>& src, const cpp_int& t) {
  for (size_t k = 0; k < dst.size(); ++k) dst[k] -= t * src[k];
}

}  // namespace

HnfResult hnf(const ZMat& A) {
  size_t m = A.size();
  size_t n = m ? A[0].size() : 0;
  HnfResult res;
  res.H = A;
  res.U.assign(m, std::vector<cpp_int>(m, 0));
  for (size_t i = 0; i < m; ++i) res.U[i][i] = 1;

  size_t r = 0;
  for (size_t col = 0; col < n && r < m; ++col) {
    // Euclidean elimination in this column below row r.
    while (true) {
      size_t piv = m;
      for (size_t i = r; i < m; ++i)
        if (res.H[i][col] != 0 && (piv == m || abs_int(res.H[i][col]) < abs_int(res.H[piv][col])))
          piv = i;
      if (piv == m) break;
      std::swap(res.H[piv], res.H[r]);
      std::swap(res.U[piv], res.U[r]);
      bool clean = true;
      for (size_t i = r + 1; i < m; ++i) {
        if (res.H[i][col] == 0) continue;
        cpp_int t = res.H[i][col] / res.H[r][col];
        if (t != 0) {
          row_axpy(res.H[i], res.H[r], t);
          row_axpy(res.U[i], res.U[r], t);
        }
        if (res.H[i][col] != 0) clean = false;
      }
      if (clean) break;
    }
    if (res.H[r][col] == 0) continue;
    if (res.H[r][col] < 0) {
      for (auto& x : res.H[r]) x = -x;
      for (auto& x : res.U[r]) x = -x;
    }
    // Reduce the entries above the pivot for a canonical H.
    for (size_t i = 0; i < r; ++i) {
      cpp_int t = round_div(res.H[i][col], res.H[r][col]);
      if (t != 0) {
        row_axpy(res.H[i], res.H[r], t);
        row_axpy(res.U[i], res.U[r], t);
      }
    }
    ++r;
  }
  res.rank = int(r);
  return res;
}

ZMat left_kernel(const ZMat& A) {
  HnfResult h = hnf(A);
  ZMat out;
  for (size_t i = size_t(h.rank); i < A.size(); ++i) out.push_back(h.U[i]);
  return out;
}

int z_rank_exact(const ZMat& A) { return hnf(A).rank; }

void lll_reduce(ZMat& B, const Rat& delta) {
  size_t n = B.size();
  if (n == 0) return;
  size_t dim = B[0].size();

  auto dotZ = [&](const std::vector<cpp_int>& a, const std::vector<cpp_int>& b) {
    cpp_int s = 0;
    for (size_t k = 0; k < dim; ++k) s += a[k] * b[k];
    return s;
  };

  // Exact Gram-Schmidt data: mu[i][j] for j < i, and squared norms of B*_i.
  std::vector<std::vector<Rat>> mu(n, std::vector<Rat>(n, Rat(0)));
  std::vector<Rat> Bst(n, Rat(0));

  auto recompute = [&]() {
    std::vector<std::vector<Rat>> gso(n, std::vector<Rat>(dim, Rat(0)));
    for (size_t i = 0; i < n; ++i) {
      for (size_t k = 0; k < dim; ++k) gso[i][k] = Rat(B[i][k], 1);
      for (size_t j = 0; j < i; ++j) {
        Rat num(0);
        for (size_t k = 0; k < dim; ++k) num = num + Rat(B[i][k], 1) * gso[j][k];
        mu[i][j] = Bst[j].is_zero() ? Rat(0) : num / Bst[j];
        for (size_t k = 0; k < dim; ++k) gso[i][k] = gso[i][k] - mu[i][j] * gso[j][k];
      }
      Rat nn(0);
      for (size_t k = 0; k < dim; ++k) nn = nn + gso[i][k] * gso[i][k];
      Bst[i] = nn;
    }
  };
  recompute();

  auto size_reduce = [&](size_t i, size_t j) {
    // round  mu[i][j]  to nearest integer
    cpp_int t = round_div(mu[i][j].num, mu[i][j].den);
    if (t == 0) return;
    row_axpy(B[i], B[j], t);
    Rat tr(t, 1);
    for (size_t k = 0; k < j; ++k) mu[i][k] = mu[i][k] - tr * mu[j][k];
    mu[i][j] = mu[i][j] - tr;
  };

  size_t k = 1;
  size_t guard = 0, guardMax = 10000 * n * n + 1000;
  while (k < n) {
    if (++guard > guardMax) throw std::runtime_error("lll_reduce: iteration guard tripped");
    size_reduce(k, k - 1);
    Rat lhs = Bst[k];
    Rat rhs = (delta - mu[k][k - 1] * mu[k][k - 1]) * Bst[k - 1];
    bool lovasz = !(lhs < rhs);
    if (lovasz) {
      for (size_t j = k >= 2 ? k - 2 : 0; j + 1 >= 1; --j) {
        size_reduce(k, j);
        if (j == 0) break;
      }
      ++k;
    } else {
      std::swap(B[k], B[k - 1]);
      recompute();  // dims here are tiny; full recompute keeps this simple
      k = k > 1 ? k - 1 : 1;
    }
  }
}

}  // namespace parak
