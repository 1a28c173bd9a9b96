#include "invmeas/multi_index.hpp"

#include <algorithm>

#include "invmeas/errors.hpp"

namespace invmeas {

int degree(const MultiIndex& alpha) {
  int d = 0;
  for (int a : alpha) d += a;
  return d;
}

bool graded_before(const MultiIndex& a, const MultiIndex& b) {
  int da = degree(a), db = degree(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::int64_t basis_size(int n, int k) { return binomial(n + k, k); }

namespace {

void emit_degree(int n, int d, MultiIndex& cur, int pos, int remaining,
                 std::vector<MultiIndex>& out) {
  if (pos == n - 1) {
    cur[pos] = remaining;
    out.push_back(cur);
    return;
  }
  for (int v = remaining; v >= 0; --v) {  // descending lex
    cur[pos] = v;
    emit_degree(n, d, cur, pos + 1, remaining - v, out);
  }
  cur[pos] = 0;
}

}  // namespace

std::vector<MultiIndex> index_set(int n, int k) {
  if (n < 1 || k < 0) throw DimensionMismatch("index_set: need n >= 1, k >= 0");
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(basis_size(n, k)));
  MultiIndex cur(n, 0);
  for (int d = 0; d <= k; ++d) emit_degree(n, d, cur, 0, d, out);
  return out;
}

IndexLookup::IndexLookup(int n, int k) : n_(n), k_(k), offsets_(k + 2, 0) {
  for (int d = 0; d <= k; ++d)
    offsets_[d + 1] = offsets_[d] + binomial(n + d - 1, d);
}

int IndexLookup::operator()(const MultiIndex& alpha) const {
  int d = degree(alpha);
  if (d > k_) return -1;
  // Rank within the degree-d block under descending lexicographic order.
  std::int64_t rank = 0;
  int rem = d;
  for (int i = 0; i + 1 < n_; ++i) {
    // indices whose i-th exponent exceeds alpha[i] come first
    for (int v = rem; v > alpha[i]; --v)
      rank += binomial((rem - v) + (n_ - i - 2), n_ - i - 2);
    rem -= alpha[i];
  }
  return static_cast<int>(offsets_[d] + rank);
}

}  // namespace invmeas
