#pragma once

#include <cstdint>
#include <vector>

namespace invmeas {

// Exponent vector of a tensor basis function (alpha in N_0^n).
using MultiIndex = std::vector<int>;

int degree(const MultiIndex& alpha);

// Ordering used everywhere: ascending total degree, then descending
// lexicographic within a degree, so x^2, xy, y^2 lists in that order and the
// degree-k set is always a prefix of the degree-l set for k <= l.
bool graded_before(const MultiIndex& a, const MultiIndex& b);

std::int64_t binomial(int n, int k);

// Number of multi-indices of dimension n with total degree <= k.
std::int64_t basis_size(int n, int k);

std::vector<MultiIndex> index_set(int n, int k);

// Position lookup for members of index_set(n, k); returns -1 if |alpha| > k.
class IndexLookup {
 public:
  IndexLookup(int n, int k);
  int operator()(const MultiIndex& alpha) const;
  int dimension() const { return n_; }
  int max_degree() const { return k_; }

 private:
  int n_, k_;
  std::vector<std::int64_t> offsets_;  // start of each degree block
};

}  // namespace invmeas
