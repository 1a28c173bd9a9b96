#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <utility>
#include <vector>

#include "invmeas/multi_index.hpp"

namespace invmeas {

enum class BasisFamily { Monomial, Chebyshev };

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x, double slack = 0.0) const {
    return x >= lo - slack && x <= hi + slack;
  }
};

using Box = std::vector<Interval>;

Box unit_box(int n);

// Graded tensor dictionary over a box. Chebyshev functions take the affinely
// rescaled coordinate t_i = (2 x_i - lo_i - hi_i) / (hi_i - lo_i) in [-1,1];
// monomials act on raw coordinates.
struct BasisSpec {
  BasisFamily family = BasisFamily::Chebyshev;
  int dimension = 1;
  int degree = 0;
  Box domain_box;

  std::int64_t size() const { return basis_size(dimension, degree); }
  BasisSpec with_degree(int k) const {
    return BasisSpec{family, dimension, k, domain_box};
  }
};

bool operator==(const BasisSpec& a, const BasisSpec& b);

BasisSpec chebyshev_basis(int n, int k, Box box);
BasisSpec chebyshev_basis(int n, int k);  // unit box
BasisSpec monomial_basis(int n, int k, Box box);

// Values of all dictionary functions at x, in index_set order (entry 0 is 1).
// If `outside` is non-null it is set when x leaves the domain box; evaluation
// still proceeds (the recurrences are valid on all of R).
Eigen::VectorXd eval_basis(const BasisSpec& spec, const Eigen::VectorXd& x,
                           bool* outside = nullptr);

// Per-axis 1D values and first/second derivatives (chain rule applied), used
// to evaluate gradients and Hessians of tensor basis functions pointwise.
struct AxisJet {
  Eigen::VectorXd val, d1, d2;  // length degree+1 each
};
std::vector<AxisJet> axis_jets(const BasisSpec& spec, const Eigen::VectorXd& x);

double jet_value(const std::vector<AxisJet>& jets, const MultiIndex& alpha);
double jet_partial(const std::vector<AxisJet>& jets, const MultiIndex& alpha,
                   int axis);
double jet_second(const std::vector<AxisJet>& jets, const MultiIndex& alpha,
                  int axis_i, int axis_j);

// Theta_{kl}: selects the degree-k prefix from the degree-l dictionary,
// Theta * p_l(x) = p_k(x). Throws DegreeOrder when k > l.
Eigen::SparseMatrix<double> extraction_matrix(int k, int l,
                                              const BasisSpec& spec);

// Linear combination of dictionary functions, keyed by multi-index.
using LinearCombination = std::vector<std::pair<MultiIndex, double>>;

// b_alpha * b_beta = sum_gamma c_gamma b_gamma, exactly. Monomial: single
// term alpha+beta. Chebyshev: tensor product of T_a T_b = (T_{a+b} +
// T_{|a-b|}) / 2 per axis.
LinearCombination product_linearize(const MultiIndex& alpha,
                                    const MultiIndex& beta,
                                    const BasisSpec& spec);

// Integrals of all dictionary functions of degree <= r over the domain box.
Eigen::VectorXd lebesgue_moments(const BasisSpec& spec, int r);

// Dense coefficient vector over index_set(spec.dimension, spec.degree).
struct PolyCoeffs {
  BasisSpec spec;
  Eigen::VectorXd coeffs;

  double eval(const Eigen::VectorXd& x) const;
  double eval1d(double x) const;
  // Largest total degree with a structurally nonzero coefficient.
  int effective_degree(double tol = 0.0) const;
};

PolyCoeffs zero_poly(const BasisSpec& spec);
PolyCoeffs constant_poly(const BasisSpec& spec, double value);
// The coordinate function x_axis expressed in the dictionary (degree >= 1).
PolyCoeffs coordinate_poly(const BasisSpec& spec, int axis);

// Polynomial map R^n -> R^n, one coefficient vector per component; all
// components share dimension and family.
struct PolyMap {
  std::vector<PolyCoeffs> components;
  int dimension_in() const;
  int dimension_out() const { return static_cast<int>(components.size()); }
  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
};

// Coefficients of g(f(x)) in the degree-l dictionary over f's domain box,
// computed by interpolation on a tensor Chebyshev grid (exact for
// deg(g) * max_j deg(f_j) <= l; otherwise DegreeOverflow).
PolyCoeffs compose_with_map(const PolyCoeffs& g, const PolyMap& f, int l);

// Interpolation utilities (exact on polynomials up to the grid degree).
// One-dimensional nodal transform: values at the grid nodes -> coefficients.
struct NodalTransform1D {
  Eigen::VectorXd nodes;      // grid_degree + 1 points inside the interval
  Eigen::MatrixXd to_coeffs;  // coefficient = to_coeffs * values
};
NodalTransform1D nodal_transform(BasisFamily family, Interval iv, int degree);

// Evaluate `f` on the tensor grid of per-axis degree l and return graded
// coefficients over index_set(n, l). `tail` (optional) receives the largest
// dropped tensor coefficient, a diagnostic for degree overflow.
PolyCoeffs interpolate_on_grid(const BasisSpec& spec_l,
                               const std::function<double(const Eigen::VectorXd&)>& f,
                               double* tail = nullptr);

}  // namespace invmeas
