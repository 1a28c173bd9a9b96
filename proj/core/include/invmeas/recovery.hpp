#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "invmeas/basis.hpp"
#include "invmeas/snapshots.hpp"

namespace invmeas {

// M_pi = integral of p_r p_r^T against Lebesgue measure on the domain box.
Eigen::MatrixXd reference_moment_matrix(const BasisSpec& spec, int r);

// Degree-r polynomial density against Lebesgue reference; integrates to y_0.
struct SignedDensity {
  PolyCoeffs coeffs;
};

// rho_r = p_r^T M_pi^{-1} y_{<=r}.
SignedDensity density_from_moments(const Eigen::VectorXd& y, int r,
                                   const BasisSpec& spec);

// Antiderivative R(x) = int_lo^x rho, as a degree r+1 polynomial with
// R(lo) = 0 (one dimension only).
PolyCoeffs cdf_polynomial(const SignedDensity& density);

// L1 distance between the density's CDF and an exact CDF, by adaptive
// quadrature to the given tolerance.
double cdf_l1_distance(const SignedDensity& density,
                       const std::function<double(double)>& exact_cdf,
                       double tol = 1e-10);

struct Atom {
  Eigen::VectorXd point;
  double weight = 0.0;
};

struct AtomicMeasure {
  std::vector<Atom> atoms;
  int moment_matrix_rank = 0;
  double reconstruction_residual = 0.0;
};

struct ExtractionOptions {
  double rank_tol = 1e-6;      // relative eigenvalue cutoff
  double min_gap = 10.0;       // required lambda_p / lambda_{p+1}
  double residual_tol = 1e-4;  // moment reconstruction gate
  double weight_tol = 1e-6;    // weights >= -weight_tol, sum to 1 +- this
  double box_inflate = 1e-4;
  std::uint64_t seed = 12345;  // shift-matrix combination weights
};

// Atomic measure from a (pseudo-)moment vector via the rank-deficient moment
// matrix: low-rank factor, column echelon basis selection, per-coordinate
// shift matrices, joint diagonalization, Vandermonde weights. Throws
// ExtractionFailed when the rank is ambiguous or validation fails.
AtomicMeasure extract_atoms(const Eigen::VectorXd& y, const BasisSpec& spec,
                            const ExtractionOptions& opts = {});

// Expectations of a polynomial observable. For densities the observable must
// share the density's basis family (convert first if needed).
double expectation(const SignedDensity& density, const PolyCoeffs& g);
double expectation(const AtomicMeasure& measure, const PolyCoeffs& g);

// Re-express a polynomial in another family/degree by exact interpolation.
PolyCoeffs convert_poly(const PolyCoeffs& p, BasisFamily family, int degree);

// Piecewise-constant density on a uniform grid over the snapshot box.
struct HistogramDensity {
  Box box;
  int bins_per_axis = 0;
  std::vector<double> cell_prob;  // axis 0 fastest
};

HistogramDensity histogram_density(const SnapshotSet& snaps, int bins_per_axis);
double expectation(const HistogramDensity& h, const PolyCoeffs& g);

}  // namespace invmeas
