#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "invmeas/basis.hpp"
#include "invmeas/edmd.hpp"

namespace invmeas {

// X = {x : sigma_1(x) >= 0, ..., sigma_J(x) >= 0}; sigma_0 = 1 is implicit.
struct SemialgebraicSet {
  int dimension = 0;
  std::vector<PolyCoeffs> inequalities;
};

// The box [-1,1]^n (or the spec's box for monomial bases) as per-axis
// quadratic inequalities sigma_i = (x_i - lo)(hi - x_i) scaled to 1 - t_i^2.
SemialgebraicSet box_set(const BasisSpec& spec);

struct LinearObjective {
  Eigen::VectorXd y_coeffs;  // over the full degree-l index set
  double t_coeff = 0.0;      // weight on the lifted epigraph variable
};

struct MomentTarget {
  MultiIndex index;
  double value = 0.0;
  double weight = 1.0;
};

// F(y) = sum_targets w * (y_idx - value)^2.
struct MomentFitObjective {
  std::vector<MomentTarget> targets;
};

using Objective = std::variant<LinearObjective, MomentFitObjective>;

// Linear map y -> symmetric s x s localizing matrix, stored as triplets over
// the lower triangle (vech index, y index, coefficient).
struct PsdBlockMap {
  int side = 0;
  std::vector<Eigen::Triplet<double>> vech;
  static int vech_index(int i, int j, int side);  // i >= j, column-major
};

// Evaluate the block at a moment vector.
Eigen::MatrixXd eval_block(const PsdBlockMap& block, const Eigen::VectorXd& y);

struct SocBlock {
  // || F y - g || <= t, one epigraph variable
  Eigen::SparseMatrix<double> F;
  Eigen::VectorXd g;
};

struct MomentProblem {
  BasisSpec spec;  // degree = l
  int k = 0, l = 0;
  Eigen::SparseMatrix<double> equalities;  // Lie rows + normalization row
  Eigen::VectorXd eq_rhs;
  std::vector<PsdBlockMap> blocks;  // sigma_0 first
  Objective objective = LinearObjective{};
  std::optional<SocBlock> soc;
  bool has_aux_t = false;

  Eigen::Index num_moments() const { return spec.size(); }
};

// Localizing-matrix map for one inequality: entry (a,b) is the y-linear form
// of b_a * b_b * sigma. The block side is binom(n + gamma, gamma) with
// gamma = floor((l - deg sigma)/2).
PsdBlockMap moment_matrix_map(const PolyCoeffs& sigma, int l,
                              const BasisSpec& spec);

MomentProblem assemble_problem(const LieMatrix& L, const SemialgebraicSet& X,
                               Objective objective);

// Replace a MomentFit objective by a linear one plus one second-order cone:
// minimize t subject to || diag(sqrt w)(y_I - target) || <= t.
MomentProblem lift_momentfit(const MomentProblem& problem);

// Combined objective: minimize linear.y_coeffs^T y + anchor_weight * t with
// || diag(sqrt w)(y_I - target) || <= t. Linear programs over the relaxation
// often have a non-unique optimal face; the anchor term selects a
// deterministic point on it (the role an interior-point method's centering
// plays elsewhere).
MomentProblem assemble_anchored(const LieMatrix& L, const SemialgebraicSet& X,
                                const LinearObjective& linear,
                                const MomentFitObjective& anchor,
                                double anchor_weight);

// Anchor targets at the empirical moments of the snapshots, all indices with
// 1 <= degree <= l.
MomentFitObjective empirical_anchor(const SnapshotSet& snaps,
                                    const BasisSpec& spec);

// Unit-sphere random linear objectives over degree 1..k coefficients
// (constant coefficient forced to zero), deterministic in the seed.
std::vector<LinearObjective> randomized_objectives(int k, const BasisSpec& spec,
                                                   int count,
                                                   std::uint64_t seed);

void save_problem(const MomentProblem& p, const std::string& path);
MomentProblem load_problem(const std::string& path);

}  // namespace invmeas
