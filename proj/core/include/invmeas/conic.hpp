#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

#include "invmeas/moment_problem.hpp"

namespace invmeas {

// Cone order in the row space of A: zero (equalities), nonnegative, second
// order cones, then PSD cones in svec form.
struct ConeLayout {
  Eigen::Index zero = 0;
  Eigen::Index nonneg = 0;
  std::vector<Eigen::Index> soc;   // dims, each >= 2
  std::vector<int> psd;            // matrix side lengths
  Eigen::Index total_rows() const;
};

// minimize c^T u  subject to  A u + s = b,  s in K.
// Symmetric matrices are vectorized with sqrt(2)-scaled off-diagonal entries
// so Euclidean and matrix inner products agree.
struct ConicStandardForm {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b, c;
  ConeLayout cones;
  Eigen::Index num_y = 0;  // leading variables are the moment vector
  bool has_aux_t = false;  // one trailing epigraph variable
};

constexpr double kSqrt2 = 1.4142135623730951;

inline Eigen::Index svec_dim(int side) {
  return static_cast<Eigen::Index>(side) * (side + 1) / 2;
}

// svec: lower triangle, column-major, off-diagonal entries times sqrt(2).
Eigen::VectorXd svec(const Eigen::MatrixXd& M);
Eigen::MatrixXd unsvec(const Eigen::VectorXd& v, int side);

ConicStandardForm to_standard_form(const MomentProblem& problem);

// Euclidean projection onto the cone K (in place, by layout blocks).
void project_cone(const ConeLayout& cones, Eigen::VectorXd& v);
// Projection onto the dual cone K* (free x nonneg x soc x psd).
void project_dual_cone(const ConeLayout& cones, Eigen::VectorXd& v);

}  // namespace invmeas
