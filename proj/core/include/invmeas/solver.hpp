#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "invmeas/conic.hpp"

namespace invmeas {

enum class SolveStatus { Optimal, MaxIter, InfeasibleLike };

std::string to_string(SolveStatus s);

struct SolveReport {
  SolveStatus status = SolveStatus::MaxIter;
  double primal_res = 0.0;
  double dual_res = 0.0;
  double gap = 0.0;
  double objective = 0.0;
  long iterations = 0;
  double seconds = 0.0;
  bool polished = false;
};

struct SolverOptions {
  double eps_abs = 1e-8;
  double eps_rel = 1e-8;
  long max_iter = 500000;
  double relax = 1.5;        // over-relaxation
  double rho = 1.0;          // initial penalty (adapted online)
  bool adaptive_rho = true;
  bool ruiz = true;
  int ruiz_iters = 10;
  int check_every = 25;
  bool polish = false;
  std::uint64_t seed = 0;    // nonzero: tiny deterministic random start
  long trace_every = 0;      // nonzero: print residuals every N iterations
  std::optional<Eigen::VectorXd> warm_u;  // primal warm start
};

struct SolveResult {
  Eigen::VectorXd u;     // primal variables (moments, then epigraph t if any)
  Eigen::VectorXd s;     // cone slacks
  Eigen::VectorXd dual;  // dual variables, in K*
  SolveReport report;

  Eigen::VectorXd moments(Eigen::Index num_y) const { return u.head(num_y); }
};

// Operator-splitting (ADMM) conic solver with cached normal-equation
// factorization, cone projections, over-relaxation and diagonal (Ruiz)
// equilibration. Deterministic for fixed inputs and options.
SolveResult solve_conic(const ConicStandardForm& form,
                        const SolverOptions& opts = {});

// Frobenius-nearest PSD matrix (negative eigenvalues clipped).
Eigen::MatrixXd psd_project(const Eigen::MatrixXd& symmetric);

}  // namespace invmeas
