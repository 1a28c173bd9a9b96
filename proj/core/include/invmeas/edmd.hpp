#pragma once

#include <Eigen/Dense>
#include <string>

#include "invmeas/basis.hpp"
#include "invmeas/snapshots.hpp"

namespace invmeas {

enum class LieKind { DataDriven, ExactMap, ExactOde, ExactSde };

struct ThresholdReport {
  bool applied = false;
  int rounds = 0;
  double zeroed_fraction = 0.0;
};

// k_x x l_x matrix whose row r expands the (approximate) Lie derivative of
// the r-th degree-k dictionary function in the degree-l dictionary. Row 0
// (the constant function) vanishes exactly for exact generators and to
// numerical precision for EDMD.
struct LieMatrix {
  Eigen::MatrixXd entries;
  int k = 0;
  int l = 0;
  BasisSpec spec;  // degree field equals l
  double tau = 1.0;
  LieKind kind = LieKind::DataDriven;
  ThresholdReport threshold;
};

// Dictionary data matrices: column i of P is p_l(x_i), of Q is p_k(z_i).
// Dense; intended for small/medium m. Large m goes through EdmdGram.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_data_matrices(
    const SnapshotSet& snaps, int k, int l, const BasisSpec& spec);

// Accumulated Gram products P P^T (l_x x l_x) and Q P^T (k_x x l_x), built in
// snapshot blocks so m in the millions never materializes P.
struct EdmdGram {
  Eigen::MatrixXd PPt;
  Eigen::MatrixXd QPt;
  Eigen::Index m = 0;
  int k = 0, l = 0;
  BasisSpec spec;
  double tau = 1.0;
};

EdmdGram accumulate_gram(const SnapshotSet& snaps, int k, int l,
                         const BasisSpec& spec, Eigen::Index block = 100000);

// K = Q P^+ via SVD; singular values below rank_tol * sigma_max truncated.
Eigen::MatrixXd koopman_matrix(const Eigen::MatrixXd& P,
                               const Eigen::MatrixXd& Q,
                               double rank_tol = 1e-10);

// Same operator from Gram products: K = (Q P^T)(P P^T)^+.
Eigen::MatrixXd koopman_from_gram(const EdmdGram& gram,
                                  double rank_tol = 1e-10);

// L = (K - Theta) / tau.
LieMatrix lie_matrix(const Eigen::MatrixXd& K, int k, int l,
                     const BasisSpec& spec, double tau,
                     LieKind kind = LieKind::DataDriven);

// Convenience: snapshots -> L, choosing the Gram path for large m.
LieMatrix edmd_lie_matrix(const SnapshotSet& snaps, int k, int l,
                          const BasisSpec& spec, double rank_tol = 1e-10,
                          Eigen::Index gram_threshold = 100000);

// Iterative row-wise hard thresholding: zero entries below rel_cut times the
// row maximum, re-fit the surviving entries by least squares on the data, and
// repeat until the sparsity pattern stabilizes.
LieMatrix threshold_refine(const LieMatrix& L, const EdmdGram& gram,
                           double rel_cut = 1e-3, int max_rounds = 20);

// Exact generators on the degree-k dictionary, expanded in degree l.
LieMatrix exact_lie_map(const PolyMap& f, int k, int l, const BasisSpec& spec);
LieMatrix exact_lie_ode(const PolyMap& drift, int k, int l,
                        const BasisSpec& spec);
// noise_covariance is b b^T (constant, additive noise).
LieMatrix exact_lie_sde(const PolyMap& drift,
                        const Eigen::MatrixXd& noise_covariance, int k, int l,
                        const BasisSpec& spec);

// JSON serialization (header + dense row-major entries).
void save_lie_matrix(const LieMatrix& L, const std::string& path);
LieMatrix load_lie_matrix(const std::string& path);

}  // namespace invmeas
