#include "invmeas/conic.hpp"

#include <cmath>

#include "invmeas/errors.hpp"

namespace invmeas {

Eigen::Index ConeLayout::total_rows() const {
  Eigen::Index n = zero + nonneg;
  for (auto d : soc) n += d;
  for (int s : psd) n += svec_dim(s);
  return n;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& M) {
  const int s = static_cast<int>(M.rows());
  Eigen::VectorXd v(svec_dim(s));
  Eigen::Index at = 0;
  for (int j = 0; j < s; ++j)
    for (int i = j; i < s; ++i)
      v[at++] = (i == j) ? M(i, j) : kSqrt2 * M(i, j);
  return v;
}

Eigen::MatrixXd unsvec(const Eigen::VectorXd& v, int side) {
  Eigen::MatrixXd M(side, side);
  Eigen::Index at = 0;
  for (int j = 0; j < side; ++j)
    for (int i = j; i < side; ++i) {
      double val = (i == j) ? v[at] : v[at] / kSqrt2;
      M(i, j) = val;
      M(j, i) = val;
      ++at;
    }
  return M;
}

ConicStandardForm to_standard_form(const MomentProblem& problem) {
  const auto ly = problem.num_moments();
  const bool aux = problem.has_aux_t;
  const auto ncols = ly + (aux ? 1 : 0);

  const auto* lin = std::get_if<LinearObjective>(&problem.objective);
  if (!lin)
    throw DimensionMismatch(
        "to_standard_form: lift the MomentFit objective first");
  if (lin->y_coeffs.size() != ly)
    throw DimensionMismatch("to_standard_form: objective length");

  ConicStandardForm f;
  f.num_y = ly;
  f.has_aux_t = aux;
  f.c = Eigen::VectorXd::Zero(ncols);
  f.c.head(ly) = lin->y_coeffs;
  if (aux) f.c[ncols - 1] = lin->t_coeff;

  // split blocks: 1x1 PSD blocks go to the nonnegative cone
  std::vector<const PsdBlockMap*> psd_blocks, scalar_blocks;
  for (const auto& b : problem.blocks)
    (b.side == 1 ? scalar_blocks : psd_blocks).push_back(&b);

  ConeLayout& cones = f.cones;
  cones.zero = problem.equalities.rows();
  cones.nonneg = static_cast<Eigen::Index>(scalar_blocks.size());
  if (problem.soc)
    cones.soc.push_back(problem.soc->F.rows() + 1);
  for (const auto* b : psd_blocks) cones.psd.push_back(b->side);

  const auto rows = cones.total_rows();
  f.b = Eigen::VectorXd::Zero(rows);
  std::vector<Eigen::Triplet<double>> trip;

  Eigen::Index row0 = 0;
  // zero cone: equalities A_eq y = rhs -> A_eq y + s = rhs, s = 0.
  // Rows are normalized to unit 2-norm (the constraint set is unchanged);
  // Lie rows carry a 1/tau factor that would otherwise dwarf the cone rows.
  {
    const auto n_eq = problem.equalities.rows();
    Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(n_eq);
    for (int o = 0; o < problem.equalities.outerSize(); ++o)
      for (Eigen::SparseMatrix<double>::InnerIterator it(problem.equalities, o);
           it; ++it)
        row_norm[it.row()] += it.value() * it.value();
    row_norm = row_norm.cwiseSqrt();
    for (int o = 0; o < problem.equalities.outerSize(); ++o)
      for (Eigen::SparseMatrix<double>::InnerIterator it(problem.equalities, o);
           it; ++it) {
        const double scale =
            row_norm[it.row()] > 1e-300 ? 1.0 / row_norm[it.row()] : 1.0;
        trip.emplace_back(static_cast<int>(row0 + it.row()),
                          static_cast<int>(it.col()), scale * it.value());
      }
    for (Eigen::Index r = 0; r < n_eq; ++r)
      f.b[row0 + r] = problem.eq_rhs[r] /
                      (row_norm[r] > 1e-300 ? row_norm[r] : 1.0);
    row0 += n_eq;
  }

  // nonnegative cone: scalar localizing blocks, m(y) >= 0 -> -m(y) + s = 0
  for (const auto* b : scalar_blocks) {
    for (const auto& t : b->vech)
      trip.emplace_back(static_cast<int>(row0), t.col(), -t.value());
    ++row0;
  }

  // second order cone from the lifted objective: s = (t, F y - g)
  if (problem.soc) {
    trip.emplace_back(static_cast<int>(row0), static_cast<int>(ncols - 1),
                      -1.0);  // s_0 = t
    ++row0;
    for (int o = 0; o < problem.soc->F.outerSize(); ++o)
      for (Eigen::SparseMatrix<double>::InnerIterator it(problem.soc->F, o); it;
           ++it)
        trip.emplace_back(static_cast<int>(row0 + it.row()),
                          static_cast<int>(it.col()), -it.value());
    f.b.segment(row0, problem.soc->g.size()) = -problem.soc->g;
    row0 += problem.soc->g.size();
  }

  // PSD cones: s = svec(M(sigma y))  ->  -svec(G y) + s = 0
  for (const auto* b : psd_blocks) {
    const int side = b->side;
    for (const auto& t : b->vech) {
      // recover (i, j) from the vech index to apply svec scaling
      // vech runs column-major over the lower triangle
      int j = 0, idx = t.row();
      while (idx >= side - j) {
        idx -= side - j;
        ++j;
      }
      const int i = j + idx;
      const double scale = (i == j) ? 1.0 : kSqrt2;
      trip.emplace_back(static_cast<int>(row0 + t.row()), t.col(),
                        -scale * t.value());
    }
    row0 += svec_dim(side);
  }

  f.A.resize(rows, ncols);
  f.A.setFromTriplets(trip.begin(), trip.end());
  return f;
}

namespace {

void project_soc(Eigen::Ref<Eigen::VectorXd> v) {
  const double t = v[0];
  const double zn = v.tail(v.size() - 1).norm();
  if (zn <= t) return;          // inside
  if (zn <= -t) {               // polar: project to origin
    v.setZero();
    return;
  }
  const double a = 0.5 * (t + zn);
  v[0] = a;
  v.tail(v.size() - 1) *= a / zn;
}

void project_psd(Eigen::Ref<Eigen::VectorXd> v, int side) {
  Eigen::MatrixXd M = unsvec(v, side);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  M = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  v = svec(M);
}

}  // namespace

void project_cone(const ConeLayout& cones, Eigen::VectorXd& v) {
  Eigen::Index at = cones.zero;
  v.head(cones.zero).setZero();
  v.segment(at, cones.nonneg) = v.segment(at, cones.nonneg).cwiseMax(0.0);
  at += cones.nonneg;
  for (auto d : cones.soc) {
    project_soc(v.segment(at, d));
    at += d;
  }
  for (int s : cones.psd) {
    project_psd(v.segment(at, svec_dim(s)), s);
    at += svec_dim(s);
  }
}

void project_dual_cone(const ConeLayout& cones, Eigen::VectorXd& v) {
  // dual of {0} is R (leave untouched); the remaining cones are self-dual
  Eigen::Index at = cones.zero;
  v.segment(at, cones.nonneg) = v.segment(at, cones.nonneg).cwiseMax(0.0);
  at += cones.nonneg;
  for (auto d : cones.soc) {
    project_soc(v.segment(at, d));
    at += d;
  }
  for (int s : cones.psd) {
    project_psd(v.segment(at, svec_dim(s)), s);
    at += svec_dim(s);
  }
}

}  // namespace invmeas
