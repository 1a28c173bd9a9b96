#include "invmeas/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>

#include "invmeas/errors.hpp"
#include "invmeas/rng.hpp"

namespace invmeas {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::InfeasibleLike: return "infeasible_like";
  }
  return "unknown";
}

Eigen::MatrixXd psd_project(const Eigen::MatrixXd& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetric);
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

namespace {

// Row scale factors: individual for zero/nonneg rows, one shared factor per
// SOC/PSD block so scaling preserves cone membership.
void uniformize_block_scales(const ConeLayout& cones, Eigen::VectorXd& d) {
  Eigen::Index at = cones.zero + cones.nonneg;
  for (auto dim : cones.soc) {
    const double g = std::exp(d.segment(at, dim).array().log().mean());
    d.segment(at, dim).setConstant(g);
    at += dim;
  }
  for (int s : cones.psd) {
    const auto dim = svec_dim(s);
    const double g = std::exp(d.segment(at, dim).array().log().mean());
    d.segment(at, dim).setConstant(g);
    at += dim;
  }
}

struct Scaling {
  Eigen::VectorXd d, e;  // row and column scales
  double b_scale = 1.0, c_scale = 1.0;
};

Scaling ruiz_equilibrate(Eigen::SparseMatrix<double>& A,
                         const ConeLayout& cones, int iters) {
  const auto rows = A.rows(), cols = A.cols();
  // Cumulative scale bounds: near-zero rows (e.g. the Lie row of the
  // constant basis function) must not be amplified into noise constraints.
  constexpr double kMinScale = 1e-4, kMaxScale = 1e4;
  Scaling sc;
  sc.d = Eigen::VectorXd::Ones(rows);
  sc.e = Eigen::VectorXd::Ones(cols);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd rmax = Eigen::VectorXd::Zero(rows);
    Eigen::VectorXd cmax = Eigen::VectorXd::Zero(cols);
    for (int o = 0; o < A.outerSize(); ++o)
      for (Eigen::SparseMatrix<double>::InnerIterator itr(A, o); itr; ++itr) {
        const double a = std::abs(itr.value());
        rmax[itr.row()] = std::max(rmax[itr.row()], a);
        cmax[itr.col()] = std::max(cmax[itr.col()], a);
      }
    Eigen::VectorXd dr(rows), dc(cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      dr[i] = rmax[i] > 0 ? 1.0 / std::sqrt(rmax[i]) : 1.0;
      dr[i] = std::clamp(sc.d[i] * dr[i], kMinScale, kMaxScale) / sc.d[i];
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      dc[j] = cmax[j] > 0 ? 1.0 / std::sqrt(cmax[j]) : 1.0;
      dc[j] = std::clamp(sc.e[j] * dc[j], kMinScale, kMaxScale) / sc.e[j];
    }
    uniformize_block_scales(cones, dr);
    for (int o = 0; o < A.outerSize(); ++o)
      for (Eigen::SparseMatrix<double>::InnerIterator itr(A, o); itr; ++itr)
        itr.valueRef() *= dr[itr.row()] * dc[itr.col()];
    sc.d.array() *= dr.array();
    sc.e.array() *= dc.array();
  }
  return sc;
}

}  // namespace

namespace {

SolveResult solve_conic_core(const ConicStandardForm& form,
                             const SolverOptions& opts);

}  // namespace

SolveResult solve_conic(const ConicStandardForm& form,
                        const SolverOptions& opts) {
  if (form.cones.zero == 0) return solve_conic_core(form, opts);

  // Presolve: eliminate the equality rows by restricting to their affine
  // solution set, y = y_p + N z with N spanning the null space. The cone
  // problem in z has no zero cone left, which conditions the splitting far
  // better than penalizing equalities (the Lie rows are noisy and stiff).
  const auto t_start = std::chrono::steady_clock::now();
  const auto n_eq = form.cones.zero;
  const auto cols = form.A.cols();
  Eigen::MatrixXd E = Eigen::MatrixXd(form.A.topRows(n_eq));
  Eigen::VectorXd r = form.b.head(n_eq);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(E, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = sv.size() ? 1e-10 * sv[0] : 0.0;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv[rank] > cut) ++rank;
  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(rank);
  for (Eigen::Index i = 0; i < rank; ++i) inv_sv[i] = 1.0 / sv[i];
  const Eigen::MatrixXd V_range = svd.matrixV().leftCols(rank);
  const Eigen::MatrixXd U_range = svd.matrixU().leftCols(rank);
  Eigen::VectorXd y_p =
      V_range * (inv_sv.asDiagonal() * (U_range.transpose() * r));
  if ((E * y_p - r).norm() > 1e-8 * (1.0 + r.norm()))
    throw NumericalBreakdown("solve_conic: inconsistent equality rows");
  Eigen::MatrixXd null_basis = svd.matrixV().rightCols(cols - rank);

  if (cols == rank)
    throw NumericalBreakdown(
        "solve_conic: equalities determine every variable");

  ConicStandardForm red;
  red.num_y = cols - rank;
  red.has_aux_t = false;
  red.cones = form.cones;
  red.cones.zero = 0;
  const auto cone_rows = form.A.rows() - n_eq;
  Eigen::MatrixXd A_cone = Eigen::MatrixXd(form.A.bottomRows(cone_rows));
  red.A = (A_cone * null_basis).sparseView(1.0, 1e-300);
  red.b = form.b.tail(cone_rows) - A_cone * y_p;
  red.c = null_basis.transpose() * form.c;

  SolverOptions inner_opts = opts;
  if (opts.warm_u && opts.warm_u->size() == cols)
    inner_opts.warm_u = (null_basis.transpose() * (*opts.warm_u - y_p)).eval();

  SolveResult inner = solve_conic_core(red, inner_opts);

  SolveResult res;
  res.u = y_p + null_basis * inner.u;
  res.s.resize(form.A.rows());
  res.s.head(n_eq).setZero();
  res.s.tail(cone_rows) = inner.s;
  // recover equality duals from stationarity: E^T lam_eq = -(c + Ac^T lam_c)
  Eigen::VectorXd resid = form.c + A_cone.transpose() * inner.dual;
  Eigen::VectorXd lam_eq =
      -U_range * (inv_sv.asDiagonal() * (V_range.transpose() * resid));
  res.dual.resize(form.A.rows());
  res.dual.head(n_eq) = lam_eq;
  res.dual.tail(cone_rows) = inner.dual;

  res.report = inner.report;
  // restate residuals on the original problem
  res.report.primal_res = (form.A * res.u + res.s - form.b).norm() /
                          (1.0 + form.b.norm());
  res.report.dual_res = (form.A.transpose() * res.dual + form.c).norm() /
                        (1.0 + form.c.norm());
  const double pobj = form.c.dot(res.u);
  const double dobj = -form.b.dot(res.dual);
  res.report.gap =
      std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
  res.report.objective = pobj;
  res.report.seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t_start)
                           .count();
  return res;
}

namespace {

SolveResult solve_conic_core(const ConicStandardForm& form,
                             const SolverOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  const auto rows = form.A.rows();
  const auto cols = form.A.cols();
  if (form.b.size() != rows || form.c.size() != cols)
    throw DimensionMismatch("solve_conic: inconsistent standard form");
  if (!form.b.allFinite() || !form.c.allFinite())
    throw NonFiniteInput("solve_conic: non-finite problem data");

  // --- scale the problem -------------------------------------------------
  Eigen::SparseMatrix<double> As = form.A;
  Scaling sc;
  if (opts.ruiz) {
    sc = ruiz_equilibrate(As, form.cones, opts.ruiz_iters);
  } else {
    sc.d = Eigen::VectorXd::Ones(rows);
    sc.e = Eigen::VectorXd::Ones(cols);
  }
  Eigen::VectorXd bs = sc.d.asDiagonal() * form.b;
  Eigen::VectorXd cs = sc.e.asDiagonal() * form.c;
  sc.b_scale = std::max(1e-6, bs.norm());
  sc.c_scale = std::max(1e-6, cs.norm());
  bs /= sc.b_scale;
  cs /= sc.c_scale;

  // dense products win once the (reduced) matrix stops being sparse
  const bool dense_ops =
      As.nonZeros() > static_cast<std::int64_t>(rows) * cols / 4;
  Eigen::MatrixXd Ad;
  if (dense_ops) Ad = Eigen::MatrixXd(As);

  // --- factor the normal equations (independent of rho) ------------------
  Eigen::MatrixXd H = Eigen::MatrixXd(As.transpose() * As);
  Eigen::LLT<Eigen::MatrixXd> llt;
  double reg = 0.0;
  for (int attempt = 0; attempt < 8; ++attempt) {
    llt.compute(H + reg * Eigen::MatrixXd::Identity(cols, cols));
    if (llt.info() == Eigen::Success) break;
    reg = reg == 0.0 ? 1e-12 * H.trace() / static_cast<double>(cols) : reg * 100;
  }
  if (llt.info() != Eigen::Success)
    throw NumericalBreakdown("solve_conic: normal equations not factorizable");

  // --- iterate ------------------------------------------------------------
  double rho = opts.rho;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(cols);
  if (opts.warm_u && opts.warm_u->size() == cols) {
    // map the caller's primal point into the scaled variables
    u = (opts.warm_u->array() / sc.e.array()).matrix() / sc.b_scale;
  } else if (opts.seed != 0) {
    Rng rng(opts.seed);
    for (Eigen::Index i = 0; i < cols; ++i) u[i] = 1e-3 * rng.next_gaussian();
  }
  Eigen::VectorXd s = bs - As * u;
  project_cone(form.cones, s);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(rows);
  Eigen::VectorXd Au(rows), v(rows), q(rows);

  SolveResult res;
  SolveReport& rep = res.report;
  const Eigen::SparseMatrix<double> Ast = As.transpose();

  auto unscaled_into = [&](SolveResult& out) {
    out.u = sc.e.asDiagonal() * u * sc.b_scale;
    out.s = (s.array() / sc.d.array()).matrix() * sc.b_scale;
    out.dual = sc.d.asDiagonal() * (rho * w) * sc.c_scale;
  };

  double best_residual = std::numeric_limits<double>::infinity();
  long next_adapt = opts.check_every * 8;
  long it = 0;
  Eigen::VectorXd rhs(rows);
  for (; it < opts.max_iter; ++it) {
    // u-step: minimize c'u + (rho/2)||Au + s - b + w||^2
    rhs = bs - s - w;
    if (dense_ops) {
      u = llt.solve(Ad.transpose() * rhs - cs / rho);
      Au.noalias() = Ad * u;
    } else {
      u = llt.solve(Ast * rhs - cs / rho);
      Au.noalias() = As * u;
    }
    v = opts.relax * Au + (1.0 - opts.relax) * (bs - s);
    q = bs - v - w;
    s = q;
    project_cone(form.cones, s);
    w = s - q;  // = w + v + s - b, lies in the dual cone

    if ((it + 1) % opts.check_every != 0) continue;

    // unscaled residuals
    SolveResult cur;
    unscaled_into(cur);
    Eigen::VectorXd Ax = form.A * cur.u;
    const double pres =
        (Ax + cur.s - form.b).norm() / (1.0 + form.b.norm());
    const double dres = (form.A.transpose() * cur.dual + form.c).norm() /
                        (1.0 + form.c.norm());
    const double pobj = form.c.dot(cur.u);
    const double dobj = -form.b.dot(cur.dual);
    const double gap =
        std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double eps = opts.eps_abs;  // relative forms below
    const double worst = std::max({pres, dres, gap});
    if (worst < best_residual) best_residual = worst;

    if (opts.trace_every > 0 && (it + 1) % opts.trace_every == 0)
      std::fprintf(stderr,
                   "  it=%-8ld pres=%.3e dres=%.3e gap=%.3e rho=%.2e obj=%.9f\n",
                   it + 1, pres, dres, gap, rho, pobj);

    if (pres < eps + opts.eps_rel && dres < eps + opts.eps_rel &&
        gap < eps + opts.eps_rel) {
      rep.status = SolveStatus::Optimal;
      rep.primal_res = pres;
      rep.dual_res = dres;
      rep.gap = gap;
      rep.objective = pobj;
      rep.iterations = it + 1;
      res.u = cur.u;
      res.s = cur.s;
      res.dual = cur.dual;
      break;
    }

    // divergence heuristic: residuals exploding with large dual magnitude
    if (!std::isfinite(worst) ||
        (it > 10000 && worst > 1e6 * std::max(1.0, best_residual) )) {
      rep.status = SolveStatus::InfeasibleLike;
      rep.primal_res = pres;
      rep.dual_res = dres;
      rep.gap = gap;
      rep.objective = pobj;
      rep.iterations = it + 1;
      res.u = cur.u;
      res.s = cur.s;
      res.dual = cur.dual;
      break;
    }

    // adaptive penalty on a doubling schedule: finitely many changes, so the
    // tail runs at constant rho; the cached factorization is rho-independent
    if (opts.adaptive_rho && (it + 1) >= next_adapt) {
      next_adapt *= 2;
      const double ratio = (pres + 1e-300) / (dres + 1e-300);
      if (ratio > 5.0 || ratio < 0.2) {
        double factor = std::sqrt(ratio);
        factor = std::min(10.0, std::max(0.1, factor));
        const double rho_new =
            std::min(1e6, std::max(1e-6, rho * factor));
        w *= rho / rho_new;  // keep lambda = rho * w fixed
        rho = rho_new;
      }
    }
  }

  if (rep.iterations == 0) {  // loop exhausted without meeting tolerances
    SolveResult cur;
    unscaled_into(cur);
    Eigen::VectorXd Ax = form.A * cur.u;
    rep.status = SolveStatus::MaxIter;
    rep.primal_res = (Ax + cur.s - form.b).norm() / (1.0 + form.b.norm());
    rep.dual_res = (form.A.transpose() * cur.dual + form.c).norm() /
                   (1.0 + form.c.norm());
    const double pobj = form.c.dot(cur.u);
    const double dobj = -form.b.dot(cur.dual);
    rep.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    rep.objective = pobj;
    rep.iterations = it;
    res.u = cur.u;
    res.s = cur.s;
    res.dual = cur.dual;
  }

  if (opts.polish && rep.status == SolveStatus::Optimal) {
    // Equality-constrained least squares on the active cone faces.
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> rhs;
    const double act_tol = std::sqrt(opts.eps_abs);
    Eigen::VectorXd slack = form.b - form.A * res.u;
    auto add_row = [&](const Eigen::RowVectorXd& arow, double b_val) {
      const int r = static_cast<int>(rhs.size());
      for (Eigen::Index cidx = 0; cidx < arow.size(); ++cidx)
        if (arow[cidx] != 0.0)
          trip.emplace_back(r, static_cast<int>(cidx), arow[cidx]);
      rhs.push_back(b_val);
    };
    Eigen::MatrixXd Adense(form.A);
    Eigen::Index at = 0;
    for (; at < form.cones.zero; ++at) add_row(Adense.row(at), form.b[at]);
    for (Eigen::Index i = 0; i < form.cones.nonneg; ++i, ++at)
      if (slack[at] < act_tol * (1.0 + std::abs(form.b[at])))
        add_row(Adense.row(at), form.b[at]);
    for (auto dim : form.cones.soc) {
      const double t0 = slack[at];
      const double zn = slack.segment(at + 1, dim - 1).norm();
      if (std::abs(zn - t0) < act_tol * (1.0 + t0) && t0 > act_tol) {
        // boundary face: z parallel to the converged direction
        Eigen::VectorXd dir = slack.segment(at + 1, dim - 1) / t0;
        for (Eigen::Index r = 1; r < dim; ++r)
          add_row(Adense.row(at + r) - dir[r - 1] * Adense.row(at),
                  form.b[at + r] - dir[r - 1] * form.b[at]);
      } else if (t0 <= act_tol) {
        for (Eigen::Index r = 0; r < dim; ++r)
          add_row(Adense.row(at + r), form.b[at + r]);
      }
      at += dim;
    }
    for (int side : form.cones.psd) {
      const auto dim = svec_dim(side);
      Eigen::MatrixXd S = unsvec(slack.segment(at, dim), side);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
      const double lmax = std::max(1e-300, es.eigenvalues().maxCoeff());
      for (int ev = 0; ev < side; ++ev) {
        if (es.eigenvalues()[ev] > act_tol * lmax) continue;
        const Eigen::VectorXd vec = es.eigenvectors().col(ev);
        // S(u) vec = 0: one equation per matrix row, expressed through svec
        for (int i = 0; i < side; ++i) {
          Eigen::RowVectorXd arow = Eigen::RowVectorXd::Zero(cols);
          double b_val = 0.0;
          for (int j = 0; j < side; ++j) {
            const int vi = PsdBlockMap::vech_index(std::max(i, j),
                                                   std::min(i, j), side);
            const double unscale = (i == j) ? 1.0 : 1.0 / kSqrt2;
            arow += vec[j] * unscale * Adense.row(at + vi);
            b_val += vec[j] * unscale * form.b[at + vi];
          }
          add_row(arow, b_val);
        }
      }
      at += dim;
    }
    if (!rhs.empty()) {
      Eigen::SparseMatrix<double> Fa(static_cast<Eigen::Index>(rhs.size()),
                                     cols);
      Fa.setFromTriplets(trip.begin(), trip.end());
      Eigen::VectorXd fb =
          Eigen::Map<Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
      Eigen::MatrixXd FtF = Eigen::MatrixXd(Fa.transpose() * Fa);
      FtF.diagonal().array() += 1e-12 * (1.0 + FtF.trace() / cols);
      Eigen::VectorXd u_pol =
          res.u + FtF.ldlt().solve(Fa.transpose() * (fb - Fa * res.u));
      // accept only if feasibility did not degrade and objective not worse
      Eigen::VectorXd s_pol = form.b - form.A * u_pol;
      Eigen::VectorXd s_prj = s_pol;
      project_cone(form.cones, s_prj);
      const double viol = (s_prj - s_pol).norm() / (1.0 + form.b.norm());
      const double obj_pol = form.c.dot(u_pol);
      if (viol <= std::max(rep.primal_res * 2.0, opts.eps_abs) &&
          obj_pol <= rep.objective + opts.eps_abs * (1.0 + std::abs(rep.objective))) {
        res.u = u_pol;
        res.s = s_prj;
        rep.objective = obj_pol;
        rep.polished = true;
      }
    }
  }

  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t_start)
                    .count();
  return res;
}

}  // namespace

}  // namespace invmeas
