#include "invmeas/recovery.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "invmeas/errors.hpp"
#include "invmeas/moment_problem.hpp"
#include "invmeas/rng.hpp"

namespace invmeas {

Eigen::MatrixXd reference_moment_matrix(const BasisSpec& spec, int r) {
  auto idx = index_set(spec.dimension, r);
  const auto s = static_cast<Eigen::Index>(idx.size());
  Eigen::VectorXd mom = lebesgue_moments(spec, 2 * r);
  IndexLookup look(spec.dimension, 2 * r);
  const BasisSpec spec2 = spec.with_degree(2 * r);
  Eigen::MatrixXd M(s, s);
  for (Eigen::Index a = 0; a < s; ++a)
    for (Eigen::Index b = 0; b <= a; ++b) {
      double v = 0.0;
      for (const auto& [mi, c] :
           product_linearize(idx[static_cast<std::size_t>(a)],
                             idx[static_cast<std::size_t>(b)], spec2))
        v += c * mom[look(mi)];
      M(a, b) = v;
      M(b, a) = v;
    }
  return M;
}

SignedDensity density_from_moments(const Eigen::VectorXd& y, int r,
                                   const BasisSpec& spec) {
  const auto sr = basis_size(spec.dimension, r);
  if (y.size() < sr)
    throw DegreeOverflow("density_from_moments: r exceeds moment degree");
  Eigen::MatrixXd M = reference_moment_matrix(spec, r);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success)
    throw SingularReference("density_from_moments: reference matrix");
  SignedDensity d;
  d.coeffs = PolyCoeffs{spec.with_degree(r), ldlt.solve(y.head(sr))};
  return d;
}

namespace {

// antiderivative of sum c_j b_j(t) on [-1,1] (Chebyshev) or raw (monomial),
// before on the outer interval scaling; returns coefficients of degree+1
std::vector<double> antiderivative_1d(BasisFamily family,
                                      const Eigen::VectorXd& c) {
  const auto n = c.size();
  std::vector<double> A(static_cast<std::size_t>(n) + 1, 0.0);
  if (family == BasisFamily::Monomial) {
    for (Eigen::Index j = 0; j < n; ++j)
      A[static_cast<std::size_t>(j) + 1] = c[j] / static_cast<double>(j + 1);
    return A;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double cj = c[j];
    if (cj == 0.0) continue;
    if (j == 0) {
      A[1] += cj;  // int T_0 = T_1
    } else if (j == 1) {
      A[2] += cj / 4.0;  // int T_1 = T_2 / 4 (+ const)
    } else {
      A[static_cast<std::size_t>(j) + 1] += cj / (2.0 * (j + 1));
      A[static_cast<std::size_t>(j) - 1] -= cj / (2.0 * (j - 1));
    }
  }
  return A;
}

}  // namespace

PolyCoeffs cdf_polynomial(const SignedDensity& density) {
  const BasisSpec& spec = density.coeffs.spec;
  if (spec.dimension != 1)
    throw DimensionNotOne("cdf_polynomial: 1D densities only");
  const Interval iv = spec.domain_box[0];
  auto A = antiderivative_1d(spec.family, density.coeffs.coeffs);
  const double jac =
      spec.family == BasisFamily::Chebyshev ? iv.width() / 2.0 : 1.0;
  PolyCoeffs R{spec.with_degree(spec.degree + 1),
               Eigen::VectorXd::Zero(spec.degree + 2)};
  for (std::size_t j = 0; j < A.size(); ++j)
    R.coeffs[static_cast<Eigen::Index>(j)] = jac * A[j];
  R.coeffs[0] -= R.eval1d(iv.lo);  // pin R(lo) = 0
  return R;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double fa, double fm, double fb, double whole,
                        double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol) {
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double cdf_l1_distance(const SignedDensity& density,
                       const std::function<double(double)>& exact_cdf,
                       double tol) {
  PolyCoeffs R = cdf_polynomial(density);
  const Interval iv = density.coeffs.spec.domain_box[0];
  auto integrand = [&](double x) { return std::abs(R.eval1d(x) - exact_cdf(x)); };
  return integrate_adaptive(integrand, iv.lo, iv.hi, tol);
}

// ---------------------------------------------------------------------------
// atom extraction

AtomicMeasure extract_atoms(const Eigen::VectorXd& y, const BasisSpec& spec,
                            const ExtractionOptions& opts) {
  const int n = spec.dimension;
  const int l = spec.degree;
  if (y.size() != spec.size())
    throw DimensionMismatch("extract_atoms: moment vector length");

  // sigma_0 moment matrix at degree gamma = floor(l/2)
  const int gamma = l / 2;
  PsdBlockMap m0 =
      moment_matrix_map(constant_poly(spec.with_degree(0), 1.0), l, spec);
  Eigen::MatrixXd M = eval_block(m0, y);
  const int s = m0.side;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  // eigenvalues ascending; view them descending
  Eigen::VectorXd lam(s);
  Eigen::MatrixXd vec(s, s);
  for (int i = 0; i < s; ++i) {
    lam[i] = es.eigenvalues()[s - 1 - i];
    vec.col(i) = es.eigenvectors().col(s - 1 - i);
  }
  const double lmax = std::max(lam[0], 0.0);
  if (lmax <= 0.0) throw ExtractionFailed("extract_atoms: zero moment matrix");
  int rank = 0;
  while (rank < s && lam[rank] > opts.rank_tol * lmax) ++rank;
  if (rank == 0 || rank == s)
    throw ExtractionFailed("extract_atoms: no usable rank deficiency");
  if (lam[rank - 1] / std::max(lam[rank], 1e-300) < opts.min_gap)
    throw ExtractionFailed("extract_atoms: ambiguous numerical rank");

  // low-rank factor, then column echelon form to pick basis indices
  Eigen::MatrixXd U(s, rank);
  for (int j = 0; j < rank; ++j)
    U.col(j) = vec.col(j) * std::sqrt(std::max(lam[j], 0.0));

  Eigen::MatrixXd W = U;
  std::vector<int> pivot_rows;
  {
    const double piv_tol = 1e-8 * W.cwiseAbs().maxCoeff();
    int col = 0;
    for (int row = 0; row < s && col < rank; ++row) {
      // choose the remaining column with the largest entry in this row
      int best = -1;
      double best_abs = piv_tol;
      for (int c2 = col; c2 < rank; ++c2)
        if (std::abs(W(row, c2)) > best_abs) {
          best = c2;
          best_abs = std::abs(W(row, c2));
        }
      if (best < 0) continue;
      W.col(best).swap(W.col(col));
      W.col(col) /= W(row, col);
      for (int c2 = 0; c2 < rank; ++c2)
        if (c2 != col) W.col(c2) -= W(row, c2) * W.col(col);
      pivot_rows.push_back(row);
      ++col;
    }
    if (static_cast<int>(pivot_rows.size()) != rank)
      throw ExtractionFailed("extract_atoms: echelon reduction lost rank");
  }

  // per-coordinate shift matrices on the pivot basis
  auto idx_g = index_set(n, gamma);
  IndexLookup look_g(n, gamma);
  const BasisSpec spec_g = spec.with_degree(gamma + 1);
  std::vector<Eigen::MatrixXd> shift(static_cast<std::size_t>(n),
                                     Eigen::MatrixXd::Zero(rank, rank));
  for (int axis = 0; axis < n; ++axis) {
    MultiIndex e(static_cast<std::size_t>(n), 0);
    e[static_cast<std::size_t>(axis)] = 1;
    for (int j = 0; j < rank; ++j) {
      const MultiIndex& beta = idx_g[static_cast<std::size_t>(pivot_rows[j])];
      for (const auto& [eta, c] : product_linearize(beta, e, spec_g)) {
        const int row = look_g(eta);
        if (row < 0)
          throw ExtractionFailed(
              "extract_atoms: pivot shift leaves the truncated basis");
        for (int q = 0; q < rank; ++q)
          shift[static_cast<std::size_t>(axis)](q, j) += c * W(row, q);
      }
    }
  }

  // joint diagonalization via a random convex combination
  Rng rng(opts.seed);
  Eigen::MatrixXd Nt = Eigen::MatrixXd::Zero(rank, rank);
  {
    double total = 0.0;
    for (int axis = 0; axis < n; ++axis) {
      const double wgt = 0.1 + rng.next_uniform();
      total += wgt;
      Nt += wgt * shift[static_cast<std::size_t>(axis)].transpose();
    }
    Nt /= total;
  }
  Eigen::RealSchur<Eigen::MatrixXd> schur(Nt);
  const Eigen::MatrixXd& Q = schur.matrixU();

  AtomicMeasure out;
  out.moment_matrix_rank = rank;
  for (int j = 0; j < rank; ++j) {
    Eigen::VectorXd point(n);
    for (int axis = 0; axis < n; ++axis)
      point[axis] = Q.col(j).dot(
          shift[static_cast<std::size_t>(axis)].transpose() * Q.col(j));
    out.atoms.push_back(Atom{point, 0.0});
  }

  // weights from the Vandermonde system against all available moments
  auto idx_l = index_set(n, l);
  Eigen::MatrixXd V(static_cast<Eigen::Index>(idx_l.size()), rank);
  const BasisSpec spec_l = spec;
  for (int j = 0; j < rank; ++j)
    V.col(j) = eval_basis(spec_l, out.atoms[static_cast<std::size_t>(j)].point);
  Eigen::VectorXd w = V.colPivHouseholderQr().solve(y);
  const double resid =
      (V * w - y).cwiseAbs().maxCoeff() / std::max(1.0, y.cwiseAbs().maxCoeff());
  out.reconstruction_residual = resid;

  // validation gates (returned-or-error contract)
  if (resid > opts.residual_tol)
    throw ExtractionFailed("extract_atoms: reconstruction residual " +
                           std::to_string(resid));
  double wsum = 0.0;
  for (int j = 0; j < rank; ++j) {
    if (w[j] < -opts.weight_tol)
      throw ExtractionFailed("extract_atoms: negative weight");
    wsum += w[j];
    out.atoms[static_cast<std::size_t>(j)].weight = w[j];
  }
  if (std::abs(wsum - 1.0) > std::max(opts.weight_tol, 10 * resid))
    throw ExtractionFailed("extract_atoms: weights sum to " +
                           std::to_string(wsum));
  for (const auto& atom : out.atoms)
    for (int axis = 0; axis < n; ++axis) {
      const auto& iv = spec.domain_box[static_cast<std::size_t>(axis)];
      if (!iv.contains(atom.point[axis], opts.box_inflate * iv.width()))
        throw ExtractionFailed("extract_atoms: atom outside the domain box");
    }
  return out;
}

// ---------------------------------------------------------------------------

double expectation(const SignedDensity& density, const PolyCoeffs& g) {
  const BasisSpec& ds = density.coeffs.spec;
  if (g.spec.family != ds.family || g.spec.dimension != ds.dimension)
    throw DimensionMismatch("expectation: mismatched observable basis");
  const int total = g.spec.degree + ds.degree;
  Eigen::VectorXd mom = lebesgue_moments(ds, total);
  IndexLookup look(ds.dimension, total);
  const BasisSpec spec_t = ds.with_degree(total);
  auto idx_g = index_set(ds.dimension, g.spec.degree);
  auto idx_d = index_set(ds.dimension, ds.degree);
  double acc = 0.0;
  for (std::size_t a = 0; a < idx_g.size(); ++a) {
    const double ca = g.coeffs[static_cast<Eigen::Index>(a)];
    if (ca == 0.0) continue;
    for (std::size_t b = 0; b < idx_d.size(); ++b) {
      const double cb = density.coeffs.coeffs[static_cast<Eigen::Index>(b)];
      if (cb == 0.0) continue;
      double integral = 0.0;
      for (const auto& [mi, c] : product_linearize(idx_g[a], idx_d[b], spec_t))
        integral += c * mom[look(mi)];
      acc += ca * cb * integral;
    }
  }
  return acc;
}

double expectation(const AtomicMeasure& measure, const PolyCoeffs& g) {
  double acc = 0.0;
  for (const auto& atom : measure.atoms) acc += atom.weight * g.eval(atom.point);
  return acc;
}

PolyCoeffs convert_poly(const PolyCoeffs& p, BasisFamily family, int degree) {
  if (p.effective_degree() > degree)
    throw DegreeOverflow("convert_poly: target degree too small");
  BasisSpec target = p.spec.with_degree(degree);
  target.family = family;
  double tail = 0.0;
  PolyCoeffs out = interpolate_on_grid(
      target, [&](const Eigen::VectorXd& x) { return p.eval(x); }, &tail);
  return out;
}

// ---------------------------------------------------------------------------

HistogramDensity histogram_density(const SnapshotSet& snaps,
                                   int bins_per_axis) {
  if (bins_per_axis < 1)
    throw DimensionMismatch("histogram_density: bins >= 1");
  const int n = snaps.dimension;
  std::int64_t cells = 1;
  for (int i = 0; i < n; ++i) cells *= bins_per_axis;
  HistogramDensity h;
  h.box = snaps.domain_box;
  h.bins_per_axis = bins_per_axis;
  h.cell_prob.assign(static_cast<std::size_t>(cells), 0.0);
  const double inv_m = 1.0 / static_cast<double>(snaps.count());
  for (Eigen::Index c = 0; c < snaps.count(); ++c) {
    std::int64_t cell = 0, stride = 1;
    for (int i = 0; i < n; ++i) {
      const auto& iv = h.box[static_cast<std::size_t>(i)];
      int b = static_cast<int>((snaps.x(i, c) - iv.lo) / iv.width() *
                               bins_per_axis);
      b = std::clamp(b, 0, bins_per_axis - 1);
      cell += stride * b;
      stride *= bins_per_axis;
    }
    h.cell_prob[static_cast<std::size_t>(cell)] += inv_m;
  }
  return h;
}

namespace {

// integral of the 1D basis function b_j over [x0, x1] inside the axis interval
double basis_cell_integral(BasisFamily family, const Interval& iv, int j,
                           double x0, double x1) {
  if (family == BasisFamily::Monomial)
    return (std::pow(x1, j + 1) - std::pow(x0, j + 1)) / (j + 1);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(j + 1);
  c[j] = 1.0;
  auto A = antiderivative_1d(BasisFamily::Chebyshev, c);
  auto eval_at = [&](double x) {
    const double t = (2.0 * x - iv.lo - iv.hi) / iv.width();
    double acc = 0.0;
    double tm2 = 1.0, tm1 = t;
    for (std::size_t q = 0; q < A.size(); ++q) {
      double tq = q == 0 ? 1.0 : (q == 1 ? t : 2.0 * t * tm1 - tm2);
      if (q >= 2) {
        tm2 = tm1;
        tm1 = tq;
      }
      acc += A[q] * tq;
    }
    return acc;
  };
  return (iv.width() / 2.0) * (eval_at(x1) - eval_at(x0));
}

}  // namespace

double expectation(const HistogramDensity& h, const PolyCoeffs& g) {
  const int n = static_cast<int>(h.box.size());
  if (g.spec.dimension != n)
    throw DimensionMismatch("expectation: histogram dimension");
  auto idx = index_set(n, g.spec.degree);
  const int bins = h.bins_per_axis;
  // per-axis integrals of each 1D basis function over each bin
  std::vector<Eigen::MatrixXd> axis_int(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& iv = h.box[static_cast<std::size_t>(i)];
    const double step = iv.width() / bins;
    Eigen::MatrixXd tbl(g.spec.degree + 1, bins);
    for (int j = 0; j <= g.spec.degree; ++j)
      for (int b = 0; b < bins; ++b)
        tbl(j, b) = basis_cell_integral(g.spec.family, iv, j, iv.lo + b * step,
                                        iv.lo + (b + 1) * step);
    axis_int[static_cast<std::size_t>(i)] = tbl;
  }
  double cell_vol = 1.0;
  for (int i = 0; i < n; ++i)
    cell_vol *= h.box[static_cast<std::size_t>(i)].width() / bins;
  double acc = 0.0;
  std::vector<int> digit(static_cast<std::size_t>(n), 0);
  for (std::size_t cell = 0; cell < h.cell_prob.size(); ++cell) {
    const double p = h.cell_prob[cell];
    if (p == 0.0) continue;
    std::size_t rem = cell;
    for (int i = 0; i < n; ++i) {
      digit[static_cast<std::size_t>(i)] = static_cast<int>(rem % bins);
      rem /= bins;
    }
    double cell_g = 0.0;  // integral of g over the cell
    for (std::size_t q = 0; q < idx.size(); ++q) {
      const double c = g.coeffs[static_cast<Eigen::Index>(q)];
      if (c == 0.0) continue;
      double term = c;
      for (int i = 0; i < n; ++i)
        term *= axis_int[static_cast<std::size_t>(i)](
            idx[q][static_cast<std::size_t>(i)],
            digit[static_cast<std::size_t>(i)]);
      cell_g += term;
    }
    acc += p * cell_g / cell_vol;
  }
  return acc;
}

}  // namespace invmeas
