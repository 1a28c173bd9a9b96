#include "invmeas/basis.hpp"

#include <cmath>
#include <map>

#include "invmeas/errors.hpp"

namespace invmeas {

Box unit_box(int n) { return Box(static_cast<std::size_t>(n), Interval{-1.0, 1.0}); }

bool operator==(const BasisSpec& a, const BasisSpec& b) {
  if (a.family != b.family || a.dimension != b.dimension || a.degree != b.degree)
    return false;
  for (int i = 0; i < a.dimension; ++i)
    if (a.domain_box[i].lo != b.domain_box[i].lo ||
        a.domain_box[i].hi != b.domain_box[i].hi)
      return false;
  return true;
}

BasisSpec chebyshev_basis(int n, int k, Box box) {
  return BasisSpec{BasisFamily::Chebyshev, n, k, std::move(box)};
}
BasisSpec chebyshev_basis(int n, int k) {
  return chebyshev_basis(n, k, unit_box(n));
}
BasisSpec monomial_basis(int n, int k, Box box) {
  return BasisSpec{BasisFamily::Monomial, n, k, std::move(box)};
}

namespace {

// 1D values of T_0..T_deg (Chebyshev, argument already rescaled) or powers.
void values_1d(BasisFamily family, int deg, double t, double* out) {
  out[0] = 1.0;
  if (deg == 0) return;
  out[1] = t;
  if (family == BasisFamily::Chebyshev) {
    for (int j = 2; j <= deg; ++j) out[j] = 2.0 * t * out[j - 1] - out[j - 2];
  } else {
    for (int j = 2; j <= deg; ++j) out[j] = t * out[j - 1];
  }
}

double rescale(const Interval& iv, double x) {
  return (2.0 * x - iv.lo - iv.hi) / iv.width();
}

}  // namespace

Eigen::VectorXd eval_basis(const BasisSpec& spec, const Eigen::VectorXd& x,
                           bool* outside) {
  const int n = spec.dimension;
  if (x.size() != n) throw DimensionMismatch("eval_basis: point dimension");
  if (!x.allFinite()) throw NonFiniteInput("eval_basis: non-finite point");
  if (outside) {
    *outside = false;
    for (int i = 0; i < n; ++i)
      if (!spec.domain_box[i].contains(x[i], 1e-12 * spec.domain_box[i].width()))
        *outside = true;
  }
  const int deg = spec.degree;
  Eigen::MatrixXd per_axis(deg + 1, n);
  for (int i = 0; i < n; ++i) {
    double t = spec.family == BasisFamily::Chebyshev
                   ? rescale(spec.domain_box[i], x[i])
                   : x[i];
    values_1d(spec.family, deg, t, per_axis.col(i).data());
  }
  auto idx = index_set(n, deg);
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    double v = 1.0;
    for (int i = 0; i < n; ++i) v *= per_axis(idx[r][i], i);
    out[static_cast<Eigen::Index>(r)] = v;
  }
  return out;
}

std::vector<AxisJet> axis_jets(const BasisSpec& spec, const Eigen::VectorXd& x) {
  const int n = spec.dimension;
  const int deg = spec.degree;
  if (x.size() != n) throw DimensionMismatch("axis_jets: point dimension");
  std::vector<AxisJet> jets(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    AxisJet& j = jets[static_cast<std::size_t>(i)];
    j.val.resize(deg + 1);
    j.d1.resize(deg + 1);
    j.d2.resize(deg + 1);
    const bool cheb = spec.family == BasisFamily::Chebyshev;
    const double scale = cheb ? 2.0 / spec.domain_box[i].width() : 1.0;
    const double t = cheb ? rescale(spec.domain_box[i], x[i]) : x[i];
    j.val[0] = 1.0;
    j.d1[0] = 0.0;
    j.d2[0] = 0.0;
    if (deg == 0) continue;
    j.val[1] = t;
    j.d1[1] = 1.0;
    j.d2[1] = 0.0;
    if (cheb) {
      for (int q = 2; q <= deg; ++q) {
        j.val[q] = 2.0 * t * j.val[q - 1] - j.val[q - 2];
        j.d1[q] = 2.0 * j.val[q - 1] + 2.0 * t * j.d1[q - 1] - j.d1[q - 2];
        j.d2[q] = 4.0 * j.d1[q - 1] + 2.0 * t * j.d2[q - 1] - j.d2[q - 2];
      }
    } else {
      for (int q = 2; q <= deg; ++q) {
        j.val[q] = t * j.val[q - 1];
        j.d1[q] = q * j.val[q - 1];
        j.d2[q] = static_cast<double>(q) * (q - 1) * j.val[q - 2];
      }
    }
    // chain rule for the affine rescaling
    for (int q = 0; q <= deg; ++q) {
      j.d1[q] *= scale;
      j.d2[q] *= scale * scale;
    }
  }
  return jets;
}

double jet_value(const std::vector<AxisJet>& jets, const MultiIndex& alpha) {
  double v = 1.0;
  for (std::size_t i = 0; i < jets.size(); ++i) v *= jets[i].val[alpha[i]];
  return v;
}

double jet_partial(const std::vector<AxisJet>& jets, const MultiIndex& alpha,
                   int axis) {
  double v = 1.0;
  for (std::size_t i = 0; i < jets.size(); ++i)
    v *= (static_cast<int>(i) == axis) ? jets[i].d1[alpha[i]]
                                       : jets[i].val[alpha[i]];
  return v;
}

double jet_second(const std::vector<AxisJet>& jets, const MultiIndex& alpha,
                  int axis_i, int axis_j) {
  double v = 1.0;
  for (std::size_t i = 0; i < jets.size(); ++i) {
    int ii = static_cast<int>(i);
    if (ii == axis_i && ii == axis_j)
      v *= jets[i].d2[alpha[i]];
    else if (ii == axis_i || ii == axis_j)
      v *= jets[i].d1[alpha[i]];
    else
      v *= jets[i].val[alpha[i]];
  }
  return v;
}

Eigen::SparseMatrix<double> extraction_matrix(int k, int l,
                                              const BasisSpec& spec) {
  if (k > l) throw DegreeOrder("extraction_matrix: k > l");
  const auto rows = basis_size(spec.dimension, k);
  const auto cols = basis_size(spec.dimension, l);
  Eigen::SparseMatrix<double> theta(rows, cols);
  theta.reserve(Eigen::VectorXi::Constant(static_cast<int>(cols), 1));
  for (Eigen::Index r = 0; r < rows; ++r) theta.insert(r, r) = 1.0;
  theta.makeCompressed();
  return theta;
}

namespace {

// 1D Chebyshev product rule T_a T_b = (T_{a+b} + T_{|a-b|}) / 2.
void axis_product_terms(BasisFamily family, int a, int b,
                        std::vector<std::pair<int, double>>& out) {
  out.clear();
  if (family == BasisFamily::Monomial) {
    out.emplace_back(a + b, 1.0);
    return;
  }
  if (a + b == std::abs(a - b)) {  // one factor is T_0
    out.emplace_back(a + b, 1.0);
    return;
  }
  out.emplace_back(a + b, 0.5);
  out.emplace_back(std::abs(a - b), 0.5);
}

}  // namespace

LinearCombination product_linearize(const MultiIndex& alpha,
                                    const MultiIndex& beta,
                                    const BasisSpec& spec) {
  const int n = spec.dimension;
  std::map<MultiIndex, double> acc;
  MultiIndex cur(static_cast<std::size_t>(n), 0);
  std::vector<std::pair<int, double>> axis_terms;
  // expand the tensor product axis by axis
  std::function<void(int, double)> rec = [&](int axis, double coef) {
    if (axis == n) {
      acc[cur] += coef;
      return;
    }
    axis_product_terms(spec.family, alpha[axis], beta[axis], axis_terms);
    auto terms = axis_terms;  // recursion reuses the scratch buffer
    for (const auto& [j, c] : terms) {
      cur[axis] = j;
      rec(axis + 1, coef * c);
    }
    cur[axis] = 0;
  };
  rec(0, 1.0);
  LinearCombination out;
  out.reserve(acc.size());
  for (auto& [mi, c] : acc)
    if (c != 0.0) out.emplace_back(mi, c);
  return out;
}

namespace {

double axis_integral(BasisFamily family, const Interval& iv, int j) {
  if (family == BasisFamily::Chebyshev) {
    if (j % 2 == 1) return 0.0;
    return (iv.width() / 2.0) * 2.0 / (1.0 - static_cast<double>(j) * j);
  }
  return (std::pow(iv.hi, j + 1) - std::pow(iv.lo, j + 1)) / (j + 1);
}

}  // namespace

Eigen::VectorXd lebesgue_moments(const BasisSpec& spec, int r) {
  auto idx = index_set(spec.dimension, r);
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t q = 0; q < idx.size(); ++q) {
    double v = 1.0;
    for (int i = 0; i < spec.dimension; ++i)
      v *= axis_integral(spec.family, spec.domain_box[i], idx[q][i]);
    out[static_cast<Eigen::Index>(q)] = v;
  }
  return out;
}

double PolyCoeffs::eval(const Eigen::VectorXd& x) const {
  return eval_basis(spec, x).dot(coeffs);
}

double PolyCoeffs::eval1d(double x) const {
  Eigen::VectorXd p(1);
  p[0] = x;
  return eval(p);
}

int PolyCoeffs::effective_degree(double tol) const {
  auto idx = index_set(spec.dimension, spec.degree);
  int d = 0;
  for (std::size_t q = 0; q < idx.size(); ++q)
    if (std::abs(coeffs[static_cast<Eigen::Index>(q)]) > tol)
      d = std::max(d, degree(idx[q]));
  return d;
}

PolyCoeffs zero_poly(const BasisSpec& spec) {
  return PolyCoeffs{spec, Eigen::VectorXd::Zero(spec.size())};
}

PolyCoeffs constant_poly(const BasisSpec& spec, double value) {
  auto p = zero_poly(spec);
  p.coeffs[0] = value;
  return p;
}

PolyCoeffs coordinate_poly(const BasisSpec& spec, int axis) {
  if (spec.degree < 1) throw DegreeOverflow("coordinate_poly: degree 0 spec");
  auto p = zero_poly(spec);
  MultiIndex e(static_cast<std::size_t>(spec.dimension), 0);
  e[axis] = 1;
  IndexLookup look(spec.dimension, spec.degree);
  const Interval& iv = spec.domain_box[axis];
  if (spec.family == BasisFamily::Monomial) {
    p.coeffs[look(e)] = 1.0;
  } else {
    // x = mid + (width/2) t, with T_1(t) = t
    p.coeffs[0] = iv.mid();
    p.coeffs[look(e)] = iv.width() / 2.0;
  }
  return p;
}

int PolyMap::dimension_in() const {
  return components.empty() ? 0 : components.front().spec.dimension;
}

Eigen::VectorXd PolyMap::eval(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(dimension_out());
  for (int i = 0; i < dimension_out(); ++i)
    out[i] = components[static_cast<std::size_t>(i)].eval(x);
  return out;
}

NodalTransform1D nodal_transform(BasisFamily family, Interval iv, int degree) {
  const int N = degree;
  NodalTransform1D t;
  t.nodes.resize(N + 1);
  if (N == 0) {
    t.nodes[0] = iv.mid();
    t.to_coeffs = Eigen::MatrixXd::Ones(1, 1);
    return t;
  }
  for (int j = 0; j <= N; ++j) {
    // Chebyshev-Lobatto points, listed increasing
    double u = -std::cos(M_PI * j / N);
    t.nodes[j] = iv.mid() + 0.5 * iv.width() * u;
  }
  Eigen::MatrixXd vand(N + 1, N + 1);
  std::vector<double> vals(static_cast<std::size_t>(N + 1));
  for (int j = 0; j <= N; ++j) {
    double arg = family == BasisFamily::Chebyshev ? rescale(iv, t.nodes[j])
                                                  : t.nodes[j];
    values_1d(family, N, arg, vals.data());
    for (int q = 0; q <= N; ++q) vand(j, q) = vals[static_cast<std::size_t>(q)];
  }
  t.to_coeffs = vand.partialPivLu().inverse();
  return t;
}

PolyCoeffs interpolate_on_grid(
    const BasisSpec& spec_l,
    const std::function<double(const Eigen::VectorXd&)>& f, double* tail) {
  const int n = spec_l.dimension;
  const int l = spec_l.degree;
  std::vector<NodalTransform1D> tr(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    tr[static_cast<std::size_t>(i)] =
        nodal_transform(spec_l.family, spec_l.domain_box[i], l);

  const int npts = l + 1;
  std::int64_t total = 1;
  for (int i = 0; i < n; ++i) total *= npts;

  // tensor values, axis 0 fastest
  Eigen::VectorXd vals(total);
  Eigen::VectorXd x(n);
  std::vector<int> digit(static_cast<std::size_t>(n), 0);
  for (std::int64_t p = 0; p < total; ++p) {
    std::int64_t rem = p;
    for (int i = 0; i < n; ++i) {
      digit[static_cast<std::size_t>(i)] = static_cast<int>(rem % npts);
      rem /= npts;
      x[i] = tr[static_cast<std::size_t>(i)].nodes[digit[static_cast<std::size_t>(i)]];
    }
    vals[p] = f(x);
  }

  // contract the inverse transform along each axis in turn
  Eigen::VectorXd work = vals;
  std::int64_t stride = 1;
  for (int axis = 0; axis < n; ++axis) {
    const Eigen::MatrixXd& M = tr[static_cast<std::size_t>(axis)].to_coeffs;
    Eigen::VectorXd next(total);
    const std::int64_t outer = total / (stride * npts);
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t s = 0; s < stride; ++s) {
        const std::int64_t base = o * stride * npts + s;
        for (int q = 0; q < npts; ++q) {
          double acc = 0.0;
          for (int j = 0; j < npts; ++j)
            acc += M(q, j) * work[base + j * stride];
          next[base + q * stride] = acc;
        }
      }
    }
    work.swap(next);
    stride *= npts;
  }

  // keep the graded (total degree <= l) part; report the largest remainder
  PolyCoeffs out = zero_poly(spec_l);
  IndexLookup look(n, l);
  MultiIndex mi(static_cast<std::size_t>(n), 0);
  double tail_max = 0.0;
  for (std::int64_t p = 0; p < total; ++p) {
    std::int64_t rem = p;
    int deg = 0;
    for (int i = 0; i < n; ++i) {
      mi[static_cast<std::size_t>(i)] = static_cast<int>(rem % npts);
      deg += mi[static_cast<std::size_t>(i)];
      rem /= npts;
    }
    if (deg <= l)
      out.coeffs[look(mi)] = work[p];
    else
      tail_max = std::max(tail_max, std::abs(work[p]));
  }
  if (tail) *tail = tail_max;
  return out;
}

PolyCoeffs compose_with_map(const PolyCoeffs& g, const PolyMap& f, int l) {
  const int n = f.dimension_in();
  if (g.spec.dimension != f.dimension_out())
    throw DimensionMismatch("compose_with_map: g arity vs map outputs");
  int df = 0;
  for (const auto& c : f.components) df = std::max(df, c.effective_degree());
  const int dg = g.effective_degree();
  if (dg * df > l)
    throw DegreeOverflow("compose_with_map: deg(g)*deg(f) exceeds l");
  BasisSpec target = f.components.front().spec.with_degree(l);
  target.dimension = n;
  return interpolate_on_grid(
      target, [&](const Eigen::VectorXd& x) { return g.eval(f.eval(x)); });
}

}  // namespace invmeas
