#include "invmeas/edmd.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "invmeas/errors.hpp"

namespace invmeas {

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_data_matrices(
    const SnapshotSet& snaps, int k, int l, const BasisSpec& spec) {
  if (k > l) throw DegreeOrder("build_data_matrices: k > l");
  const auto m = snaps.count();
  const BasisSpec spec_l = spec.with_degree(l);
  const BasisSpec spec_k = spec.with_degree(k);
  Eigen::MatrixXd P(spec_l.size(), m), Q(spec_k.size(), m);
  for (Eigen::Index i = 0; i < m; ++i) {
    P.col(i) = eval_basis(spec_l, snaps.x.col(i));
    Q.col(i) = eval_basis(spec_k, snaps.z.col(i));
  }
  return {std::move(P), std::move(Q)};
}

EdmdGram accumulate_gram(const SnapshotSet& snaps, int k, int l,
                         const BasisSpec& spec, Eigen::Index block) {
  if (k > l) throw DegreeOrder("accumulate_gram: k > l");
  const auto m = snaps.count();
  const BasisSpec spec_l = spec.with_degree(l);
  const BasisSpec spec_k = spec.with_degree(k);
  EdmdGram g;
  g.m = m;
  g.k = k;
  g.l = l;
  g.spec = spec_l;
  g.tau = snaps.tau;
  g.PPt = Eigen::MatrixXd::Zero(spec_l.size(), spec_l.size());
  g.QPt = Eigen::MatrixXd::Zero(spec_k.size(), spec_l.size());
  Eigen::MatrixXd P, Q;
  for (Eigen::Index start = 0; start < m; start += block) {
    const Eigen::Index len = std::min(block, m - start);
    P.resize(spec_l.size(), len);
    Q.resize(spec_k.size(), len);
    for (Eigen::Index i = 0; i < len; ++i) {
      P.col(i) = eval_basis(spec_l, snaps.x.col(start + i));
      Q.col(i) = eval_basis(spec_k, snaps.z.col(start + i));
    }
    g.PPt.noalias() += P * P.transpose();
    g.QPt.noalias() += Q * P.transpose();
  }
  return g;
}

Eigen::MatrixXd koopman_matrix(const Eigen::MatrixXd& P,
                               const Eigen::MatrixXd& Q, double rank_tol) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cut = sv.size() ? rank_tol * sv[0] : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cut) inv[i] = 1.0 / sv[i];
  // K = Q * V * S^+ * U^T
  return (Q * svd.matrixV()) * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd koopman_from_gram(const EdmdGram& gram, double rank_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram.PPt);
  const auto& ev = es.eigenvalues();
  const double lam_max = ev.size() ? std::max(ev[ev.size() - 1], 0.0) : 0.0;
  // eigenvalues of PP^T are squared singular values of P
  const double cut =
      std::max(rank_tol * rank_tol * lam_max,
               1e-14 * lam_max * static_cast<double>(ev.size()));
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > cut) inv[i] = 1.0 / ev[i];
  return (gram.QPt * es.eigenvectors()) * inv.asDiagonal() *
         es.eigenvectors().transpose();
}

LieMatrix lie_matrix(const Eigen::MatrixXd& K, int k, int l,
                     const BasisSpec& spec, double tau, LieKind kind) {
  if (tau <= 0.0) throw DimensionMismatch("lie_matrix: tau > 0 required");
  LieMatrix L;
  L.k = k;
  L.l = l;
  L.spec = spec.with_degree(l);
  L.tau = tau;
  L.kind = kind;
  L.entries = K;
  for (Eigen::Index r = 0; r < L.entries.rows(); ++r)
    L.entries(r, r) -= 1.0;  // Theta is the prefix identity
  L.entries /= tau;
  return L;
}

LieMatrix edmd_lie_matrix(const SnapshotSet& snaps, int k, int l,
                          const BasisSpec& spec, double rank_tol,
                          Eigen::Index gram_threshold) {
  // L is fit directly as [(Q - Theta P)/tau] P^+ rather than as (QP^+ -
  // Theta)/tau. The two agree whenever P has full row rank; under truncation
  // they differ exactly where it matters: directions the data never excites
  // produce zero rows of L (no constraint) instead of -Theta/tau artifacts.
  (void)gram_threshold;  // the Gram path handles every data size
  EdmdGram gram = accumulate_gram(snaps, k, l, spec);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram.PPt);
  const auto& ev = es.eigenvalues();
  const double lam_max = ev.size() ? std::max(ev[ev.size() - 1], 0.0) : 0.0;
  const double cut =
      std::max(rank_tol * rank_tol * lam_max,
               1e-14 * lam_max * static_cast<double>(ev.size()));
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > cut) inv[i] = 1.0 / ev[i];
  // (Q - Theta P) P^T = QP^T - prefix rows of PP^T
  Eigen::MatrixXd numer = gram.QPt;
  numer -= gram.PPt.topRows(numer.rows());
  Eigen::MatrixXd Lmat = (numer * es.eigenvectors()) * inv.asDiagonal() *
                         es.eigenvectors().transpose() / snaps.tau;
  LieMatrix L;
  L.k = k;
  L.l = l;
  L.spec = spec.with_degree(l);
  L.tau = snaps.tau;
  L.kind = LieKind::DataDriven;
  L.entries = std::move(Lmat);
  return L;
}

LieMatrix threshold_refine(const LieMatrix& L, const EdmdGram& gram,
                           double rel_cut, int max_rounds) {
  if (rel_cut <= 0.0 || rel_cut >= 1.0)
    throw DimensionMismatch("threshold_refine: rel_cut in (0,1)");
  const auto rows = L.entries.rows();
  const auto cols = L.entries.cols();
  LieMatrix out = L;
  Eigen::MatrixXd cur = L.entries;
  std::vector<std::vector<char>> pattern(
      static_cast<std::size_t>(rows), std::vector<char>(static_cast<std::size_t>(cols), 1));
  int round = 0;
  bool changed = true;
  while (changed && round < max_rounds) {
    changed = false;
    ++round;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double rowmax = cur.row(r).cwiseAbs().maxCoeff();
      if (rowmax == 0.0) continue;
      const double cut = rel_cut * rowmax;
      std::vector<Eigen::Index> keep;
      for (Eigen::Index c = 0; c < cols; ++c) {
        bool on = std::abs(cur(r, c)) >= cut;
        if (on != static_cast<bool>(pattern[static_cast<std::size_t>(r)]
                                           [static_cast<std::size_t>(c)]))
          changed = true;
        pattern[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
            on ? 1 : 0;
        if (on) keep.push_back(c);
      }
      // re-fit the surviving entries of row r of K by least squares:
      // minimize over K_r(S): || q_r - K_r(S) P(S,:) ||, via Gram blocks.
      const auto s = static_cast<Eigen::Index>(keep.size());
      if (s == 0) {
        cur.row(r).setZero();
        continue;
      }
      Eigen::MatrixXd G(s, s);
      Eigen::VectorXd rhs(s);
      for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index b = 0; b < s; ++b)
          G(a, b) = gram.PPt(keep[static_cast<std::size_t>(a)],
                             keep[static_cast<std::size_t>(b)]);
        // target row of K: q_r P^T restricted; Theta contributes the
        // identity column (row r of Theta P P^T)
        rhs[a] = gram.QPt(r, keep[static_cast<std::size_t>(a)]) -
                 gram.PPt(r, keep[static_cast<std::size_t>(a)]);
      }
      Eigen::VectorXd sol = G.ldlt().solve(rhs);
      cur.row(r).setZero();
      for (Eigen::Index a = 0; a < s; ++a)
        cur(r, keep[static_cast<std::size_t>(a)]) = sol[a] / L.tau;
    }
  }
  out.entries = cur;
  out.threshold.applied = true;
  out.threshold.rounds = round;
  long zeros = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      if (cur(r, c) == 0.0) ++zeros;
  out.threshold.zeroed_fraction =
      static_cast<double>(zeros) / static_cast<double>(rows * cols);
  return out;
}

namespace {

LieMatrix exact_lie_common(
    int k, int l, const BasisSpec& spec, LieKind kind,
    const std::function<double(const MultiIndex&, const Eigen::VectorXd&)>&
        lie_of_basis_at) {
  if (k > l) throw DegreeOrder("exact_lie: k > l");
  const BasisSpec spec_l = spec.with_degree(l);
  auto idx_k = index_set(spec.dimension, k);
  LieMatrix L;
  L.k = k;
  L.l = l;
  L.spec = spec_l;
  L.tau = 1.0;
  L.kind = kind;
  L.entries.resize(static_cast<Eigen::Index>(idx_k.size()), spec_l.size());
  for (std::size_t r = 0; r < idx_k.size(); ++r) {
    const MultiIndex& alpha = idx_k[r];
    double tail = 0.0;
    PolyCoeffs row = interpolate_on_grid(
        spec_l,
        [&](const Eigen::VectorXd& x) { return lie_of_basis_at(alpha, x); },
        &tail);
    if (tail > 1e-7 * std::max(1.0, row.coeffs.cwiseAbs().maxCoeff()))
      throw DegreeOverflow("exact_lie: generator output exceeds degree l");
    L.entries.row(static_cast<Eigen::Index>(r)) = row.coeffs.transpose();
  }
  return L;
}

}  // namespace

LieMatrix exact_lie_map(const PolyMap& f, int k, int l, const BasisSpec& spec) {
  const BasisSpec spec_k = spec.with_degree(k);
  int df = 0;
  for (const auto& c : f.components) df = std::max(df, c.effective_degree());
  if (k * df > l) throw DegreeOverflow("exact_lie_map: k*deg(f) > l");
  return exact_lie_common(
      k, l, spec, LieKind::ExactMap,
      [&](const MultiIndex& alpha, const Eigen::VectorXd& x) {
        auto jx = axis_jets(spec_k, x);
        auto jz = axis_jets(spec_k, f.eval(x));
        return jet_value(jz, alpha) - jet_value(jx, alpha);
      });
}

LieMatrix exact_lie_ode(const PolyMap& drift, int k, int l,
                        const BasisSpec& spec) {
  const BasisSpec spec_k = spec.with_degree(k);
  int da = 0;
  for (const auto& c : drift.components) da = std::max(da, c.effective_degree());
  if (k - 1 + da > l) throw DegreeOverflow("exact_lie_ode: deg(a grad g) > l");
  const int n = spec.dimension;
  return exact_lie_common(
      k, l, spec, LieKind::ExactOde,
      [&, n](const MultiIndex& alpha, const Eigen::VectorXd& x) {
        auto jets = axis_jets(spec_k, x);
        Eigen::VectorXd a = drift.eval(x);
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += a[i] * jet_partial(jets, alpha, i);
        return v;
      });
}

LieMatrix exact_lie_sde(const PolyMap& drift,
                        const Eigen::MatrixXd& noise_covariance, int k, int l,
                        const BasisSpec& spec) {
  const BasisSpec spec_k = spec.with_degree(k);
  int da = 0;
  for (const auto& c : drift.components) da = std::max(da, c.effective_degree());
  if (k - 1 + da > l)
    throw DegreeOverflow("exact_lie_sde: deg(a grad g) > l");
  const int n = spec.dimension;
  return exact_lie_common(
      k, l, spec, LieKind::ExactSde,
      [&, n](const MultiIndex& alpha, const Eigen::VectorXd& x) {
        auto jets = axis_jets(spec_k, x);
        Eigen::VectorXd a = drift.eval(x);
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += a[i] * jet_partial(jets, alpha, i);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if (noise_covariance(i, j) != 0.0)
              v += 0.5 * noise_covariance(i, j) * jet_second(jets, alpha, i, j);
        return v;
      });
}

void save_lie_matrix(const LieMatrix& L, const std::string& path) {
  nlohmann::json j;
  j["format"] = "invmeas-lie-v1";
  j["kind"] = static_cast<int>(L.kind);
  j["k"] = L.k;
  j["l"] = L.l;
  j["tau"] = L.tau;
  j["family"] = L.spec.family == BasisFamily::Chebyshev ? "chebyshev" : "monomial";
  j["dimension"] = L.spec.dimension;
  nlohmann::json box = nlohmann::json::array();
  for (const auto& iv : L.spec.domain_box) box.push_back({iv.lo, iv.hi});
  j["box"] = box;
  j["threshold"] = {{"applied", L.threshold.applied},
                    {"rounds", L.threshold.rounds},
                    {"zeroed_fraction", L.threshold.zeroed_fraction}};
  j["rows"] = L.entries.rows();
  j["cols"] = L.entries.cols();
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(L.entries.size()));
  for (Eigen::Index r = 0; r < L.entries.rows(); ++r)
    for (Eigen::Index c = 0; c < L.entries.cols(); ++c)
      flat.push_back(L.entries(r, c));
  j["entries"] = flat;  // row-major
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump();
}

LieMatrix load_lie_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  LieMatrix L;
  L.kind = static_cast<LieKind>(j.at("kind").get<int>());
  L.k = j.at("k").get<int>();
  L.l = j.at("l").get<int>();
  L.tau = j.at("tau").get<double>();
  BasisSpec spec;
  spec.family = j.at("family").get<std::string>() == "chebyshev"
                    ? BasisFamily::Chebyshev
                    : BasisFamily::Monomial;
  spec.dimension = j.at("dimension").get<int>();
  spec.degree = L.l;
  for (const auto& iv : j.at("box"))
    spec.domain_box.push_back(Interval{iv[0].get<double>(), iv[1].get<double>()});
  L.spec = spec;
  L.threshold.applied = j.at("threshold").at("applied").get<bool>();
  L.threshold.rounds = j.at("threshold").at("rounds").get<int>();
  L.threshold.zeroed_fraction =
      j.at("threshold").at("zeroed_fraction").get<double>();
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& flat = j.at("entries");
  L.entries.resize(rows, cols);
  std::size_t at = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      L.entries(r, c) = flat[at++].get<double>();
  return L;
}

}  // namespace invmeas
