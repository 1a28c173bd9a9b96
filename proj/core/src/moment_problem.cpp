#include "invmeas/moment_problem.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "json.hpp"

#include "invmeas/dynamics.hpp"
#include "invmeas/errors.hpp"
#include "invmeas/rng.hpp"

namespace invmeas {

SemialgebraicSet box_set(const BasisSpec& spec) {
  SemialgebraicSet X;
  X.dimension = spec.dimension;
  const BasisSpec q = spec.with_degree(2);
  IndexLookup look(spec.dimension, 2);
  for (int axis = 0; axis < spec.dimension; ++axis) {
    PolyCoeffs s = zero_poly(q);
    MultiIndex e2(static_cast<std::size_t>(spec.dimension), 0);
    e2[static_cast<std::size_t>(axis)] = 2;
    if (spec.family == BasisFamily::Chebyshev) {
      // 1 - t^2 = (T_0 - T_2)/2 in the rescaled coordinate
      s.coeffs[0] = 0.5;
      s.coeffs[look(e2)] = -0.5;
    } else {
      // (x - lo)(hi - x) in raw coordinates
      const auto& iv = spec.domain_box[static_cast<std::size_t>(axis)];
      MultiIndex e1(static_cast<std::size_t>(spec.dimension), 0);
      e1[static_cast<std::size_t>(axis)] = 1;
      s.coeffs[0] = -iv.lo * iv.hi;
      s.coeffs[look(e1)] = iv.lo + iv.hi;
      s.coeffs[look(e2)] = -1.0;
    }
    X.inequalities.push_back(std::move(s));
  }
  return X;
}

int PsdBlockMap::vech_index(int i, int j, int side) {
  // column-major lower triangle, i >= j
  return j * side - j * (j - 1) / 2 + (i - j);
}

Eigen::MatrixXd eval_block(const PsdBlockMap& block, const Eigen::VectorXd& y) {
  const int s = block.side;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(s * (s + 1) / 2);
  for (const auto& t : block.vech) v[t.row()] += t.value() * y[t.col()];
  Eigen::MatrixXd M(s, s);
  for (int j = 0; j < s; ++j)
    for (int i = j; i < s; ++i) {
      double val = v[PsdBlockMap::vech_index(i, j, s)];
      M(i, j) = val;
      M(j, i) = val;
    }
  return M;
}

PsdBlockMap moment_matrix_map(const PolyCoeffs& sigma, int l,
                              const BasisSpec& spec) {
  const int n = spec.dimension;
  const int dsig = sigma.effective_degree();
  if (dsig > l) throw DegreeOverflow("moment_matrix_map: deg sigma > l");
  const int gamma = (l - dsig) / 2;
  auto idx_g = index_set(n, gamma);
  auto idx_sig = index_set(n, sigma.spec.degree);
  IndexLookup look(n, l);

  PsdBlockMap block;
  block.side = static_cast<int>(idx_g.size());
  const BasisSpec spec_l = spec.with_degree(l);

  for (int a = 0; a < block.side; ++a) {
    for (int b = 0; b <= a; ++b) {
      // coefficients of b_a * b_b * sigma in the degree-l dictionary
      std::map<MultiIndex, double> entry;
      auto pair_combo = product_linearize(idx_g[static_cast<std::size_t>(a)],
                                          idx_g[static_cast<std::size_t>(b)],
                                          spec_l);
      for (const auto& [gamma_mi, cg] : pair_combo) {
        for (std::size_t q = 0; q < idx_sig.size(); ++q) {
          const double cs = sigma.coeffs[static_cast<Eigen::Index>(q)];
          if (cs == 0.0) continue;
          for (const auto& [eta, ce] :
               product_linearize(gamma_mi, idx_sig[q], spec_l))
            entry[eta] += cg * cs * ce;
        }
      }
      const int vi = PsdBlockMap::vech_index(a, b, block.side);
      for (const auto& [eta, c] : entry) {
        if (c == 0.0) continue;
        const int col = look(eta);
        if (col < 0)
          throw DegreeOverflow("moment_matrix_map: product degree exceeds l");
        block.vech.emplace_back(vi, col, c);
      }
    }
  }
  return block;
}

MomentProblem assemble_problem(const LieMatrix& L, const SemialgebraicSet& X,
                               Objective objective) {
  if (X.dimension != L.spec.dimension)
    throw DimensionMismatch("assemble_problem: set/basis dimension");
  MomentProblem p;
  p.spec = L.spec;
  p.k = L.k;
  p.l = L.l;
  const auto lx = p.spec.size();
  const auto kx = L.entries.rows();

  // equality block: Lie rows then the normalization row y_0 = 1
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index r = 0; r < kx; ++r)
    for (Eigen::Index c = 0; c < lx; ++c)
      if (L.entries(r, c) != 0.0)
        trip.emplace_back(static_cast<int>(r), static_cast<int>(c),
                          L.entries(r, c));
  trip.emplace_back(static_cast<int>(kx), 0, 1.0);
  p.equalities.resize(kx + 1, lx);
  p.equalities.setFromTriplets(trip.begin(), trip.end());
  p.eq_rhs = Eigen::VectorXd::Zero(kx + 1);
  p.eq_rhs[kx] = 1.0;

  // sigma_0 = 1 first, then the declared inequalities
  p.blocks.push_back(
      moment_matrix_map(constant_poly(p.spec.with_degree(0), 1.0), p.l, p.spec));
  for (const auto& sigma : X.inequalities)
    p.blocks.push_back(moment_matrix_map(sigma, p.l, p.spec));

  p.objective = std::move(objective);
  return p;
}

MomentProblem lift_momentfit(const MomentProblem& problem) {
  const auto* fit = std::get_if<MomentFitObjective>(&problem.objective);
  if (!fit) throw DimensionMismatch("lift_momentfit: objective is not MomentFit");
  MomentProblem out = problem;
  IndexLookup look(problem.spec.dimension, problem.l);
  SocBlock soc;
  const auto t = static_cast<Eigen::Index>(fit->targets.size());
  soc.F.resize(t, problem.num_moments());
  soc.g.resize(t);
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index i = 0; i < t; ++i) {
    const auto& target = fit->targets[static_cast<std::size_t>(i)];
    if (target.weight <= 0.0)
      throw DimensionMismatch("lift_momentfit: weights must be positive");
    const int col = look(target.index);
    if (col < 0) throw DegreeOverflow("lift_momentfit: target index degree");
    const double w = std::sqrt(target.weight);
    trip.emplace_back(static_cast<int>(i), col, w);
    soc.g[i] = w * target.value;
  }
  soc.F.setFromTriplets(trip.begin(), trip.end());
  out.soc = std::move(soc);
  out.has_aux_t = true;
  LinearObjective lin;
  lin.y_coeffs = Eigen::VectorXd::Zero(problem.num_moments());
  lin.t_coeff = 1.0;
  out.objective = lin;
  return out;
}

MomentProblem assemble_anchored(const LieMatrix& L, const SemialgebraicSet& X,
                                const LinearObjective& linear,
                                const MomentFitObjective& anchor,
                                double anchor_weight) {
  MomentProblem p = lift_momentfit(assemble_problem(L, X, anchor));
  LinearObjective obj;
  obj.y_coeffs = linear.y_coeffs;
  obj.t_coeff = anchor_weight;
  p.objective = obj;
  return p;
}

MomentFitObjective empirical_anchor(const SnapshotSet& snaps,
                                    const BasisSpec& spec) {
  Eigen::VectorXd y = empirical_moments(snaps, spec);
  IndexLookup look(spec.dimension, spec.degree);
  MomentFitObjective fit;
  for (const auto& mi : index_set(spec.dimension, spec.degree)) {
    if (degree(mi) == 0) continue;
    fit.targets.push_back(MomentTarget{mi, y[look(mi)], 1.0});
  }
  return fit;
}

std::vector<LinearObjective> randomized_objectives(int k, const BasisSpec& spec,
                                                   int count,
                                                   std::uint64_t seed) {
  if (count < 1) throw DimensionMismatch("randomized_objectives: count >= 1");
  const auto kx = basis_size(spec.dimension, k);
  const auto lx = spec.size();
  std::vector<LinearObjective> out;
  out.reserve(static_cast<std::size_t>(count));
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    LinearObjective obj;
    obj.y_coeffs = Eigen::VectorXd::Zero(lx);
    double norm2 = 0.0;
    for (Eigen::Index q = 1; q < kx; ++q) {
      double g = rng.next_gaussian();
      obj.y_coeffs[q] = g;
      norm2 += g * g;
    }
    obj.y_coeffs /= std::sqrt(norm2);
    out.push_back(std::move(obj));
  }
  return out;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

nlohmann::json spec_to_json(const BasisSpec& spec) {
  nlohmann::json j;
  j["family"] =
      spec.family == BasisFamily::Chebyshev ? "chebyshev" : "monomial";
  j["dimension"] = spec.dimension;
  j["degree"] = spec.degree;
  nlohmann::json box = nlohmann::json::array();
  for (const auto& iv : spec.domain_box) box.push_back({iv.lo, iv.hi});
  j["box"] = box;
  return j;
}

BasisSpec spec_from_json(const nlohmann::json& j) {
  BasisSpec spec;
  spec.family = j.at("family").get<std::string>() == "chebyshev"
                    ? BasisFamily::Chebyshev
                    : BasisFamily::Monomial;
  spec.dimension = j.at("dimension").get<int>();
  spec.degree = j.at("degree").get<int>();
  for (const auto& iv : j.at("box"))
    spec.domain_box.push_back(Interval{iv[0].get<double>(), iv[1].get<double>()});
  return spec;
}

nlohmann::json sparse_to_json(const Eigen::SparseMatrix<double>& A) {
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json cols = nlohmann::json::array();
  nlohmann::json vals = nlohmann::json::array();
  for (int o = 0; o < A.outerSize(); ++o)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, o); it; ++it) {
      rows.push_back(it.row());
      cols.push_back(it.col());
      vals.push_back(it.value());
    }
  return {{"rows", A.rows()}, {"cols", A.cols()}, {"i", rows}, {"j", cols},
          {"v", vals}};
}

Eigen::SparseMatrix<double> sparse_from_json(const nlohmann::json& j) {
  Eigen::SparseMatrix<double> A(j.at("rows").get<Eigen::Index>(),
                                j.at("cols").get<Eigen::Index>());
  const auto& ri = j.at("i");
  const auto& ci = j.at("j");
  const auto& vi = j.at("v");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(ri.size());
  for (std::size_t q = 0; q < ri.size(); ++q)
    trip.emplace_back(ri[q].get<int>(), ci[q].get<int>(), vi[q].get<double>());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

}  // namespace

void save_problem(const MomentProblem& p, const std::string& path) {
  nlohmann::json j;
  j["format"] = "invmeas-problem-v1";
  j["spec"] = spec_to_json(p.spec);
  j["k"] = p.k;
  j["l"] = p.l;
  j["equalities"] = sparse_to_json(p.equalities);
  j["eq_rhs"] = std::vector<double>(p.eq_rhs.data(),
                                    p.eq_rhs.data() + p.eq_rhs.size());
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : p.blocks) {
    nlohmann::json bj;
    bj["side"] = b.side;
    nlohmann::json rows = nlohmann::json::array(), cols = nlohmann::json::array(),
                   vals = nlohmann::json::array();
    for (const auto& t : b.vech) {
      rows.push_back(t.row());
      cols.push_back(t.col());
      vals.push_back(t.value());
    }
    bj["i"] = rows;
    bj["j"] = cols;
    bj["v"] = vals;
    blocks.push_back(bj);
  }
  j["blocks"] = blocks;
  if (std::holds_alternative<LinearObjective>(p.objective)) {
    const auto& lin = std::get<LinearObjective>(p.objective);
    j["objective"] = {{"type", "linear"},
                      {"y_coeffs", std::vector<double>(
                                       lin.y_coeffs.data(),
                                       lin.y_coeffs.data() + lin.y_coeffs.size())},
                      {"t_coeff", lin.t_coeff}};
  } else {
    const auto& fit = std::get<MomentFitObjective>(p.objective);
    nlohmann::json targets = nlohmann::json::array();
    for (const auto& t : fit.targets)
      targets.push_back(
          {{"index", t.index}, {"value", t.value}, {"weight", t.weight}});
    j["objective"] = {{"type", "moment_fit"}, {"targets", targets}};
  }
  if (p.soc) {
    j["soc"] = {{"F", sparse_to_json(p.soc->F)},
                {"g", std::vector<double>(p.soc->g.data(),
                                          p.soc->g.data() + p.soc->g.size())}};
  }
  j["has_aux_t"] = p.has_aux_t;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump();
}

MomentProblem load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  MomentProblem p;
  p.spec = spec_from_json(j.at("spec"));
  p.k = j.at("k").get<int>();
  p.l = j.at("l").get<int>();
  p.equalities = sparse_from_json(j.at("equalities"));
  auto rhs = j.at("eq_rhs").get<std::vector<double>>();
  p.eq_rhs = Eigen::Map<Eigen::VectorXd>(rhs.data(),
                                         static_cast<Eigen::Index>(rhs.size()));
  for (const auto& bj : j.at("blocks")) {
    PsdBlockMap b;
    b.side = bj.at("side").get<int>();
    const auto& ri = bj.at("i");
    const auto& ci = bj.at("j");
    const auto& vi = bj.at("v");
    for (std::size_t q = 0; q < ri.size(); ++q)
      b.vech.emplace_back(ri[q].get<int>(), ci[q].get<int>(),
                          vi[q].get<double>());
    p.blocks.push_back(std::move(b));
  }
  const auto& oj = j.at("objective");
  if (oj.at("type").get<std::string>() == "linear") {
    LinearObjective lin;
    auto yc = oj.at("y_coeffs").get<std::vector<double>>();
    lin.y_coeffs = Eigen::Map<Eigen::VectorXd>(
        yc.data(), static_cast<Eigen::Index>(yc.size()));
    lin.t_coeff = oj.at("t_coeff").get<double>();
    p.objective = lin;
  } else {
    MomentFitObjective fit;
    for (const auto& tj : oj.at("targets"))
      fit.targets.push_back(MomentTarget{tj.at("index").get<MultiIndex>(),
                                         tj.at("value").get<double>(),
                                         tj.at("weight").get<double>()});
    p.objective = fit;
  }
  if (j.contains("soc")) {
    SocBlock soc;
    soc.F = sparse_from_json(j.at("soc").at("F"));
    auto g = j.at("soc").at("g").get<std::vector<double>>();
    soc.g = Eigen::Map<Eigen::VectorXd>(g.data(),
                                        static_cast<Eigen::Index>(g.size()));
    p.soc = std::move(soc);
  }
  p.has_aux_t = j.at("has_aux_t").get<bool>();
  return p;
}

}  // namespace invmeas
