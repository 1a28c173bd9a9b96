#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "invmeas/dynamics.hpp"
#include "invmeas/errors.hpp"
#include "invmeas/moment_problem.hpp"
#include "invmeas/rng.hpp"

using namespace invmeas;

namespace {

BasisSpec mono01(int l) { return monomial_basis(1, l, Box{Interval{0, 1}}); }

PolyCoeffs sigma_x_minus_x2() {
  // x - x^2 on [0,1]
  PolyCoeffs s = zero_poly(mono01(2));
  s.coeffs[1] = 1.0;
  s.coeffs[2] = -1.0;
  return s;
}

}  // namespace

TEST_CASE("moment matrix maps reproduce the degenerate-example blocks") {
  auto spec = mono01(2);

  // sigma_0 = 1: M(y) = [[y0, y1], [y1, y2]]
  auto m0 = moment_matrix_map(constant_poly(mono01(0), 1.0), 2, spec);
  CHECK(m0.side == 2);
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 5.0;
  Eigen::MatrixXd M = eval_block(m0, y);
  CHECK(M(0, 0) == doctest::Approx(1.0));
  CHECK(M(0, 1) == doctest::Approx(2.0));
  CHECK(M(1, 0) == doctest::Approx(2.0));
  CHECK(M(1, 1) == doctest::Approx(5.0));

  // sigma = x - x^2: scalar map y1 - y2
  auto m1 = moment_matrix_map(sigma_x_minus_x2(), 2, spec);
  CHECK(m1.side == 1);
  Eigen::MatrixXd S = eval_block(m1, y);
  CHECK(S(0, 0) == doctest::Approx(2.0 - 5.0));

  // moments of the Dirac at x = 1 on [0,1]
  Eigen::VectorXd y1(3);
  y1 << 1.0, 1.0, 1.0;
  Eigen::MatrixXd M1 = eval_block(m0, y1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M1);
  CHECK(es.eigenvalues().minCoeff() > -1e-15);
  CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(2.0));  // rank 1
  CHECK(std::abs(eval_block(m1, y1)(0, 0)) < 1e-15);
}

TEST_CASE("moment matrix map is linear") {
  auto spec = chebyshev_basis(2, 6);
  auto block = moment_matrix_map(box_set(spec).inequalities[0], 6, spec);
  Rng rng(9);
  Eigen::VectorXd y1(spec.size()), y2(spec.size());
  for (Eigen::Index i = 0; i < spec.size(); ++i) {
    y1[i] = rng.next_gaussian();
    y2[i] = rng.next_gaussian();
  }
  const double a = 1.7, b = -0.3;
  Eigen::MatrixXd lhs = eval_block(block, a * y1 + b * y2);
  Eigen::MatrixXd rhs = a * eval_block(block, y1) + b * eval_block(block, y2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("localizing blocks are PSD at genuine measure moments") {
  // empirical data measure of a logistic orbit
  Eigen::VectorXd x0(1);
  x0[0] = 0.25;
  auto data = simulate_map(logistic_map, x0, 2000, unit_box(1));
  auto spec = chebyshev_basis(1, 20);
  Eigen::VectorXd y = empirical_moments(data, spec);
  for (const auto& sigma : box_set(spec).inequalities) {
    auto block = moment_matrix_map(sigma, 20, spec);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(eval_block(block, y));
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
  auto m0 = moment_matrix_map(constant_poly(spec.with_degree(0), 1.0), 20, spec);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es0(eval_block(m0, y));
  CHECK(es0.eigenvalues().minCoeff() >= -1e-10);

  // Dirac at an interior point
  Eigen::VectorXd pt(1);
  pt[0] = 0.37;
  Eigen::VectorXd yd = eval_basis(spec, pt);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esd(eval_block(m0, yd));
  CHECK(esd.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("assemble_problem shapes the degenerate example") {
  auto spec = mono01(2);
  PolyMap f;
  f.components.push_back(interpolate_on_grid(
      mono01(2), [](const Eigen::VectorXd& x) { return 2.0 * x[0] - x[0] * x[0]; }));
  LieMatrix A = exact_lie_map(f, 1, 2, spec);

  SemialgebraicSet X;
  X.dimension = 1;
  X.inequalities.push_back(sigma_x_minus_x2());

  LinearObjective obj;
  obj.y_coeffs = Eigen::VectorXd::Zero(3);
  obj.y_coeffs[1] = -1.0;
  MomentProblem p = assemble_problem(A, X, obj);

  CHECK(p.equalities.rows() == 3);  // two Lie rows + normalization
  CHECK(p.eq_rhs[2] == 1.0);
  REQUIRE(p.blocks.size() == 2);
  CHECK(p.blocks[0].side == 2);
  CHECK(p.blocks[1].side == 1);

  // Lie row for x: coefficients of (x - x^2), so y1 - y2 = 0
  Eigen::MatrixXd eq(p.equalities);
  CHECK(eq(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eq(1, 1) == doctest::Approx(1.0));
  CHECK(eq(1, 2) == doctest::Approx(-1.0));

  CHECK_THROWS_AS(assemble_problem(A, SemialgebraicSet{2, {}}, obj),
                  DimensionMismatch);
}

TEST_CASE("momentfit lift") {
  auto spec = chebyshev_basis(1, 4);
  PolyMap f;
  f.components.push_back(interpolate_on_grid(
      spec.with_degree(2),
      [](const Eigen::VectorXd& x) { return 2.0 * x[0] * x[0] - 1.0; }));
  LieMatrix A = exact_lie_map(f, 2, 4, spec);

  MomentFitObjective fit;
  fit.targets.push_back(MomentTarget{MultiIndex{1}, -0.25, 4.0});
  MomentProblem p = assemble_problem(A, box_set(spec), fit);
  MomentProblem lifted = lift_momentfit(p);
  CHECK(lifted.has_aux_t);
  REQUIRE(lifted.soc.has_value());
  CHECK(lifted.soc->F.rows() == 1);
  CHECK(lifted.soc->F.coeff(0, 1) == doctest::Approx(2.0));  // sqrt(weight)
  CHECK(lifted.soc->g[0] == doctest::Approx(2.0 * -0.25));
  const auto& lin = std::get<LinearObjective>(lifted.objective);
  CHECK(lin.t_coeff == 1.0);
  CHECK(lin.y_coeffs.cwiseAbs().maxCoeff() == 0.0);

  // lifting a linear objective is an error
  CHECK_THROWS_AS(lift_momentfit(lifted), DimensionMismatch);
}

TEST_CASE("randomized objectives") {
  auto spec = chebyshev_basis(1, 8);
  auto objs = randomized_objectives(4, spec, 1000, 77);
  REQUIRE(objs.size() == 1000);
  auto again = randomized_objectives(4, spec, 1000, 77);
  CHECK((objs[0].y_coeffs - again[0].y_coeffs).norm() == 0.0);
  CHECK((objs[999].y_coeffs - again[999].y_coeffs).norm() == 0.0);

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(spec.size());
  for (const auto& o : objs) {
    CHECK(std::abs(o.y_coeffs.norm() - 1.0) < 1e-12);
    CHECK(o.y_coeffs[0] == 0.0);                      // constant term inert
    CHECK(o.y_coeffs.tail(spec.size() - 5).norm() == 0.0);  // degree <= k
    mean += o.y_coeffs;
  }
  mean /= 1000.0;
  CHECK(mean.cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("problem serialization reproduces identical matrices") {
  auto spec = chebyshev_basis(1, 6);
  PolyMap f;
  f.components.push_back(interpolate_on_grid(
      spec.with_degree(2),
      [](const Eigen::VectorXd& x) { return 2.0 * x[0] * x[0] - 1.0; }));
  LieMatrix A = exact_lie_map(f, 3, 6, spec);
  MomentFitObjective fit;
  fit.targets.push_back(MomentTarget{MultiIndex{1}, 0.0, 1.0});
  MomentProblem p = lift_momentfit(assemble_problem(A, box_set(spec), fit));

  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "invmeas_test_problem";
  fs::create_directories(dir);
  const auto path = (dir / "p.json").string();
  save_problem(p, path);
  MomentProblem q = load_problem(path);

  CHECK(q.k == p.k);
  CHECK(q.l == p.l);
  CHECK(q.spec == p.spec);
  CHECK((Eigen::MatrixXd(q.equalities) - Eigen::MatrixXd(p.equalities)).norm() ==
        0.0);
  CHECK((q.eq_rhs - p.eq_rhs).norm() == 0.0);
  REQUIRE(q.blocks.size() == p.blocks.size());
  Rng rng(13);
  Eigen::VectorXd y(spec.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = rng.next_gaussian();
  for (std::size_t b = 0; b < p.blocks.size(); ++b)
    CHECK((eval_block(q.blocks[b], y) - eval_block(p.blocks[b], y)).norm() ==
          0.0);
  REQUIRE(q.soc.has_value());
  CHECK((Eigen::MatrixXd(q.soc->F) - Eigen::MatrixXd(p.soc->F)).norm() == 0.0);
  CHECK(q.has_aux_t == p.has_aux_t);

  // a second save is byte-identical (deterministic serialization)
  const auto path2 = (dir / "p2.json").string();
  save_problem(p, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string c1((std::istreambuf_iterator<char>(f1)), {});
  std::string c2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(c1 == c2);
  fs::remove_all(dir);
}
