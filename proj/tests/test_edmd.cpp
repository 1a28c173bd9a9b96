#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "invmeas/dynamics.hpp"
#include "invmeas/edmd.hpp"
#include "invmeas/errors.hpp"
#include "invmeas/rng.hpp"

using namespace invmeas;

namespace {

PolyMap logistic_poly(const BasisSpec& spec) {
  PolyMap f;
  f.components.push_back(interpolate_on_grid(
      spec.with_degree(2),
      [](const Eigen::VectorXd& x) { return 2.0 * x[0] * x[0] - 1.0; }));
  return f;
}

SnapshotSet identity_data(int n, Eigen::Index m, Rng& rng) {
  SnapshotSet s;
  s.dimension = n;
  s.domain_box = unit_box(n);
  s.x.resize(n, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (int q = 0; q < n; ++q) s.x(q, i) = 2.0 * rng.next_uniform() - 1.0;
  s.z = s.x;
  return s;
}

}  // namespace

TEST_CASE("data matrices") {
  SnapshotSet s;
  s.dimension = 1;
  s.domain_box = unit_box(1);
  s.x.resize(1, 1);
  s.z.resize(1, 1);
  s.x(0, 0) = 0.0;
  s.z(0, 0) = -1.0;
  auto spec = chebyshev_basis(1, 2);
  auto [P, Q] = build_data_matrices(s, 1, 2, spec);
  CHECK(P(0, 0) == 1.0);
  CHECK(P(1, 0) == 0.0);
  CHECK(P(2, 0) == -1.0);
  CHECK(Q(0, 0) == 1.0);
  CHECK(Q(1, 0) == -1.0);

  Rng rng(1);
  auto ident = identity_data(2, 40, rng);
  auto spec2 = chebyshev_basis(2, 3);
  auto [P2, Q2] = build_data_matrices(ident, 3, 3, spec2);
  CHECK((Q2 - P2).norm() == 0.0);  // Theta is the identity when k = l
  CHECK((P2.row(0).array() - 1.0).abs().maxCoeff() == 0.0);
}

TEST_CASE("koopman matrix least squares properties") {
  Rng rng(2);
  auto spec = chebyshev_basis(1, 6);

  // identity map: K recovers the extraction matrix
  auto ident = identity_data(1, 50, rng);
  auto [P, Q] = build_data_matrices(ident, 3, 6, spec);
  Eigen::MatrixXd K = koopman_matrix(P, Q);
  Eigen::MatrixXd theta = Eigen::MatrixXd(extraction_matrix(3, 6, spec));
  CHECK((K - theta).cwiseAbs().maxCoeff() < 1e-10);

  // square invertible P: interpolation, K P = Q exactly
  Eigen::VectorXd x0(1);
  x0[0] = 0.25;
  auto orbit = simulate_map(logistic_map, x0, 7, unit_box(1));
  auto [Ps, Qs] = build_data_matrices(orbit, 3, 6, spec);
  REQUIRE(Ps.rows() == Ps.cols());
  Eigen::MatrixXd Ks = koopman_matrix(Ps, Qs);
  CHECK((Ks * Ps - Qs).cwiseAbs().maxCoeff() < 1e-10);

  // Frobenius optimality against random competitors
  auto data = simulate_map(logistic_map, x0, 60, unit_box(1));
  auto [Pd, Qd] = build_data_matrices(data, 2, 4, spec.with_degree(4));
  Eigen::MatrixXd Kd = koopman_matrix(Pd, Qd);
  const double opt = (Qd - Kd * Pd).norm();
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::MatrixXd M(Kd.rows(), Kd.cols());
    for (Eigen::Index r = 0; r < M.rows(); ++r)
      for (Eigen::Index c = 0; c < M.cols(); ++c)
        M(r, c) = Kd(r, c) + 0.1 * rng.next_gaussian();
    CHECK((Qd - M * Pd).norm() >= opt - 1e-12);
  }
}

TEST_CASE("gram path agrees with the direct pseudoinverse") {
  Eigen::VectorXd x0(1);
  x0[0] = 0.25;
  auto data = simulate_map(logistic_map, x0, 2000, unit_box(1));
  auto spec = chebyshev_basis(1, 10);
  auto [P, Q] = build_data_matrices(data, 5, 10, spec);
  Eigen::MatrixXd K1 = koopman_matrix(P, Q);
  Eigen::MatrixXd K2 = koopman_from_gram(accumulate_gram(data, 5, 10, spec, 300));
  CHECK((K1 - K2).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lie matrix construction") {
  Rng rng(3);
  auto spec = chebyshev_basis(1, 4);
  auto ident = identity_data(1, 30, rng);
  LieMatrix L = edmd_lie_matrix(ident, 2, 4, spec);
  CHECK(L.entries.cwiseAbs().maxCoeff() < 1e-10);  // identity map: L = 0
  CHECK(L.tau == 1.0);

  // tau divides the generator
  Eigen::MatrixXd K = Eigen::MatrixXd::Random(3, 5);
  LieMatrix L1 = lie_matrix(K, 2, 4, spec, 1.0);
  LieMatrix L2 = lie_matrix(K, 2, 4, spec, 0.5);
  CHECK((2.0 * L1.entries - L2.entries).cwiseAbs().maxCoeff() < 1e-14);

  // EDMD preserves constants: first row of L vanishes
  Eigen::VectorXd x0(1);
  x0[0] = 0.25;
  auto data = simulate_map(logistic_map, x0, 500, unit_box(1));
  LieMatrix Ld = edmd_lie_matrix(data, 3, 6, chebyshev_basis(1, 6));
  CHECK(Ld.entries.row(0).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("exact lie matrix for the logistic map") {
  auto spec = chebyshev_basis(1, 2);
  LieMatrix A = exact_lie_map(logistic_poly(spec), 1, 2, spec);
  // row for T_1: T_1(2x^2-1) - T_1(x) = T_2 - T_1 -> (0, -1, 1)
  CHECK(A.entries(1, 0) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(A.entries(1, 1) == doctest::Approx(-1.0));
  CHECK(A.entries(1, 2) == doctest::Approx(1.0));
  // constant row is zero
  CHECK(A.entries.row(0).cwiseAbs().maxCoeff() < 1e-13);

  // nesting oracle at higher degree: Lie T_j = T_{2j} - T_j
  const int k = 10, l = 20;
  auto spec_l = chebyshev_basis(1, l);
  LieMatrix Al = exact_lie_map(logistic_poly(spec_l), k, l, spec_l);
  for (int j = 0; j <= k; ++j) {
    Eigen::VectorXd expect = Eigen::VectorXd::Zero(l + 1);
    if (j > 0) {
      expect[j] -= 1.0;
      expect[2 * j] += 1.0;
    }
    CHECK((Al.entries.row(j).transpose() - expect).cwiseAbs().maxCoeff() <
          1e-12);
  }

  // annihilates the physical measure's Chebyshev moments (e_0)
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(l + 1);
  e0[0] = 1.0;
  CHECK((Al.entries * e0).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(exact_lie_map(logistic_poly(spec), 2, 3, chebyshev_basis(1, 3)),
                  DegreeOverflow);
}

TEST_CASE("exact generators for drift and diffusion") {
  auto spec = chebyshev_basis(2, 5);
  PolyMap drift;
  for (int i = 0; i < 2; ++i)
    drift.components.push_back(interpolate_on_grid(
        spec.with_degree(3),
        [i](const Eigen::VectorXd& x) { return double_well_drift(x)[i]; }));

  // ODE generator: row for x1 equals the dictionary expansion of the drift
  LieMatrix ode = exact_lie_ode(drift, 2, 5, spec);
  IndexLookup look(2, 2);
  const int row_x1 = look(MultiIndex{1, 0});
  Rng rng(4);
  auto spec_l = spec.with_degree(5);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd x(2);
    x[0] = 2.0 * rng.next_uniform() - 1.0;
    x[1] = 2.0 * rng.next_uniform() - 1.0;
    const double via = ode.entries.row(row_x1).dot(eval_basis(spec_l, x));
    const double direct = double_well_drift(x)[0];
    CHECK(std::abs(via - direct) <= 1e-11 * std::max(1.0, std::abs(direct)));
  }

  // SDE generator: the second-order term shifts the T_2 rows
  const double sigma = 0.75;
  LieMatrix sde = exact_lie_sde(drift, sigma * sigma * Eigen::MatrixXd::Identity(2, 2),
                                2, 5, spec);
  // Lie of T_2(x1) = a_1 * T_2'(x1) + (sigma^2/2) T_2''(x1); T_2'' = 4
  const int row_t2 = look(MultiIndex{2, 0});
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd x(2);
    x[0] = 2.0 * rng.next_uniform() - 1.0;
    x[1] = 2.0 * rng.next_uniform() - 1.0;
    const double via = sde.entries.row(row_t2).dot(eval_basis(spec_l, x));
    const double direct =
        double_well_drift(x)[0] * 4.0 * x[0] + 0.5 * sigma * sigma * 4.0;
    CHECK(std::abs(via - direct) <= 1e-10 * std::max(1.0, std::abs(direct)));
  }
  // all generators kill constants
  CHECK(ode.entries.row(0).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(sde.entries.row(0).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("polynomial-map data recovers the exact Lie matrix") {
  const int k = 5, l = 10;
  auto spec = chebyshev_basis(1, l);
  Eigen::VectorXd x0(1);
  x0[0] = 0.25;
  auto data = simulate_map(logistic_map, x0, 1000, unit_box(1));
  LieMatrix L = edmd_lie_matrix(data, k, l, spec);
  LieMatrix A = exact_lie_map(logistic_poly(spec), k, l, spec);
  CHECK((L.entries - A.entries).norm() <= 1e-8);
}

TEST_CASE("empirical convergence of L to A in m") {
  // Polynomial-map data recovers A exactly once the samples are unisolvent
  // for degree-l polynomials, so the error decays through the
  // underdetermined regime and then sits at roundoff level.
  const int k = 3, l = 6;
  auto spec = chebyshev_basis(1, l);
  LieMatrix A = exact_lie_map(logistic_poly(spec), k, l, spec);
  double prev = std::numeric_limits<double>::infinity();
  for (Eigen::Index m : {3, 5, 8, 100}) {
    double avg = 0.0;
    for (int seed = 0; seed < 8; ++seed) {
      Eigen::VectorXd x0(1);
      x0[0] = 0.08 + 0.11 * seed;
      auto data = simulate_map(logistic_map, x0, m, unit_box(1));
      LieMatrix L = edmd_lie_matrix(data, k, l, spec);
      avg += (L.entries - A.entries).norm();
    }
    avg /= 8.0;
    CHECK(avg <= prev + 1e-10);
    prev = avg;
  }
  CHECK(prev < 1e-8);  // fully determined: exact recovery
}

TEST_CASE("threshold refinement") {
  const int k = 5, l = 10;
  auto spec = chebyshev_basis(1, l);

  // exact polynomial-map data: pattern converges to the support of A
  Eigen::VectorXd x0(1);
  x0[0] = 0.25;
  auto data = simulate_map(logistic_map, x0, 2000, unit_box(1));
  LieMatrix L = edmd_lie_matrix(data, k, l, spec);
  EdmdGram gram = accumulate_gram(data, k, l, spec);
  LieMatrix Lt = threshold_refine(L, gram, 1e-3, 20);
  CHECK(Lt.threshold.applied);

  LieMatrix A = exact_lie_map(logistic_poly(spec), k, l, spec);
  for (Eigen::Index r = 0; r < Lt.entries.rows(); ++r)
    for (Eigen::Index c = 0; c < Lt.entries.cols(); ++c) {
      if (std::abs(A.entries(r, c)) > 1e-8)
        CHECK(Lt.entries(r, c) != 0.0);
      else
        CHECK(std::abs(Lt.entries(r, c)) < 1e-8);
    }

  // refit does not lose accuracy against the exact generator
  CHECK((Lt.entries - A.entries).norm() <= 1e-7);

  // already-sparse matrices are a fixed point
  LieMatrix Lt2 = threshold_refine(Lt, gram, 1e-3, 20);
  CHECK((Lt2.entries - Lt.entries).cwiseAbs().maxCoeff() < 1e-12);

  // noisy data: strictly fewer nonzeros than the dense estimate
  auto noisy = simulate_sde(double_well_drift, 0.75, 1e-4, 20000,
                            (Eigen::VectorXd(2) << 0.2, 0.2).finished(), 5,
                            unit_box(2));
  auto spec2 = chebyshev_basis(2, 6);
  LieMatrix Ln = edmd_lie_matrix(noisy, 4, 6, spec2);
  EdmdGram gram2 = accumulate_gram(noisy, 4, 6, spec2);
  LieMatrix Lnt = threshold_refine(Ln, gram2, 1e-3, 20);
  long nz_before = (Ln.entries.array() != 0.0).count();
  long nz_after = (Lnt.entries.array() != 0.0).count();
  CHECK(nz_after < nz_before);
}

TEST_CASE("lie matrix serialization round trip") {
  auto spec = chebyshev_basis(1, 4);
  PolyMap f = logistic_poly(spec);
  LieMatrix A = exact_lie_map(f, 2, 4, spec);
  A.tau = 0.25;

  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "invmeas_test_lie";
  fs::create_directories(dir);
  const auto path = (dir / "lie.json").string();
  save_lie_matrix(A, path);
  LieMatrix back = load_lie_matrix(path);
  CHECK(back.k == A.k);
  CHECK(back.l == A.l);
  CHECK(back.tau == A.tau);
  CHECK(back.kind == A.kind);
  CHECK((back.entries - A.entries).norm() == 0.0);
  CHECK(back.spec == A.spec);
  fs::remove_all(dir);
}
