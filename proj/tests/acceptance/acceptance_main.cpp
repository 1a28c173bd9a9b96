// Acceptance suite: end-to-end replication checks, one per criterion.
// Usage: acceptance --criterion N   (or --all). Prints one PASS/FAIL line per
// criterion and exits nonzero on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "invmeas/conic.hpp"
#include "invmeas/dynamics.hpp"
#include "invmeas/edmd.hpp"
#include "invmeas/errors.hpp"
#include "invmeas/moment_problem.hpp"
#include "invmeas/pipeline.hpp"
#include "invmeas/recovery.hpp"
#include "invmeas/rng.hpp"
#include "invmeas/solver.hpp"

using namespace invmeas;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double rel_err(double got, double want) {
  return std::abs(got - want) / std::abs(want);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// shared building blocks

PolyMap logistic_poly(const BasisSpec& spec) {
  PolyMap f;
  f.components.push_back(interpolate_on_grid(
      spec.with_degree(2),
      [](const Eigen::VectorXd& x) { return 2.0 * x[0] * x[0] - 1.0; }));
  return f;
}

double arcsine_cdf(double x) {
  return 0.5 + std::asin(std::clamp(x, -1.0, 1.0)) / kPi;
}

// MomentFit solve with minimum-norm tie-break: targets plus a small ridge on
// every other nonconstant moment.
SolveResult solve_momentfit(const LieMatrix& L, std::vector<MomentTarget> targets,
                            double ridge, double eps) {
  const BasisSpec& spec = L.spec;
  MomentFitObjective fit;
  std::vector<MultiIndex> targeted;
  for (auto& t : targets) {
    targeted.push_back(t.index);
    fit.targets.push_back(std::move(t));
  }
  if (ridge > 0.0) {
    for (const auto& mi : index_set(spec.dimension, spec.degree)) {
      if (degree(mi) == 0) continue;
      if (std::find(targeted.begin(), targeted.end(), mi) != targeted.end())
        continue;
      fit.targets.push_back(MomentTarget{mi, 0.0, ridge});
    }
  }
  MomentProblem problem =
      lift_momentfit(assemble_problem(L, box_set(spec), fit));
  SolverOptions opts;
  opts.eps_abs = opts.eps_rel = eps;
  return solve_conic(to_standard_form(problem), opts);
}

SolveResult solve_linear(const LieMatrix& L, const Eigen::VectorXd& coeffs,
                         double eps) {
  LinearObjective obj;
  obj.y_coeffs = coeffs;
  MomentProblem problem = assemble_problem(L, box_set(L.spec), obj);
  SolverOptions opts;
  opts.eps_abs = opts.eps_rel = eps;
  return solve_conic(to_standard_form(problem), opts);
}

AtomicMeasure extract_with_retry(const Eigen::VectorXd& y,
                                 const BasisSpec& spec) {
  ExtractionOptions opts;
  for (double tol : {1e-6, 1e-5, 1e-4, 1e-3}) {
    opts.rank_tol = tol;
    try {
      return extract_atoms(y, spec, opts);
    } catch (const ExtractionFailed&) {
    }
  }
  throw ExtractionFailed("extraction failed at all rank tolerances");
}

// ---------------------------------------------------------------------------

Outcome criterion_1() {
  // degenerate quadratic-map regression: optimum y = (1,1), objective -1
  Outcome out;
  BasisSpec spec = monomial_basis(1, 2, Box{Interval{0, 1}});
  PolyMap f;
  f.components.push_back(interpolate_on_grid(
      spec, [](const Eigen::VectorXd& x) { return 2.0 * x[0] - x[0] * x[0]; }));
  LieMatrix A = exact_lie_map(f, 1, 2, spec);
  SemialgebraicSet X;
  X.dimension = 1;
  PolyCoeffs sigma = zero_poly(spec);
  sigma.coeffs[1] = 1.0;
  sigma.coeffs[2] = -1.0;
  X.inequalities.push_back(sigma);
  LinearObjective obj;
  obj.y_coeffs = Eigen::VectorXd::Zero(3);
  obj.y_coeffs[1] = -1.0;
  MomentProblem p = assemble_problem(A, X, obj);
  SolveResult res = solve_conic(to_standard_form(p));
  out.require(res.report.status == SolveStatus::Optimal, "solver not optimal");
  out.require(std::abs(res.u[1] - 1.0) < 1e-6, "y1 != 1");
  out.require(std::abs(res.u[2] - 1.0) < 1e-6, "y2 != 1");
  out.require(std::abs(res.report.objective + 1.0) < 1e-6, "objective != -1");
  out.detail = "y=(" + fmt(res.u[1]) + "," + fmt(res.u[2]) +
               ") objective=" + fmt(res.report.objective);
  return out;
}

Outcome criterion_2() {
  // exact-generator logistic runs against the reported CDF L1 errors
  Outcome out;
  const std::vector<std::pair<int, double>> table = {
      {5, 0.02902}, {15, 0.00556}, {25, 0.00280}};
  std::string vals;
  for (const auto& [k, expected] : table) {
    BasisSpec spec = chebyshev_basis(1, 2 * k);
    LieMatrix A = exact_lie_map(logistic_poly(spec), k, 2 * k, spec);
    SolveResult res = solve_momentfit(
        A, {MomentTarget{MultiIndex{1}, 0.0, 1.0}}, 1e-4, 1e-8);
    out.require(res.report.status == SolveStatus::Optimal,
                "k=" + std::to_string(k) + " not optimal");
    Eigen::VectorXd y = res.u.head(spec.size());
    SignedDensity rho = density_from_moments(y, k, spec);
    const double l1 = cdf_l1_distance(rho, arcsine_cdf);
    vals += " k" + std::to_string(k) + "=" + fmt(l1);
    out.require(rel_err(l1, expected) <= 0.15,
                "k=" + std::to_string(k) + " L1=" + fmt(l1) + " vs " +
                    fmt(expected) + " (>15%)");
  }
  out.detail = "L1 errors:" + vals;
  return out;
}

Outcome criterion_3() {
  // data-driven logistic at m = 1e4 with the seed-matched orbit
  Outcome out;
  Eigen::VectorXd x0(1);
  x0[0] = 0.25;
  auto data = simulate_map(logistic_map, x0, 10000, unit_box(1));
  const std::vector<std::pair<int, double>> table = {{10, 0.00955},
                                                     {20, 0.00372}};
  BasisSpec spec1 = chebyshev_basis(1, 1);
  const double y1_emp = empirical_moments(data, spec1)[1];
  out.require(std::abs(y1_emp - (-0.00102)) <= 0.002,
              "empirical y1=" + fmt(y1_emp) + " not within 0.002 of -0.00102");
  std::string vals = "y1~=" + fmt(y1_emp);
  for (const auto& [k, expected] : table) {
    BasisSpec spec = chebyshev_basis(1, 2 * k);
    LieMatrix L = edmd_lie_matrix(data, k, 2 * k, spec);
    SolveResult res = solve_momentfit(
        L, {MomentTarget{MultiIndex{1}, y1_emp, 1.0}}, 1e-4, 1e-8);
    out.require(res.report.status == SolveStatus::Optimal,
                "k=" + std::to_string(k) + " not optimal");
    Eigen::VectorXd y = res.u.head(spec.size());
    SignedDensity rho = density_from_moments(y, k, spec);
    const double l1 = cdf_l1_distance(rho, arcsine_cdf);
    vals += " k" + std::to_string(k) + "=" + fmt(l1);
    out.require(rel_err(l1, expected) <= 0.25,
                "k=" + std::to_string(k) + " L1=" + fmt(l1) + " vs " +
                    fmt(expected) + " (>25%)");
  }
  out.detail = vals;
  return out;
}

Outcome criterion_4() {
  // atomic measures from linear objectives on data-driven problems
  Outcome out;
  Eigen::VectorXd x0(1);
  x0[0] = 0.25;
  auto data = simulate_map(logistic_map, x0, 10000, unit_box(1));
  const int k = 5, l = 10;
  BasisSpec spec = chebyshev_basis(1, l);
  LieMatrix L = edmd_lie_matrix(data, k, l, spec);

  auto objective_on = [&](int idx) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.size());
    c[idx] = 1.0;
    return c;
  };

  // F = y1: atomic measure at the fixed point -0.5
  {
    SolveResult res = solve_linear(L, objective_on(1), 1e-8);
    out.require(res.report.status == SolveStatus::Optimal, "y1 not optimal");
    AtomicMeasure m = extract_with_retry(res.u.head(spec.size()), spec);
    out.require(m.atoms.size() == 1,
                "y1 gave " + std::to_string(m.atoms.size()) + " atoms");
    if (!m.atoms.empty()) {
      out.require(std::abs(m.atoms[0].point[0] + 0.5) <= 1e-4,
                  "fixed point at " + fmt(m.atoms[0].point[0]));
      out.detail += "y1 atom=" + fmt(m.atoms[0].point[0]);
    }
  }

  // F = y3: the period-3 orbit
  {
    SolveResult res = solve_linear(L, objective_on(3), 1e-8);
    out.require(res.report.status == SolveStatus::Optimal, "y3 not optimal");
    AtomicMeasure m = extract_with_retry(res.u.head(spec.size()), spec);
    out.require(m.atoms.size() == 3,
                "y3 gave " + std::to_string(m.atoms.size()) + " atoms");
    std::vector<double> got;
    for (const auto& a : m.atoms) got.push_back(a.point[0]);
    std::sort(got.begin(), got.end());
    const std::vector<double> want = {-0.93969, 0.17365, 0.76604};
    if (got.size() == 3) {
      for (int i = 0; i < 3; ++i)
        out.require(std::abs(got[static_cast<std::size_t>(i)] -
                             want[static_cast<std::size_t>(i)]) <= 1e-3,
                    "period-3 point " + fmt(got[static_cast<std::size_t>(i)]) +
                        " vs " + fmt(want[static_cast<std::size_t>(i)]));
      out.detail += "  y3 atoms=" + fmt(got[0]) + "," + fmt(got[1]) + "," +
                    fmt(got[2]);
    }
  }

  // F = y5: mixture supported on the fixed point and a period-4 orbit
  {
    SolveResult res = solve_linear(L, objective_on(5), 1e-8);
    out.require(res.report.status == SolveStatus::Optimal, "y5 not optimal");
    AtomicMeasure m = extract_with_retry(res.u.head(spec.size()), spec);
    bool has_fp = false;
    int others = 0;
    for (const auto& a : m.atoms) {
      if (std::abs(a.point[0] + 0.5) <= 1e-3)
        has_fp = true;
      else
        ++others;
    }
    out.require(has_fp, "y5 support misses -0.5");
    out.require(others >= 4, "y5 support has only " + std::to_string(others) +
                                 " further atoms");
    out.detail += "  y5 support=" + std::to_string(m.atoms.size()) + " atoms";
  }
  return out;
}

Outcome criterion_5() {
  // histogram baseline against the reported relative moment errors
  Outcome out;
  Eigen::VectorXd x0(1);
  x0[0] = 0.25;
  auto data = simulate_map(logistic_map, x0, 1000, unit_box(1));
  HistogramDensity hist = histogram_density(data, 101);

  auto exact_moment = [](int j) {  // arcsine even moments C(j, j/2) / 2^j
    double v = 1.0;
    for (int q = 1; q <= j / 2; ++q) v *= (2.0 * q - 1.0) / (2.0 * q);
    return v;
  };
  auto monomial_obs = [&](int j) {
    PolyCoeffs g = zero_poly(monomial_basis(1, j, unit_box(1)));
    g.coeffs[j] = 1.0;
    return g;
  };

  const std::vector<std::pair<int, double>> table = {
      {2, 0.0151}, {10, 0.0499}, {40, 0.1546}};
  std::string vals;
  std::vector<double> hist_err(41, 0.0);
  for (int j : {2, 10, 30, 40})
    hist_err[static_cast<std::size_t>(j)] =
        rel_err(expectation(hist, monomial_obs(j)), exact_moment(j));
  for (const auto& [j, expected] : table) {
    const double err = hist_err[static_cast<std::size_t>(j)];
    vals += " y" + std::to_string(j) + "=" + fmt(100 * err) + "%";
    out.require(rel_err(err, expected) <= 0.30,
                "hist err y" + std::to_string(j) + "=" + fmt(err) + " vs " +
                    fmt(expected) + " (>30%)");
  }

  // SDP route on the same data: k=20, fit the empirical first moment
  const int k = 20;
  BasisSpec spec = chebyshev_basis(1, 2 * k);
  LieMatrix L = edmd_lie_matrix(data, k, 2 * k, spec);
  const double y1_emp = empirical_moments(data, chebyshev_basis(1, 1))[1];
  SolveResult res = solve_momentfit(
      L, {MomentTarget{MultiIndex{1}, y1_emp, 1.0}}, 1e-4, 1e-8);
  out.require(res.report.status == SolveStatus::Optimal, "sdp not optimal");
  SignedDensity rho = density_from_moments(res.u.head(spec.size()), k, spec);
  for (int j : {30, 40}) {
    PolyCoeffs obs = convert_poly(monomial_obs(j), BasisFamily::Chebyshev, j);
    const double sdp_err = rel_err(expectation(rho, obs), exact_moment(j));
    vals += " sdp_y" + std::to_string(j) + "=" + fmt(100 * sdp_err) + "%";
    out.require(sdp_err < hist_err[static_cast<std::size_t>(j)],
                "sdp does not beat histogram at y" + std::to_string(j));
  }
  out.detail = vals;
  return out;
}

Outcome criterion_6() {
  // stochastic double-well at desk scale
  Outcome out;
  const double sigma = 0.75;
  Rng r0 = Rng::split(1, 0);
  Eigen::VectorXd x0(2);
  x0[0] = -0.5 + r0.next_uniform();
  x0[1] = -0.5 + r0.next_uniform();
  Rng rp = Rng::split(1, 1);
  auto data = simulate_sde(double_well_drift, sigma, 1e-4, 500000, x0,
                           rp.next_u64(), unit_box(2), "double_well");
  out.require(data.count() > 400000, "too many dropped snapshots");

  const int k = 10, l = 12;
  BasisSpec spec = chebyshev_basis(2, l);
  LieMatrix L = edmd_lie_matrix(data, k, l, spec);
  EdmdGram gram = accumulate_gram(data, k, l, spec);
  L = threshold_refine(L, gram, 3e-3);

  // maximize E[x1^2 + x2^2]  <=>  minimize -y_20 - y_02; the optimal face is
  // wide, so anchor the selection at the empirical moments
  IndexLookup look(2, l);
  LinearObjective lin;
  lin.y_coeffs = Eigen::VectorXd::Zero(spec.size());
  lin.y_coeffs[look(MultiIndex{2, 0})] = -1.0;
  lin.y_coeffs[look(MultiIndex{0, 2})] = -1.0;
  MomentProblem problem = assemble_anchored(L, box_set(spec), lin,
                                            empirical_anchor(data, spec), 1.0);
  SolverOptions sopts;
  sopts.eps_abs = sopts.eps_rel = 1e-7;
  SolveResult res = solve_conic(to_standard_form(problem), sopts);
  out.require(res.report.primal_res < 1e-4, "primal residual too large");
  Eigen::VectorXd y = res.u.head(spec.size());

  // quadrature-exact stationary expectations of T_a(x1) T_b(x2)
  auto gauss_legendre = [](int n, std::vector<double>& xs,
                           std::vector<double>& ws) {
    xs.resize(n);
    ws.resize(n);
    for (int i = 0; i < n; ++i) {
      double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double p0 = 1, p1 = 0, dp = 0;
      for (int it = 0; it < 100; ++it) {
        p0 = 1;
        p1 = 0;
        for (int j = 0; j < n; ++j) {
          double p2 = p1;
          p1 = p0;
          p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
        }
        dp = n * (t * p0 - p1) / (t * t - 1);
        double dt = -p0 / dp;
        t += dt;
        if (std::abs(dt) < 1e-15) break;
      }
      xs[i] = t;
      ws[i] = 2.0 / ((1 - t * t) * dp * dp);
    }
  };
  std::vector<double> gx, gw;
  gauss_legendre(200, gx, gw);
  auto rho_un = [&](double x1, double x2) {
    const double a = 4.0 * (x1 + x2) * (x1 + x2) - 1.0;
    const double b = x1 - x2;
    return std::exp(-(a * a + 4.0 * b * b) / (2.0 * sigma * sigma));
  };
  double Z = 0.0;
  for (int i = 0; i < 200; ++i)
    for (int j = 0; j < 200; ++j) Z += gw[i] * gw[j] * rho_un(gx[i], gx[j]);
  auto cheb_val = [](int j, double t) {
    double tm2 = 1.0, tm1 = t, tv = j == 0 ? 1.0 : t;
    for (int q = 2; q <= j; ++q) {
      tv = 2.0 * t * tm1 - tm2;
      tm2 = tm1;
      tm1 = tv;
    }
    return tv;
  };
  auto exact_expect = [&](int a, int b) {
    double s = 0.0;
    for (int i = 0; i < 200; ++i)
      for (int j = 0; j < 200; ++j)
        s += gw[i] * gw[j] * cheb_val(a, gx[i]) * cheb_val(b, gx[j]) *
             rho_un(gx[i], gx[j]);
    return s / Z;
  };

  // pinned values from the quadrature oracle
  out.require(std::abs(exact_expect(2, 0) - (-0.825)) < 5e-4, "oracle T20");
  out.require(std::abs(exact_expect(0, 2) - (-0.825)) < 5e-4, "oracle T02");
  out.require(std::abs(exact_expect(2, 2) - 0.668) < 5e-4, "oracle T22");

  int within30 = 0, total = 0;
  std::string vals;
  for (int deg = 2; deg <= 6; deg += 2)
    for (int a = deg; a >= 0; --a) {
      const int b = deg - a;
      const double pred = y[look(MultiIndex{a, b})];
      const double exact = exact_expect(a, b);
      const double err = rel_err(pred, exact);
      ++total;
      if (err <= 0.30) ++within30;
      if ((a == 2 && b == 0) || (a == 0 && b == 2) || (a == 2 && b == 2)) {
        vals += " T" + std::to_string(a) + std::to_string(b) + "=" + fmt(pred) +
                "(" + fmt(100 * err) + "%)";
        out.require(err <= 0.10, "T" + std::to_string(a) + std::to_string(b) +
                                     " err " + fmt(err) + " > 10%");
      }
    }
  out.require(total == 15, "observable count");
  out.require(within30 >= 12, "only " + std::to_string(within30) +
                                  "/15 observables within 30%");
  out.detail = vals + " within30=" + std::to_string(within30) + "/15";
  return out;
}

Outcome criterion_7() {
  // Rossler physical measure: degree <= 2 moments against long time averages
  Outcome out;
  Box box{Interval{-30, 30}, Interval{-30, 30}, Interval{0, 60}};
  Eigen::VectorXd x0(3);
  x0 << 0.0, -20.0, 0.0;
  auto data = integrate_ode(rossler_field, x0, 1000.0, 0.005, 0.001, box);

  const int k = 14, l = 15;
  BasisSpec spec = chebyshev_basis(3, l, box);
  LieMatrix L = edmd_lie_matrix(data, k, l, spec);

  // relative-weighted fit of the three scaled first moments (weights
  // normalized so the largest is 1 -- a positive rescaling of the objective
  // with the same argmin) plus the empirical anchor as the face tie-break
  Eigen::VectorXd y_emp = empirical_moments(data, spec);
  IndexLookup look(3, l);
  MomentFitObjective fit = empirical_anchor(data, spec);
  double wmax = 0.0;
  std::vector<std::pair<std::size_t, double>> rel;
  for (int axis = 0; axis < 3; ++axis) {
    MultiIndex e(3, 0);
    e[static_cast<std::size_t>(axis)] = 1;
    const double v = y_emp[look(e)];
    rel.emplace_back(static_cast<std::size_t>(axis), 1.0 / (v * v));
    wmax = std::max(wmax, rel.back().second);
  }
  for (auto& target : fit.targets) {
    for (int axis = 0; axis < 3; ++axis) {
      MultiIndex e(3, 0);
      e[static_cast<std::size_t>(axis)] = 1;
      if (target.index == e)
        target.weight = rel[static_cast<std::size_t>(axis)].second / wmax + 1.0;
    }
  }
  MomentProblem problem =
      lift_momentfit(assemble_problem(L, box_set(spec), fit));
  SolverOptions sopts;
  sopts.eps_abs = sopts.eps_rel = 1e-7;
  sopts.max_iter = 150000;
  Eigen::VectorXd warm(spec.size() + 1);  // empirical moments, epigraph 0
  warm << y_emp, 0.0;
  sopts.warm_u = warm;
  SolveResult res = solve_conic(to_standard_form(problem), sopts);
  out.require(res.report.primal_res < 1e-4, "primal residual too large");
  Eigen::VectorXd y = res.u.head(spec.size());

  // long-horizon time averages of all degree <= 2 scaled moments
  BasisSpec spec2 = spec.with_degree(2);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(spec2.size());
  {
    Eigen::VectorXd cur = x0;
    const double h = 0.005;
    const long steps = 20000000;  // t = 1e5
    long samples = 0;
    for (long i = 0; i < steps; ++i) {
      cur = rk4_step(rossler_field, cur, h);
      if (i % 5 == 0) {  // accumulate every 0.025 time units
        avg += eval_basis(spec2, cur);
        ++samples;
      }
    }
    avg /= static_cast<double>(samples);
  }

  IndexLookup look2(3, 2);
  auto idx2 = index_set(3, 2);
  std::string vals;
  for (const auto& mi : idx2) {
    if (degree(mi) == 0) continue;
    const double pred = y[look2(mi)];
    const double ref = avg[look2(mi)];
    const double err = rel_err(pred, ref);
    std::string name;
    for (int q : mi) name += std::to_string(q);
    vals += " y" + name + "=" + fmt(pred) + "/" + fmt(ref);
    out.require(err <= 0.13,
                "moment " + name + " err " + fmt(100 * err) + "% > 13%");
  }
  out.detail = vals;
  return out;
}

Outcome criterion_8() {
  // Rossler UPO hunt on the Poincare section
  Outcome out;
  Eigen::VectorXd x0(3);
  x0 << 0.0, -20.0, 0.0;
  PoincareSection section;
  auto section_data =
      poincare_snapshots_streaming(rossler_field, x0, 5000.0, 0.005, section);
  out.require(std::abs(static_cast<double>(section_data.count()) - 810.0) < 40,
              "section pairs " + std::to_string(section_data.count()));

  Json cfg;
  cfg["system"] = {{"name", "rossler_section"}};
  cfg["basis"] = {{"family", "chebyshev"}, {"k", 20}, {"l", 80}};
  cfg["hunt"] = {{"objectives", 200}, {"seed", 2024}, {"period_cap", 8}};
  UpoCatalog catalog = upo_hunt(cfg, section_data, rossler_field, section);

  bool p1 = false, p2 = false, p3 = false;
  for (const auto& entry : catalog.orbits) {
    out.require(entry.orbit.residual < 1e-6,
                "period " + std::to_string(entry.orbit.period) +
                    " residual " + fmt(entry.orbit.residual));
    // closure under re-integration
    const Eigen::VectorXd back = flow(rossler_field, entry.orbit.states[0],
                                      entry.orbit.time_period, 1e-3);
    out.require((back - entry.orbit.states[0]).norm() < 1e-6,
                "reintegration failure at period " +
                    std::to_string(entry.orbit.period));
    if (entry.orbit.period == 1) p1 = true;
    if (entry.orbit.period == 2) p2 = true;
    if (entry.orbit.period == 3) p3 = true;
  }
  out.require(p1, "missing period-1 orbit");
  out.require(p2, "missing period-2 orbit");
  out.require(p3, "missing period-3 orbit");
  out.detail = "verified orbits=" + std::to_string(catalog.orbits.size()) +
               " (m=" + std::to_string(section_data.count()) +
               ", extraction failures=" +
               std::to_string(catalog.extraction_failures) + ")";
  return out;
}

Outcome criterion_9() {
  // property suites at their stated tolerances
  Outcome out;
  Rng rng(91);

  // extraction round-trip on random <=5-atom measures (1e-6)
  {
    auto spec = chebyshev_basis(1, 12);
    int ok = 0, tried = 0;
    for (int rep = 0; rep < 50; ++rep) {
      const int natoms = 1 + static_cast<int>(rng.next_u64() % 5);
      std::vector<Eigen::VectorXd> pts;
      std::vector<double> w;
      double wsum = 0;
      for (int a = 0; a < natoms; ++a) {
        Eigen::VectorXd p(1);
        p[0] = 1.6 * rng.next_uniform() - 0.8;
        pts.push_back(p);
        w.push_back(0.2 + rng.next_uniform());
        wsum += w.back();
      }
      for (auto& ww : w) ww /= wsum;
      Eigen::VectorXd y = Eigen::VectorXd::Zero(spec.size());
      for (std::size_t i = 0; i < pts.size(); ++i)
        y += w[i] * eval_basis(spec, pts[i]);
      ++tried;
      try {
        AtomicMeasure m = extract_atoms(y, spec);
        if (m.atoms.size() != pts.size()) continue;
        bool good = true;
        for (std::size_t i = 0; i < pts.size(); ++i) {
          double best = 1e9;
          for (const auto& a : m.atoms)
            best = std::min(best, std::abs(a.point[0] - pts[i][0]));
          if (best > 1e-6) good = false;
        }
        if (good) ++ok;
      } catch (const ExtractionFailed&) {
      }
    }
    out.require(ok >= tried * 9 / 10,
                "extraction round-trip " + std::to_string(ok) + "/" +
                    std::to_string(tried));
  }

  // product linearization against pointwise products (1e-12)
  {
    auto spec = chebyshev_basis(2, 8);
    IndexLookup look(2, 8);
    for (int rep = 0; rep < 100; ++rep) {
      MultiIndex a{static_cast<int>(rng.next_u64() % 3),
                   static_cast<int>(rng.next_u64() % 3)};
      MultiIndex b{static_cast<int>(rng.next_u64() % 3),
                   static_cast<int>(rng.next_u64() % 3)};
      auto rule = product_linearize(a, b, spec);
      Eigen::VectorXd x(2);
      x << 2.0 * rng.next_uniform() - 1.0, 2.0 * rng.next_uniform() - 1.0;
      auto vals = eval_basis(spec, x);
      IndexLookup look_lo(2, 5);
      auto vals_lo = eval_basis(spec.with_degree(5), x);
      double direct = vals_lo[look_lo(a)] * vals_lo[look_lo(b)];
      double via = 0.0;
      for (const auto& [mi, coef] : rule) via += coef * vals[look(mi)];
      if (std::abs(direct - via) > 1e-12 * std::max(1.0, std::abs(direct))) {
        out.require(false, "product linearization tolerance");
        break;
      }
    }
  }

  // extraction-matrix identity at random points (1e-13)
  {
    auto spec_l = chebyshev_basis(3, 7);
    auto spec_k = spec_l.with_degree(4);
    auto theta = extraction_matrix(4, 7, spec_l);
    for (int rep = 0; rep < 100; ++rep) {
      Eigen::VectorXd x(3);
      for (int q = 0; q < 3; ++q) x[q] = 2.0 * rng.next_uniform() - 1.0;
      Eigen::VectorXd lhs = theta * eval_basis(spec_l, x);
      Eigen::VectorXd rhs = eval_basis(spec_k, x);
      if ((lhs - rhs).cwiseAbs().maxCoeff() > 1e-13) {
        out.require(false, "extraction identity tolerance");
        break;
      }
    }
  }

  // exact recovery of the Lie matrix from unisolvent polynomial-map data
  {
    const int k = 5, l = 10;
    auto spec = chebyshev_basis(1, l);
    Eigen::VectorXd x0(1);
    x0[0] = 0.25;
    auto data = simulate_map(logistic_map, x0, 1000, unit_box(1));
    LieMatrix L = edmd_lie_matrix(data, k, l, spec);
    LieMatrix A = exact_lie_map(logistic_poly(spec), k, l, spec);
    out.require((L.entries - A.entries).norm() <= 1e-8, "L vs A recovery");
  }

  // exact generator annihilates the physical measure's moments
  {
    const int k = 20, l = 40;
    auto spec = chebyshev_basis(1, l);
    LieMatrix A = exact_lie_map(logistic_poly(spec), k, l, spec);
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(spec.size());
    e0[0] = 1.0;
    out.require((A.entries * e0).cwiseAbs().maxCoeff() <= 1e-10,
                "physical-measure annihilation");
  }

  // PSD residuals of solver outputs
  {
    BasisSpec spec = chebyshev_basis(1, 10);
    Eigen::VectorXd x0(1);
    x0[0] = 0.25;
    auto data = simulate_map(logistic_map, x0, 2000, unit_box(1));
    LieMatrix L = edmd_lie_matrix(data, 5, 10, spec);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.size());
    c[1] = 1.0;
    LinearObjective obj;
    obj.y_coeffs = c;
    MomentProblem p = assemble_problem(L, box_set(spec), obj);
    ConicStandardForm form = to_standard_form(p);
    SolveResult res = solve_conic(form);
    out.require(res.report.status == SolveStatus::Optimal, "solve status");
    Eigen::Index at = form.cones.zero + form.cones.nonneg;
    for (auto d : form.cones.soc) at += d;
    for (int side : form.cones.psd) {
      Eigen::MatrixXd S = unsvec(res.s.segment(at, svec_dim(side)), side);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
      out.require(es.eigenvalues().minCoeff() >= -1e-6, "PSD slack residual");
      at += svec_dim(side);
    }
  }
  if (out.pass) out.detail = "all property suites at stated tolerances";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  int which = 0;  // 0 = all
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      which = std::atoi(argv[++i]);
    else if (std::strcmp(argv[i], "--all") == 0)
      which = 0;
  }

  using CriterionFn = std::function<Outcome()>;
  const std::vector<std::pair<std::string, CriterionFn>> criteria = {
      {"degenerate quadratic-map regression", criterion_1},
      {"exact-generator logistic CDF errors", criterion_2},
      {"data-driven logistic CDF errors", criterion_3},
      {"atomic measures from linear objectives", criterion_4},
      {"histogram baseline vs SDP moments", criterion_5},
      {"stochastic double-well expectations", criterion_6},
      {"Rossler physical-measure moments", criterion_7},
      {"Rossler periodic-orbit catalog", criterion_8},
      {"property suites", criterion_9},
  };

  bool all_pass = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int num = static_cast<int>(i) + 1;
    if (which != 0 && which != num) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n",
                out.pass ? "PASS" : "FAIL", num, criteria[i].first.c_str(),
                secs, out.detail.empty() ? "" : " -- ", out.detail.c_str());
    std::fflush(stdout);
    all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}
