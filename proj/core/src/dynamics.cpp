#include "invmeas/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "invmeas/errors.hpp"
#include "invmeas/rng.hpp"

namespace invmeas {

Eigen::VectorXd logistic_map(const Eigen::VectorXd& x) {
  Eigen::VectorXd z(1);
  z[0] = 2.0 * (x[0] * x[0]) - 1.0;
  return z;
}

Eigen::VectorXd quad_fixed_point_map(const Eigen::VectorXd& x) {
  Eigen::VectorXd z(1);
  z[0] = 2.0 * x[0] - x[0] * x[0];
  return z;
}

Eigen::VectorXd double_well_drift(const Eigen::VectorXd& x) {
  Eigen::VectorXd d(2);
  const double s = x[0] + x[1];
  const double cube = -16.0 * s * s * s;
  d[0] = cube + 2.0 * x[0] + 6.0 * x[1];
  d[1] = cube + 6.0 * x[0] + 2.0 * x[1];
  return d;
}

Eigen::VectorXd rossler_field(const Eigen::VectorXd& x) {
  Eigen::VectorXd d(3);
  d[0] = -x[1] - x[2];
  d[1] = x[0] + 0.1 * x[1];
  d[2] = 0.1 + x[2] * (x[0] - 18.0);
  return d;
}

namespace {

bool in_box(const Eigen::VectorXd& x, const Box& box, double slack = 1e-12) {
  for (int i = 0; i < x.size(); ++i)
    if (!box[static_cast<std::size_t>(i)].contains(x[i], slack)) return false;
  return true;
}

double box_radius(const Box& box) {
  double r = 0.0;
  for (const auto& iv : box)
    r = std::max(r, std::max(std::abs(iv.lo), std::abs(iv.hi)));
  return r;
}

}  // namespace

SnapshotSet simulate_map(const MapFn& f, const Eigen::VectorXd& x0,
                         Eigen::Index m, const Box& box,
                         const std::string& name) {
  if (m < 1) throw DimensionMismatch("simulate_map: m >= 1 required");
  const int n = static_cast<int>(x0.size());
  SnapshotSet s;
  s.dimension = n;
  s.domain_box = box;
  s.system = name;
  s.tau = 1.0;
  s.x.resize(n, m);
  s.z.resize(n, m);
  Eigen::VectorXd cur = x0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!in_box(cur, box))
      throw OrbitEscaped("simulate_map: iterate left the domain box");
    Eigen::VectorXd nxt = f(cur);
    s.x.col(i) = cur;
    s.z.col(i) = nxt;
    cur = nxt;
  }
  return s;
}

SnapshotSet simulate_sde(const FieldFn& drift, double sigma, double tau,
                         Eigen::Index steps, const Eigen::VectorXd& x0,
                         std::uint64_t seed, const Box& box,
                         const std::string& name) {
  const int n = static_cast<int>(x0.size());
  const double noise = sigma * std::sqrt(tau);
  const double abort_radius = 10.0 * box_radius(box);
  Rng rng(seed);
  SnapshotSet s;
  s.dimension = n;
  s.domain_box = box;
  s.system = name;
  s.tau = tau;
  s.seed = seed;
  Eigen::MatrixXd xs(n, steps), zs(n, steps);
  Eigen::Index kept = 0;
  Eigen::VectorXd cur = x0, nxt(n);
  for (Eigen::Index i = 0; i < steps; ++i) {
    nxt = cur + tau * drift(cur);
    for (int q = 0; q < n; ++q) nxt[q] += noise * rng.next_gaussian();
    if (in_box(cur, box) && in_box(nxt, box)) {
      xs.col(kept) = cur;
      zs.col(kept) = nxt;
      ++kept;
    }
    if (nxt.norm() > abort_radius) break;  // blow-up guard
    cur = nxt;
  }
  s.x = xs.leftCols(kept);
  s.z = zs.leftCols(kept);
  return s;
}

SnapshotSet simulate_sde_ensemble(const FieldFn& drift, double sigma,
                                  double tau, Eigen::Index steps_per_run,
                                  Eigen::Index runs, const Box& init_box,
                                  std::uint64_t seed, const Box& box,
                                  const std::string& name) {
  const int n = static_cast<int>(init_box.size());
  std::vector<SnapshotSet> parts(static_cast<std::size_t>(runs));
  for (Eigen::Index r = 0; r < runs; ++r) {
    Rng init_rng = Rng::split(seed, static_cast<std::uint64_t>(2 * r));
    Eigen::VectorXd x0(n);
    for (int q = 0; q < n; ++q) {
      const auto& iv = init_box[static_cast<std::size_t>(q)];
      x0[q] = iv.lo + iv.width() * init_rng.next_uniform();
    }
    Rng path_rng = Rng::split(seed, static_cast<std::uint64_t>(2 * r + 1));
    parts[static_cast<std::size_t>(r)] =
        simulate_sde(drift, sigma, tau, steps_per_run, x0,
                     path_rng.next_u64(), box, name);
  }
  Eigen::Index total = 0;
  for (const auto& p : parts) total += p.count();
  SnapshotSet s;
  s.dimension = n;
  s.domain_box = box;
  s.system = name;
  s.tau = tau;
  s.seed = seed;
  s.x.resize(n, total);
  s.z.resize(n, total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    s.x.middleCols(at, p.count()) = p.x;
    s.z.middleCols(at, p.count()) = p.z;
    at += p.count();
  }
  return s;
}

Eigen::VectorXd rk4_step(const FieldFn& field, const Eigen::VectorXd& x,
                         double h) {
  Eigen::VectorXd k1 = field(x);
  Eigen::VectorXd k2 = field(x + 0.5 * h * k1);
  Eigen::VectorXd k3 = field(x + 0.5 * h * k2);
  Eigen::VectorXd k4 = field(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Eigen::VectorXd flow(const FieldFn& field, Eigen::VectorXd x, double duration,
                     double h_max) {
  if (duration <= 0.0) return x;
  const auto steps = static_cast<long>(std::ceil(duration / h_max));
  const double h = duration / static_cast<double>(steps);
  for (long i = 0; i < steps; ++i) x = rk4_step(field, x, h);
  return x;
}

SnapshotSet integrate_ode(const FieldFn& field, const Eigen::VectorXd& x0,
                          double t_end, double tau, double h, const Box& box,
                          const std::string& name) {
  const int n = static_cast<int>(x0.size());
  const auto per_sample = static_cast<long>(std::llround(tau / h));
  if (per_sample < 1 || std::abs(per_sample * h - tau) > 1e-12 * tau)
    throw DimensionMismatch("integrate_ode: tau must be a multiple of h");
  const auto samples = static_cast<Eigen::Index>(std::floor(t_end / tau + 0.5));
  SnapshotSet s;
  s.dimension = n;
  s.domain_box = box;
  s.system = name;
  s.tau = tau;
  s.x.resize(n, samples);
  s.z.resize(n, samples);
  Eigen::VectorXd cur = x0;
  for (Eigen::Index i = 0; i < samples; ++i) {
    s.x.col(i) = cur;
    for (long q = 0; q < per_sample; ++q) cur = rk4_step(field, cur, h);
    if (!cur.allFinite()) throw NonFiniteState("integrate_ode: diverged");
    s.z.col(i) = cur;
  }
  return s;
}

// ---------------------------------------------------------------------------

SectionCrossingDetector::SectionCrossingDetector(PoincareSection section,
                                                 FieldFn field)
    : section_(std::move(section)), field_(std::move(field)) {}

namespace {

// Cubic Hermite value at theta in [0,1] for one coordinate.
double hermite(double v0, double d0, double v1, double d1, double h,
               double th) {
  const double t2 = th * th, t3 = t2 * th;
  return (2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + th) * h * d0 +
         (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * h * d1;
}

}  // namespace

void SectionCrossingDetector::step(double t0, const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& f0, double h,
                                   const Eigen::VectorXd& x1,
                                   const Eigen::VectorXd& f1) {
  const int c = section_.coordinate;
  const double lv = section_.level;
  const double a = x0[c] - lv, b = x1[c] - lv;
  const bool crossed = section_.increasing ? (a < 0.0 && b >= 0.0)
                                           : (a > 0.0 && b <= 0.0);
  if (!crossed) return;
  // bisection on the Hermite interpolant of the crossing coordinate
  double loth = 0.0, hith = 1.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (loth + hith);
    double v = hermite(x0[c], f0[c], x1[c], f1[c], h, mid) - lv;
    if (std::abs(v) < 1e-10) {
      loth = hith = mid;
      break;
    }
    bool same_side_as_start = (v < 0.0) == (a < 0.0);
    if (same_side_as_start)
      loth = mid;
    else
      hith = mid;
  }
  const double th = 0.5 * (loth + hith);
  Eigen::VectorXd state(x0.size());
  for (int q = 0; q < x0.size(); ++q)
    state[q] = hermite(x0[q], f0[q], x1[q], f1[q], h, th);
  // enforce the direction condition from the vector field at the crossing
  const double deriv = field_(state)[c];
  if (section_.increasing ? deriv <= 0.0 : deriv >= 0.0) return;
  times_.push_back(t0 + th * h);
  states_.push_back(std::move(state));
}

DenseTrajectory integrate_dense(const FieldFn& field,
                                const Eigen::VectorXd& x0, double t_end,
                                double h) {
  DenseTrajectory traj;
  const auto steps = static_cast<long>(std::ceil(t_end / h - 1e-12));
  traj.t.reserve(static_cast<std::size_t>(steps) + 1);
  traj.x.reserve(static_cast<std::size_t>(steps) + 1);
  traj.xdot.reserve(static_cast<std::size_t>(steps) + 1);
  Eigen::VectorXd cur = x0;
  for (long i = 0; i <= steps; ++i) {
    traj.t.push_back(i * h);
    traj.x.push_back(cur);
    traj.xdot.push_back(field(cur));
    if (i < steps) cur = rk4_step(field, cur, h);
  }
  return traj;
}

namespace {

SnapshotSet crossings_to_snapshots(const std::vector<Eigen::VectorXd>& states,
                                   const PoincareSection& section,
                                   const std::string& name) {
  if (states.size() < 2)
    throw NoCrossings("poincare_snapshots: fewer than two section crossings");
  const auto m = static_cast<Eigen::Index>(states.size()) - 1;
  SnapshotSet s;
  s.dimension = 1;
  s.system = name;
  s.tau = 1.0;
  s.x.resize(1, m);
  s.z.resize(1, m);
  double lo = states.front()[section.observed], hi = lo;
  for (std::size_t i = 0; i < states.size(); ++i) {
    double v = states[i][section.observed];
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    if (i + 1 < states.size()) s.x(0, static_cast<Eigen::Index>(i)) = v;
    if (i > 0) s.z(0, static_cast<Eigen::Index>(i) - 1) = v;
  }
  const double pad = 0.02 * (hi - lo);
  s.domain_box = {Interval{lo - pad, hi + pad}};
  return s;
}

}  // namespace

SnapshotSet poincare_snapshots(const DenseTrajectory& traj,
                               const PoincareSection& section,
                               const FieldFn& field) {
  SectionCrossingDetector det(section, field);
  for (std::size_t i = 0; i + 1 < traj.x.size(); ++i)
    det.step(traj.t[i], traj.x[i], traj.xdot[i], traj.t[i + 1] - traj.t[i],
             traj.x[i + 1], traj.xdot[i + 1]);
  return crossings_to_snapshots(det.crossing_states(), section, "section");
}

SnapshotSet poincare_snapshots_streaming(const FieldFn& field,
                                         const Eigen::VectorXd& x0,
                                         double t_end, double h,
                                         const PoincareSection& section) {
  SectionCrossingDetector det(section, field);
  const auto steps = static_cast<long>(std::ceil(t_end / h - 1e-12));
  Eigen::VectorXd cur = x0, f_cur = field(x0);
  for (long i = 0; i < steps; ++i) {
    Eigen::VectorXd nxt = rk4_step(field, cur, h);
    if (!nxt.allFinite())
      throw NonFiniteState("poincare_snapshots_streaming: diverged");
    Eigen::VectorXd f_nxt = field(nxt);
    det.step(i * h, cur, f_cur, h, nxt, f_nxt);
    cur.swap(nxt);
    f_cur.swap(f_nxt);
  }
  return crossings_to_snapshots(det.crossing_states(), section, "section");
}

// ---------------------------------------------------------------------------

namespace {

// Integrate from `x` until the next section crossing; returns (state, time).
// Gives up after max_time.
std::pair<Eigen::VectorXd, double> next_crossing(const FieldFn& field,
                                                 const PoincareSection& section,
                                                 Eigen::VectorXd x, double h,
                                                 double max_time) {
  SectionCrossingDetector det(section, field);
  Eigen::VectorXd f_cur = field(x);
  double t = 0.0;
  // step off the section first so the starting point is not re-detected
  for (int q = 0; q < 2; ++q) {
    Eigen::VectorXd nxt = rk4_step(field, x, h);
    x = nxt;
    t += h;
  }
  f_cur = field(x);
  while (t < max_time) {
    Eigen::VectorXd nxt = rk4_step(field, x, h);
    Eigen::VectorXd f_nxt = field(nxt);
    det.step(t, x, f_cur, h, nxt, f_nxt);
    if (!det.crossing_states().empty())
      return {det.crossing_states().front(), det.crossing_times().front()};
    x.swap(nxt);
    f_cur.swap(f_nxt);
    t += h;
  }
  throw NoCrossings("next_crossing: no section crossing before max_time");
}

}  // namespace

PeriodicOrbit refine_upo(const std::vector<double>& section_seeds,
                         const FieldFn& field, const PoincareSection& section,
                         const UpoOptions& opts) {
  const int p = static_cast<int>(section_seeds.size());
  if (p < 1) throw DimensionMismatch("refine_upo: empty seed list");
  const int n = opts.dimension;
  if (n < 2) throw DimensionMismatch("refine_upo: field dimension");

  auto make_state = [&](double observed, const Eigen::VectorXd& rest) {
    // rest carries the n-2 coordinates that are neither the section
    // coordinate nor the observed one (possibly empty)
    Eigen::VectorXd x(n);
    int r = 0;
    for (int q = 0; q < n; ++q) {
      if (q == section.coordinate)
        x[q] = section.level;
      else if (q == section.observed)
        x[q] = observed;
      else
        x[q] = rest[r++];
    }
    return x;
  };

  // Initialization sweep: follow the flow crossing-to-crossing to estimate
  // flight times and off-section coordinates.
  const int n_rest = n - 2;
  std::vector<Eigen::VectorXd> rest(static_cast<std::size_t>(p),
                                    Eigen::VectorXd::Zero(std::max(n_rest, 0)));
  std::vector<double> flight(static_cast<std::size_t>(p), 0.0);
  {
    Eigen::VectorXd x = make_state(section_seeds[0], rest[0]);
    for (int j = 0; j < p; ++j) {
      auto [arrival, t] = next_crossing(field, section, x, opts.h, 1e4);
      flight[static_cast<std::size_t>(j)] = t;
      int nx = (j + 1) % p;
      int r = 0;
      for (int q = 0; q < n; ++q)
        if (q != section.coordinate && q != section.observed)
          rest[static_cast<std::size_t>(nx)][r++] = arrival[q];
      x = make_state(section_seeds[static_cast<std::size_t>(nx)],
                     rest[static_cast<std::size_t>(nx)]);
    }
  }

  // Unknowns: per segment, the observed value, the n-2 free coordinates and
  // the flight time.
  const int per_seg = n;  // (observed) + (n-2 rest) + (time)
  const int dim = p * per_seg;
  Eigen::VectorXd u(dim);
  for (int j = 0; j < p; ++j) {
    u[j * per_seg] = section_seeds[static_cast<std::size_t>(j)];
    for (int r = 0; r < n_rest; ++r)
      u[j * per_seg + 1 + r] = rest[static_cast<std::size_t>(j)][r];
    u[j * per_seg + 1 + n_rest] = flight[static_cast<std::size_t>(j)];
  }

  auto seg_state = [&](const Eigen::VectorXd& vars, int j) {
    Eigen::VectorXd rr(std::max(n_rest, 0));
    for (int r = 0; r < n_rest; ++r) rr[r] = vars[j * per_seg + 1 + r];
    return make_state(vars[j * per_seg], rr);
  };

  auto residual = [&](const Eigen::VectorXd& vars) {
    Eigen::VectorXd F(dim);
    for (int j = 0; j < p; ++j) {
      double T = vars[j * per_seg + 1 + n_rest];
      if (T <= 2.0 * opts.h) {  // reject degenerate flight times
        F.setConstant(1e6);
        return F;
      }
      Eigen::VectorXd from = seg_state(vars, j);
      Eigen::VectorXd to = seg_state(vars, (j + 1) % p);
      Eigen::VectorXd err = flow(field, from, T, opts.h) - to;
      F.segment(j * per_seg, n) = err;
    }
    return F;
  };

  Eigen::VectorXd F = residual(u);
  double fnorm = F.norm();
  int it = 0;
  while (fnorm >= opts.tol && it < opts.max_newton) {
    Eigen::MatrixXd J(dim, dim);
    for (int q = 0; q < dim; ++q) {
      double eps = opts.fd_step * (1.0 + std::abs(u[q]));
      Eigen::VectorXd up = u;
      up[q] += eps;
      J.col(q) = (residual(up) - F) / eps;
    }
    Eigen::VectorXd delta = J.partialPivLu().solve(-F);
    double step = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 12; ++ls) {
      Eigen::VectorXd cand = u + step * delta;
      Eigen::VectorXd Fc = residual(cand);
      if (Fc.norm() < fnorm) {
        u = cand;
        F = Fc;
        fnorm = Fc.norm();
        improved = true;
        break;
      }
      step *= 0.5;
    }
    ++it;
    if (!improved) break;
  }
  if (fnorm >= opts.tol)
    throw NewtonDiverged("refine_upo: residual " + std::to_string(fnorm) +
                         " after " + std::to_string(it) + " iterations");

  PeriodicOrbit orbit;
  orbit.period = p;
  for (int j = 0; j < p; ++j) {
    orbit.section_points.push_back(u[j * per_seg]);
    orbit.states.push_back(seg_state(u, j));
    orbit.time_period += u[j * per_seg + 1 + n_rest];
  }

  // minimal-period reduction: does the cycle close after q | p crossings?
  for (int q = 1; q < p; ++q) {
    if (p % q != 0) continue;
    bool repeats = true;
    for (int j = 0; j + q < p && repeats; ++j)
      if ((orbit.states[static_cast<std::size_t>(j)] -
           orbit.states[static_cast<std::size_t>(j + q)])
              .norm() > opts.dedupe_tol)
        repeats = false;
    if (repeats) {
      orbit.reduced_period = true;
      orbit.period = q;
      orbit.section_points.resize(static_cast<std::size_t>(q));
      orbit.states.resize(static_cast<std::size_t>(q));
      double T = 0.0;
      for (int j = 0; j < q; ++j) T += u[j * per_seg + 1 + n_rest];
      orbit.time_period = T;
      break;
    }
  }

  orbit.residual =
      (flow(field, orbit.states[0], orbit.time_period, opts.h) - orbit.states[0])
          .norm();
  return orbit;
}

Eigen::VectorXd empirical_moments(const SnapshotSet& snaps,
                                  const BasisSpec& spec) {
  if (snaps.count() < 1) throw DimensionMismatch("empirical_moments: empty set");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(spec.size());
  for (Eigen::Index i = 0; i < snaps.count(); ++i)
    acc += eval_basis(spec, snaps.x.col(i));
  acc /= static_cast<double>(snaps.count());
  acc[0] = 1.0;
  return acc;
}

}  // namespace invmeas
