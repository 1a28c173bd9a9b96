#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "invmeas/snapshots.hpp"

namespace invmeas {

using MapFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using FieldFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// ---------------------------------------------------------------------------
// Built-in systems

// x -> 2x^2 - 1 on [-1,1] (chaotic, arcsine invariant density).
Eigen::VectorXd logistic_map(const Eigen::VectorXd& x);
// x -> 2x - x^2 on [0,1] (degenerate fixed-point example).
Eigen::VectorXd quad_fixed_point_map(const Eigen::VectorXd& x);
// Drift of the two-dimensional double-well system.
Eigen::VectorXd double_well_drift(const Eigen::VectorXd& x);
// Rossler vector field with c = 18.
Eigen::VectorXd rossler_field(const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------
// Simulators (all deterministic given their arguments)

// Orbit snapshots (x_i, f(x_i)), i = 0..m-1, starting at x0; tau = 1.
// Throws OrbitEscaped when an iterate leaves `box`.
SnapshotSet simulate_map(const MapFn& f, const Eigen::VectorXd& x0,
                         Eigen::Index m, const Box& box,
                         const std::string& name = "map");

// Euler-Maruyama with additive noise sigma * dW. Pairs (X_t, X_{t+tau});
// pairs with either endpoint outside `box` are dropped. Aborts if the state
// exceeds 10x the box radius.
SnapshotSet simulate_sde(const FieldFn& drift, double sigma, double tau,
                         Eigen::Index steps, const Eigen::VectorXd& x0,
                         std::uint64_t seed, const Box& box,
                         const std::string& name = "sde");

// Multiple realizations started from uniform draws in `init_box`; one master
// seed, per-realization streams split deterministically. Results concatenated
// in realization order.
SnapshotSet simulate_sde_ensemble(const FieldFn& drift, double sigma,
                                  double tau, Eigen::Index steps_per_run,
                                  Eigen::Index runs, const Box& init_box,
                                  std::uint64_t seed, const Box& box,
                                  const std::string& name = "sde-ensemble");

// Classical fixed-step 4th order integration. Snapshot pairs are
// (x(t), x(t+tau)) sampled on the tau grid; tau must be a multiple of h.
SnapshotSet integrate_ode(const FieldFn& field, const Eigen::VectorXd& x0,
                          double t_end, double tau, double h, const Box& box,
                          const std::string& name = "ode");

// One RK4 step (exposed for tests and shooting).
Eigen::VectorXd rk4_step(const FieldFn& field, const Eigen::VectorXd& x,
                         double h);
// Integrate for a duration with internal step <= h_max.
Eigen::VectorXd flow(const FieldFn& field, Eigen::VectorXd x, double duration,
                     double h_max);

// ---------------------------------------------------------------------------
// Poincare sections

struct PoincareSection {
  int coordinate = 0;       // crossing coordinate (x1 = level)
  double level = 0.0;
  bool increasing = true;   // require xdot_coordinate > 0
  int observed = 1;         // coordinate recorded at each crossing
};

// Streaming detector: feed consecutive integrator steps, collects crossing
// states located on the cubic Hermite interpolant (|x_c - level| < 1e-10 via
// bisection in time).
class SectionCrossingDetector {
 public:
  SectionCrossingDetector(PoincareSection section, FieldFn field);
  void step(double t0, const Eigen::VectorXd& x0, const Eigen::VectorXd& f0,
            double h, const Eigen::VectorXd& x1, const Eigen::VectorXd& f1);
  const std::vector<double>& crossing_times() const { return times_; }
  const std::vector<Eigen::VectorXd>& crossing_states() const { return states_; }

 private:
  PoincareSection section_;
  FieldFn field_;
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> states_;
};

// A stored trajectory (used by tests and small runs).
struct DenseTrajectory {
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x;
  std::vector<Eigen::VectorXd> xdot;
};

DenseTrajectory integrate_dense(const FieldFn& field, const Eigen::VectorXd& x0,
                                double t_end, double h);

// Consecutive observed values at section crossings, paired into a 1D
// SnapshotSet (tau = 1). Throws NoCrossings if fewer than two crossings.
SnapshotSet poincare_snapshots(const DenseTrajectory& traj,
                               const PoincareSection& section,
                               const FieldFn& field);

// Long-horizon variant that integrates on the fly (no trajectory storage).
SnapshotSet poincare_snapshots_streaming(const FieldFn& field,
                                         const Eigen::VectorXd& x0,
                                         double t_end, double h,
                                         const PoincareSection& section);

// ---------------------------------------------------------------------------
// Periodic orbits

struct PeriodicOrbit {
  int period = 0;                         // section crossings per cycle
  std::vector<double> section_points;     // observed coordinate at crossings
  double time_period = 0.0;               // continuous period T
  std::vector<Eigen::VectorXd> states;    // full states at the crossings
  double residual = 0.0;                  // ||Phi_T(x0) - x0||
  bool reduced_period = false;            // closed in a divisor of the seed period
};

struct UpoOptions {
  int dimension = 3;      // state dimension of the field
  double tol = 1e-9;
  int max_newton = 50;
  double fd_step = 1e-7;
  double h = 1e-3;        // integration step during shooting
  double dedupe_tol = 1e-6;
};

// Multiple-shooting refinement of a candidate period-p cycle of the return
// map. Seeds are observed-coordinate values in return-map order; initial full
// states are placed on the section with the remaining coordinates from an
// initialization sweep. Throws NewtonDiverged if the residual is not driven
// below tol.
PeriodicOrbit refine_upo(const std::vector<double>& section_seeds,
                         const FieldFn& field, const PoincareSection& section,
                         const UpoOptions& opts = {});

// ---------------------------------------------------------------------------

// Empirical moments: y_gamma = (1/m) sum_i b_gamma(x_i) over snapshot x sides.
Eigen::VectorXd empirical_moments(const SnapshotSet& snaps,
                                  const BasisSpec& spec);

}  // namespace invmeas
