#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "invmeas/basis.hpp"

namespace invmeas {

// A set of state pairs (x_i, z_i): z_i is the state tau time units after x_i
// (tau = 1 for maps). The only thing downstream stages need from a system.
struct SnapshotSet {
  int dimension = 0;
  Eigen::MatrixXd x;  // dimension x m
  Eigen::MatrixXd z;  // dimension x m
  double tau = 1.0;
  Box domain_box;
  std::string system;
  std::uint64_t seed = 0;

  Eigen::Index count() const { return x.cols(); }
};

// CSV container: '#'-prefixed header lines (n, m, tau, box, system, seed)
// followed by "x1,..,xn,z1,..,zn" rows printed with round-trip precision.
void save_snapshots_csv(const SnapshotSet& s, const std::string& path);
SnapshotSet load_snapshots_csv(const std::string& path);

// Binary container: one JSON metadata line, then m*2n little-endian doubles.
void save_snapshots_bin(const SnapshotSet& s, const std::string& path);
SnapshotSet load_snapshots_bin(const std::string& path);

// Dispatch on extension (.csv / .bin).
void save_snapshots(const SnapshotSet& s, const std::string& path);
SnapshotSet load_snapshots(const std::string& path);

// Rescale states so the domain box becomes [-1,1]^n (used before building
// Chebyshev data matrices); metadata is carried over.
SnapshotSet to_unit_box(const SnapshotSet& s);

}  // namespace invmeas
