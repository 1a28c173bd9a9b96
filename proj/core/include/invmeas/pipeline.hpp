#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

#include "invmeas/dynamics.hpp"
#include "invmeas/moment_problem.hpp"
#include "invmeas/recovery.hpp"
#include "invmeas/solver.hpp"

namespace invmeas {

using Json = nlohmann::json;

// Configuration-driven experiment stages. Configs are JSON documents with
// sections: system, data, basis, lie, objective, solver, recovery. Invalid
// configs throw ConfigError.
Json load_config(const std::string& path);
void validate_config(const Json& cfg);

// Built-in polynomial representations of the named systems (raw coordinates
// over the given box/family).
PolyMap builtin_poly_map(const std::string& system, const BasisSpec& spec);

SnapshotSet make_snapshots(const Json& cfg);
BasisSpec make_basis(const Json& cfg, const SnapshotSet& snaps);
LieMatrix make_lie(const Json& cfg, const SnapshotSet& snaps,
                   const BasisSpec& spec);
Objective make_objective(const Json& cfg, const SnapshotSet& snaps,
                         const BasisSpec& spec);
SolverOptions make_solver_options(const Json& cfg, int dimension);

struct PipelineResult {
  SnapshotSet snapshots;
  LieMatrix lie;
  MomentProblem problem;
  SolveResult solution;
  SignedDensity density;
  Json report;
};

// Runs simulate -> edmd -> assemble -> solve -> recover, writing one artifact
// per stage into out_dir plus a manifest with content hashes. Stages whose
// recorded input hash matches are loaded from disk instead of recomputed.
PipelineResult run_pipeline(const Json& cfg, const std::string& out_dir);

// ---------------------------------------------------------------------------
// periodic-orbit sweep

struct CatalogEntry {
  PeriodicOrbit orbit;
  int hits = 0;  // number of objectives that produced this orbit
};

struct UpoCatalog {
  std::vector<CatalogEntry> orbits;
  int objectives = 0;
  int extraction_failures = 0;
  int newton_failures = 0;
};

// Randomized-objective sweep over section data: solve, extract atoms, order
// candidate cycles by the data successor map, refine with Newton shooting and
// deduplicate verified orbits by minimal period.
UpoCatalog upo_hunt(const Json& cfg, const SnapshotSet& section_data,
                    const FieldFn& field, const PoincareSection& section);

Json catalog_to_json(const UpoCatalog& catalog);

// ---------------------------------------------------------------------------
// exports

// Density values on a uniform grid over the domain box, written as CSV with
// one coordinate tuple + value per row.
void write_density_grid(const SignedDensity& density, int resolution,
                        const std::string& path);

// Section-map iterate pairs (v_i, v_{i+q}) for q = 1..max_q, one CSV per q.
void write_return_map_data(const SnapshotSet& section_data, int max_q,
                           const std::string& path_prefix);

std::uint64_t file_hash(const std::string& path);

}  // namespace invmeas
