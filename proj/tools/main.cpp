// Command-line driver: configuration-driven pipelines over the invmeas core.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "invmeas/edmd.hpp"
#include "invmeas/errors.hpp"
#include "invmeas/pipeline.hpp"
#include "invmeas/recovery.hpp"

using namespace invmeas;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

std::string output_root() {
  if (const char* env = std::getenv("INVMEAS_OUTPUT_ROOT")) return env;
  return "out";
}

std::string resolve_out(const std::string& out, const std::string& fallback) {
  if (!out.empty()) return out;
  return (fs::path(output_root()) / fallback).string();
}

Json read_config(const std::string& path) { return load_config(path); }

int run_stages(const std::string& config_path, const std::string& out,
               const std::string& stage) {
  Json cfg = read_config(config_path);
  const std::string dir = resolve_out(out, "pipeline");
  PipelineResult res = run_pipeline(cfg, dir);
  std::cout << "[" << stage << "] wrote artifacts to " << dir << "\n";
  std::cout << "  m=" << res.snapshots.count()
            << " status=" << to_string(res.solution.report.status)
            << " objective=" << res.solution.report.objective << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_atoms(const std::string& config_path, const std::string& out) {
  Json cfg = read_config(config_path);
  const std::string dir = resolve_out(out, "atoms");
  PipelineResult res = run_pipeline(cfg, dir);
  Eigen::VectorXd y = res.solution.u.head(res.problem.num_moments());
  ExtractionOptions opts;
  if (cfg.contains("extraction"))
    opts.rank_tol = cfg["extraction"].value("rank_tol", opts.rank_tol);
  AtomicMeasure m = extract_atoms(y, res.problem.spec, opts);
  Json aj;
  aj["rank"] = m.moment_matrix_rank;
  aj["residual"] = m.reconstruction_residual;
  Json atoms = Json::array();
  for (const auto& atom : m.atoms) {
    Json a;
    a["point"] = std::vector<double>(atom.point.data(),
                                     atom.point.data() + atom.point.size());
    a["weight"] = atom.weight;
    atoms.push_back(a);
  }
  aj["atoms"] = atoms;
  std::ofstream(fs::path(dir) / "atoms.json") << aj.dump(2) << "\n";
  std::cout << aj.dump(2) << "\n";
  return kExitOk;
}

int run_upo_sweep(const Json& cfg, const std::string& dir) {
  fs::create_directories(dir);
  SnapshotSet section_data = make_snapshots(cfg);
  save_snapshots_bin(section_data, (fs::path(dir) / "section.bin").string());
  PoincareSection section;
  UpoCatalog catalog = upo_hunt(cfg, section_data, rossler_field, section);
  std::ofstream(fs::path(dir) / "catalog.json")
      << catalog_to_json(catalog).dump(2) << "\n";
  write_return_map_data(section_data, 4,
                        (fs::path(dir) / "return_map").string());
  std::cout << "verified orbits: " << catalog.orbits.size() << " (from "
            << catalog.objectives << " objectives)\n";
  for (const auto& entry : catalog.orbits)
    std::cout << "  period " << entry.orbit.period << "  T="
              << entry.orbit.time_period << "  residual="
              << entry.orbit.residual << "  hits=" << entry.hits << "\n";
  return kExitOk;
}

int cmd_upo(const std::string& config_path, const std::string& out) {
  Json cfg = read_config(config_path);
  return run_upo_sweep(cfg, resolve_out(out, "upo"));
}

// ---------------------------------------------------------------------------
// replication commands

Json logistic_config(long m, int k, bool exact, double ridge) {
  Json cfg;
  cfg["system"] = {{"name", "logistic"}};
  cfg["data"] = {{"m", m}, {"x0", 0.25}};
  cfg["basis"] = {{"family", "chebyshev"}, {"k", k}, {"l", 2 * k}};
  if (exact) cfg["lie"] = {{"kind", "exact"}};
  Json target = {{"index", Json::array({1})}, {"weight", 1.0}};
  if (exact) target["value"] = 0.0;  // otherwise filled from the data
  cfg["objective"] = {{"type", "momentfit"},
                      {"targets", Json::array({target})},
                      {"ridge", ridge}};
  return cfg;
}

double logistic_l1(const PipelineResult& res) {
  SignedDensity density = res.density;
  auto exact_cdf = [](double x) {
    return 0.5 + std::asin(std::clamp(x, -1.0, 1.0)) /
                     3.14159265358979323846;
  };
  return cdf_l1_distance(density, exact_cdf);
}

int cmd_table1(const std::string& out, bool full) {
  const std::string dir = resolve_out(out, "table1");
  fs::create_directories(dir);
  std::vector<int> ks = {5, 10, 15, 20, 25};
  std::vector<long> ms = full ? std::vector<long>{100, 1000, 10000, 100000}
                              : std::vector<long>{10000};
  std::ofstream csv(fs::path(dir) / "table1.csv");
  csv << "rows: m (data-driven) then exact; columns: L1 CDF error per k; "
         "final column y1~\n";
  csv << "m";
  for (int k : ks) csv << ",k=" << k;
  csv << ",y1_tilde\n";
  for (long m : ms) {
    csv << m;
    double y1 = 0.0;
    for (int k : ks) {
      Json cfg = logistic_config(m, k, false, 1e-4);
      PipelineResult res =
          run_pipeline(cfg, (fs::path(dir) / ("m" + std::to_string(m) + "_k" +
                                              std::to_string(k)))
                                .string());
      csv << "," << logistic_l1(res);
      y1 = empirical_moments(res.snapshots, res.problem.spec)[1];
      std::cout << "m=" << m << " k=" << k << " L1=" << logistic_l1(res)
                << "\n";
    }
    csv << "," << y1 << "\n";
  }
  csv << "exact";
  for (int k : ks) {
    Json cfg = logistic_config(100, k, true, 1e-4);
    PipelineResult res = run_pipeline(
        cfg, (fs::path(dir) / ("exact_k" + std::to_string(k))).string());
    csv << "," << logistic_l1(res);
    std::cout << "exact k=" << k << " L1=" << logistic_l1(res) << "\n";
  }
  csv << ",0\n";
  std::cout << "wrote " << (fs::path(dir) / "table1.csv").string() << "\n";
  return kExitOk;
}

int cmd_doublewell(const std::string& out, bool full, long runs) {
  const std::string dir = resolve_out(out, "doublewell");
  fs::create_directories(dir);
  Json cfg;
  cfg["system"] = {{"name", "double_well"}, {"sigma", 0.75}};
  cfg["data"] = {{"steps", full ? 5000000L : 500000L},
                 {"runs", runs},
                 {"tau", 1e-4},
                 {"seed", 1}};
  cfg["basis"] = {{"family", "chebyshev"}, {"k", 10}, {"l", 12}};
  cfg["lie"] = {{"kind", "edmd"}, {"threshold", true}};
  // maximize E[x1^2 + x2^2]
  cfg["objective"] = {
      {"type", "linear"},
      {"coeffs", Json::array({Json::array({Json::array({2, 0}), -1.0}),
                              Json::array({Json::array({0, 2}), -1.0})})}};
  PipelineResult res = run_pipeline(cfg, dir);

  // report stationary expectations of bivariate Chebyshev observables
  std::ofstream csv(fs::path(dir) / "expectations.csv");
  csv << "alpha,beta,predicted\n";
  const auto& spec = res.problem.spec;
  IndexLookup look(2, spec.degree);
  Eigen::VectorXd y = res.solution.u.head(res.problem.num_moments());
  for (int total = 2; total <= 6; total += 2)
    for (int a = total; a >= 0; --a) {
      const int b = total - a;
      const double v = y[look(MultiIndex{a, b})];
      csv << a << "," << b << "," << v << "\n";
      std::cout << "T" << a << "(x1)T" << b << "(x2): " << v << "\n";
    }
  write_density_grid(res.density, 101, (fs::path(dir) / "density.csv").string());
  return kExitOk;
}

int cmd_rossler(const std::string& out, bool upo, bool full) {
  const std::string dir = resolve_out(out, "rossler");
  fs::create_directories(dir);
  if (!upo) {
    Json cfg;
    cfg["system"] = {{"name", "rossler"}};
    cfg["data"] = {{"t_end", 1000.0}, {"tau", 0.005}, {"h", 0.001}};
    cfg["basis"] = {{"family", "chebyshev"}, {"k", 14}, {"l", 15}};
    // relative-weighted fit of the three first moments
    Json targets = Json::array();
    for (int axis = 0; axis < 3; ++axis) {
      Json idx = Json::array({0, 0, 0});
      idx[axis] = 1;
      targets.push_back({{"index", idx}, {"weight", "relative"}});
    }
    cfg["objective"] = {{"type", "momentfit"}, {"targets", targets},
                        {"ridge", 1e-4}};
    PipelineResult res = run_pipeline(cfg, dir);
    std::cout << "status=" << to_string(res.solution.report.status)
              << " iterations=" << res.solution.report.iterations << "\n";
    Eigen::VectorXd y = res.solution.u.head(res.problem.num_moments());
    IndexLookup look(3, res.problem.l);
    std::cout << "scaled first moments: " << y[look(MultiIndex{1, 0, 0})] << " "
              << y[look(MultiIndex{0, 1, 0})] << " "
              << y[look(MultiIndex{0, 0, 1})] << "\n";
    return kExitOk;
  }
  Json cfg;
  cfg["system"] = {{"name", "rossler_section"}};
  cfg["data"] = {{"t_end", full ? 10000.0 : 5000.0}, {"h", 0.005}};
  cfg["basis"] = {{"family", "chebyshev"}, {"k", 20}, {"l", 80}};
  cfg["hunt"] = {{"objectives", full ? 1000 : 200},
                 {"seed", 2024},
                 {"period_cap", full ? 19 : 8}};
  return run_upo_sweep(cfg, dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"invariant-measure discovery from trajectory snapshots"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  bool full = false, upo = false;
  long runs = 1;

  auto add_cfg = [&](CLI::App* sub, bool with_config = true) {
    if (with_config)
      sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* simulate = app.add_subcommand("simulate", "generate snapshot data");
  add_cfg(simulate);
  auto* edmd_cmd = app.add_subcommand("edmd", "estimate the Lie matrix");
  add_cfg(edmd_cmd);
  auto* assemble = app.add_subcommand("assemble", "build the moment SDP");
  add_cfg(assemble);
  auto* solve = app.add_subcommand("solve", "solve the conic program");
  add_cfg(solve);
  auto* recover = app.add_subcommand("recover", "recover the signed density");
  add_cfg(recover);
  auto* atoms = app.add_subcommand("atoms", "extract an atomic measure");
  add_cfg(atoms);
  auto* upo_cmd = app.add_subcommand("upo", "randomized periodic-orbit sweep");
  add_cfg(upo_cmd);

  auto* t1 = app.add_subcommand("replicate-table1", "logistic CDF-error table");
  add_cfg(t1, false);
  t1->add_flag("--full", full, "all data sizes (slower)");
  auto* dw = app.add_subcommand("replicate-doublewell",
                                "stochastic double-well expectations");
  add_cfg(dw, false);
  dw->add_flag("--full", full, "paper-scale snapshot count");
  dw->add_option("--runs", runs, "number of process realizations");
  auto* ro = app.add_subcommand("replicate-rossler",
                                "Rossler physical measure / UPO hunt");
  add_cfg(ro, false);
  ro->add_flag("--upo", upo, "run the periodic-orbit sweep");
  ro->add_flag("--full", full, "paper-scale sweep");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return run_stages(config_path, out_dir, "simulate");
    if (edmd_cmd->parsed()) return run_stages(config_path, out_dir, "edmd");
    if (assemble->parsed()) return run_stages(config_path, out_dir, "assemble");
    if (solve->parsed()) return run_stages(config_path, out_dir, "solve");
    if (recover->parsed()) return run_stages(config_path, out_dir, "recover");
    if (atoms->parsed()) return cmd_atoms(config_path, out_dir);
    if (upo_cmd->parsed()) return cmd_upo(config_path, out_dir);
    if (t1->parsed()) return cmd_table1(out_dir, full);
    if (dw->parsed()) return cmd_doublewell(out_dir, full, runs);
    if (ro->parsed()) return cmd_rossler(out_dir, upo, full);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitOk;
}
