#include "invmeas/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "invmeas/edmd.hpp"
#include "invmeas/errors.hpp"
#include "invmeas/rng.hpp"

namespace invmeas {

namespace fs = std::filesystem;

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  Json cfg;
  try {
    cfg = Json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

void validate_config(const Json& cfg) {
  if (!cfg.contains("system") || !cfg["system"].contains("name"))
    throw ConfigError("config: missing system.name");
  if (!cfg.contains("basis")) throw ConfigError("config: missing basis");
  const auto& b = cfg["basis"];
  const int k = b.value("k", 0), l = b.value("l", 0);
  if (k < 1 || l < k) throw ConfigError("config: need 1 <= k <= l");
}

PolyMap builtin_poly_map(const std::string& system, const BasisSpec& spec) {
  PolyMap map;
  auto fit = [&](int deg, auto&& fn) {
    return interpolate_on_grid(spec.with_degree(deg), fn);
  };
  if (system == "logistic") {
    map.components.push_back(
        fit(2, [](const Eigen::VectorXd& x) { return 2.0 * x[0] * x[0] - 1.0; }));
  } else if (system == "quad_fixed_point") {
    map.components.push_back(
        fit(2, [](const Eigen::VectorXd& x) { return 2.0 * x[0] - x[0] * x[0]; }));
  } else if (system == "double_well") {
    map.components.push_back(fit(3, [](const Eigen::VectorXd& x) {
      return double_well_drift(x)[0];
    }));
    map.components.push_back(fit(3, [](const Eigen::VectorXd& x) {
      return double_well_drift(x)[1];
    }));
  } else if (system == "rossler") {
    for (int i = 0; i < 3; ++i)
      map.components.push_back(fit(2, [i](const Eigen::VectorXd& x) {
        return rossler_field(x)[i];
      }));
  } else {
    throw ConfigError("builtin_poly_map: unknown system " + system);
  }
  return map;
}

namespace {

Box box_from_json(const Json& j) {
  Box box;
  for (const auto& iv : j)
    box.push_back(Interval{iv[0].get<double>(), iv[1].get<double>()});
  return box;
}

Eigen::VectorXd vec_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

SnapshotSet make_snapshots(const Json& cfg) {
  const auto& sys = cfg.at("system");
  const std::string name = sys.at("name").get<std::string>();
  const Json data = cfg.value("data", Json::object());
  const std::uint64_t seed = data.value("seed", 1ULL);

  if (name == "logistic") {
    const auto m = data.value("m", Eigen::Index(10000));
    Eigen::VectorXd x0(1);
    x0[0] = data.value("x0", 0.25);
    return simulate_map(logistic_map, x0, m, unit_box(1), name);
  }
  if (name == "quad_fixed_point") {
    const auto m = data.value("m", Eigen::Index(100));
    Eigen::VectorXd x0(1);
    x0[0] = data.value("x0", 0.3);
    return simulate_map(quad_fixed_point_map, x0, m, Box{Interval{0.0, 1.0}},
                        name);
  }
  if (name == "double_well") {
    const double sigma = sys.value("sigma", 0.75);
    const double tau = data.value("tau", 1e-4);
    const auto steps = data.value("steps", Eigen::Index(500000));
    const auto runs = data.value("runs", Eigen::Index(1));
    const Box box = unit_box(2);
    const Box init{Interval{-0.5, 0.5}, Interval{-0.5, 0.5}};
    if (runs == 1) {
      Rng r0 = Rng::split(seed, 0);
      Eigen::VectorXd x0(2);
      x0[0] = init[0].lo + init[0].width() * r0.next_uniform();
      x0[1] = init[1].lo + init[1].width() * r0.next_uniform();
      Rng rp = Rng::split(seed, 1);
      return simulate_sde(double_well_drift, sigma, tau, steps, x0,
                          rp.next_u64(), box, name);
    }
    return simulate_sde_ensemble(double_well_drift, sigma, tau, steps, runs,
                                 init, seed, box, name);
  }
  if (name == "rossler") {
    const double t_end = data.value("t_end", 1000.0);
    const double tau = data.value("tau", 0.005);
    const double h = data.value("h", 1e-3);
    Eigen::VectorXd x0 = data.contains("x0") ? vec_from_json(data["x0"])
                                             : vec_from_json(Json{0.0, -20.0, 0.0});
    Box box{Interval{-30, 30}, Interval{-30, 30}, Interval{0, 60}};
    return integrate_ode(rossler_field, x0, t_end, tau, h, box, name);
  }
  if (name == "rossler_section") {
    const double t_end = data.value("t_end", 5000.0);
    const double h = data.value("h", 0.005);
    Eigen::VectorXd x0 = data.contains("x0") ? vec_from_json(data["x0"])
                                             : vec_from_json(Json{0.0, -20.0, 0.0});
    PoincareSection section;  // x1 = 0, increasing, observe x2
    return poincare_snapshots_streaming(rossler_field, x0, t_end, h, section);
  }
  throw ConfigError("make_snapshots: unknown system " + name);
}

BasisSpec make_basis(const Json& cfg, const SnapshotSet& snaps) {
  const auto& b = cfg.at("basis");
  BasisSpec spec;
  spec.family = b.value("family", std::string("chebyshev")) == "monomial"
                    ? BasisFamily::Monomial
                    : BasisFamily::Chebyshev;
  spec.dimension = snaps.dimension;
  spec.degree = b.at("l").get<int>();
  spec.domain_box =
      b.contains("box") ? box_from_json(b["box"]) : snaps.domain_box;
  if (static_cast<int>(spec.domain_box.size()) != spec.dimension)
    throw ConfigError("make_basis: box dimension mismatch");
  return spec;
}

LieMatrix make_lie(const Json& cfg, const SnapshotSet& snaps,
                   const BasisSpec& spec) {
  const auto& b = cfg.at("basis");
  const int k = b.at("k").get<int>();
  const int l = b.at("l").get<int>();
  const Json lie_cfg = cfg.value("lie", Json::object());
  const std::string kind = lie_cfg.value("kind", std::string("edmd"));
  const std::string name = cfg.at("system").at("name").get<std::string>();

  if (kind == "exact") {
    if (name == "logistic" || name == "quad_fixed_point")
      return exact_lie_map(builtin_poly_map(name, spec), k, l, spec);
    if (name == "double_well") {
      const double sigma = cfg.at("system").value("sigma", 0.75);
      return exact_lie_sde(builtin_poly_map(name, spec),
                           sigma * sigma * Eigen::MatrixXd::Identity(2, 2), k,
                           l, spec);
    }
    if (name == "rossler")
      return exact_lie_ode(builtin_poly_map(name, spec), k, l, spec);
    throw ConfigError("make_lie: no exact generator for " + name);
  }

  const double rank_tol = lie_cfg.value("rank_tol", 1e-10);
  LieMatrix L = edmd_lie_matrix(snaps, k, l, spec, rank_tol,
                                lie_cfg.value("gram_threshold", Eigen::Index(100000)));
  if (lie_cfg.value("threshold", false)) {
    EdmdGram gram = accumulate_gram(snaps, k, l, spec);
    L = threshold_refine(L, gram, lie_cfg.value("rel_cut", 1e-3),
                         lie_cfg.value("max_rounds", 20));
  }
  return L;
}

Objective make_objective(const Json& cfg, const SnapshotSet& snaps,
                         const BasisSpec& spec) {
  const Json obj = cfg.value("objective", Json::object());
  const std::string type = obj.value("type", std::string("linear"));
  IndexLookup look(spec.dimension, spec.degree);

  if (type == "linear") {
    LinearObjective lin;
    lin.y_coeffs = Eigen::VectorXd::Zero(spec.size());
    for (const auto& term : obj.value("coeffs", Json::array())) {
      MultiIndex mi = term.at(0).get<MultiIndex>();
      const int col = look(mi);
      if (col < 0) throw ConfigError("objective index degree exceeds l");
      lin.y_coeffs[col] = term.at(1).get<double>();
    }
    return lin;
  }
  if (type != "momentfit") throw ConfigError("unknown objective type " + type);

  MomentFitObjective fit;
  Eigen::VectorXd emp;  // computed lazily from the data
  auto empirical = [&](const MultiIndex& mi) {
    if (emp.size() == 0) emp = empirical_moments(snaps, spec);
    return emp[look(mi)];
  };
  std::set<MultiIndex> targeted;
  for (const auto& t : obj.value("targets", Json::array())) {
    MomentTarget target;
    target.index = t.at("index").get<MultiIndex>();
    if (look(target.index) < 0)
      throw ConfigError("momentfit target degree exceeds l");
    target.value = t.contains("value") && !t["value"].is_null()
                       ? t["value"].get<double>()
                       : empirical(target.index);
    if (t.contains("weight") && t["weight"].is_string()) {
      // relative weighting: w = 1 / value^2 (the target must be nonzero)
      target.weight = 1.0 / (target.value * target.value);
    } else {
      target.weight = t.value("weight", 1.0);
    }
    targeted.insert(target.index);
    fit.targets.push_back(std::move(target));
  }
  const double ridge = obj.value("ridge", 0.0);
  if (ridge > 0.0) {
    // shrink all untargeted non-constant moments toward zero; ties on the
    // optimal face are broken toward the minimum-norm solution
    for (const auto& mi : index_set(spec.dimension, spec.degree)) {
      if (degree(mi) == 0 || targeted.count(mi)) continue;
      fit.targets.push_back(MomentTarget{mi, 0.0, ridge});
    }
  }
  return fit;
}

SolverOptions make_solver_options(const Json& cfg, int dimension) {
  SolverOptions opts;
  const double eps_default = dimension == 1 ? 1e-8 : 1e-7;
  const Json s = cfg.value("solver", Json::object());
  opts.eps_abs = s.value("eps", eps_default);
  opts.eps_rel = s.value("eps_rel", opts.eps_abs);
  opts.max_iter = s.value("max_iter", 500000L);
  opts.relax = s.value("relax", 1.5);
  opts.polish = s.value("polish", false);
  opts.seed = s.value("seed", 0ULL);
  return opts;
}

namespace {

std::uint64_t json_hash(const Json& j) {
  const std::string dump = j.dump();
  return fnv1a(dump.data(), dump.size());
}

Json manifest_load(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) return Json::object();
  try {
    return Json::parse(in);
  } catch (...) {
    return Json::object();
  }
}

void manifest_store(const fs::path& dir, const Json& manifest) {
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

bool stage_cached(const Json& manifest, const std::string& stage,
                  std::uint64_t input_hash, const fs::path& file) {
  return manifest.contains(stage) &&
         manifest[stage].value("input_hash", 0ULL) == input_hash &&
         fs::exists(file);
}

Json pick(const Json& cfg, std::initializer_list<const char*> keys) {
  Json out = Json::object();
  for (const char* k : keys)
    if (cfg.contains(k)) out[k] = cfg[k];
  return out;
}

}  // namespace

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("file_hash: cannot open " + path);
  char buf[65536];
  std::uint64_t h = 0xcbf29ce484222325ULL;
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

PipelineResult run_pipeline(const Json& cfg, const std::string& out_dir) {
  validate_config(cfg);
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  Json manifest = manifest_load(dir);
  PipelineResult res;
  Json& report = res.report;
  report["stages"] = Json::object();

  // --- stage 1: simulate --------------------------------------------------
  const auto snap_path = dir / "snapshots.bin";
  const std::uint64_t h_sim = json_hash(pick(cfg, {"system", "data"}));
  if (stage_cached(manifest, "simulate", h_sim, snap_path)) {
    res.snapshots = load_snapshots_bin(snap_path.string());
    report["stages"]["simulate"] = "cached";
  } else {
    res.snapshots = make_snapshots(cfg);
    save_snapshots_bin(res.snapshots, snap_path.string());
    manifest["simulate"] = {{"input_hash", h_sim},
                            {"file", snap_path.filename().string()}};
    report["stages"]["simulate"] = "computed";
  }
  report["m"] = static_cast<std::int64_t>(res.snapshots.count());

  // --- stage 2: lie matrix -------------------------------------------------
  BasisSpec spec = make_basis(cfg, res.snapshots);
  const auto lie_path = dir / "lie.json";
  const std::uint64_t h_lie =
      fnv1a(&h_sim, sizeof(h_sim), json_hash(pick(cfg, {"basis", "lie"})));
  if (stage_cached(manifest, "lie", h_lie, lie_path)) {
    res.lie = load_lie_matrix(lie_path.string());
    report["stages"]["lie"] = "cached";
  } else {
    res.lie = make_lie(cfg, res.snapshots, spec);
    save_lie_matrix(res.lie, lie_path.string());
    manifest["lie"] = {{"input_hash", h_lie},
                       {"file", lie_path.filename().string()}};
    report["stages"]["lie"] = "computed";
  }

  // --- stage 3: assemble ---------------------------------------------------
  const auto prob_path = dir / "problem.json";
  const std::uint64_t h_prob =
      fnv1a(&h_lie, sizeof(h_lie), json_hash(pick(cfg, {"objective", "domain"})));
  if (stage_cached(manifest, "assemble", h_prob, prob_path)) {
    res.problem = load_problem(prob_path.string());
    report["stages"]["assemble"] = "cached";
  } else {
    Objective objective = make_objective(cfg, res.snapshots, spec);
    res.problem = assemble_problem(res.lie, box_set(spec), objective);
    if (std::holds_alternative<MomentFitObjective>(res.problem.objective))
      res.problem = lift_momentfit(res.problem);
    save_problem(res.problem, prob_path.string());
    manifest["assemble"] = {{"input_hash", h_prob},
                            {"file", prob_path.filename().string()}};
    report["stages"]["assemble"] = "computed";
  }

  // --- stage 4: solve --------------------------------------------------------
  const auto sol_path = dir / "solution.json";
  const std::uint64_t h_sol =
      fnv1a(&h_prob, sizeof(h_prob), json_hash(pick(cfg, {"solver"})));
  SolverOptions opts = make_solver_options(cfg, spec.dimension);
  bool solved_from_cache = false;
  if (stage_cached(manifest, "solve", h_sol, sol_path)) {
    std::ifstream in(sol_path);
    Json sj = Json::parse(in);
    auto uv = sj.at("u").get<std::vector<double>>();
    res.solution.u = Eigen::Map<Eigen::VectorXd>(
        uv.data(), static_cast<Eigen::Index>(uv.size()));
    res.solution.report.status = sj.at("status").get<std::string>() == "optimal"
                                     ? SolveStatus::Optimal
                                     : SolveStatus::MaxIter;
    res.solution.report.objective = sj.at("objective").get<double>();
    res.solution.report.iterations = sj.at("iterations").get<long>();
    report["stages"]["solve"] = "cached";
    solved_from_cache = true;
  } else {
    ConicStandardForm form = to_standard_form(res.problem);
    res.solution = solve_conic(form, opts);
    Json sj;
    sj["u"] = std::vector<double>(
        res.solution.u.data(), res.solution.u.data() + res.solution.u.size());
    sj["status"] = to_string(res.solution.report.status);
    sj["objective"] = res.solution.report.objective;
    sj["iterations"] = res.solution.report.iterations;
    sj["primal_res"] = res.solution.report.primal_res;
    sj["dual_res"] = res.solution.report.dual_res;
    sj["gap"] = res.solution.report.gap;
    std::ofstream out(sol_path);
    out << sj.dump();
    manifest["solve"] = {{"input_hash", h_sol},
                         {"file", sol_path.filename().string()}};
    report["stages"]["solve"] = "computed";
  }
  report["solve_status"] = to_string(res.solution.report.status);
  report["objective"] = res.solution.report.objective;
  report["iterations"] = res.solution.report.iterations;
  (void)solved_from_cache;

  // --- stage 5: recover -------------------------------------------------------
  const Json rec = cfg.value("recovery", Json::object());
  const int r = rec.value("r", res.problem.k);
  Eigen::VectorXd y = res.solution.u.head(res.problem.num_moments());
  res.density = density_from_moments(y, r, spec);
  {
    Json dj;
    dj["r"] = r;
    dj["coeffs"] = std::vector<double>(
        res.density.coeffs.coeffs.data(),
        res.density.coeffs.coeffs.data() + res.density.coeffs.coeffs.size());
    std::ofstream out(dir / "density.json");
    out << dj.dump();
    report["stages"]["recover"] = "computed";
  }
  report["y_head"] = std::vector<double>(
      y.data(), y.data() + std::min<Eigen::Index>(y.size(), 8));

  manifest_store(dir, manifest);
  {
    std::ofstream out(dir / "report.json");
    out << report.dump(2) << "\n";
  }
  return res;
}

// ---------------------------------------------------------------------------

namespace {

// Order an extracted support into cycles using the data successor map: each
// atom steps to the atom nearest to the image of its nearest data point.
std::vector<std::vector<double>> order_into_cycles(
    const std::vector<double>& atoms, const SnapshotSet& data) {
  const int p = static_cast<int>(atoms.size());
  std::vector<int> succ(static_cast<std::size_t>(p), -1);
  for (int a = 0; a < p; ++a) {
    Eigen::Index best = 0;
    double bd = std::abs(data.x(0, 0) - atoms[static_cast<std::size_t>(a)]);
    for (Eigen::Index i = 1; i < data.count(); ++i) {
      const double d = std::abs(data.x(0, i) - atoms[static_cast<std::size_t>(a)]);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    const double image = data.z(0, best);
    int nb = 0;
    double nd = std::abs(atoms[0] - image);
    for (int b = 1; b < p; ++b) {
      const double d = std::abs(atoms[static_cast<std::size_t>(b)] - image);
      if (d < nd) {
        nd = d;
        nb = b;
      }
    }
    succ[static_cast<std::size_t>(a)] = nb;
  }
  std::vector<std::vector<double>> cycles;
  std::vector<char> used(static_cast<std::size_t>(p), 0);
  for (int start = 0; start < p; ++start) {
    if (used[static_cast<std::size_t>(start)]) continue;
    std::vector<double> cyc;
    int cur = start;
    while (!used[static_cast<std::size_t>(cur)]) {
      used[static_cast<std::size_t>(cur)] = 1;
      cyc.push_back(atoms[static_cast<std::size_t>(cur)]);
      cur = succ[static_cast<std::size_t>(cur)];
    }
    cycles.push_back(std::move(cyc));
  }
  return cycles;
}

std::vector<double> orbit_key(const PeriodicOrbit& orbit) {
  std::vector<double> key = orbit.section_points;
  std::sort(key.begin(), key.end());
  return key;
}

bool same_orbit(const std::vector<double>& a, const std::vector<double>& b,
                double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

}  // namespace

UpoCatalog upo_hunt(const Json& cfg, const SnapshotSet& section_data,
                    const FieldFn& field, const PoincareSection& section) {
  const auto& b = cfg.at("basis");
  const int k = b.at("k").get<int>();
  const int l = b.at("l").get<int>();
  const Json hunt = cfg.value("hunt", Json::object());
  const int count = hunt.value("objectives", 200);
  const std::uint64_t seed = hunt.value("seed", 2024ULL);
  const int period_cap = hunt.value("period_cap", 8);

  BasisSpec spec = make_basis(cfg, section_data);
  LieMatrix L = make_lie(cfg, section_data, spec);
  SemialgebraicSet X = box_set(spec);
  auto objectives = randomized_objectives(k, spec, count, seed);
  SolverOptions opts = make_solver_options(cfg, 1);

  const double range = spec.domain_box[0].width();
  const double dedupe_tol = 1e-4 * range;

  UpoCatalog catalog;
  catalog.objectives = count;
  ExtractionOptions ex_opts;
  ex_opts.rank_tol = hunt.value("rank_tol", 1e-6);

  UpoOptions upo_opts;
  upo_opts.dimension = 3;
  upo_opts.tol = hunt.value("newton_tol", 1e-9);

  for (const auto& objective : objectives) {
    MomentProblem problem = assemble_problem(L, X, objective);
    SolveResult sol;
    try {
      sol = solve_conic(to_standard_form(problem), opts);
    } catch (const Error&) {
      continue;
    }
    if (sol.report.status == SolveStatus::InfeasibleLike) continue;
    Eigen::VectorXd y = sol.u.head(problem.num_moments());
    AtomicMeasure measure;
    try {
      measure = extract_atoms(y, spec, ex_opts);
    } catch (const ExtractionFailed&) {
      ++catalog.extraction_failures;
      continue;
    }
    std::vector<double> support;
    for (const auto& atom : measure.atoms) support.push_back(atom.point[0]);
    for (auto& cycle : order_into_cycles(support, section_data)) {
      if (static_cast<int>(cycle.size()) > period_cap) continue;
      PeriodicOrbit orbit;
      try {
        orbit = refine_upo(cycle, field, section, upo_opts);
      } catch (const Error&) {
        ++catalog.newton_failures;
        continue;
      }
      auto key = orbit_key(orbit);
      bool known = false;
      for (auto& entry : catalog.orbits)
        if (same_orbit(orbit_key(entry.orbit), key, dedupe_tol)) {
          ++entry.hits;
          known = true;
          break;
        }
      if (!known) catalog.orbits.push_back(CatalogEntry{std::move(orbit), 1});
    }
  }
  std::sort(catalog.orbits.begin(), catalog.orbits.end(),
            [](const CatalogEntry& a, const CatalogEntry& b) {
              if (a.orbit.period != b.orbit.period)
                return a.orbit.period < b.orbit.period;
              return a.orbit.section_points < b.orbit.section_points;
            });
  return catalog;
}

Json catalog_to_json(const UpoCatalog& catalog) {
  Json j;
  j["objectives"] = catalog.objectives;
  j["extraction_failures"] = catalog.extraction_failures;
  j["newton_failures"] = catalog.newton_failures;
  Json orbits = Json::array();
  for (const auto& entry : catalog.orbits) {
    Json oj;
    oj["period"] = entry.orbit.period;
    oj["section_points"] = entry.orbit.section_points;
    oj["time_period"] = entry.orbit.time_period;
    oj["residual"] = entry.orbit.residual;
    oj["reduced_period"] = entry.orbit.reduced_period;
    oj["hits"] = entry.hits;
    orbits.push_back(oj);
  }
  j["orbits"] = orbits;
  return j;
}

// ---------------------------------------------------------------------------

void write_density_grid(const SignedDensity& density, int resolution,
                        const std::string& path) {
  const BasisSpec& spec = density.coeffs.spec;
  const int n = spec.dimension;
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "#";
  for (int i = 0; i < n; ++i) out << " x" << (i + 1);
  out << " density\n";
  std::vector<int> digit(static_cast<std::size_t>(n), 0);
  std::int64_t total = 1;
  for (int i = 0; i < n; ++i) total *= resolution;
  Eigen::VectorXd x(n);
  char buf[32];
  for (std::int64_t cell = 0; cell < total; ++cell) {
    std::int64_t rem = cell;
    for (int i = 0; i < n; ++i) {
      digit[static_cast<std::size_t>(i)] = static_cast<int>(rem % resolution);
      rem /= resolution;
      const auto& iv = spec.domain_box[static_cast<std::size_t>(i)];
      x[i] = resolution == 1
                 ? iv.mid()
                 : iv.lo + iv.width() * digit[static_cast<std::size_t>(i)] /
                               (resolution - 1);
    }
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", x[i]);
      out << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", density.coeffs.eval(x));
    out << buf << "\n";
  }
}

void write_return_map_data(const SnapshotSet& section_data, int max_q,
                           const std::string& path_prefix) {
  // reconstruct the crossing sequence v_0..v_m from the chained pairs
  std::vector<double> v;
  for (Eigen::Index i = 0; i < section_data.count(); ++i)
    v.push_back(section_data.x(0, i));
  v.push_back(section_data.z(0, section_data.count() - 1));
  for (int q = 1; q <= max_q; ++q) {
    std::ofstream out(path_prefix + "_q" + std::to_string(q) + ".csv");
    out << "# v_i,v_{i+" << q << "}\n";
    char buf[32];
    for (std::size_t i = 0; i + static_cast<std::size_t>(q) < v.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
      out << buf << ",";
      std::snprintf(buf, sizeof(buf), "%.17g", v[i + static_cast<std::size_t>(q)]);
      out << buf << "\n";
    }
  }
}

}  // namespace invmeas
