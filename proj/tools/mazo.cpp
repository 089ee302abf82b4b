#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "mazo/checks.hpp"
#include "mazo/errors.hpp"
#include "mazo/graph.hpp"
#include "mazo/harness.hpp"
#include "mazo/problem.hpp"
#include "mazo/reference.hpp"
#include "mazo/solver.hpp"

namespace {

using nlohmann::json;

std::vector<int> parse_dims(const std::string& text) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) dims.push_back(std::stoi(item));
  return dims;
}

mazo::Graph make_graph(const std::string& topology, int n,
                       std::uint64_t seed) {
  if (topology == "complete") return mazo::complete_graph(n);
  if (topology == "ring") return mazo::ring_graph(n);
  if (topology == "path") return mazo::path_graph(n);
  if (topology == "star") return mazo::star_graph(n);
  if (topology.rfind("erdos:", 0) == 0) {
    const double p = std::stod(topology.substr(6));
    return mazo::erdos_renyi_connected(n, p, seed);
  }
  if (topology.rfind("file:", 0) == 0)
    return mazo::load_graph(topology.substr(5));
  throw mazo::ConfigError("unknown topology spec: " + topology);
}

// Run configuration file: one "key = value" per line, '#' comments.
std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mazo::ConfigError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty() && !value.empty()) kv[key] = value;
  }
  return kv;
}

struct RunSettings {
  std::string instance_path;
  std::uint64_t gen_seed = 1;
  int n = 15, d = 40, m = 2;
  double eig_min = 0.1, eig_max = 1.6, radius = 2.0;
  std::string topology = "erdos:0.4";
  std::uint64_t topology_seed = 1;
  std::string schedule = "constant";
  double eta = 0.002, mu = 0.002, offset = 300.0;
  double u = -1.0;       // negative: use the horizon-formula default
  double c_bound = -1.0; // negative: calibrate from the reference dual
  std::int64_t horizon = 10000;
  int trials = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "mazo_out";
  std::int64_t stride = -1;  // negative: pick from the horizon
  int workers = 1;
  std::string trace_path;
};

void apply_config_file(RunSettings& s,
                       const std::map<std::string, std::string>& kv) {
  auto get = [&](const char* key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };
  if (auto v = get("instance")) s.instance_path = *v;
  if (auto v = get("gen_seed")) s.gen_seed = std::stoull(*v);
  if (auto v = get("n")) s.n = std::stoi(*v);
  if (auto v = get("d")) s.d = std::stoi(*v);
  if (auto v = get("m")) s.m = std::stoi(*v);
  if (auto v = get("eig_min")) s.eig_min = std::stod(*v);
  if (auto v = get("eig_max")) s.eig_max = std::stod(*v);
  if (auto v = get("radius")) s.radius = std::stod(*v);
  if (auto v = get("topology")) s.topology = *v;
  if (auto v = get("topology_seed")) s.topology_seed = std::stoull(*v);
  if (auto v = get("schedule")) s.schedule = *v;
  if (auto v = get("eta")) s.eta = std::stod(*v);
  if (auto v = get("mu")) s.mu = std::stod(*v);
  if (auto v = get("c")) s.offset = std::stod(*v);
  if (auto v = get("u")) s.u = std::stod(*v);
  if (auto v = get("C")) s.c_bound = std::stod(*v);
  if (auto v = get("T")) s.horizon = std::stoll(*v);
  if (auto v = get("trials")) s.trials = std::stoi(*v);
  if (auto v = get("seed")) s.seed = std::stoull(*v);
  if (auto v = get("out_dir")) s.out_dir = *v;
  if (auto v = get("stride")) s.stride = std::stoll(*v);
  if (auto v = get("workers")) s.workers = std::stoi(*v);
}

int cmd_generate(std::uint64_t seed, int n, int d, const std::string& dims_csv,
                 int m, double eig_min, double eig_max, double radius,
                 const std::string& out) {
  std::vector<int> dims =
      dims_csv.empty() ? mazo::default_dims(n, d) : parse_dims(dims_csv);
  mazo::GeneratorOptions opts;
  opts.set_radius = radius;
  auto generated =
      mazo::generate_quadratic(seed, n, dims, m, eig_min, eig_max, opts);
  generated.spec->save(out);
  const auto& cs = generated.instance.consts;
  Eigen::VectorXd origin = Eigen::VectorXd::Zero(generated.instance.d);
  double slater_margin = 0.0;
  if (m > 0)
    slater_margin =
        -mazo::coupled_constraint_sum(generated.instance, origin).maxCoeff();
  std::cout << "wrote " << out << "\n"
            << "n=" << n << " d=" << generated.instance.d << " m=" << m
            << " dims=";
  for (std::size_t i = 0; i < dims.size(); ++i)
    std::cout << (i ? "," : "") << dims[i];
  std::cout << "\nM0=" << cs.M0 << " L0=" << cs.L0 << " Mg=" << cs.Mg
            << " Lg=" << cs.Lg << " Z=" << cs.Z << " R_bar=" << cs.R_bar
            << "\nslater_margin=" << slater_margin << "\n";
  return 0;
}

int cmd_solve_ref(const std::string& instance_path, double tol,
                  const std::string& out) {
  auto spec = std::make_shared<mazo::QuadraticSpec>(
      mazo::QuadraticSpec::load(instance_path));
  auto inst = mazo::make_instance(spec);
  const auto sol = mazo::solve_reference(inst, tol);
  std::cout << "f_star=" << sol.f_star << "\n"
            << "y_norm=" << sol.y_norm << "\n"
            << "kkt_residual=" << sol.kkt_residual << "\n"
            << "outer_iterations=" << sol.outer_iterations << "\n";
  if (!out.empty()) {
    json j;
    j["f_star"] = sol.f_star;
    j["y_norm"] = sol.y_norm;
    j["kkt_residual"] = sol.kkt_residual;
    j["tol"] = tol;
    j["x_star"] = std::vector<double>(sol.x_star.data(),
                                      sol.x_star.data() + sol.x_star.size());
    j["y_star"] = std::vector<double>(sol.y_star.data(),
                                      sol.y_star.data() + sol.y_star.size());
    std::ofstream f(out);
    if (!f) throw mazo::IoError("cannot write reference file: " + out);
    f << j.dump(1);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_params(const std::string& instance_path, const std::string& topology,
               std::uint64_t topology_seed, std::int64_t horizon,
               double c_bound) {
  auto spec = std::make_shared<mazo::QuadraticSpec>(
      mazo::QuadraticSpec::load(instance_path));
  auto inst = mazo::make_instance(spec);
  if (c_bound > 0.0) {
    mazo::set_dual_bound(inst, c_bound);
  } else if (inst.m > 0) {
    const auto sol = mazo::solve_reference(inst, 1e-8);
    mazo::set_dual_bound(inst, 2.0 * sol.y_norm + 1.0);
    std::cout << "C=" << inst.consts.C << " (calibrated from y_norm="
              << sol.y_norm << ")\n";
  }
  auto topo = mazo::build_topology(
      make_graph(topology, inst.n, topology_seed), inst.dims);
  const auto tc = mazo::compute_horizon_params(inst, topo, horizon);
  std::cout << "T=" << horizon << "\nxi=" << tc.xi << "\nzeta=" << tc.zeta
            << "\neta=" << tc.eta << "\nmu=" << tc.mu << "\nu=" << tc.u
            << "\nrho=" << topo.rho << "\nb_bar=" << topo.b_bar
            << "\nfrak_b_bar=" << topo.frak_b_bar << "\ndiameter="
            << topo.diameter << "\nR_bar=" << inst.consts.R_bar << "\n";
  return 0;
}

int cmd_verify(std::uint64_t seed) {
  const auto reports = mazo::run_verification_suites(seed);
  bool all_pass = true;
  for (const auto& r : reports) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name;
    if (!r.detail.empty()) std::cout << ": " << r.detail;
    std::cout << "\n";
    all_pass = all_pass && r.pass;
  }
  std::cout << (all_pass ? "verification passed" : "verification FAILED")
            << "\n";
  return all_pass ? 0 : 1;
}

int cmd_run(const RunSettings& s) {
  std::filesystem::create_directories(s.out_dir);

  // Instance: load or generate (and persist what was generated).
  std::shared_ptr<const mazo::QuadraticSpec> spec;
  std::string instance_origin;
  if (!s.instance_path.empty()) {
    spec = std::make_shared<mazo::QuadraticSpec>(
        mazo::QuadraticSpec::load(s.instance_path));
    instance_origin = s.instance_path;
  } else {
    mazo::GeneratorOptions gopts;
    gopts.set_radius = s.radius;
    auto generated = mazo::generate_quadratic(
        s.gen_seed, s.n, mazo::default_dims(s.n, s.d), s.m, s.eig_min,
        s.eig_max, gopts);
    spec = generated.spec;
    instance_origin = s.out_dir + "/instance.json";
    spec->save(instance_origin);
  }
  auto inst = mazo::make_instance(spec);

  auto topo = mazo::build_topology(
      make_graph(s.topology, inst.n, s.topology_seed), inst.dims);
  mazo::validate_topology(topo);

  // Dual bound: explicit flag wins, otherwise calibrate from the reference
  // dual norm.
  double y_norm = 0.0, f_star = 0.0;
  bool have_reference = false;
  if (inst.m > 0) {
    if (s.c_bound > 0.0) {
      mazo::set_dual_bound(inst, s.c_bound);
    } else {
      const auto sol = mazo::solve_reference(inst, 1e-8);
      y_norm = sol.y_norm;
      f_star = sol.f_star;
      have_reference = true;
      mazo::set_dual_bound(inst, 2.0 * sol.y_norm + 1.0);
    }
  }

  // Smoothing radius: explicit flag wins, otherwise the horizon formula.
  double u = s.u;
  mazo::HorizonParams tc{};
  const bool horizon_rule_needed = s.schedule == "horizon" || u <= 0.0;
  if (horizon_rule_needed) tc = mazo::compute_horizon_params(inst, topo, s.horizon);
  if (u <= 0.0) u = tc.u;

  mazo::EnsembleConfig cfg;
  cfg.master_seed = s.seed;
  cfg.trials = s.trials;
  cfg.workers = s.workers;
  cfg.metrics_stride =
      s.stride > 0 ? s.stride : std::max<std::int64_t>(1, s.horizon / 2000);
  cfg.out_dir = s.out_dir;
  if (s.schedule == "constant") {
    cfg.schedule = mazo::ParamSchedule::constant(s.eta, s.mu, u,
                                                 inst.consts.C, s.horizon);
  } else if (s.schedule == "diminishing") {
    cfg.schedule = mazo::ParamSchedule::diminishing(s.offset, u, inst.consts.C,
                                                    s.horizon);
  } else if (s.schedule == "horizon") {
    cfg.schedule =
        mazo::ParamSchedule::horizon_rule(tc, inst.consts, s.horizon);
    if (s.u > 0.0) cfg.schedule.u = s.u;
  } else {
    throw mazo::ConfigError("unknown schedule: " + s.schedule);
  }
  cfg.schedule.validate();

  mazo::TrialRunner runner;
  std::ofstream trace;
  if (!s.trace_path.empty()) {
    if (s.trials != 1)
      throw mazo::ConfigError("--trace-diffusion requires --trials 1");
    trace.open(s.trace_path);
    if (!trace) throw mazo::IoError("cannot open trace file: " + s.trace_path);
    runner = [&trace](const mazo::ProblemInstance& pi,
                      const mazo::NetworkTopology& nt,
                      const mazo::ParamSchedule& ps, std::uint64_t seed,
                      std::uint32_t trial, const mazo::RunOptions& opts) {
      mazo::RunOptions with_trace = opts;
      with_trace.diffusion_trace = &trace;
      return mazo::run(pi, nt, ps, seed, trial, with_trace);
    };
  }

  const auto result = mazo::run_ensemble(inst, topo, cfg, runner);
  for (const auto& warning : result.warnings)
    std::cerr << "warning: " << warning << "\n";

  // Manifest: everything needed to reproduce this run byte for byte.
  json manifest;
  manifest["instance"] = instance_origin;
  manifest["instance_seed"] = spec->seed;
  manifest["topology"] = s.topology;
  manifest["topology_seed"] = s.topology_seed;
  manifest["topology_metrics"] = {{"rho", topo.rho},
                                  {"diameter", topo.diameter},
                                  {"b_bar", topo.b_bar},
                                  {"frak_b_bar", topo.frak_b_bar}};
  manifest["schedule"] = s.schedule;
  manifest["eta"] = s.schedule == "constant" ? s.eta : 0.0;
  manifest["mu"] = s.schedule == "constant" ? s.mu : 0.0;
  manifest["c_offset"] = s.schedule == "diminishing" ? s.offset : 0.0;
  manifest["u"] = cfg.schedule.u;
  manifest["C"] = inst.consts.C;
  manifest["T"] = s.horizon;
  manifest["trials"] = s.trials;
  manifest["master_seed"] = s.seed;
  manifest["stride"] = cfg.metrics_stride;
  manifest["workers"] = s.workers;
  manifest["trials_completed"] = result.summary.trials_completed;
  manifest["trials_failed"] = result.summary.trials_failed;
  manifest["constants"] = {{"M0", inst.consts.M0},   {"L0", inst.consts.L0},
                           {"Mg", inst.consts.Mg},   {"Lg", inst.consts.Lg},
                           {"L_max", inst.consts.L_max},
                           {"Z", inst.consts.Z},     {"R_bar", inst.consts.R_bar}};
  if (have_reference) {
    manifest["reference"] = {{"f_star", f_star}, {"y_norm", y_norm}};
  }
  if (s.schedule == "horizon")
    manifest["horizon_rule_params"] = {{"xi", tc.xi},   {"zeta", tc.zeta},
                                  {"eta", tc.eta}, {"mu", tc.mu},
                                  {"u", tc.u}};
  {
    std::ofstream mf(s.out_dir + "/manifest.json");
    if (!mf) throw mazo::IoError("cannot write manifest");
    mf << manifest.dump(1);
  }

  std::cout << "completed " << result.summary.trials_completed << "/"
            << s.trials << " trials; summary at " << s.out_dir
            << "/summary.csv\n";
  if (!result.summary.f0.mean.empty())
    std::cout << "final f0(avg): mean=" << result.summary.f0.mean.back()
              << " violnorm mean=" << result.summary.viol_norm.mean.back()
              << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-agent zeroth-order feedback optimization simulator"};
  app.require_subcommand(1);

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "generate a quadratic instance");
  std::uint64_t g_seed = 1;
  int g_n = 15, g_d = 40, g_m = 2;
  std::string g_dims, g_out = "instance.json";
  double g_eig_min = 0.1, g_eig_max = 1.6, g_radius = 2.0;
  gen_cmd->add_option("--seed", g_seed, "generator seed");
  gen_cmd->add_option("--n", g_n, "agent count");
  gen_cmd->add_option("--d", g_d, "total dimension");
  gen_cmd->add_option("--dims", g_dims, "comma-separated per-agent dims");
  gen_cmd->add_option("--m", g_m, "coupled constraint count");
  gen_cmd->add_option("--eig-min", g_eig_min, "smallest eigenvalue");
  gen_cmd->add_option("--eig-max", g_eig_max, "largest eigenvalue");
  gen_cmd->add_option("--radius", g_radius, "action-set ball radius");
  gen_cmd->add_option("--out", g_out, "output instance file");

  // solve-ref
  auto* ref_cmd = app.add_subcommand("solve-ref", "centralized reference solve");
  std::string r_instance, r_out;
  double r_tol = 1e-8;
  ref_cmd->add_option("--instance", r_instance, "instance file")->required();
  ref_cmd->add_option("--tol", r_tol, "KKT tolerance");
  ref_cmd->add_option("--out", r_out, "optional reference output file");

  // params
  auto* params_cmd =
      app.add_subcommand("params", "print horizon-formula step sizes");
  std::string p_instance, p_topology = "erdos:0.4";
  std::uint64_t p_topology_seed = 1;
  std::int64_t p_horizon = 10000;
  double p_c = -1.0;
  params_cmd->add_option("--instance", p_instance, "instance file")->required();
  params_cmd->add_option("--topology", p_topology, "topology spec");
  params_cmd->add_option("--topology-seed", p_topology_seed, "topology seed");
  params_cmd->add_option("--T", p_horizon, "horizon");
  params_cmd->add_option("--C", p_c, "dual bound (otherwise calibrated)");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run the property suites");
  std::uint64_t v_seed = 1;
  verify_cmd->add_option("--seed", v_seed, "suite seed");

  // run
  auto* run_cmd = app.add_subcommand("run", "run a simulation ensemble");
  RunSettings rs;
  std::string run_config;
  run_cmd->add_option("--config", run_config, "key=value config file");
  auto* o_instance = run_cmd->add_option("--instance", rs.instance_path,
                                         "instance file (otherwise generated)");
  auto* o_gen_seed = run_cmd->add_option("--gen-seed", rs.gen_seed,
                                         "instance generator seed");
  auto* o_n = run_cmd->add_option("--n", rs.n, "agents (generated instance)");
  auto* o_d = run_cmd->add_option("--d", rs.d, "dimension (generated)");
  auto* o_m = run_cmd->add_option("--m", rs.m, "constraints (generated)");
  auto* o_eig_min = run_cmd->add_option("--eig-min", rs.eig_min, "");
  auto* o_eig_max = run_cmd->add_option("--eig-max", rs.eig_max, "");
  auto* o_topology =
      run_cmd->add_option("--topology", rs.topology,
                          "complete|ring|path|star|erdos:p|file:PATH");
  auto* o_topo_seed =
      run_cmd->add_option("--topology-seed", rs.topology_seed, "");
  auto* o_schedule = run_cmd->add_option("--schedule", rs.schedule,
                                         "constant|diminishing|horizon");
  auto* o_eta = run_cmd->add_option("--eta", rs.eta, "constant primal step");
  auto* o_mu = run_cmd->add_option("--mu", rs.mu, "constant dual step");
  auto* o_offset =
      run_cmd->add_option("--c", rs.offset, "diminishing offset 1/(sqrt(t)+c)");
  auto* o_u = run_cmd->add_option("--u", rs.u, "smoothing radius");
  auto* o_cb = run_cmd->add_option("--C", rs.c_bound, "dual ball radius");
  auto* o_horizon = run_cmd->add_option("--T", rs.horizon, "iterations");
  auto* o_trials = run_cmd->add_option("--trials", rs.trials, "trial count");
  auto* o_seed = run_cmd->add_option("--seed", rs.seed, "master seed");
  auto* o_out = run_cmd->add_option("--out-dir", rs.out_dir, "output directory");
  auto* o_stride = run_cmd->add_option("--stride", rs.stride, "metrics stride");
  auto* o_workers = run_cmd->add_option("--workers", rs.workers, "worker count");
  auto* o_trace = run_cmd->add_option("--trace-diffusion", rs.trace_path,
                                      "per-round table trace (trials=1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen_cmd)
      return cmd_generate(g_seed, g_n, g_d, g_dims, g_m, g_eig_min, g_eig_max,
                          g_radius, g_out);
    if (*ref_cmd) return cmd_solve_ref(r_instance, r_tol, r_out);
    if (*params_cmd)
      return cmd_params(p_instance, p_topology, p_topology_seed, p_horizon,
                        p_c);
    if (*verify_cmd) return cmd_verify(v_seed);
    if (*run_cmd) {
      if (!run_config.empty()) {
        // Config file supplies defaults; explicit flags override it.
        RunSettings from_file = rs;
        apply_config_file(from_file, parse_config_file(run_config));
        if (!*o_instance) rs.instance_path = from_file.instance_path;
        if (!*o_gen_seed) rs.gen_seed = from_file.gen_seed;
        if (!*o_n) rs.n = from_file.n;
        if (!*o_d) rs.d = from_file.d;
        if (!*o_m) rs.m = from_file.m;
        if (!*o_eig_min) rs.eig_min = from_file.eig_min;
        if (!*o_eig_max) rs.eig_max = from_file.eig_max;
        if (!*o_topology) rs.topology = from_file.topology;
        if (!*o_topo_seed) rs.topology_seed = from_file.topology_seed;
        if (!*o_schedule) rs.schedule = from_file.schedule;
        if (!*o_eta) rs.eta = from_file.eta;
        if (!*o_mu) rs.mu = from_file.mu;
        if (!*o_offset) rs.offset = from_file.offset;
        if (!*o_u) rs.u = from_file.u;
        if (!*o_cb) rs.c_bound = from_file.c_bound;
        if (!*o_horizon) rs.horizon = from_file.horizon;
        if (!*o_trials) rs.trials = from_file.trials;
        if (!*o_seed) rs.seed = from_file.seed;
        if (!*o_out) rs.out_dir = from_file.out_dir;
        if (!*o_stride) rs.stride = from_file.stride;
        if (!*o_workers) rs.workers = from_file.workers;
        if (!*o_trace) rs.trace_path = from_file.trace_path;
      }
      return cmd_run(rs);
    }
  } catch (const mazo::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mazo::DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mazo::InvalidConstants& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mazo::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
