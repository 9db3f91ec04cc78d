#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "pmc/config.hpp"
#include "pmc/mollify_pipeline.hpp"
#include "pmc/radial_oracle.hpp"
#include "pmc/variational_solver.hpp"
#include "pmc/verify.hpp"

using namespace pmc;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kFail = 1, kConfig = 2;

void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << j.dump(2) << '\n';
}

int solve_radial(const RunConfig& c, const fs::path& out) {
  auto rho = c.density.build(c.params.N);
  auto grid = RadialGrid::log_spaced(c.radial.r_min, c.radial.r_max, c.radial.per_decade, rho.breakpoints());
  auto sol = radial_solve(rho, c.params, grid);
  write_radial_solution_csv((out / "radial.csv").string(), sol);

  // |u'| against log10 r, the blow-up plot for singular data
  std::ofstream pf(out / "gradient_profile.csv");
  pf << "log10_r,abs_uprime,one_minus_abs_uprime\n" << std::setprecision(17);
  for (std::size_t i = 0; i < sol.grid.size(); ++i) {
    double g = std::abs(sol.uprime[i]);
    pf << std::log10(sol.grid.r[i]) << ',' << g << ',' << 1.0 - g << '\n';
  }

  double inf_v = kInf;
  for (std::size_t i = 0; i < sol.grid.size(); ++i)
    if (sol.v[i] > 0.0) inf_v = std::min(inf_v, sol.v[i]);
  auto m = asymptotic_margin(sol);
  nlohmann::json d{{"density", rho.describe()},
                   {"nodes", sol.grid.size()},
                   {"degenerate_nodes", sol.degenerate.size()},
                   {"abs_uprime_at_r_min", std::abs(sol.uprime.front())},
                   {"inf_v_positive_nodes", std::isfinite(inf_v) ? inf_v : 1.0},
                   {"u_origin", sol.u.front()},
                   {"asymptotic_margin", m.value},
                   {"asymptotic_margin_holds", m.holds},
                   {"rho_in_Lq_loc", rho.in_Lp_loc(c.params.q, c.params.N)}};
  write_json(out / "radial.json", {{"config", c.to_json()}, {"diagnostics", d}});
  std::cout << "radial: " << sol.grid.size() << " nodes, |u'(r_min)| = " << std::abs(sol.uprime.front())
            << ", degenerate nodes: " << sol.degenerate.size() << '\n';
  return kOk;
}

int solve_grid(const RunConfig& c, const fs::path& out) {
  if (c.params.N != 3) throw ConfigError(c.source, 0, "[params] N", "grid solver is three-dimensional");
  auto rho_r = c.density.build(3);
  double L = c.grid.half_width;
  if (L == 0.0) L = 4.0 * (rho_r.kind == DensityKind::Zero ? 1.0 : rho_r.support_radius());
  auto g = CartesianGrid::box(L, c.grid.nodes);
  auto rho = sample_radial(g, rho_r);
  SolverOptions o;
  o.tol = c.grid.tol;
  o.max_iter = c.grid.max_iter;
  std::optional<RadialSolution> oracle;
  if (c.grid.boundary == "oracle" || rho_r.kind != DensityKind::Zero) oracle = radial_solve(rho_r, c.params);
  if (c.grid.boundary == "oracle") o.boundary = oracle_boundary(g, *oracle);
  auto sol = minimize_energy(rho, o);
  write_grid_solution(out.string(), sol);
  nlohmann::json j{{"config", c.to_json()}, {"half_width", L}, {"diagnostics", sol.diagnostics()}};
  if (oracle && sol.converged) {
    auto cmp = compare_with_oracle(sol, *oracle);
    j["oracle"] = {{"grad_err", cmp.grad_err}, {"energy_rel", cmp.energy_rel},
                   {"energy_grid", cmp.energy_grid}, {"energy_oracle", cmp.energy_oracle},
                   {"boundary", c.grid.boundary}};
  }
  write_json(out / "grid_run.json", j);
  std::cout << "grid: " << g.n << "^3 nodes, energy " << sol.energy << ", residual " << sol.residual
            << ", max |grad u| " << sol.max_grad << (sol.converged ? "" : " (NOT converged: " + sol.message + ")")
            << '\n';
  return sol.converged ? kOk : kFail;
}

void print(const std::vector<EstimateReport>& rs) {
  for (const auto& r : rs)
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  lhs=" << r.lhs << " rhs=" << r.rhs << "  ("
              << r.instance << ")\n";
}

int verify(const RunConfig& c, const std::string& suite, const fs::path& out) {
  if (!is_suite(suite)) throw ConfigError("--suite", 0, "suite", "unknown suite '" + suite + "'");
  auto res = run_suite(suite, c);
  write_reports(out.string(), "reports", res.reports);
  if (!res.instances.empty()) write_reports(out.string(), "instances", res.instances);
  print(res.reports);
  bool ok = res.all_pass();
  std::cout << (ok ? "all reports pass" : "some reports FAIL") << '\n';
  return ok ? kOk : kFail;
}

int sweep(const RunConfig& c, const fs::path& out) {
  std::vector<EstimateReport> all;
  for (const char* s : {"theorem1", "moser"}) {
    auto r = run_suite(s, c);
    all.insert(all.end(), r.instances.begin(), r.instances.end());
  }
  write_reports(out.string(), "sweep", all);
  int passed = 0;
  for (const auto& r : all) passed += r.pass;
  std::cout << "sweep: " << passed << "/" << all.size() << " instances pass\n";
  return passed == int(all.size()) ? kOk : kFail;
}

int pipeline(const RunConfig& c, const fs::path& out) {
  if (c.params.N != 3) throw ConfigError(c.source, 0, "[params] N", "pipeline is three-dimensional");
  const auto& ps = c.pipeline;
  auto g = CartesianGrid::box(ps.half_width, ps.nodes);
  auto rho = sample_radial(g, RadialDensity::bump(ps.amplitude, ps.radius));
  PipelineOptions o;
  o.n_list = ps.n_list;
  o.Rbar = ps.Rbar;
  o.window = ps.window;
  auto r = run_pipeline(rho, c.params, c.constants, o);
  write_json(out / "pipeline.json", r.to_json());
  r.write_csv((out / "pipeline.csv").string());
  for (const auto& st : r.stages)
    std::cout << "n=" << st.n << " sup|u|=" << st.sup_u << " theta=" << st.theta << " w2q=" << st.w2q
              << " err=" << st.err_inf << '\n';
  if (!r.complete) std::cout << "pipeline aborted: " << r.error << '\n';
  bool ok = r.complete && r.summary.all();
  std::cout << (ok ? "all pipeline checks pass" : "some pipeline checks FAIL") << '\n';
  return ok ? kOk : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spacelike prescribed mean curvature graphs: solvers and estimate checks"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  std::string config, out_dir = "out", suite = "all";
  std::uint64_t seed = 0;
  int workers = 0;
  auto* o_seed = app.add_option("--seed", seed, "64-bit RNG seed (overrides [run] seed)");
  auto* o_work = app.add_option("--workers", workers, "worker threads (overrides [run] workers)")
                     ->check(CLI::PositiveNumber);
  app.add_option("--config", config, "key-value config file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--suite", suite, "verify suite: identities|gronwall|theorem1|moser|pipeline|all");
  auto* c_rad = app.add_subcommand("solve-radial", "exact radial solution and |u'| profile");
  auto* c_grid = app.add_subcommand("solve-grid", "3-D grid minimizer of the energy");
  auto* c_ver = app.add_subcommand("verify", "run a check suite, write JSONL/CSV reports");
  auto* c_swp = app.add_subcommand("sweep", "per-instance records of the randomized sweeps");
  auto* c_pip = app.add_subcommand("pipeline", "mollification pipeline with per-stage records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  RunConfig cfg;
  try {
    if (!config.empty()) cfg = RunConfig::load(config);
    if (*o_seed) cfg.seed = seed;
    if (*o_work) cfg.workers = workers;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }

  fs::path out(out_dir);
  try {
    fs::create_directories(out);
    if (c_rad->parsed()) return solve_radial(cfg, out);
    if (c_grid->parsed()) return solve_grid(cfg, out);
    if (c_ver->parsed()) return verify(cfg, suite, out);
    if (c_swp->parsed()) return sweep(cfg, out);
    if (c_pip->parsed()) return pipeline(cfg, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kFail;
}
