#include "pmc/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "pmc/lorentz_geometry.hpp"
#include "pmc/mollify_pipeline.hpp"
#include "pmc/radial_oracle.hpp"
#include "pmc/variational_solver.hpp"

namespace pmc {

namespace {

EstimateReport make(const std::string& name, const std::string& instance, double allowed,
                    double measured, double tol = 0.0) {
  EstimateReport r;
  r.name = name;
  r.instance = instance;
  r.lhs = allowed;
  r.rhs = measured;
  r.finish(tol);
  return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Graphs for the Laplace-Beltrami order check, with exact first and second derivatives.
struct AnalyticGraph {
  std::string name;
  ScalarFn u;
  std::function<std::vector<double>(const std::vector<double>&)> du, d2u;
};

std::vector<AnalyticGraph> analytic_graphs() {
  std::vector<AnalyticGraph> g;
  g.push_back({"quadratic",
               [](const std::vector<double>& x) { return 0.3 * x[0] + 0.2 * x[1] * x[1] - 0.1 * x[2]; },
               [](const std::vector<double>& x) { return std::vector<double>{0.3, 0.4 * x[1], -0.1}; },
               [](const std::vector<double>&) { return std::vector<double>{0, 0, 0, 0, 0.4, 0, 0, 0, 0}; }});
  g.push_back({"trigonometric",
               [](const std::vector<double>& x) { return 0.4 * std::sin(x[0]) * std::cos(x[1]) + 0.2 * x[2]; },
               [](const std::vector<double>& x) {
                 return std::vector<double>{0.4 * std::cos(x[0]) * std::cos(x[1]),
                                            -0.4 * std::sin(x[0]) * std::sin(x[1]), 0.2};
               },
               [](const std::vector<double>& x) {
                 double a = -0.4 * std::sin(x[0]) * std::cos(x[1]);
                 double b = -0.4 * std::cos(x[0]) * std::sin(x[1]);
                 return std::vector<double>{a, b, 0, b, a, 0, 0, 0, 0};
               }});
  g.push_back({"hyperboloid",
               [](const std::vector<double>& x) {
                 return 0.5 * std::sqrt(1 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
               },
               [](const std::vector<double>& x) {
                 double s = std::sqrt(1 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                 return std::vector<double>{0.5 * x[0] / s, 0.5 * x[1] / s, 0.5 * x[2] / s};
               },
               [](const std::vector<double>& x) {
                 double s = std::sqrt(1 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                 std::vector<double> H(9);
                 for (int i = 0; i < 3; ++i)
                   for (int j = 0; j < 3; ++j) H[i * 3 + j] = 0.5 * ((i == j) / s - x[i] * x[j] / (s * s * s));
                 return H;
               }});
  return g;
}

// ------------------------------------------------------------- identities

void identities(const RunConfig& cfg, SuiteOutput& out) {
  auto rng = suite_rng(cfg.seed, "identities");
  const int W = cfg.workers;

  {  // S profile against quadrature of its defining integral
    struct Case { int N; double t, l; };
    std::vector<Case> cs;
    for (int n = 0; n < cfg.sweep.sprofile_cases; ++n) {
      double t = uniform(rng, 0.2, 3.0);
      cs.push_back({3 + n % 3, t, t * uniform(rng, 0.05, 0.99)});
    }
    auto err = parallel_map<double>(W, cs.size(), [&](std::size_t i) {
      const auto& c = cs[i];
      double o = integrate([&](double s) { return 0.5 * std::pow(s, -c.N - 1) * (s * s - c.l * c.l); }, c.l, c.t);
      return rel(S_profile(c.t, c.l, c.N), o);
    });
    double worst = err.empty() ? 0.0 : *std::max_element(err.begin(), err.end());
    auto r = make("s_profile_quadrature", std::to_string(cs.size()) + " triples, N in {3,4,5}", 1e-8, worst);
    out.reports.push_back(r);
  }

  {  // second fundamental form and Gauss map
    double sf = 0.0, gm = 0.0;
    for (int N : {3, 4, 5})
      for (int n = 0; n < cfg.sweep.geometry_jets; ++n) {
        auto J = random_jet(rng, N, 0.9, false);
        auto s = second_form_sq(J);
        sf = std::max(sf, std::abs(s.direct - s.decomposed) / (1.0 + s.direct));
        auto nu = J.nu_vec();
        gm = std::max(gm, std::abs(lorentz_dot(nu, nu) + 1.0));
      }
    std::string inst = std::to_string(cfg.sweep.geometry_jets) + " jets per N in {3,4,5}, |grad u| <= 0.9";
    out.reports.push_back(make("second_form_agreement", inst, 1e-12, sf));
    out.reports.push_back(make("gauss_map_normalization", inst, 1e-14, gm));
  }

  {  // Laplace-Beltrami against the metric-Laplacian oracle, ratio of errors at h and h/2
    ScalarFn f = [](const std::vector<double>& x) { return std::exp(0.3 * x[0]) * std::cos(x[1] - x[2]); };
    auto df = [](const std::vector<double>& x) {
      double e = std::exp(0.3 * x[0]), c = std::cos(x[1] - x[2]), s = std::sin(x[1] - x[2]);
      return std::vector<double>{0.3 * e * c, -e * s, e * s};
    };
    auto d2f = [](const std::vector<double>& x) {
      double e = std::exp(0.3 * x[0]), c = std::cos(x[1] - x[2]), s = std::sin(x[1] - x[2]);
      return std::vector<double>{0.09 * e * c, -0.3 * e * s, 0.3 * e * s, -0.3 * e * s, -e * c,
                                 e * c,        0.3 * e * s,  e * c,       -e * c};
    };
    std::vector<double> x{0.3, -0.2, 0.5};
    double dev = 0.0;
    nlohmann::json ratios = nlohmann::json::object();
    for (const auto& G : analytic_graphs()) {
      Jet2 J;
      J.N = 3;
      J.grad = G.du(x);
      J.hess = G.d2u(x);
      double exact = laplace_beltrami(J, df(x), d2f(x));
      double e1 = std::abs(laplace_beltrami_fd(G.u, f, x, 2e-2) - exact);
      double e2 = std::abs(laplace_beltrami_fd(G.u, f, x, 1e-2) - exact);
      ratios[G.name] = e1 / e2;
      dev = std::max(dev, std::abs(e1 / e2 - 4.0));
    }
    auto r = make("laplace_beltrami_order", "three analytic graphs, h = 2e-2 and 1e-2", 0.4, dev);
    r.extra["error_ratio"] = ratios;
    out.reports.push_back(r);
  }

  {  // pointwise inequality for v^gamma
    const double gmax = std::sqrt(1.0 - 1e-4);
    double id_worst = 0.0;
    for (int N : {3, 4, 5}) {
      auto [g, C] = mono_constants(N);
      if (N == cfg.params.N) {
        g = cfg.constants.gamma;
        C = cfg.constants.c_mono;
      }
      double worst = kInf;
      for (int n = 0; n < cfg.sweep.jets_per_N; ++n) {
        auto J = random_jet(rng, N, gmax, true);
        auto r = jet_inequality_check(J, g, C);
        worst = std::min(worst, r.slack);
        if (r.identity_checked) id_worst = std::max(id_worst, r.identity_residual);
      }
      if (cfg.sweep.jets_per_N == 0) worst = 0.0;
      auto r = make("jet_inequality_N" + std::to_string(N),
                    std::to_string(cfg.sweep.jets_per_N) + " jets, 1 - |grad u|^2 >= 1e-4", worst, 0.0);
      r.constants = {{"gamma", g}, {"c_mono", C}};
      out.reports.push_back(r);
    }
    out.reports.push_back(make("jet_identity_residual", "same jets, third derivatives", 1e-10, id_worst));
  }

  {  // monotonicity and coarea on smooth radial instances
    auto p = cfg.params;
    std::vector<RadialDensity> rhos{RadialDensity::bump(2.0, 1.0), RadialDensity::bump(4.0, 0.7),
                                    RadialDensity::bump(1.0, 1.5)};
    struct Res { double mono, coarea; };
    auto res = parallel_map<Res>(W, rhos.size(), [&](std::size_t i) {
      auto sol = radial_solve(rhos[i], p);
      double m = 0.0;
      for (double g : {p.gamma, 1.0 / 6.0})
        for (int k = 0; k <= 19; ++k) m = std::max(m, monotonicity_residual(sol, g, 0.1 + 0.1 * k));
      double gm = p.gamma;
      auto c = coarea_check(sol, [&](double r) { return std::pow(sol.v_at(r), gm); }, 0.1, 2.0);
      return Res{m, c.max_residual};
    });
    double m = 0.0, c = 0.0;
    for (const auto& r : res) {
      m = std::max(m, r.mono);
      c = std::max(c, r.coarea);
    }
    out.reports.push_back(make("monotonicity_residual", "3 bumps, s in [0.1, 2], gamma in {p.gamma, 1/6}", 1e-3, m));
    out.reports.push_back(make("coarea_residual", "3 bumps, h = v^gamma, s in [0.1, 2]", 1e-4, c));
  }

  {  // scaling: rescale round trip and invariance of the global certificate
    auto p = cfg.params;
    auto rho = RadialDensity::bump(1.5, 1.0);
    auto sol = radial_solve(rho, p);
    double rt = 0.0, cert = 0.0;
    GlobalNorms n0{rho.lp_norm(p.q, p.N), rho.lp_norm(p.m, p.N), 0.0};
    double b0 = global_gradient_bound(n0, p, cfg.constants).value;
    for (double t : {0.5, 2.0, 5.0}) {
      auto back = rescale(rescale(sol, t), 1.0 / t);
      for (std::size_t i = 0; i < sol.grid.size(); ++i) {
        rt = std::max(rt, std::abs(back.grid.r[i] - sol.grid.r[i]) / sol.grid.r[i]);
        rt = std::max(rt, std::abs(back.u[i] - sol.u[i]));
        rt = std::max(rt, std::abs(back.uprime[i] - sol.uprime[i]));
      }
      auto rt_rho = rho.rescaled(t);
      GlobalNorms nt{rt_rho.lp_norm(p.q, p.N), rt_rho.lp_norm(p.m, p.N), 0.0};
      cert = std::max(cert, rel(global_gradient_bound(nt, p, cfg.constants).value, b0));
    }
    out.reports.push_back(make("rescale_round_trip", "bump(1.5, 1), t in {0.5, 2, 5}", 1e-12, rt));
    auto r = make("certificate_scale_invariance", "bump(1.5, 1), t in {0.5, 2, 5}", 1e-10, cert);
    r.extra["certificate"] = b0;
    out.reports.push_back(r);
  }

  {  // truncated Riesz potential
    struct Case { RadialDensity rho; double q, alpha, dist, r; };
    std::vector<Case> cs;
    int diverge_expected = 0;
    for (int n = 0; n < cfg.sweep.riesz_instances; ++n) {
      auto rho = RadialDensity::power(uniform(rng, 0.1, 2.0), uniform(rng, 0.0, 0.7), uniform(rng, 0.3, 1.5));
      double q = uniform(rng, 3.5, 8.0);
      double u = uniform(rng, -0.5, 0.99);
      double dist = uniform(rng, 0.0, 1.0), r = uniform(rng, 0.1, 2.0);
      if (!rho.in_Lp_loc(q, 3)) continue;
      cs.push_back({rho, q, u * (1 - 3 / q), dist, r});
      cs.push_back({rho, q, (1 - 3 / q) * (1.0 + 0.2 * std::abs(u)), dist, r});
      ++diverge_expected;
    }
    struct Res { double excess; bool threw; };
    auto res = parallel_map<Res>(W, cs.size(), [&](std::size_t i) {
      const auto& c = cs[i];
      try {
        auto v = riesz_potential(c.rho, 3, c.dist, c.r, c.alpha, c.q);
        return Res{(v.value - v.bound) / std::max(v.bound, 1e-300), false};
      } catch (const DivergenceError&) {
        return Res{-kInf, true};
      }
    });
    double worst = -kInf;
    int missed = 0, spurious = 0;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      bool should = i % 2 == 1;
      if (should && !res[i].threw) ++missed;
      if (!should && res[i].threw) ++spurious;
      if (!should && !res[i].threw) worst = std::max(worst, res[i].excess);
    }
    if (!std::isfinite(worst)) worst = -1.0;
    auto r = make("riesz_value_below_bound", std::to_string(cs.size() / 2) + " radial power data, N = 3",
                  1e-9, worst);
    r.extra["spurious_divergence"] = spurious;
    if (spurious) r.pass = false;
    out.reports.push_back(r);
    auto d = make("riesz_divergence_raised", std::to_string(diverge_expected) + " cases with alpha >= 1 - N/q",
                  0.0, double(missed));
    out.reports.push_back(d);
  }
}

// --------------------------------------------------------------- gronwall

void gronwall(const RunConfig& cfg, SuiteOutput& out) {
  auto rng = suite_rng(cfg.seed, "gronwall");
  std::vector<GronwallParams> ps;
  for (int n = 0; n < cfg.sweep.gronwall_sets; ++n) {
    GronwallParams a;
    a.C0 = uniform(rng, 0.1, 3.0);
    a.C1 = uniform(rng, 0.0, 2.0);
    a.C2 = uniform(rng, 0.0, 2.0);
    a.q = uniform(rng, 2.5, 8.0);
    a.beta = uniform(rng, 0.1, 1.9);
    a.T = uniform(rng, 0.2, 1.5);
    ps.push_back(a);
  }
  auto eval = [&](const GronwallParams& a) {
    std::vector<double> t;
    for (int i = 0; i <= 64; ++i) t.push_back(a.T * i / 64.0);
    auto psi = gronwall_saturate(a, t);
    double above = -kInf, dev = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      double b = gronwall_bound(a, t[i]);
      above = std::max(above, (psi[i] - b) / b);
      dev = std::max(dev, std::abs(psi[i] - b) / b);
    }
    return std::pair{above, dev};
  };
  auto r1 = parallel_map<std::pair<double, double>>(cfg.workers, ps.size(), [&](std::size_t i) { return eval(ps[i]); });
  auto r0 = parallel_map<std::pair<double, double>>(cfg.workers, ps.size(), [&](std::size_t i) {
    auto a = ps[i];
    a.C1 = 0.0;
    return eval(a);
  });
  double above = -1.0, eq = 0.0;
  for (const auto& r : r1) above = std::max(above, r.first);
  for (const auto& r : r0) eq = std::max(eq, r.second);
  // the ODE solve carries ~1e-7 relative error, so the bound is checked at that level
  auto a = make("gronwall_saturated_below_bound",
                std::to_string(ps.size()) + " parameter sets, 65 times each", 1e-6, above);
  out.reports.push_back(a);
  out.reports.push_back(make("gronwall_equality_C1_zero", std::to_string(ps.size()) + " sets with C1 = 0",
                             1e-6, eq));
}

// --------------------------------------------------------------- theorem1

void theorem1(const RunConfig& cfg, SuiteOutput& out) {
  auto rng = suite_rng(cfg.seed, "theorem1");
  const auto& p = cfg.params;
  struct Case { RadialDensity rho; double R; };
  std::vector<Case> cs;
  const double amax = 0.9 * p.N / p.q;  // keeps rho in L^q_loc
  for (int n = 0; n < cfg.sweep.theorem1_instances; ++n) {
    double a = uniform(rng, 0.0, std::min(0.7, amax));
    double amp = uniform(rng, 0.1, 3.0);
    double rad = uniform(rng, 0.3, 1.5);
    cs.push_back({RadialDensity::power(amp, a, rad), std::array<double, 3>{0.5, 1.0, 2.0}[n % 3]});
  }
  auto reps = parallel_map<EstimateReport>(cfg.workers, cs.size(), [&](std::size_t i) {
    auto sol = radial_solve(cs[i].rho, p);
    return theorem1_gap(sol, cs[i].R, cfg.constants, 1e-6);
  });
  double worst = kInf;
  int passed = 0;
  for (auto& r : reps) {
    worst = std::min(worst, r.slack);
    passed += r.pass;
    out.instances.push_back(r);
  }
  if (reps.empty()) worst = 0.0;
  auto r = make("theorem1_sweep", std::to_string(passed) + "/" + std::to_string(reps.size()) +
                                      " instances pass, power data",
                worst, 0.0, 1e-6);
  r.constants = cfg.constants.to_json();
  out.reports.push_back(r);

  // q > N is sharp: the toy datum r^{-3/2} on the unit ball degenerates at the origin
  if (p.N == 3) {
    auto toy = radial_solve(RadialDensity::power(1.0, 1.5, 1.0), p);
    double g = std::abs(toy.uprime_at(1e-4));
    auto t = make("toy_gradient_degenerates", "power(1, 1.5, 1), |u'(1e-4)|", g, 0.99);
    t.extra["in_Lq_loc_for_q_gt_N"] = toy.rho.in_Lp_loc(p.N + 1e-9, p.N);
    out.reports.push_back(t);
  }

  // a = 0.1 lies in L^q_loc: the certificate bounds inf v^gamma from below
  {
    auto rho = RadialDensity::power(0.01, 0.1, 1.0);
    auto sol = radial_solve(rho, p);
    GlobalNorms n{rho.lp_norm(p.q, p.N), rho.lp_norm(p.m, p.N), 0.0};
    auto b = global_gradient_bound(n, p, cfg.constants);
    double inf_v = *std::min_element(sol.v.begin(), sol.v.end());
    auto c = make("power_certificate", "power(0.01, 0.1, 1), inf v^gamma vs certificate",
                  std::pow(inf_v, cfg.constants.gamma), b.value, 1e-6);
    c.constants = cfg.constants.to_json();
    c.extra = {{"inf_v", inf_v}, {"k_star", b.k_star}, {"branch", b.branch},
               {"in_Lq_loc", rho.in_Lp_loc(p.q, p.N)}};
    if (!rho.in_Lp_loc(p.q, p.N)) c.pass = false;
    out.reports.push_back(c);
  }
}

// ------------------------------------------------------------------ moser

void moser(const RunConfig& cfg, SuiteOutput& out) {
  auto rng = suite_rng(cfg.seed, "moser");
  double worst = 0.0;
  for (int n = 0; n < cfg.sweep.moser_cases; ++n) {
    int N = 3 + n % 4;
    double q = N + uniform(rng, 0.05, 10.0);
    auto s = moser_series(q, N);
    worst = std::max({worst, rel(s.sum1, s.target1), rel(s.sum2, s.target2)});
  }
  out.reports.push_back(make("moser_series_identities", std::to_string(cfg.sweep.moser_cases) +
                                                            " (N, q), N in {3..6}",
                             1e-12, worst));

  const auto& p = cfg.params;
  const double q = p.q;
  const double amax = 0.9 * p.N / q;
  struct Case { RadialDensity rho; double R; };
  std::vector<Case> hs;
  for (int n = 0; n < cfg.sweep.haarala_instances; ++n) {
    auto rho = RadialDensity::power(uniform(rng, 0.1, 3.0), uniform(rng, 0.0, std::min(0.6, amax)),
                                    uniform(rng, 0.3, 1.5));
    hs.push_back({rho, uniform(rng, 0.5, 3.0)});
  }
  auto hr = parallel_map<EstimateReport>(cfg.workers, hs.size(), [&](std::size_t i) {
    return haarala_check(radial_solve(hs[i].rho, p), hs[i].R, q, cfg.constants);
  });
  double hw = kInf, fitted = 0.0;
  int hp = 0;
  for (auto& r : hr) {
    hw = std::min(hw, r.slack + r.tol);
    hp += r.pass;
    fitted = std::max(fitted, r.extra["fitted_c"].get<double>());
    out.instances.push_back(r);
  }
  double cc = cfg.constants.haarala_c ? *cfg.constants.haarala_c : haarala_constant(p.N, q);
  auto h = make("moser_sup_sweep", std::to_string(hp) + "/" + std::to_string(hr.size()) + " instances pass",
                double(hp), double(hr.size()));
  h.extra["min_margin"] = hr.empty() ? 0.0 : hw;
  out.reports.push_back(h);
  auto f = make("moser_fitted_below_assembled", "max fitted constant over the sweep", cc, fitted);
  out.reports.push_back(f);

  struct NuCase { RadialDensity rho; double nu0; };
  std::vector<NuCase> ns;
  for (int n = 0; n < cfg.sweep.nu_instances; ++n) {
    auto rho = RadialDensity::power(uniform(rng, 0.5, 6.0), uniform(rng, 0.0, std::min(0.4, amax)),
                                    uniform(rng, 0.5, 1.5));
    ns.push_back({rho, uniform(rng, 1.05, 2.0)});
  }
  auto nr = parallel_map<EstimateReport>(cfg.workers, ns.size(), [&](std::size_t i) {
    return nu_excess_check(radial_solve(ns[i].rho, p), ns[i].nu0, q);
  });
  int np = 0, active = 0;
  for (auto& r : nr) {
    np += r.pass;
    active += r.rhs > 0.0;
    out.instances.push_back(r);
  }
  auto e = make("nu_excess_sweep", std::to_string(np) + "/" + std::to_string(nr.size()) + " instances pass",
                double(np), double(nr.size()));
  e.extra["nonzero_excess"] = active;
  out.reports.push_back(e);
}

// --------------------------------------------------------------- pipeline

void pipeline(const RunConfig& cfg, SuiteOutput& out) {
  const auto& ps = cfg.pipeline;
  auto g = CartesianGrid::box(ps.half_width, ps.nodes);
  auto rho = sample_radial(g, RadialDensity::bump(ps.amplitude, ps.radius));
  PipelineOptions o;
  o.n_list = ps.n_list;
  o.Rbar = ps.Rbar;
  o.window = ps.window;
  auto res = run_pipeline(rho, cfg.params, cfg.constants, o);
  std::ostringstream is;
  is << "bump(" << ps.amplitude << ", " << ps.radius << "), " << ps.nodes << " nodes, L = " << ps.half_width;
  const std::string inst = is.str();
  // quantitative reports; the summary flag has the last word
  auto add = [&](const std::string& name, double allowed, double measured, bool ok) -> EstimateReport& {
    auto r = make(name, inst, allowed, measured);
    r.pass = r.pass && ok && res.complete;
    out.reports.push_back(r);
    return out.reports.back();
  };
  const auto& s = res.summary;
  const bool any = !res.stages.empty();
  auto& c = add("pipeline_complete", 1.0, res.complete ? 1.0 : 2.0, res.complete);
  if (!res.complete) c.extra["error"] = res.error;
  double sup_gap = kInf, ext_gap = kInf, cmin = kInf;
  for (const auto& st : res.stages) {
    sup_gap = std::min(sup_gap, st.sup_bound - st.sup_u);
    if (st.exterior_cells > 0) ext_gap = std::min(ext_gap, st.delta_ext - st.exterior_grad);
    cmin = std::min(cmin, st.coeff_min);
  }
  add("pipeline_sup_bound", any ? sup_gap : 0.0, 0.0, s.sup_ok);
  auto& b = add("pipeline_exterior_gradient", std::isfinite(ext_gap) ? ext_gap : 0.0, 0.0, s.exterior_ok);
  b.extra["exterior_cells"] = s.exterior_cells;
  auto& t = add("pipeline_theta_below_one", 1.0, s.theta_star, s.theta_ok);
  t.extra["nu_measured"] = s.nu_measured;
  t.extra["nu_bar_finite"] = std::isfinite(s.nu_bar);
  add("pipeline_w2q_within_factor", 2.0, std::isfinite(s.w2q_ratio) ? s.w2q_ratio : 1e300, s.w2q_ok);
  add("pipeline_converges", 1e-3, any ? res.stages.back().err_inf : 1.0, s.converge_ok);
  add("pipeline_coefficients_elliptic", any ? cmin : 0.0, 0.0, s.coeff_ok);
  add("pipeline_lp_contraction", 1.0, s.contraction_ok ? 1.0 : 2.0, s.contraction_ok);
  auto& h = add("pipeline_holder_finite", 1.0, s.holder_ok ? 1.0 : 2.0, s.holder_ok);
  h.extra["alpha"] = res.holder.alpha;
  h.extra["sup_seminorm"] = res.holder.finite ? res.holder.sup() : -1.0;
}

}  // namespace

bool SuiteOutput::all_pass() const {
  for (const auto& r : reports)
    if (!r.pass) return false;
  return true;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> s{"identities", "gronwall", "theorem1", "moser", "pipeline"};
  return s;
}

bool is_suite(const std::string& name) {
  if (name == "all") return true;
  const auto& s = suite_names();
  return std::find(s.begin(), s.end(), name) != s.end();
}

std::mt19937_64 suite_rng(std::uint64_t seed, const std::string& suite) {
  std::uint32_t tag = 2166136261u;  // FNV-1a
  for (unsigned char ch : suite) tag = (tag ^ ch) * 16777619u;
  std::seed_seq ss{std::uint32_t(seed), std::uint32_t(seed >> 32), tag};
  return std::mt19937_64(ss);
}

SuiteOutput run_suite(const std::string& suite, const RunConfig& cfg) {
  if (!is_suite(suite)) throw std::invalid_argument("suite: unknown '" + suite + "'");
  SuiteOutput out;
  auto one = [&](const std::string& s) {
    std::size_t first = out.reports.size();
    if (s == "identities") identities(cfg, out);
    else if (s == "gronwall") gronwall(cfg, out);
    else if (s == "theorem1") theorem1(cfg, out);
    else if (s == "moser") moser(cfg, out);
    else pipeline(cfg, out);
    for (std::size_t i = first; i < out.reports.size(); ++i) out.reports[i].extra["suite"] = s;
  };
  if (suite == "all")
    for (const auto& s : suite_names()) one(s);
  else
    one(suite);
  return out;
}

void write_reports(const std::string& dir, const std::string& stem,
                   const std::vector<EstimateReport>& reports) {
  std::filesystem::create_directories(dir);
  auto base = std::filesystem::path(dir) / stem;
  std::ofstream js(base.string() + ".jsonl");
  std::ofstream cs(base.string() + ".csv");
  if (!js || !cs) throw std::runtime_error("cannot write reports under " + dir);
  cs << "name,instance,lhs,rhs,slack,tol,pass\n";
  cs << std::setprecision(17);
  for (const auto& r : reports) {
    js << r.to_json().dump() << '\n';
    std::string inst = r.instance;
    std::replace(inst.begin(), inst.end(), '"', '\'');
    cs << r.name << ",\"" << inst << "\"," << r.lhs << ',' << r.rhs << ',' << r.slack << ',' << r.tol
       << ',' << (r.pass ? 1 : 0) << '\n';
  }
}

}  // namespace pmc
