#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/tools/minima.hpp>

#include "pmc/estimate_engine.hpp"

namespace pmc {

void EstimateReport::finish(double tolerance) {
  tol = tolerance;
  slack = lhs - rhs;
  pass = std::isfinite(slack) && slack >= -tol;
}

nlohmann::json EstimateReport::to_json() const {
  return {{"name", name},   {"instance", instance}, {"lhs", lhs},
          {"rhs", rhs},     {"slack", slack},       {"tol", tol},
          {"pass", pass},   {"constants", constants}, {"extra", extra}};
}

double v_origin(const RadialSolution& sol) {
  const auto& rho = sol.rho;
  if (rho.kind != DensityKind::Power || rho.exponent < 1.0) return 1.0;
  if (rho.exponent > 1.0) return 0.0;
  double w0 = rho.amplitude / (sol.N() - 1.0);
  return 1.0 / std::sqrt(1.0 + w0 * w0);
}

namespace {

std::vector<double> breaks_below(const RadialDensity& rho, double r) {
  std::vector<double> b;
  for (double x : rho.breakpoints())
    if (x > 0 && x < r) b.push_back(x);
  return b;
}

void reject_degenerate(const RadialSolution& sol, double r, const char* what) {
  for (auto i : sol.degenerate)
    if (sol.grid.r[i] <= r)
      throw std::invalid_argument(std::string(what) + ": degenerate nodes (nu infinite) inside the ball");
}

}  // namespace

EstimateReport theorem1_gap(const RadialSolution& sol, double R, const DerivedConstants& c,
                            double tol) {
  const int N = sol.N();
  const double q = sol.params.q, beta = 2.0 * N / q, g = c.gamma;
  const double w = ball_volume(N), sig = sphere_area(N);
  auto ball = lorentz_ball(sol, R);
  if (!ball.bounded)
    throw std::runtime_error("theorem1: K_R is unbounded (the bounded-ball lemma does not apply)");
  auto half = lorentz_ball(sol, 0.5 * R);
  reject_degenerate(sol, ball.r_edge, "theorem1");

  EstimateReport rep;
  rep.name = "theorem1";
  std::ostringstream id;
  id << sol.rho.describe() << " N=" << N << " q=" << q << " R=" << R;
  rep.instance = id.str();
  rep.lhs = w * std::pow(v_origin(sol), g);

  auto br = breaks_below(sol.rho, ball.r_edge);
  double t1 = R == 0 ? 0.0
                     : std::pow(R, -N) * sig *
                           integrate([&](double r) {
                             return std::pow(sol.v_at(r), g + 1) * std::pow(r, N - 1);
                           }, 0.0, ball.r_edge, br, 1e-12);
  auto hessian_sq = [&](double r) {
    double up = sol.uprime_at(r), upp = sol.upp_at(r), vp = sol.vprime_at(r);
    return upp * upp + (N - 1) * (up / r) * (up / r) + vp * vp;
  };
  double t2 = c.theorem1_c() * std::pow(R, 2.0 - N) * sig *
              integrate([&](double r) {
                return std::pow(sol.v_at(r), g - 1) * hessian_sq(r) * std::pow(r, N - 1);
              }, 0.0, half.r_edge, breaks_below(sol.rho, half.r_edge), 1e-12);

  double rq = sol.rho.lp_norm(q, N, ball.r_edge);
  double a = 3.0 * std::pow(w, -1.0 / q) * rq * rq / (2.0 * q * (2.0 - beta));
  double b = rq / (2.0 * q * (1.0 - 0.5 * beta));
  auto Phi = [&](double sg) { return std::pow(w, 1.0 / q) + a * sg * sg + b * sg; };
  double sg_max = std::pow(R, 1.0 - 0.5 * beta), jac = 1.0 / (1.0 - 0.5 * beta);
  double I1 = jac * integrate([&](double sg) { return sg * std::pow(Phi(sg), q - 2); }, 0.0, sg_max);
  double I2 = jac * integrate([&](double sg) { return std::pow(Phi(sg), q - 1); }, 0.0, sg_max);
  double t3 = 1.5 * rq * rq * I1, t4 = 0.5 * rq * I2;
  rep.rhs = t1 + t2 - t3 - t4;
  rep.finish(tol);
  rep.constants = c.to_json();
  rep.extra = {{"volume_term", t1}, {"hessian_term", t2}, {"rho_sq_term", t3},
               {"rho_term", t4},    {"rho_q", rq},        {"r_edge", ball.r_edge}};
  return rep;
}

GlobalBound global_gradient_bound(const GlobalNorms& n, const ParamSet& p,
                                  const DerivedConstants& c) {
  const int N = p.N;
  const double q = p.q, w = ball_volume(N), g = c.gamma;
  GlobalBound out;
  bool small = n.grad_l2 <= 1.0;
  bool m1 = p.m < 1.0 + 1e-12;
  out.branch = m1 ? (small ? "m=1, |grad u|_2<=1" : "m=1, |grad u|_2>1") : "m>1";
  out.chain_c = chain_constant(p, small);
  double e = N * q / (q - N);
  double A = out.chain_c * std::pow(n.rho_m, chain_exponent(p, small)) * std::pow(n.rho_q, e);
  if (!(A > 0.0)) {
    out.value = 1.0;
    out.k_star = 0.0;
    return out;
  }
  double lA = std::log(A / w);
  // bound(k) with x = log k; log1p keeps the saturated regime finite
  auto f = [&](double x) {
    double t = lA - e * x;
    double l1p = t > 700 ? t : std::log1p(std::exp(t));
    return std::exp(-(g + 1) * l1p) - P_poly(std::exp(x), q, N);
  };
  double x0 = lA / e;
  double lo = std::min(x0, 0.0) - 40.0, hi = std::max(x0, 0.0) + 10.0;
  const int M = 2000;
  int best = 0;
  double fbest = -kInf;
  for (int i = 0; i <= M; ++i) {
    double x = lo + (hi - lo) * i / M;
    double fx = f(x);
    if (fx > fbest) {
      fbest = fx;
      best = i;
    }
  }
  double xa = lo + (hi - lo) * std::max(best - 1, 0) / M;
  double xb = lo + (hi - lo) * std::min(best + 1, M) / M;
  auto r = boost::math::tools::brent_find_minima([&](double x) { return -f(x); }, xa, xb, 52);
  double x = -r.second >= fbest ? r.first : lo + (hi - lo) * best / M;
  out.value = std::max(-r.second, fbest);
  out.k_star = std::exp(x);
  return out;
}

double local_gradient_bound(double rho_m, double rho_q_local, double R, const ParamSet& p,
                            const DerivedConstants& c, bool small_energy) {
  const int N = p.N;
  double w = ball_volume(N);
  double A = chain_constant(p, small_energy) * std::pow(R, -N) *
             std::pow(rho_m, chain_exponent(p, small_energy));
  return std::pow(w / (w + A), c.gamma + 1) -
         P_poly(rho_q_local * std::pow(R, (p.q - N) / p.q), p.q, N);
}

EstimateReport haarala_check(const RadialSolution& sol, double R, double q,
                             const DerivedConstants& c) {
  const int N = sol.N();
  reject_degenerate(sol, R, "haarala");
  double w = ball_volume(N), sig = sphere_area(N);
  double vol = w * std::pow(R, N);
  double sup_nu = 1.0 / std::max(v_origin(sol), 1e-300);
  for (std::size_t i = 0; i < sol.grid.size() && sol.grid.r[i] <= 0.5 * R; ++i)
    sup_nu = std::max(sup_nu, sol.nu[i]);
  sup_nu = std::max(sup_nu, sol.nu_at(0.5 * R));
  auto br = breaks_below(sol.rho, R);
  double mean_nu = sig / vol *
                   integrate([&](double r) { return std::pow(sol.nu_at(r), q) * std::pow(r, N - 1); },
                             0.0, R, br, 1e-12);
  double mean_rho = std::pow(sol.rho.lp_norm(q, N, R), q) / vol;
  double ex = N / (q * (q - N));
  double base = (std::pow(mean_nu, ex) + std::pow(R, N / (q - N)) * std::pow(mean_rho, ex)) *
                std::pow(mean_nu, 1.0 / q);
  double cc = c.haarala_c ? *c.haarala_c : haarala_constant(N, q);
  EstimateReport rep;
  rep.name = "moser_sup";
  std::ostringstream id;
  id << sol.rho.describe() << " N=" << N << " q=" << q << " R=" << R;
  rep.instance = id.str();
  // inequality sup nu <= c base, reported as rhs - lhs >= 0
  rep.lhs = cc * base;
  rep.rhs = sup_nu;
  rep.finish(1e-9 * cc * base);
  rep.constants = {{"c", cc}, {"assembled", !c.haarala_c}};
  rep.extra = {{"sup_nu", sup_nu}, {"mean_nu_q", mean_nu}, {"mean_rho_q", mean_rho},
               {"fitted_c", sup_nu / base}};
  return rep;
}

EstimateReport nu_excess_check(const RadialSolution& sol, double nu0, double q) {
  if (!(nu0 > 1.0)) throw std::invalid_argument("nu0: must exceed 1");
  const int N = sol.N();
  const auto& r = sol.grid.r;
  if (!sol.degenerate.empty()) throw std::invalid_argument("nu_excess: degenerate nodes present");
  if (sol.nu.back() >= nu0)
    throw std::invalid_argument("nu_excess: (nu - nu0)_+ reaches the end of the grid");
  // sign changes of nu - nu0 between nodes become quadrature breakpoints
  std::vector<double> br = sol.rho.breakpoints();
  double r_end = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    bool a = sol.nu[i] > nu0, b = sol.nu[i + 1] > nu0;
    if (a != b) {
      br.push_back(r[i]);
      br.push_back(r[i + 1]);
    }
    if (a || b) r_end = r[i + 1];
  }
  double I = 0.0;
  if (r_end > 0.0)
    I = sphere_area(N) * integrate([&](double x) {
          double e = std::max(sol.nu_at(x) - nu0, 0.0);
          return std::pow(e, q) * std::pow(x, N - 1);
        }, 0.0, r_end, br, 1e-12);
  double u_inf = 0.0;
  for (double x : sol.u) u_inf = std::max(u_inf, std::abs(x));
  u_inf += r[0] * std::abs(sol.uprime[0]);  // |u(0) - u(r_1)| <= r_1 max|u'| near 0
  double gam = 1.0 - 1.0 / (nu0 * nu0);
  double cst = std::sqrt(6.0 * q) / gam;
  EstimateReport rep;
  rep.name = "nu_excess";
  std::ostringstream id;
  id << sol.rho.describe() << " N=" << N << " q=" << q << " nu0=" << nu0;
  rep.instance = id.str();
  rep.lhs = cst * u_inf * sol.rho.lp_norm(q, N);
  rep.rhs = std::pow(I, 1.0 / q);
  rep.finish(1e-10);
  rep.constants = {{"c", cst}};
  rep.extra = {{"u_inf", u_inf}, {"excess_q", rep.rhs}};
  return rep;
}

namespace {

// fraction of the sphere |y| = r lying in B_t(x), |x| = d > 0
double cap_fraction(double r, double d, double t, int N) {
  // 1 - c and 1 + c in factored form; the plain quotient cancels for small t
  double omc = (t - r + d) * (t + r - d) / (2.0 * r * d);
  double opc = (r + d - t) * (r + d + t) / (2.0 * r * d);
  if (omc <= 0.0) return 0.0;
  if (opc <= 0.0) return 1.0;
  double half = 0.5 * boost::math::ibeta(0.5 * (N - 1), 0.5, std::min(1.0, omc * opc));
  return omc <= 1.0 ? half : 1.0 - half;
}

double abs_mass(const RadialDensity& rho, double r, int N) {
  if (r <= 0.0) return 0.0;
  if (rho.kind != DensityKind::Tabulated) return std::abs(rho.mass(r, N));
  return integrate([&](double s) { return std::abs(rho(s)) * std::pow(s, N - 1); }, 0.0, r,
                   rho.breakpoints(), 1e-12);
}

}  // namespace

RieszValue riesz_potential(const RadialDensity& rho, int N, double d, double r, double alpha,
                           double q) {
  if (alpha >= 1.0 - N / q)
    throw DivergenceError("riesz_potential: alpha >= 1 - N/q, the bound integral diverges");
  if (!(r > 0.0)) throw std::invalid_argument("riesz_potential: r must be positive");
  const double sig = sphere_area(N), w = ball_volume(N);
  RieszValue out;
  double e = 1.0 - alpha - N / q;
  out.bound = std::pow(w, (q - 1.0) / q) * rho.lp_norm(q, N) * std::pow(r, e) / e;
  if (rho.kind == DensityKind::Zero || rho.amplitude == 0.0) return out;

  // int_{B_t(x)} |rho| / t^N, finite as t -> 0
  auto inner = [&](double t) {
    double full = sig * abs_mass(rho, std::max(t - d, 0.0), N);
    double part = 0.0;
    if (d > 0.0) {
      double a = std::abs(t - d), b = t + d;
      part = sig * integrate([&](double s) {
               return std::abs(rho(s)) * std::pow(s, N - 1) * cap_fraction(s, d, t, N);
             }, a, b, rho.breakpoints(), 1e-11);
    }
    return (full + part) / std::pow(t, N);
  };
  // t = r w^p flattens the t^{-alpha - a} behaviour at the origin
  double lead = d > 0.0 ? 0.0 : rho.leading_power();
  double p = 1.0 / std::max(1.0 - alpha - lead, 0.05);
  std::vector<double> tb;
  for (double x : {d, std::abs(d - rho.support_radius()), d + rho.support_radius()})
    if (x > 0.0 && x < r) tb.push_back(std::pow(x / r, 1.0 / p));
  out.value = integrate([&](double s) {
                double t = r * std::pow(s, p);
                if (!(t > 0.0)) return 0.0;
                return std::pow(t, -alpha) * inner(t) * r * p * std::pow(s, p - 1.0);
              }, 0.0, 1.0, tb, 1e-10);
  return out;
}

double exterior_delta(const ParamSet& p, const DerivedConstants& c, double rho_m, double Rbar) {
  const int N = p.N;
  double w = ball_volume(N);
  double ex = 2.0 * (c.gamma + 1.0) / c.gamma;
  auto ratio = [&](bool small) {
    double A = chain_constant(p, small) * std::pow(Rbar, -N) *
               std::pow(rho_m, chain_exponent(p, small));
    return std::pow(w / (w + A), ex);
  };
  double r = ratio(true);
  if (p.m < 1.0 + 1e-12) r = std::min(r, ratio(false));
  return std::sqrt(std::max(0.0, 1.0 - r));
}

double nu_bar(const ParamSet& p, const DerivedConstants& c, double nu0, double sup_u, double rho_q,
              double R) {
  const int N = p.N;
  const double q = p.q, w = ball_volume(N);
  double c9 = std::sqrt(6.0 * q) / (1.0 - 1.0 / (nu0 * nu0)) * sup_u;
  // a global L^q norm over one ball bounds every local mean
  double mean_rho = std::pow(rho_q, q) / (w * std::pow(R, N));
  double phi = std::pow(2.0, (q - 1.0) / q) * (c9 * std::pow(mean_rho, 1.0 / q) + nu0);
  double c10 = c.haarala_c ? *c.haarala_c : haarala_constant(N, q);
  double ex = N / (q * (q - N));
  return c10 * (std::pow(phi, N / (q - N)) + std::pow(R, N / (q - N)) * std::pow(mean_rho, ex)) *
         phi;
}

}  // namespace pmc
