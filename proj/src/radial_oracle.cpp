#include "pmc/radial_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>

namespace pmc {

namespace {

template <class F>
double gl15(F f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss<double, 15>::integrate(f, a, b);
}

double bump_profile(double x) {
  if (x >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

}  // namespace

RadialDensity RadialDensity::zero() { return {}; }

RadialDensity RadialDensity::power(double amplitude, double exponent, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("density: radius must be positive");
  if (!(exponent >= 0.0)) throw std::invalid_argument("density: exponent must be >= 0");
  RadialDensity d;
  d.kind = DensityKind::Power;
  d.amplitude = amplitude;
  d.exponent = exponent;
  d.radius = radius;
  return d;
}

RadialDensity RadialDensity::constant(double rho0, double radius) {
  return power(rho0, 0.0, radius);
}

RadialDensity RadialDensity::bump(double amplitude, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("density: radius must be positive");
  RadialDensity d;
  d.kind = DensityKind::Bump;
  d.amplitude = amplitude;
  d.radius = radius;
  return d;
}

RadialDensity RadialDensity::tabulated(std::vector<double> r, std::vector<double> v) {
  if (r.size() < 2 || r.size() != v.size())
    throw std::invalid_argument("density: tabulated data needs >= 2 matching nodes");
  for (std::size_t i = 1; i < r.size(); ++i)
    if (!(r[i] > r[i - 1])) throw std::invalid_argument("density: tabulated r not increasing");
  if (r[0] < 0.0) throw std::invalid_argument("density: tabulated r must be >= 0");
  RadialDensity d;
  d.kind = DensityKind::Tabulated;
  d.tab_r = std::move(r);
  d.tab_v = std::move(v);
  d.radius = d.tab_r.back();
  return d;
}

double RadialDensity::operator()(double r) const {
  switch (kind) {
    case DensityKind::Zero: return 0.0;
    case DensityKind::Power:
      if (r > radius) return 0.0;
      return exponent == 0.0 ? amplitude : amplitude * std::pow(r, -exponent);
    case DensityKind::Bump: return amplitude * bump_profile(r / radius);
    case DensityKind::Tabulated: {
      if (r > tab_r.back()) return 0.0;
      if (r <= tab_r.front()) return tab_v.front();
      auto it = std::upper_bound(tab_r.begin(), tab_r.end(), r);
      std::size_t i = std::size_t(it - tab_r.begin()) - 1;
      if (i + 1 >= tab_r.size()) return tab_v.back();
      double t = (r - tab_r[i]) / (tab_r[i + 1] - tab_r[i]);
      return (1 - t) * tab_v[i] + t * tab_v[i + 1];
    }
  }
  return 0.0;
}

double RadialDensity::deriv(double r) const {
  switch (kind) {
    case DensityKind::Zero: return 0.0;
    case DensityKind::Power:
      if (r > radius || exponent == 0.0) return 0.0;
      return -exponent * amplitude * std::pow(r, -exponent - 1.0);
    case DensityKind::Bump: {
      double x = r / radius;
      if (x >= 1.0) return 0.0;
      double d = 1.0 - x * x;
      return amplitude * bump_profile(x) * (-2.0 * x / (d * d)) / radius;
    }
    case DensityKind::Tabulated: {
      if (r > tab_r.back() || r < tab_r.front()) return 0.0;
      auto it = std::upper_bound(tab_r.begin(), tab_r.end(), r);
      std::size_t i = std::min(std::size_t(it - tab_r.begin()), tab_r.size() - 1);
      if (i == 0) i = 1;
      return (tab_v[i] - tab_v[i - 1]) / (tab_r[i] - tab_r[i - 1]);
    }
  }
  return 0.0;
}

double RadialDensity::support_radius() const {
  return kind == DensityKind::Zero ? 0.0 : radius;
}

std::vector<double> RadialDensity::breakpoints() const {
  switch (kind) {
    case DensityKind::Zero: return {};
    case DensityKind::Tabulated: return tab_r;
    default: return {radius};
  }
}

bool RadialDensity::in_Lp_loc(double p, int N) const {
  if (kind != DensityKind::Power || amplitude == 0.0) return true;
  if (std::isinf(p)) return exponent == 0.0;
  return p * exponent < N;
}

double RadialDensity::mass(double r, int N) const {
  if (r <= 0.0) return 0.0;
  switch (kind) {
    case DensityKind::Zero: return 0.0;
    case DensityKind::Power: {
      if (amplitude == 0.0) return 0.0;
      if (exponent >= N) throw DivergenceError("flux diverges: r^{-a} with a >= N is not integrable at 0");
      double rr = std::min(r, radius);
      return amplitude * std::pow(rr, N - exponent) / (N - exponent);
    }
    case DensityKind::Bump: {
      double rr = std::min(r, radius);
      return integrate([&](double s) { return std::pow(s, N - 1) * (*this)(s); }, 0.0, rr);
    }
    case DensityKind::Tabulated: {
      double total = 0.0;
      double a = 0.0;
      std::vector<double> pts;
      for (double t : tab_r)
        if (t > 0.0 && t < r) pts.push_back(t);
      pts.push_back(std::min(r, tab_r.back()));
      for (double b : pts) {
        total += gl15([&](double s) { return std::pow(s, N - 1) * (*this)(s); }, a, b);
        a = b;
      }
      return total;
    }
  }
  return 0.0;
}

double RadialDensity::lp_norm(double p, int N, double ball) const {
  if (kind == DensityKind::Zero) return 0.0;
  double R = std::min(ball, support_radius());
  if (!(R > 0.0)) return 0.0;
  if (kind == DensityKind::Power) {
    if (amplitude == 0.0) return 0.0;
    if (std::isinf(p)) return exponent > 0.0 ? kInf : std::abs(amplitude);
    if (p * exponent >= N) return kInf;
    double a = p * exponent;
    return std::pow(sphere_area(N) * std::pow(std::abs(amplitude), p) * std::pow(R, N - a) / (N - a),
                    1.0 / p);
  }
  if (std::isinf(p)) {
    if (kind == DensityKind::Bump) return std::abs(amplitude);
    double s = 0.0;
    for (std::size_t i = 0; i < tab_r.size(); ++i)
      if (tab_r[i] <= R) s = std::max(s, std::abs(tab_v[i]));
    return std::max(s, std::abs((*this)(R)));
  }
  auto g = [&](double s) { return std::pow(std::abs((*this)(s)), p) * std::pow(s, N - 1); };
  double I = integrate(g, 0.0, R, breakpoints());
  return std::pow(sphere_area(N) * I, 1.0 / p);
}

RadialDensity RadialDensity::rescaled(double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("rescale: t must be positive");
  RadialDensity d = *this;
  switch (kind) {
    case DensityKind::Zero: break;
    case DensityKind::Power:
      d.amplitude = amplitude * std::pow(t, exponent - 1.0);
      d.radius = radius * t;
      break;
    case DensityKind::Bump:
      d.amplitude = amplitude / t;
      d.radius = radius * t;
      break;
    case DensityKind::Tabulated:
      for (auto& r : d.tab_r) r *= t;
      for (auto& v : d.tab_v) v /= t;
      d.radius = d.tab_r.back();
      break;
  }
  return d;
}

std::string RadialDensity::describe() const {
  char buf[160];
  switch (kind) {
    case DensityKind::Zero: return "zero";
    case DensityKind::Power:
      std::snprintf(buf, sizeof buf, "power(amp=%.6g,a=%.6g,R=%.6g)", amplitude, exponent, radius);
      return buf;
    case DensityKind::Bump:
      std::snprintf(buf, sizeof buf, "bump(amp=%.6g,R=%.6g)", amplitude, radius);
      return buf;
    case DensityKind::Tabulated:
      std::snprintf(buf, sizeof buf, "tabulated(n=%zu,R=%.6g)", tab_r.size(), radius);
      return buf;
  }
  return "?";
}

double radial_flux(const RadialDensity& rho, int N, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("radial_flux: r must be positive");
  return -std::pow(r, 1 - N) * rho.mass(r, N);
}

// ---------------------------------------------------------------------------

double RadialSolution::mass_at(double r) const {
  if (!analytic) throw std::logic_error("profile record has no datum");
  if (r <= 0.0) return 0.0;
  const int n = N();
  if (rho.kind == DensityKind::Zero) return 0.0;
  if (rho.kind == DensityKind::Power) return rho.mass(r, n);
  auto f = [&](double s) { return std::pow(s, n - 1) * rho(s); };
  const auto& R = grid.r;
  if (r <= R[0]) return gl15(f, 0.0, r);
  if (r >= R.back()) return mass.back() + integrate(f, R.back(), r, rho.breakpoints());
  std::size_t i = grid.segment(r);
  return mass[i] + gl15(f, R[i], r);
}

double RadialSolution::w_at(double r) const { return -std::pow(r, 1 - N()) * mass_at(r); }

double RadialSolution::uprime_at(double r) const {
  double w = w_at(r);
  return w / std::sqrt(1.0 + w * w);
}

double RadialSolution::v_at(double r) const {
  double w = w_at(r);
  return 1.0 / std::sqrt(1.0 + w * w);
}

double RadialSolution::nu_at(double r) const {
  double w = w_at(r);
  return std::sqrt(1.0 + w * w);
}

double RadialSolution::wprime_at(double r) const {
  return -(N() - 1) * w_at(r) / r - rho(r);
}

double RadialSolution::wpp_at(double r) const {
  double w = w_at(r);
  double wp = -(N() - 1) * w / r - rho(r);
  return -(N() - 1) * (wp / r - w / (r * r)) - rho.deriv(r);
}

double RadialSolution::vpp_at(double r) const {
  double w = w_at(r);
  double wp = -(N() - 1) * w / r - rho(r);
  double wpp = -(N() - 1) * (wp / r - w / (r * r)) - rho.deriv(r);
  double a = 1.0 + w * w;
  return -(wp * wp + w * wpp) / std::pow(a, 1.5) + 3.0 * w * w * wp * wp / std::pow(a, 2.5);
}

double RadialSolution::upp_at(double r) const {
  double w = w_at(r);
  return wprime_at(r) / std::pow(1.0 + w * w, 1.5);
}

double RadialSolution::vprime_at(double r) const {
  double w = w_at(r);
  return -w * wprime_at(r) / std::pow(1.0 + w * w, 1.5);
}

double RadialSolution::u_at(double r) const {
  if (!analytic) throw std::logic_error("profile record has no datum");
  const auto& R = grid.r;
  auto up = [&](double s) { return uprime_at(s); };
  if (r <= R[0]) return u[0] - gl15(up, std::max(r, 0.0), R[0]);
  if (r >= R.back()) return u.back() + integrate(up, R.back(), r);
  std::size_t i = grid.segment(r);
  return u[i] + gl15(up, R[i], r);
}

namespace {

// -int_{r_M}^inf u'
double tail_value(const RadialSolution& s) {
  const int N = s.N();
  double rM = s.grid.r.back();
  if (s.rho.kind == DensityKind::Zero) return 0.0;
  if (s.rho.support_radius() <= rM) {
    // w = -M r^{1-N}; u' = w - w^3/2 + O(w^5)
    double M = s.mass.back();
    double w = M * std::pow(rM, 1 - N);
    if (std::abs(w) < 1e-4)
      return M * std::pow(rM, 2 - N) / (N - 2.0) -
             M * M * M * std::pow(rM, 4 - 3 * N) / (2.0 * (3 * N - 4));
  }
  boost::math::quadrature::exp_sinh<double> es;
  return -es.integrate([&](double x) { return s.uprime_at(x); }, rM,
                       std::numeric_limits<double>::infinity());
}

}  // namespace

RadialGrid default_radial_grid(const RadialDensity& rho, int per_decade) {
  std::vector<double> extra = rho.breakpoints();
  extra.push_back(1.0);
  return RadialGrid::log_spaced(1e-6, 1e3, per_decade, extra);
}

RadialSolution radial_solve(const RadialDensity& rho, const ParamSet& params) {
  return radial_solve(rho, params, default_radial_grid(rho));
}

RadialSolution radial_solve(const RadialDensity& rho, const ParamSet& params,
                            const RadialGrid& grid) {
  grid.validate();
  RadialSolution s;
  s.grid = grid;
  s.params = params;
  s.rho = rho;
  const auto& R = grid.r;
  const std::size_t M = R.size();
  const int N = params.N;
  s.mass.assign(M, 0.0);
  bool divergent = false;
  if (rho.kind == DensityKind::Power) {
    try {
      for (std::size_t i = 0; i < M; ++i) s.mass[i] = rho.mass(R[i], N);
    } catch (const DivergenceError&) {
      divergent = true;
    }
  } else if (rho.kind != DensityKind::Zero) {
    auto f = [&](double x) { return std::pow(x, N - 1) * rho(x); };
    s.mass[0] = gl15(f, 0.0, R[0]);
    for (std::size_t i = 0; i + 1 < M; ++i) s.mass[i + 1] = s.mass[i] + gl15(f, R[i], R[i + 1]);
  }
  s.u.assign(M, 0.0);
  s.uprime.assign(M, 0.0);
  s.v.assign(M, 1.0);
  s.nu.assign(M, 1.0);
  s.w.assign(M, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    double w = divergent ? -kInf : -std::pow(R[i], 1 - N) * s.mass[i];
    s.w[i] = w;
    if (!std::isfinite(w) || std::abs(w) > 1e300) {
      s.degenerate.push_back(i);
      s.uprime[i] = w > 0 ? 1.0 : -1.0;
      s.v[i] = 0.0;
      s.nu[i] = kInf;
      continue;
    }
    double root = std::sqrt(1.0 + w * w);
    s.uprime[i] = w / root;
    s.v[i] = 1.0 / root;
    s.nu[i] = root;
  }
  if (divergent) {
    for (std::size_t i = 0; i + 1 < M; ++i) s.u[i] = R.back() - R[i];
    return s;
  }
  // u(inf) = 0: tail from r_M outward, then integrate inward segment by segment
  s.u[M - 1] = tail_value(s);
  auto up = [&](double x) { return s.uprime_at(x); };
  for (std::size_t i = M - 1; i-- > 0;) s.u[i] = s.u[i + 1] - gl15(up, R[i], R[i + 1]);
  return s;
}

RadialSolution from_profile(const RadialGrid& grid, const std::vector<double>& uprime,
                            const ParamSet& params) {
  if (uprime.size() != grid.size()) throw std::invalid_argument("profile size mismatch");
  RadialSolution s;
  s.grid = grid;
  s.params = params;
  s.analytic = false;
  const std::size_t M = grid.size();
  s.uprime = uprime;
  s.u.assign(M, 0.0);
  s.v.resize(M);
  s.nu.resize(M);
  s.w.resize(M);
  s.mass.assign(M, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    double p = uprime[i];
    double v = std::sqrt(std::max(0.0, (1.0 - p) * (1.0 + p)));
    s.v[i] = v;
    s.nu[i] = v > 0 ? 1.0 / v : kInf;
    s.w[i] = v > 0 ? p / v : (p > 0 ? kInf : -kInf);
    if (!(v > 0)) s.degenerate.push_back(i);
  }
  for (std::size_t i = M - 1; i-- > 0;)
    s.u[i] = s.u[i + 1] - 0.5 * (grid.r[i + 1] - grid.r[i]) * (uprime[i] + uprime[i + 1]);
  return s;
}

RadialSolution rescale(const RadialSolution& sol, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("rescale: t must be positive");
  RadialSolution s = sol;
  for (auto& r : s.grid.r) r *= t;
  for (auto& u : s.u) u *= t;
  double f = std::pow(t, sol.N() - 1);
  for (auto& m : s.mass) m *= f;
  s.rho = sol.rho.rescaled(t);
  return s;
}

AsymptoticMargin asymptotic_margin(const RadialSolution& sol) {
  const auto& R = sol.grid.r;
  const std::size_t M = R.size();
  AsymptoticMargin out;
  out.value = kInf;
  std::size_t arg = M / 2;
  for (std::size_t i = M / 2; i < M; ++i) {
    double val = sol.v[i] * sol.v[i] * R[i] * R[i];
    if (val < out.value) {
      out.value = val;
      arg = i;
    }
  }
  out.r_at_min = R[arg];
  out.holds = arg + 1 < M;
  return out;
}

void write_radial_solution_csv(const std::string& path, const RadialSolution& sol) {
  write_radial_csv(path, {"r", "u", "uprime", "v", "nu", "w"},
                   {&sol.grid.r, &sol.u, &sol.uprime, &sol.v, &sol.nu, &sol.w});
}

}  // namespace pmc
