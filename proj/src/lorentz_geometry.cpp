#include "pmc/lorentz_geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

namespace pmc {

double lorentz_dot(const std::vector<double>& x, const std::vector<double>& y) {
  std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) s += x[i] * y[i];
  return s - x[n - 1] * y[n - 1];
}

double Jet2::grad_sq() const {
  double s = 0.0;
  for (double g : grad) s += g * g;
  return s;
}

double Jet2::v() const {
  double s = grad_sq();
  return std::sqrt((1.0 - s));
}

std::vector<double> Jet2::nu_vec() const {
  double vv = v();
  std::vector<double> n(N + 1);
  for (int i = 0; i < N; ++i) n[i] = grad[i] / vv;
  n[N] = 1.0 / vv;
  return n;
}

void Jet2::validate() const {
  if (int(grad.size()) != N || int(hess.size()) != N * N)
    throw std::invalid_argument("jet: size mismatch");
  if (!(grad_sq() < 1.0)) throw std::invalid_argument("jet: |grad| must be < 1");
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < i; ++j)
      if (h(i, j) != h(j, i)) throw std::invalid_argument("jet: Hessian not symmetric");
}

Jet2 random_jet(std::mt19937_64& rng, int N, double grad_max, bool with_third) {
  Jet2 J;
  J.N = N;
  J.grad.resize(N);
  // direction uniform on the sphere, modulus uniform in [0, grad_max]
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& g : J.grad) {
      g = uniform(rng, -1.0, 1.0);
      norm += g * g;
    }
  } while (norm < 1e-6 || norm > 1.0);
  norm = std::sqrt(norm);
  double mod = uniform(rng, 0.0, grad_max);
  for (auto& g : J.grad) g *= mod / norm;
  J.hess.assign(N * N, 0.0);
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) J.hess[i * N + j] = J.hess[j * N + i] = uniform(rng, -1.0, 1.0);
  if (with_third) {
    J.third.assign(N * N * N, 0.0);
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j)
        for (int k = j; k < N; ++k) {
          double t = uniform(rng, -1.0, 1.0);
          int p[3] = {i, j, k};
          std::sort(p, p + 3);
          do {
            J.third[(p[0] * N + p[1]) * N + p[2]] = t;
          } while (std::next_permutation(p, p + 3));
        }
  }
  J.rho = mean_curvature(J);
  return J;
}

SecondFormSq second_form_sq(const Jet2& J) {
  const int N = J.N;
  double v = J.v();
  std::vector<double> nu(N);
  for (int i = 0; i < N; ++i) nu[i] = J.grad[i] / v;
  auto ginv = [&](int i, int j) { return (i == j ? 1.0 : 0.0) + nu[i] * nu[j]; };
  SecondFormSq out;
  double s = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l) s += ginv(i, j) * ginv(k, l) * J.h(i, k) * J.h(j, l);
  out.direct = s / (v * v);
  double d2 = 0.0;
  for (double x : J.hess) d2 += x * x;
  auto gv = grad_v(J);
  double gv2 = 0.0, dot = 0.0;
  for (int i = 0; i < N; ++i) {
    gv2 += gv[i] * gv[i];
    dot += J.grad[i] * gv[i];
  }
  out.decomposed = (d2 + 2.0 * gv2 + dot * dot / (v * v)) / (v * v);
  return out;
}

double mean_curvature(const Jet2& J) {
  const int N = J.N;
  double v = J.v();
  double s = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      s += ((i == j ? 1.0 : 0.0) + J.grad[i] * J.grad[j] / (v * v)) * J.h(i, j);
  return -s / v;
}

std::vector<double> grad_v(const Jet2& J) {
  const int N = J.N;
  double v = J.v();
  std::vector<double> g(N, 0.0);
  for (int j = 0; j < N; ++j) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += J.grad[i] * J.h(i, j);
    g[j] = -s / v;
  }
  return g;
}

std::vector<double> hess_v(const Jet2& J) {
  if (J.third.empty()) throw std::invalid_argument("hess_v needs third derivatives");
  const int N = J.N;
  double v = J.v();
  auto gv = grad_v(J);
  std::vector<double> H(N * N, 0.0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double s = 0.0;
      for (int k = 0; k < N; ++k) s += J.h(k, j) * J.h(k, i) + J.grad[k] * J.t(k, i, j);
      H[i * N + j] = -s / v - gv[i] * gv[j] / v;
    }
  return H;
}

std::vector<double> grad_mean_curvature(const Jet2& J) {
  if (J.third.empty()) throw std::invalid_argument("grad_mean_curvature needs third derivatives");
  const int N = J.N;
  double v = J.v();
  auto gv = grad_v(J);
  double T = 0.0, Q = 0.0;
  for (int i = 0; i < N; ++i) {
    T += J.h(i, i);
    for (int j = 0; j < N; ++j) Q += J.grad[i] * J.grad[j] * J.h(i, j);
  }
  std::vector<double> dH(N);
  for (int k = 0; k < N; ++k) {
    double dT = 0.0, dQ = 0.0;
    for (int i = 0; i < N; ++i) {
      dT += J.t(i, i, k);
      for (int j = 0; j < N; ++j)
        dQ += 2.0 * J.h(i, k) * J.grad[j] * J.h(i, j) + J.grad[i] * J.grad[j] * J.t(i, j, k);
    }
    dH[k] = -dT / v + T * gv[k] / (v * v) - dQ / (v * v * v) + 3.0 * Q * gv[k] / std::pow(v, 4);
  }
  return dH;
}

double laplace_beltrami(const Jet2& J, const std::vector<double>& df,
                        const std::vector<double>& d2f) {
  const int N = J.N;
  double v = J.v();
  double H = mean_curvature(J);
  double s = 0.0, t = 0.0;
  for (int i = 0; i < N; ++i) {
    double nui = J.grad[i] / v;
    t += nui * df[i];
    for (int j = 0; j < N; ++j)
      s += ((i == j ? 1.0 : 0.0) + nui * J.grad[j] / v) * d2f[i * N + j];
  }
  return s - H * t;
}

double delta_time(const Jet2& J, const std::vector<double>& dg) {
  double v = J.v();
  double s = 0.0;
  for (int i = 0; i < J.N; ++i) s += J.grad[i] / v * dg[i];
  return s / v;
}

double laplace_beltrami_fd(const ScalarFn& u, const ScalarFn& f, const std::vector<double>& x,
                           double h) {
  const int N = int(x.size());
  auto d = [&](const ScalarFn& F, std::vector<double> y, int i) {
    y[i] += h;
    double p = F(y);
    y[i] -= 2 * h;
    return (p - F(y)) / (2 * h);
  };
  // sqrt(det g) g^{ij} d_j f at y, with g assembled and inverted numerically
  auto flux = [&](const std::vector<double>& y, int i) {
    Eigen::MatrixXd g(N, N);
    std::vector<double> du(N), df(N);
    for (int a = 0; a < N; ++a) {
      du[a] = d(u, y, a);
      df[a] = d(f, y, a);
    }
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) g(a, b) = (a == b ? 1.0 : 0.0) - du[a] * du[b];
    Eigen::MatrixXd gi = g.inverse();
    double s = 0.0;
    for (int b = 0; b < N; ++b) s += gi(i, b) * df[b];
    return std::sqrt(g.determinant()) * s;
  };
  double div = 0.0;
  for (int i = 0; i < N; ++i) {
    std::vector<double> y = x;
    y[i] += h;
    double p = flux(y, i);
    y[i] -= 2 * h;
    div += (p - flux(y, i)) / (2 * h);
  }
  Eigen::MatrixXd g(N, N);
  std::vector<double> du(N);
  for (int a = 0; a < N; ++a) du[a] = d(u, x, a);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) g(a, b) = (a == b ? 1.0 : 0.0) - du[a] * du[b];
  return div / std::sqrt(g.determinant());
}

double delta_l_norm_sq(const std::vector<double>& xm, double um, const std::vector<double>& grad) {
  double g2 = 0.0, xg = 0.0, x2 = 0.0;
  for (std::size_t i = 0; i < xm.size(); ++i) {
    g2 += grad[i] * grad[i];
    xg += grad[i] * xm[i];
    x2 += xm[i] * xm[i];
  }
  double v = std::sqrt(1.0 - g2);
  double nx = (xg - um) / v;
  double l2 = x2 - um * um;
  return 1.0 + nx * nx / l2;
}

namespace {

double trilinear(const ScalarField& f, const Vec3& x) {
  const auto& g = f.grid;
  int c[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    double s = (x[a] - g.lo) / g.h;
    int i = std::clamp(int(std::floor(s)), 0, g.n - 2);
    c[a] = i;
    t[a] = std::clamp(s - i, 0.0, 1.0);
  }
  double out = 0.0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        double w = (dx ? t[0] : 1 - t[0]) * (dy ? t[1] : 1 - t[1]) * (dz ? t[2] : 1 - t[2]);
        if (w != 0.0) out += w * f.at(c[0] + dx, c[1] + dy, c[2] + dz);
      }
  return out;
}

}  // namespace

LorentzBallData lorentz_ball(const ScalarField& u, const Vec3& x0, double R) {
  const auto& g = u.grid;
  LorentzBallData out;
  out.center = x0;
  out.R = R;
  out.l = ScalarField(g);
  out.mask.assign(g.size(), 0);
  double u0 = trilinear(u, x0);
  double uinf = lq_norm(u, nullptr, kInf);
  out.enclosing_radius = std::sqrt(R * R + 4.0 * uinf * uinf);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        double dx = g.coord(i) - x0[0], dy = g.coord(j) - x0[1], dz = g.coord(k) - x0[2];
        double e2 = dx * dx + dy * dy + dz * dz;
        double du = u.at(i, j, k) - u0;
        double l = std::sqrt(std::max(0.0, e2 - du * du));
        std::size_t id = g.idx(i, j, k);
        out.l.v[id] = l;
        if (l < R) {
          out.mask[id] = 1;
          if (std::sqrt(e2) > out.enclosing_radius * (1 + 1e-12)) out.inclusion_holds = false;
        }
      }
  out.bounded = std::isfinite(uinf) && out.inclusion_holds;
  return out;
}

RadialLorentz::RadialLorentz(const RadialSolution& s) : sol(&s) {
  u0 = s.u_at(0.0);
  const auto& R = s.grid.r;
  r_max = R.back();
  double prev = 0.0;
  for (std::size_t i = 0; i < R.size(); ++i) {
    double li = l(R[i]);
    if (!(li > prev)) {
      r_max = i ? R[i - 1] : 0.0;
      break;
    }
    prev = li;
  }
}

double RadialLorentz::l(double r) const {
  double U = sol->u_at(r) - u0;
  return std::sqrt(std::max(0.0, (r - U) * (r + U)));
}

double RadialLorentz::r_of(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= s_max()) throw std::domain_error("Lorentz ball radius beyond the monotone range");
  auto f = [&](double r) { return l(r) - s; };
  boost::uintmax_t it = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  auto res = boost::math::tools::toms748_solve(f, 0.0, r_max, -s, s_max() - s, tol, it);
  return 0.5 * (res.first + res.second);
}

double RadialLorentz::nu_dot_X(double r) const {
  double U = sol->u_at(r) - u0;
  double w = sol->w_at(r);
  double up = w / std::sqrt(1.0 + w * w);
  double v = 1.0 / std::sqrt(1.0 + w * w);
  return (r * up - U) / v;
}

LorentzBallRadial lorentz_ball(const RadialSolution& sol, double R) {
  RadialLorentz L(sol);
  LorentzBallRadial out;
  out.R = R;
  double uinf = std::abs(L.u0);
  for (double x : sol.u) uinf = std::max(uinf, std::abs(x));
  out.enclosing_radius = std::sqrt(R * R + 4.0 * uinf * uinf);
  if (R >= L.s_max()) {
    out.bounded = false;
    out.r_edge = kInf;
    return out;
  }
  out.r_edge = L.r_of(R);
  out.bounded = out.r_edge <= out.enclosing_radius;
  return out;
}

double laplace_beltrami_radial(const RadialSolution& sol, double r, double fp, double fpp) {
  double w = sol.w_at(r);
  double a = 1.0 + w * w;  // 1/v^2
  double up = w / std::sqrt(a);
  double v = 1.0 / std::sqrt(a);
  return fpp * a + (sol.N() - 1) * fp / r - sol.rho(r) * up * fp / v;
}

CoareaResult coarea_check(const RadialSolution& sol, const std::function<double(double)>& h,
                          double s_lo, double s_hi, int samples) {
  RadialLorentz L(sol);
  CoareaResult out;
  out.s_lo = s_lo;
  out.s_hi = s_hi;
  double smax = L.s_max();
  if (s_hi * 1.01 >= smax) {
    out.range_restricted = true;
    out.s_hi = s_hi = smax / 1.02;
  }
  const int N = sol.N();
  const double sig = sphere_area(N);
  auto breaks = sol.rho.breakpoints();
  auto integrand = [&](double r) { return h(r) * sol.v_at(r) * std::pow(r, N - 1); };
  for (int k = 0; k < samples; ++k) {
    double s = samples == 1 ? s_lo : s_lo + (s_hi - s_lo) * k / (samples - 1);
    double d = 1e-3 * s;
    double r0 = L.r_of(s);
    auto F = [&](double ss) {  // F(ss) - F(s)
      double r1 = L.r_of(ss);
      return r1 >= r0 ? integrate(integrand, r0, r1, breaks) : -integrate(integrand, r1, r0, breaks);
    };
    double lhs = sig * (-F(s + 2 * d) + 8 * F(s + d) - 8 * F(s - d) + F(s - 2 * d)) / (12 * d);
    double up = sol.uprime_at(r0);
    double U = sol.u_at(r0) - L.u0;
    double dl2 = delta_l_norm_sq({r0}, U, {up});
    double rhs = h(r0) * sig * std::pow(r0, N - 1) / std::sqrt(dl2);
    out.max_residual = std::max(out.max_residual, std::abs(lhs - rhs) / std::abs(rhs));
  }
  return out;
}

MonotonicityTerms monotonicity_terms(const RadialSolution& sol, double gamma, double s) {
  RadialLorentz L(sol);
  if (s * 1.01 >= L.s_max()) throw std::domain_error("s outside the monotone range of l");
  const int N = sol.N();
  const double sig = sphere_area(N);
  auto breaks = sol.rho.breakpoints();
  auto f = [&](double r) { return std::pow(sol.v_at(r), gamma); };
  auto lap_f = [&](double r) {
    double v = sol.v_at(r), vp = sol.vprime_at(r), vpp = sol.vpp_at(r);
    double fp = gamma * std::pow(v, gamma - 1) * vp;
    double fpp = gamma * std::pow(v, gamma - 1) * vpp +
                 gamma * (gamma - 1) * std::pow(v, gamma - 2) * vp * vp;
    return laplace_beltrami_radial(sol, r, fp, fpp);
  };
  auto dA = [&](double r) { return sol.v_at(r) * std::pow(r, N - 1); };
  double d = 1e-3 * s;
  double r0 = L.r_of(s);
  auto seg = [&](const std::function<double(double)>& g, double a, double b) {
    return b >= a ? integrate(g, a, b, breaks) : -integrate(g, b, a, breaks);
  };
  auto fdA = [&](double r) { return f(r) * dA(r); };
  double I0 = sig * integrate(fdA, 0.0, r0, breaks);
  auto Phi = [&](double ss) { return std::pow(ss, -N) * (I0 + sig * seg(fdA, r0, L.r_of(ss))); };
  MonotonicityTerms T;
  T.lhs = (-Phi(s + 2 * d) + 8 * Phi(s + d) - 8 * Phi(s - d) + Phi(s - 2 * d)) / (12 * d);
  auto bulk = [&](double r) {
    double l = L.l(r);
    return (0.5 * (s * s - l * l) * lap_f(r) - f(r) * sol.rho(r) * L.nu_dot_X(r)) * dA(r);
  };
  T.bulk = std::pow(s, -N - 1) * sig * integrate(bulk, 0.0, r0, breaks);
  auto g = [&](double r) {
    double l = L.l(r);
    double nx = L.nu_dot_X(r);
    return f(r) * std::pow(l, -N - 2) * nx * nx * dA(r);
  };
  auto G = [&](double ss) { return sig * seg(g, r0, L.r_of(ss)); };
  T.flux = (-G(s + 2 * d) + 8 * G(s + d) - 8 * G(s - d) + G(s - 2 * d)) / (12 * d);
  double scale = std::abs(T.lhs) + std::abs(T.bulk) + std::abs(T.flux);
  T.residual = scale > 0 ? std::abs(T.lhs - (T.bulk - T.flux)) / scale : 0.0;
  return T;
}

double monotonicity_residual(const RadialSolution& sol, double gamma, double s) {
  return monotonicity_terms(sol, gamma, s).residual;
}

}  // namespace pmc
