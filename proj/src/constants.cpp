#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include "pmc/estimate_engine.hpp"

namespace pmc {

void GronwallParams::validate() const {
  if (!(C0 > 0.0)) throw std::invalid_argument("C0: must be positive");
  if (!(C1 >= 0.0)) throw std::invalid_argument("C1: must be nonnegative");
  if (!(C2 >= 0.0)) throw std::invalid_argument("C2: must be nonnegative");
  if (!(q > 2.0)) throw std::invalid_argument("q: must exceed 2");
  if (!(beta > 0.0 && beta < 2.0)) throw std::invalid_argument("beta: must lie in (0, 2)");
  if (!(T > 0.0)) throw std::invalid_argument("T: must be positive");
}

double gronwall_bound(const GronwallParams& p, double t) {
  double b = p.beta;
  double base = std::pow(p.C0, 1.0 / p.q) +
                std::pow(p.C0, -1.0 / p.q) * p.C1 * std::pow(t, 2.0 - b) / (p.q * (2.0 - b)) +
                p.C2 * std::pow(t, 1.0 - 0.5 * b) / (p.q * (1.0 - 0.5 * b));
  return std::pow(base, p.q);
}

namespace {

// In sigma = t^{1-beta/2} both singular weights become polynomial:
//   dy/dsigma = [C1 sigma psi^{(q-2)/q} + C2 psi^{(q-1)/q}] / (1 - beta/2)
struct SaturatedRhs {
  GronwallParams p;
  void operator()(const std::array<double, 1>& y, std::array<double, 1>& dy, double sg) const {
    double psi = p.C0 + std::max(y[0], 0.0);
    dy[0] = (p.C1 * sg * std::pow(psi, (p.q - 2.0) / p.q) +
             p.C2 * std::pow(psi, (p.q - 1.0) / p.q)) /
            (1.0 - 0.5 * p.beta);
  }
};

}  // namespace

std::vector<double> gronwall_saturate(const GronwallParams& p, const std::vector<double>& times) {
  p.validate();
  namespace ode = boost::numeric::odeint;
  using State = std::array<double, 1>;
  auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>());
  SaturatedRhs rhs{p};
  State y{0.0};
  double sg = 0.0;
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    if (t < 0.0) throw std::invalid_argument("gronwall: negative time");
    double target = std::pow(t, 1.0 - 0.5 * p.beta);
    if (target < sg) throw std::invalid_argument("gronwall: times must be sorted");
    if (target > sg) {
      ode::integrate_adaptive(stepper, rhs, y, sg, target, std::min(1e-3, target - sg));
      sg = target;
    }
    out.push_back(p.C0 + y[0]);
  }
  return out;
}

std::function<double(double)> gronwall_saturate(const GronwallParams& p) {
  p.validate();
  return [p](double t) { return gronwall_saturate(p, std::vector<double>{t})[0]; };
}

double S_profile(double t, double l, int N) {
  if (!(l < t)) return 0.0;
  return std::pow(l, 2.0 - N) / (N * (N - 2.0)) + l * l * std::pow(t, -N) / (2.0 * N) -
         std::pow(t, 2.0 - N) / (2.0 * (N - 2.0));
}

double c_ball(int N) {
  auto f = [N](double tau) { return S_profile(1.0, tau, N); };
  auto r = boost::math::tools::brent_find_minima(f, 1e-6, 0.5, 52);
  return std::min(r.second, f(0.5));
}

std::pair<double, double> mono_constants(int N) { return {1.0 / (8.0 * N), 7.0 / (128.0 * N)}; }

DerivedConstants DerivedConstants::shipped(int N) {
  DerivedConstants c;
  c.N = N;
  auto [g, C] = mono_constants(N);
  c.gamma = g;
  c.c_mono = C;
  c.c_ball = pmc::c_ball(N);
  return c;
}

nlohmann::json DerivedConstants::to_json() const {
  nlohmann::json j{{"N", N}, {"gamma", gamma}, {"c_mono", c_mono}, {"c_ball", c_ball},
                   {"theorem1_c", theorem1_c()}};
  if (haarala_c) j["haarala_c"] = *haarala_c;
  return j;
}

JetCheck jet_inequality_check(const Jet2& J, double gamma, double C) {
  J.validate();
  const int N = J.N;
  double v = J.v();
  double A = 0.0, T = 0.0, B = 0.0;
  for (int i = 0; i < N; ++i) {
    T += J.h(i, i);
    for (int j = 0; j < N; ++j) A += J.h(i, j) * J.h(i, j);
  }
  for (int j = 0; j < N; ++j) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += J.grad[i] / v * J.h(i, j);
    B += s * s;
  }
  double rho = J.rho;
  double bracket = A - gamma * T * T + (1 - gamma) * v * rho * T + v * v * rho * rho +
                   (1 - gamma) * B;
  double vg2 = std::pow(v, gamma - 2.0);
  JetCheck out;
  // rhs - lhs = v^{gamma-2} [gamma bracket - C(A+B) + v^2 rho^2 / 4]; the time
  // derivative term is common to both sides
  out.slack = gamma * bracket - C * (A + B) + 0.25 * v * v * rho * rho;
  double lhs_core = -gamma * vg2 * bracket;
  double rhs_core = -C * vg2 * (A + B) + 0.25 * std::pow(v, gamma) * rho * rho;
  out.lhs = lhs_core;
  out.rhs = rhs_core;
  if (!J.third.empty()) {
    auto dv = grad_v(J);
    auto d2v = hess_v(J);
    std::vector<double> df(N), d2f(N * N);
    for (int i = 0; i < N; ++i) {
      df[i] = gamma * std::pow(v, gamma - 1) * dv[i];
      for (int j = 0; j < N; ++j)
        d2f[i * N + j] = gamma * std::pow(v, gamma - 1) * d2v[i * N + j] +
                         gamma * (gamma - 1) * vg2 * dv[i] * dv[j];
    }
    double lap = laplace_beltrami(J, df, d2f);
    auto drho = grad_mean_curvature(J);
    std::vector<double> dg(N);
    for (int i = 0; i < N; ++i)
      dg[i] = (gamma + 1) * std::pow(v, gamma) * dv[i] * rho + std::pow(v, gamma + 1) * drho[i];
    double dterm = gamma * delta_time(J, dg);
    double scale = std::abs(lap) + std::abs(lhs_core) + std::abs(dterm);
    out.identity_residual = scale > 0 ? std::abs(lap - (lhs_core + dterm)) / scale : 0.0;
    out.identity_checked = true;
    out.lhs = lap;
    out.rhs = rhs_core + dterm;
  }
  return out;
}

double P_poly(double k, double q, int N) {
  double w = ball_volume(N);
  double d = q - N;
  double t1 = 1.5 * std::pow(2.0, q - 4) * q * std::pow(w, -2.0 / q) / d * k * k;
  double t2 = std::pow(1.5, q - 1) * std::pow(2.0, q - 5) * q * std::pow(w, -2.0 + 2.0 / q) /
              (std::pow(d, q - 1) * (q - 1)) * std::pow(k, 2 * q - 2);
  double t3 = std::pow(2.0, q - 4) / w / std::pow(d, q - 1) * (1.5 + 1.0 / d) * std::pow(k, q);
  double t4 = std::pow(2.0, q - 3) * q * std::pow(w, -1.0 / q) / d * k;
  double t5 = std::pow(1.5, q - 1) * std::pow(2.0, q - 4) * q * std::pow(w, -2.0 + 1.0 / q) /
              (std::pow(d, q) * (2 * q - 1)) * std::pow(k, 2 * q - 1);
  return t1 + t2 + t3 + t4 + t5;
}

double sobolev_constant(int N, double k) {
  if (!(k > 1.0 && k < N)) throw std::invalid_argument("sobolev_constant: need 1 < k < N");
  double lg = std::lgamma(1.0 + 0.5 * N) + std::lgamma(double(N)) - std::lgamma(N / k) -
              std::lgamma(1.0 + N - N / k);
  return std::pow(kPi, -0.5) * std::pow(double(N), -1.0 / k) *
         std::pow((k - 1.0) / (N - k), 1.0 - 1.0 / k) * std::exp(lg / N);
}

double morrey_constant(int N, double s) {
  if (!(s > N)) throw std::invalid_argument("morrey_constant: need s > N");
  double w = ball_volume(N);
  double sp = s / (s - 1.0);
  // mean over B_1(x) plus the potential bound |phi(x) - phi_B| <= 2^N/(N w) int |x-y|^{1-N}|Dphi|
  double mean = std::pow(w, -1.0 / s);
  double pot = std::pow(2.0, N) / (N * w) * std::pow(N * w / (N - (N - 1) * sp), 1.0 / sp);
  return std::max(mean, pot);
}

double embedding_constant(int N, double m) {
  return sobolev_constant(N, m * N / ((N + 1) * m - N));
}

namespace {

bool is_m1(const ParamSet& p) { return p.m < 1.0 + 1e-12; }

void require_s_chain(const ParamSet& p) {
  // |grad phi|_k <= |grad phi|_2^{2/k} on the feasible set only for k >= 2
  if (p.s < 2.0 * p.N / (p.N - 2.0) - 1e-12)
    throw std::invalid_argument("s: the sup-norm chain needs s >= 2N/(N-2)");
}

double morrey_K(const ParamSet& p) {
  require_s_chain(p);
  double c1 = morrey_constant(p.N, p.s);
  double c2 = sobolev_constant(p.N, p.N * p.s / (p.N + p.s));
  return c1 * (c2 + 1.0);
}

}  // namespace

double chain_constant(const ParamSet& p, bool small_energy) {
  const int N = p.N;
  if (!is_m1(p)) {
    double m = p.m;
    double e = ((N + 1) * m - N) / (N - m);
    double mstar = N * m / (N - m);
    return std::pow(2.0, e) * std::pow(embedding_constant(N, m), mstar);
  }
  double K = morrey_K(p);
  double s = p.s;
  if (small_energy) {
    double c3 = std::pow(2.0 * K, s / (2.0 * (s - 1.0)));
    return K * std::pow(c3, 2.0 / s);
  }
  double c6 = std::pow(2.0 * K, N * s / (2.0 * (N * s - N - s)));
  return K * std::pow(c6, 2.0 * (N + s) / (N * s));
}

double chain_exponent(const ParamSet& p, bool small_energy) {
  const int N = p.N;
  if (!is_m1(p)) return N * p.m / (N - p.m);
  double s = p.s;
  return small_energy ? s / (s - 1.0) : N * s / (N * s - N - s);
}

double sup_bound(const ParamSet& p, double rho_m) {
  const int N = p.N;
  double s = p.s;
  if (rho_m <= 0.0) return 0.0;
  if (!is_m1(p)) {
    require_s_chain(p);
    double m = p.m;
    double c1 = morrey_constant(N, s);
    double c2 = sobolev_constant(N, N * s / (N + s));
    double base = 2.0 * embedding_constant(N, m) * rho_m;
    return c1 * (c2 * std::pow(base, m * (N + s) / ((N - m) * s)) +
                 std::pow(base, m * N / ((N - m) * s)));
  }
  double K = morrey_K(p);
  double c3 = std::pow(2.0 * K, s / (2.0 * (s - 1.0)));
  double c4 = K * std::pow(c3, 2.0 / s);
  double c6 = std::pow(2.0 * K, N * s / (2.0 * (N * s - N - s)));
  double c7 = K * std::pow(c6, 2.0 * (N + s) / (N * s));
  return std::max(c4 * std::pow(rho_m, 1.0 / (s - 1.0)),
                  c7 * std::pow(rho_m, (N + s) / (N * s - N - s)));
}

MoserSeries moser_series(double q, int N) {
  if (!(q > N && N >= 3)) throw std::invalid_argument("moser_series: need q > N >= 3");
  double a = N * (q - 2.0) / ((N - 2.0) * q);
  if (!(a > 1.0 + 1e-15)) throw std::invalid_argument("moser_series: ratio too close to 1");
  MoserSeries m;
  // sum_{j>=0} a^{-j} = a/(a-1); sum_{j>=1} j a^{-j} = a/(a-1)^2
  m.sum1 = 2.0 / (q - 2.0) * a / (a - 1.0);
  m.sum2 = 2.0 / (q - 2.0) * a / ((a - 1.0) * (a - 1.0));
  m.target1 = N / (q - N);
  m.target2 = q * N * (N - 2.0) / (2.0 * (q - N) * (q - N));
  return m;
}

double haarala_constant(int N, double q) {
  double w = ball_volume(N);
  double c0 = sobolev_constant(N, 2.0);
  // shrinking balls: |B_k|/|B_{k+1}| <= (3/2)^N, |B_{k+1}|^{2/N} <= w^{2/N} R^2
  double c1sq = 7.0 * std::pow(1.5, N) * std::pow(w, 2.0 / N) * c0 * c0;
  double S1 = N / (q - N);
  double S2 = q * N * (N - 2.0) / (2.0 * (q - N) * (q - N));
  double alpha = N * (q - 2.0) / ((N - 2.0) * q);
  // prod_k (4^k (p_k - 2)^2 g)^{1/(p_k-2)} with p_k - 2 = alpha^k (q-2)
  double g_coef = 16.0 * c1sq * std::pow(2.0, 2.0 * N / q);
  return std::pow(2.0 * alpha, S2) * std::pow(q - 2.0, S1) * std::pow(g_coef, 0.5 * S1) *
         std::max(1.0, std::pow(2.0, 0.5 * S1 - 1.0));
}

}  // namespace pmc
