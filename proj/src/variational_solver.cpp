#include "pmc/variational_solver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <fftw3.h>
#include <Eigen/Dense>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>

namespace pmc {

// ------------------------------------------------------------ the operator

namespace {

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double smooth_step_deriv(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  double da = a / (t * t), db = -b / ((1.0 - t) * (1.0 - t));
  return (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
}

constexpr int kTable = 2048;

}  // namespace

RegularizedOperator::RegularizedOperator(double t) : tau(t) {
  if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("tau: must lie in (0, 1)");
  r0_ = 1.0 - tau;
  r1_ = 1.0 - 0.5 * tau;
  table_.assign(kTable + 1, 0.0);
  table_[0] = r0_ * r0_ / (1.0 + std::sqrt(1.0 - r0_ * r0_));
  double dr = (r1_ - r0_) / kTable;
  for (int i = 0; i < kTable; ++i) {
    double a = r0_ + dr * i;
    table_[i + 1] = table_[i] + boost::math::quadrature::gauss<double, 10>::integrate(
                                    [&](double s) { return s * G(s); }, a, a + dr);
  }
  // sup of G + G + G' r: the band peak, or 2 G beyond it
  auto ratio = [&](double r) { return 2.0 * G(r) + Gprime(r) * r; };
  double best = ratio(r1_ + 1.0), arg = r0_;
  const int M = 4000;
  for (int i = 0; i <= M; ++i) {
    double r = r0_ + (r1_ - r0_) * i / M;
    if (ratio(r) > best) {
      best = ratio(r);
      arg = r;
    }
  }
  double w = (r1_ - r0_) / M;
  auto res = boost::math::tools::brent_find_minima([&](double r) { return -ratio(r); },
                                                   std::max(r0_, arg - w), std::min(r1_, arg + w), 52);
  L_ = std::max(best, -res.second);
}

double RegularizedOperator::cap(double r) const {
  if (r <= r0_) return r;
  if (r >= r1_) return r1_;
  double b = smooth_step((r - r0_) / (r1_ - r0_));
  return (1.0 - b) * r + b * r1_;
}

double RegularizedOperator::cap_deriv(double r) const {
  if (r <= r0_) return 1.0;
  if (r >= r1_) return 0.0;
  double t = (r - r0_) / (r1_ - r0_);
  double b = smooth_step(t);
  return (1.0 - b) + smooth_step_deriv(t) / (r1_ - r0_) * (r1_ - r);
}

double RegularizedOperator::G(double r) const {
  double c = cap(r);
  return 1.0 / std::sqrt(1.0 - c * c);
}

double RegularizedOperator::Gprime(double r) const {
  double c = cap(r);
  return c * cap_deriv(r) / std::pow(1.0 - c * c, 1.5);
}

double RegularizedOperator::potential(double r) const {
  if (r <= r0_) return r * r / (1.0 + std::sqrt(1.0 - r * r));
  if (r >= r1_) {
    double G1 = 1.0 / std::sqrt(1.0 - r1_ * r1_);
    return table_.back() + 0.5 * G1 * (r * r - r1_ * r1_);
  }
  // cubic Hermite with exact end slopes s G(s)
  double dr = (r1_ - r0_) / kTable;
  int i = std::min(int((r - r0_) / dr), kTable - 1);
  double a = r0_ + dr * i, t = (r - a) / dr;
  double p0 = table_[i], p1 = table_[i + 1];
  double m0 = a * G(a) * dr, m1 = (a + dr) * G(a + dr) * dr;
  double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * p1 +
         (t3 - t2) * m1;
}

Vec3 regularized_flux(const Vec3& z, double tau) {
  RegularizedOperator op(tau);
  double r = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
  double g = op.G(r);
  return {g * z[0], g * z[1], g * z[2]};
}

EllipticityResult ellipticity_check(const Vec3& z, double tau) {
  RegularizedOperator op(tau);
  EllipticityResult out;
  out.L = op.lipschitz();
  double r = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
  auto flux = [&](const Vec3& x) {
    double rr = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    double g = op.G(rr);
    return Vec3{g * x[0], g * x[1], g * x[2]};
  };
  // finite-difference Jacobian
  Eigen::Matrix3d J;
  const double d = 1e-6;
  for (int b = 0; b < 3; ++b) {
    Vec3 p = z, m = z;
    p[b] += d;
    m[b] -= d;
    Vec3 fp = flux(p), fm = flux(m);
    for (int a = 0; a < 3; ++a) J(a, b) = (fp[a] - fm[a]) / (2 * d);
  }
  Eigen::Matrix3d S = 0.5 * (J + J.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(S);
  out.min_quotient = es.eigenvalues().minCoeff();
  out.ellipticity_ok = out.min_quotient >= 1.0 - 1e-6;
  if (r > 0.0) {
    Vec3 a = flux(z);
    double an = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    double Dn = std::abs(es.eigenvalues().maxCoeff());
    out.growth_ratio = (an + Dn * r) / r;
  } else {
    out.growth_ratio = 2.0;  // a(0) = 0, Da(0) = I
  }
  out.growth_ok = out.growth_ratio <= out.L * (1.0 + 1e-6);
  return out;
}

// ------------------------------------------------------------ mesh kernels

namespace {

// tau = 0 stands for the unregularised energy
struct Model {
  const RegularizedOperator* op = nullptr;

  // Phi, G and G'/r from r^2
  double phi(double r2) const {
    if (!op) {
      if (r2 > 1.0) return kInf;
      return r2 / (1.0 + std::sqrt(1.0 - r2));
    }
    return op->potential(std::sqrt(r2));
  }
  void coeffs(double r2, double& G, double& Gr) const {
    if (!op || r2 <= (1.0 - op->tau) * (1.0 - op->tau)) {
      G = 1.0 / std::sqrt(std::max(1.0 - r2, 1e-300));
      Gr = G * G * G;
      return;
    }
    double r = std::sqrt(r2);
    G = op->G(r);
    Gr = op->Gprime(r) / r;
  }
};

// Visit every Kuhn tetrahedron: f(n0, n1, n2, n3) with the axis edges
// n0->n1, n1->n2, n2->n3. Cubes are visited slab by slab in z.
template <class F>
void for_each_tet_in_slab(const CartesianGrid& g, int k, F&& f) {
  const std::ptrdiff_t sx = 1, sy = g.n, sz = std::ptrdiff_t(g.n) * g.n;
  const std::ptrdiff_t P[6][3] = {{sx, sy, sz}, {sx, sz, sy}, {sy, sx, sz},
                                  {sy, sz, sx}, {sz, sx, sy}, {sz, sy, sx}};
  for (int j = 0; j + 1 < g.n; ++j)
    for (int i = 0; i + 1 < g.n; ++i) {
      std::ptrdiff_t b = std::ptrdiff_t(g.idx(i, j, k));
      for (const auto& p : P) {
        std::ptrdiff_t n1 = b + p[0], n2 = n1 + p[1], n3 = n2 + p[2];
        f(b, n1, n2, n3);
      }
    }
}

std::vector<std::uint8_t> interior_mask(const CartesianGrid& g) {
  std::vector<std::uint8_t> m(g.size(), 0);
  for (int k = 1; k + 1 < g.n; ++k)
    for (int j = 1; j + 1 < g.n; ++j)
      for (int i = 1; i + 1 < g.n; ++i) m[g.idx(i, j, k)] = 1;
  return m;
}

double load_term(const ScalarField& u, const ScalarField& rho) {
  const auto& g = u.grid;
  const double h3 = g.h * g.h * g.h;
  std::vector<double> slab(g.n, 0.0);
  for (int k = 0; k < g.n; ++k) {
    double s = 0.0;
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        if (g.on_boundary(i, j, k)) continue;
        auto id = g.idx(i, j, k);
        s += rho.v[id] * u.v[id];
      }
    slab[k] = s * h3;
  }
  return pairwise_sum(slab);
}

// area part and load part; the energy is their difference
double energy_of(const ScalarField& u, const ScalarField& rho, const Model& M, double* scale = nullptr) {
  const auto& g = u.grid;
  const double ih = 1.0 / g.h, vol = g.h * g.h * g.h / 6.0;
  std::vector<double> slab(g.n - 1, 0.0);
  const double* U = u.v.data();
  for (int k = 0; k + 1 < g.n; ++k) {
    double s = 0.0;
    for_each_tet_in_slab(g, k, [&](auto n0, auto n1, auto n2, auto n3) {
      double a = (U[n1] - U[n0]) * ih, b = (U[n2] - U[n1]) * ih, c = (U[n3] - U[n2]) * ih;
      s += M.phi(a * a + b * b + c * c);
    });
    slab[k] = s * vol;
  }
  double e = pairwise_sum(slab), l = load_term(u, rho);
  if (scale) *scale = std::abs(e) + std::abs(l);
  return e - l;
}

// gradient of the energy on interior nodes (boundary entries zero)
void gradient_of(const ScalarField& u, const ScalarField& rho, const Model& M,
                 const std::vector<std::uint8_t>& inner, std::vector<double>& out) {
  const auto& g = u.grid;
  const double ih = 1.0 / g.h, vol = g.h * g.h * g.h / 6.0, h3 = g.h * g.h * g.h;
  out.assign(g.size(), 0.0);
  const double* U = u.v.data();
  double* O = out.data();
  const double w = vol * ih;
  for (int k = 0; k + 1 < g.n; ++k)
    for_each_tet_in_slab(g, k, [&](auto n0, auto n1, auto n2, auto n3) {
      double a = (U[n1] - U[n0]) * ih, b = (U[n2] - U[n1]) * ih, c = (U[n3] - U[n2]) * ih;
      double G, Gr;
      M.coeffs(a * a + b * b + c * c, G, Gr);
      double fa = w * G * a, fb = w * G * b, fc = w * G * c;
      O[n0] -= fa;
      O[n1] += fa - fb;
      O[n2] += fb - fc;
      O[n3] += fc;
    });
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = inner[i] ? out[i] - rho.v[i] * h3 : 0.0;
}

// per-tet coefficients for Hessian products, stored once per Newton step
struct TetCoeffs {
  std::vector<float> G, Gr;
  std::vector<float> ga, gb, gc;
};

void hessian_coeffs(const ScalarField& u, const Model& M, TetCoeffs& T) {
  const auto& g = u.grid;
  const double ih = 1.0 / g.h;
  std::size_t nt = std::size_t(g.n - 1) * (g.n - 1) * (g.n - 1) * 6;
  T.G.resize(nt);
  T.Gr.resize(nt);
  T.ga.resize(nt);
  T.gb.resize(nt);
  T.gc.resize(nt);
  const double* U = u.v.data();
  std::size_t t = 0;
  for (int k = 0; k + 1 < g.n; ++k)
    for_each_tet_in_slab(g, k, [&](auto n0, auto n1, auto n2, auto n3) {
      double a = (U[n1] - U[n0]) * ih, b = (U[n2] - U[n1]) * ih, c = (U[n3] - U[n2]) * ih;
      double G, Gr;
      M.coeffs(a * a + b * b + c * c, G, Gr);
      T.G[t] = float(G);
      T.Gr[t] = float(Gr);
      T.ga[t] = float(a);
      T.gb[t] = float(b);
      T.gc[t] = float(c);
      ++t;
    });
}

void hessian_apply(const CartesianGrid& g, const TetCoeffs& T, const std::vector<std::uint8_t>& inner,
                   const std::vector<double>& x, std::vector<double>& y) {
  const double ih = 1.0 / g.h, vol = g.h * g.h * g.h / 6.0;
  const double w = vol * ih;
  y.assign(g.size(), 0.0);
  const double* X = x.data();
  double* Y = y.data();
  std::size_t t = 0;
  for (int k = 0; k + 1 < g.n; ++k)
    for_each_tet_in_slab(g, k, [&](auto n0, auto n1, auto n2, auto n3) {
      double da = (X[n1] - X[n0]) * ih, db = (X[n2] - X[n1]) * ih, dc = (X[n3] - X[n2]) * ih;
      double G = T.G[t], Gr = T.Gr[t], a = T.ga[t], b = T.gb[t], c = T.gc[t];
      double s = Gr * (a * da + b * db + c * dc);
      double fa = w * (G * da + s * a), fb = w * (G * db + s * b), fc = w * (G * dc + s * c);
      Y[n0] -= fa;
      Y[n1] += fa - fb;
      Y[n2] += fb - fc;
      Y[n3] += fc;
      ++t;
    });
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!inner[i]) y[i] = 0.0;
}

// Inverse of h times the 7-point Dirichlet Laplacian, by DST-I in each axis.
class PoissonPrecond {
 public:
  explicit PoissonPrecond(const CartesianGrid& g) : g_(g), m_(g.n - 2) {
    std::size_t len = std::size_t(m_) * m_ * m_;
    buf_ = fftw_alloc_real(len);
    plan_ = fftw_plan_r2r_3d(m_, m_, m_, buf_, buf_, FFTW_RODFT00, FFTW_RODFT00, FFTW_RODFT00,
                             FFTW_ESTIMATE);
    lam_.resize(m_);
    for (int k = 0; k < m_; ++k) lam_[k] = 2.0 - 2.0 * std::cos(kPi * (k + 1) / (m_ + 1));
    double norm = 2.0 * (m_ + 1);
    scale_ = 1.0 / (norm * norm * norm * g.h);
  }
  ~PoissonPrecond() {
    fftw_destroy_plan(plan_);
    fftw_free(buf_);
  }
  PoissonPrecond(const PoissonPrecond&) = delete;
  PoissonPrecond& operator=(const PoissonPrecond&) = delete;

  void apply(const std::vector<double>& r, std::vector<double>& z) {
    const int m = m_;
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) buf_[(std::size_t(k) * m + j) * m + i] = r[g_.idx(i + 1, j + 1, k + 1)];
    fftw_execute(plan_);
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
          buf_[(std::size_t(k) * m + j) * m + i] *= scale_ / (lam_[i] + lam_[j] + lam_[k]);
    fftw_execute(plan_);
    z.assign(g_.size(), 0.0);
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) z[g_.idx(i + 1, j + 1, k + 1)] = buf_[(std::size_t(k) * m + j) * m + i];
  }

 private:
  CartesianGrid g_;
  int m_;
  double* buf_ = nullptr;
  fftw_plan plan_;
  std::vector<double> lam_;
  double scale_ = 1.0;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> t(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) t[i] = a[i] * b[i];
  return pairwise_sum(t);
}

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

// largest alpha with |grad(u + alpha d)| <= cap on every tetrahedron
double feasible_step(const ScalarField& u, const std::vector<double>& d, double cap) {
  const auto& g = u.grid;
  const double ih = 1.0 / g.h, c2 = cap * cap;
  const double* U = u.v.data();
  const double* D = d.data();
  double amax = kInf;
  for (int k = 0; k + 1 < g.n; ++k)
    for_each_tet_in_slab(g, k, [&](auto n0, auto n1, auto n2, auto n3) {
      double a = (U[n1] - U[n0]) * ih, b = (U[n2] - U[n1]) * ih, c = (U[n3] - U[n2]) * ih;
      double da = (D[n1] - D[n0]) * ih, db = (D[n2] - D[n1]) * ih, dc = (D[n3] - D[n2]) * ih;
      double A = da * da + db * db + dc * dc;
      if (A <= 0.0) return;
      double B = a * da + b * db + c * dc;
      double C = a * a + b * b + c * c - c2;
      if (C >= 0.0) {  // already on or past the cap: only inward moves
        if (B >= 0.0) amax = 0.0;
        else amax = std::min(amax, -2.0 * B / A);
        return;
      }
      double s = (-B + std::sqrt(B * B - A * C)) / A;
      amax = std::min(amax, s);
    });
  return amax;
}

struct StageResult {
  bool converged = false;
  bool stalled = false;
  double residual = 0.0;
};

StageResult newton_stage(ScalarField& u, const ScalarField& rho, const Model& M, double tol,
                         const SolverOptions& opts, PoissonPrecond& P,
                         const std::vector<std::uint8_t>& inner, GridSolution& log) {
  const auto& g = u.grid;
  const double h3 = g.h * g.h * g.h;
  const double cap = 1.0 - opts.feas_margin;
  std::vector<double> grad, r, z, p, Ap, d;
  TetCoeffs T;
  StageResult out;
  double Escale = 0.0;
  double E = energy_of(u, rho, M, &Escale);
  double tau_tag = M.op ? M.op->tau : 0.0;
  while (true) {
    gradient_of(u, rho, M, inner, grad);
    out.residual = max_abs(grad) / h3;
    if (out.residual <= tol) {
      out.converged = true;
      return out;
    }
    if (log.iterations >= opts.max_iter) return out;
    // inexact Newton direction by preconditioned CG on H d = -grad
    hessian_coeffs(u, M, T);
    d.assign(g.size(), 0.0);
    r.resize(g.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = -grad[i];
    P.apply(r, z);
    p = z;
    double rz = dot(r, z), r0 = std::sqrt(dot(r, r));
    double eta = std::min(0.1, std::sqrt(out.residual / (out.residual + 1.0)));
    eta = std::max(eta, 1e-12);
    for (int it = 0; it < opts.max_cg; ++it) {
      hessian_apply(g, T, inner, p, Ap);
      double pAp = dot(p, Ap);
      if (!(pAp > 0.0)) break;
      double al = rz / pAp;
      for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] += al * p[i];
        r[i] -= al * Ap[i];
      }
      ++log.cg_iterations;
      if (std::sqrt(dot(r, r)) <= eta * r0) break;
      P.apply(r, z);
      double rz1 = dot(r, z);
      double be = rz1 / rz;
      rz = rz1;
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + be * p[i];
    }
    double slope = dot(grad, d);
    if (!(slope < 0.0)) {  // fall back to the preconditioned gradient
      for (std::size_t i = 0; i < d.size(); ++i) r[i] = -grad[i];
      P.apply(r, d);
      slope = dot(grad, d);
    }
    double amax = feasible_step(u, d, cap);
    double alpha = std::min(1.0, amax);
    ScalarField trial = u;
    bool accepted = false;
    // below the rounding level of E the Armijo test is noise; judge steps by
    // the residual instead and only ask E not to rise beyond that level
    const double noise = 1e3 * std::numeric_limits<double>::epsilon() * Escale;
    const bool flat = -slope <= noise;
    std::vector<double> gt;
    for (int ls = 0; ls < 60 && alpha > 0.0; ++ls) {
      for (std::size_t i = 0; i < u.v.size(); ++i) trial.v[i] = u.v[i] + alpha * d[i];
      double sc = 0.0;
      double Et = energy_of(trial, rho, M, &sc);
      bool ok;
      if (flat) {
        gradient_of(trial, rho, M, inner, gt);
        ok = Et <= E + noise && max_abs(gt) / h3 < 0.9 * out.residual;
      } else {
        ok = Et <= E + 1e-4 * alpha * slope;
      }
      if (ok) {
        u.v.swap(trial.v);
        E = Et;
        Escale = sc;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      out.stalled = true;
      return out;
    }
    ++log.iterations;
    log.energy_history.push_back(E);
    log.tau_history.push_back(tau_tag);
  }
}

}  // namespace

// ------------------------------------------------------------ public API

double max_cell_gradient(const ScalarField& u) {
  const auto& g = u.grid;
  const double ih = 1.0 / g.h;
  const double* U = u.v.data();
  double m2 = 0.0;
  for (int k = 0; k + 1 < g.n; ++k)
    for_each_tet_in_slab(g, k, [&](auto n0, auto n1, auto n2, auto n3) {
      double a = (U[n1] - U[n0]) * ih, b = (U[n2] - U[n1]) * ih, c = (U[n3] - U[n2]) * ih;
      m2 = std::max(m2, a * a + b * b + c * c);
    });
  return std::sqrt(m2);
}

double discrete_energy(const ScalarField& u, const ScalarField& rho) {
  double e = energy_of(u, rho, Model{});
  if (!std::isfinite(e)) throw std::domain_error("discrete_energy: |grad u| > 1 on some cell");
  return e;
}

GridSolution minimize_energy(const ScalarField& rho, const SolverOptions& opts) {
  const auto& g = rho.grid;
  if (g.n < 4) throw std::invalid_argument("grid: need at least 4 nodes per axis");
  for (double x : rho.v)
    if (!std::isfinite(x)) throw std::invalid_argument("rho: non-finite value on the grid");
  GridSolution sol;
  sol.rho = rho;
  sol.u = opts.initial ? *opts.initial : ScalarField(g);
  if (sol.u.grid.n != g.n) throw std::invalid_argument("initial guess: grid mismatch");
  if (opts.boundary && opts.boundary->grid.n != g.n)
    throw std::invalid_argument("boundary data: grid mismatch");
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i)
        if (g.on_boundary(i, j, k))
          sol.u.at(i, j, k) = opts.boundary ? opts.boundary->at(i, j, k) : 0.0;
  auto inner = interior_mask(g);
  PoissonPrecond P(g);
  if (max_cell_gradient(sol.u) > 1.0 - opts.feas_margin) {
    // harmonic extension of the boundary data; if that is not spacelike
    // either, give up rather than guess
    ScalarField b(g);
    for (int k = 0; k < g.n; ++k)
      for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i)
          if (g.on_boundary(i, j, k)) b.at(i, j, k) = sol.u.at(i, j, k);
    TetCoeffs T;
    std::size_t nt = std::size_t(g.n - 1) * (g.n - 1) * (g.n - 1) * 6;
    T.G.assign(nt, 1.0f);
    T.Gr.assign(nt, 0.0f);
    T.ga.assign(nt, 0.0f);
    T.gb.assign(nt, 0.0f);
    T.gc.assign(nt, 0.0f);
    std::vector<double> Kb, w;
    hessian_apply(g, T, inner, b.v, Kb);
    for (double& x : Kb) x = -x;
    P.apply(Kb, w);
    for (std::size_t i = 0; i < w.size(); ++i)
      if (inner[i]) b.v[i] = w[i];
    if (max_cell_gradient(b) > 1.0 - opts.feas_margin)
      throw std::invalid_argument("boundary data: no spacelike extension found on this grid");
    sol.u = b;
  }

  double tau = opts.tau0;
  const double stage_tol = std::max(opts.tol, 1e-6);
  bool done = false;
  while (true) {
    RegularizedOperator op(tau);
    Model M{&op};
    auto st = newton_stage(sol.u, rho, M, stage_tol, opts, P, inner, sol);
    sol.tau_final = tau;
    double mg = max_cell_gradient(sol.u);
    if (mg < 1.0 - tau && st.converged) break;
    if (sol.iterations >= opts.max_iter) {
      sol.message = "iteration budget exhausted during continuation";
      done = true;
      break;
    }
    if (tau * 0.5 < opts.tau_min) {
      sol.message = "tau reached its floor with the cap still active";
      break;
    }
    tau *= 0.5;
  }
  Model truth{};
  if (!done) {
    auto st = newton_stage(sol.u, rho, truth, opts.tol, opts, P, inner, sol);
    sol.converged = st.converged;
    if (!st.converged && sol.message.empty())
      sol.message = st.stalled ? "line search stalled on the true energy" : "iteration budget exhausted";
  }
  std::vector<double> grad;
  gradient_of(sol.u, rho, truth, inner, grad);
  sol.residual = max_abs(grad) / (g.h * g.h * g.h);
  sol.converged = sol.residual <= opts.tol;
  if (sol.converged) sol.message = "converged";
  sol.energy = discrete_energy(sol.u, rho);
  sol.max_grad = max_cell_gradient(sol.u);

  // worst tetrahedron per cube
  auto cells = g.cells();
  sol.v = ScalarField(cells, 1.0);
  sol.nu = ScalarField(cells, 1.0);
  const double ih = 1.0 / g.h;
  const double* U = sol.u.v.data();
  for (int k = 0; k + 1 < g.n; ++k) {
    int t = 0;
    double worst = 0.0;
    for_each_tet_in_slab(g, k, [&](auto n0, auto n1, auto n2, auto n3) {
      double a = (U[n1] - U[n0]) * ih, b = (U[n2] - U[n1]) * ih, c = (U[n3] - U[n2]) * ih;
      worst = std::max(worst, a * a + b * b + c * c);
      if (++t == 6) {
        std::size_t cube = std::size_t(n0);
        int i = int(cube % g.n), j = int((cube / g.n) % g.n);
        double v = std::sqrt(std::max(0.0, 1.0 - worst));
        sol.v.at(i, j, k) = v;
        sol.nu.at(i, j, k) = v > 0.0 ? 1.0 / v : kInf;
        t = 0;
        worst = 0.0;
      }
    });
  }
  return sol;
}

nlohmann::json GridSolution::diagnostics() const {
  return {{"energy", energy},       {"residual", residual},       {"iterations", iterations},
          {"cg_iterations", cg_iterations}, {"tau_final", tau_final}, {"max_grad", max_grad},
          {"converged", converged}, {"message", message},          {"grid", grid_header(u.grid)}};
}

WeakResidual weak_residual(const ScalarField& u, const ScalarField& rho) {
  const auto& g = u.grid;
  const double ih = 1.0 / g.h, vol = g.h * g.h * g.h / 6.0, h3 = g.h * g.h * g.h;
  WeakResidual out;
  std::vector<double> acc(g.size(), 0.0);
  const double* U = u.v.data();
  for (int k = 0; k + 1 < g.n; ++k)
    for_each_tet_in_slab(g, k, [&](auto n0, auto n1, auto n2, auto n3) {
      double a = (U[n1] - U[n0]) * ih, b = (U[n2] - U[n1]) * ih, c = (U[n3] - U[n2]) * ih;
      double r2 = a * a + b * b + c * c;
      if (r2 > 1.0 + 1e-14) throw std::domain_error("weak_residual: u is not spacelike (|grad u| > 1)");
      if (r2 >= 1.0) {
        ++out.excluded;
        return;
      }
      double G = 1.0 / std::sqrt(1.0 - r2), w = vol * ih * G;
      acc[n0] -= w * a;
      acc[n1] += w * (a - b);
      acc[n2] += w * (b - c);
      acc[n3] += w * c;
    });
  // a hat function has unit-h^3 mass on this mesh
  for (int k = 1; k + 1 < g.n; ++k)
    for (int j = 1; j + 1 < g.n; ++j)
      for (int i = 1; i + 1 < g.n; ++i) {
        auto id = g.idx(i, j, k);
        out.value = std::max(out.value, std::abs(acc[id] - rho.v[id] * h3) / h3);
      }
  return out;
}

double weak_residual(const GridSolution& sol) { return weak_residual(sol.u, sol.rho).value; }

ScalarField sample_radial(const CartesianGrid& g, const RadialDensity& rho) {
  ScalarField out(g);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        double r = std::sqrt(g.coord(i) * g.coord(i) + g.coord(j) * g.coord(j) + g.coord(k) * g.coord(k));
        if (r < 1e-14 * g.h) {
          // mean over the ball of radius h/2 for data singular at the origin
          double a = 0.5 * g.h;
          out.at(i, j, k) = 3.0 * rho.mass(a, 3) / (a * a * a);
        } else {
          out.at(i, j, k) = rho(r);
        }
      }
  return out;
}

ScalarField oracle_field(const CartesianGrid& g, const RadialSolution& sol) {
  ScalarField out(g);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        double r = std::sqrt(g.coord(i) * g.coord(i) + g.coord(j) * g.coord(j) + g.coord(k) * g.coord(k));
        out.at(i, j, k) = sol.u_at(r);
      }
  return out;
}

ScalarField oracle_boundary(const CartesianGrid& g, const RadialSolution& sol) {
  ScalarField out(g);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        if (!g.on_boundary(i, j, k)) continue;
        double r = std::sqrt(g.coord(i) * g.coord(i) + g.coord(j) * g.coord(j) + g.coord(k) * g.coord(k));
        out.at(i, j, k) = sol.u_at(r);
      }
  return out;
}

ScalarField prolong(const ScalarField& coarse, const CartesianGrid& fine) {
  const auto& c = coarse.grid;
  ScalarField out(fine);
  auto locate = [&](double x, int& i, double& t) {
    double s = (x - c.lo) / c.h;
    i = std::clamp(int(std::floor(s)), 0, c.n - 2);
    t = std::clamp(s - i, 0.0, 1.0);
  };
  for (int k = 0; k < fine.n; ++k)
    for (int j = 0; j < fine.n; ++j)
      for (int i = 0; i < fine.n; ++i) {
        int a, b, e;
        double ta, tb, te;
        locate(fine.coord(i), a, ta);
        locate(fine.coord(j), b, tb);
        locate(fine.coord(k), e, te);
        double s = 0.0;
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              s += (dx ? ta : 1 - ta) * (dy ? tb : 1 - tb) * (dz ? te : 1 - te) *
                   coarse.at(a + dx, b + dy, e + dz);
        out.at(i, j, k) = s;
      }
  return out;
}

double oracle_box_energy(const RadialSolution& sol, const CartesianGrid& g) {
  const double L = g.half_width();
  const double rmax = std::sqrt(3.0) * L * (1 + 1e-12);
  // 1 - v tabulated on a fine uniform grid, then a tensor Gauss rule over the box
  const int M = 20000;
  const double dr = rmax / M;
  std::vector<double> f(M + 1);
  for (int i = 0; i <= M; ++i) {
    double r = std::max(i * dr, 1e-12);
    double w = sol.w_at(r), s = std::sqrt(1.0 + w * w);
    f[i] = w * w / (s * (s + 1.0));
  }
  boost::math::interpolators::cardinal_cubic_b_spline<double> spl(f.begin(), f.end(), 0.0, dr);
  using GL = boost::math::quadrature::gauss<double, 8>;
  const int panels = 24;
  std::vector<double> xs, ws;
  for (int p = 0; p < panels; ++p) {
    double a = L * p / panels, b = L * (p + 1) / panels;
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    const auto& ab = GL::abscissa();
    const auto& wt = GL::weights();
    for (std::size_t q = 0; q < ab.size(); ++q) {
      if (ab[q] == 0.0) {
        xs.push_back(mid);
        ws.push_back(wt[q] * half);
        continue;
      }
      xs.push_back(mid + half * ab[q]);
      ws.push_back(wt[q] * half);
      xs.push_back(mid - half * ab[q]);
      ws.push_back(wt[q] * half);
    }
  }
  std::vector<double> slab(xs.size());
  for (std::size_t c = 0; c < xs.size(); ++c) {
    double s = 0.0;
    for (std::size_t b = 0; b < xs.size(); ++b)
      for (std::size_t a = 0; a < xs.size(); ++a) {
        double r = std::sqrt(xs[a] * xs[a] + xs[b] * xs[b] + xs[c] * xs[c]);
        s += ws[a] * ws[b] * spl(r);
      }
    slab[c] = s * ws[c];
  }
  double area = 8.0 * pairwise_sum(slab);
  const auto& rho = sol.rho;
  double top = std::min(rho.support_radius(), L);
  double load = sphere_area(3) * integrate([&](double r) { return rho(r) * sol.u_at(r) * r * r; },
                                           0.0, top, rho.breakpoints(), 1e-12);
  return area - load;
}

OracleComparison compare_with_oracle(const GridSolution& sol, const RadialSolution& oracle) {
  OracleComparison out;
  const auto& g = sol.u.grid;
  auto G = gradient(sol.u);
  for (int k = 1; k + 1 < g.n; ++k)
    for (int j = 1; j + 1 < g.n; ++j)
      for (int i = 1; i + 1 < g.n; ++i) {
        double x = g.coord(i), y = g.coord(j), z = g.coord(k);
        double r = std::sqrt(x * x + y * y + z * z);
        Vec3 e{0, 0, 0};
        if (r > 0.0) {
          double up = oracle.uprime_at(r);
          e = {up * x / r, up * y / r, up * z / r};
        }
        const auto& gh = G[g.idx(i, j, k)];
        double d = std::sqrt((gh[0] - e[0]) * (gh[0] - e[0]) + (gh[1] - e[1]) * (gh[1] - e[1]) +
                             (gh[2] - e[2]) * (gh[2] - e[2]));
        out.grad_err = std::max(out.grad_err, d);
      }
  out.energy_grid = sol.energy;
  out.energy_oracle = oracle_box_energy(oracle, g);
  out.energy_rel = std::abs(out.energy_grid - out.energy_oracle) / std::abs(out.energy_oracle);
  return out;
}

void write_grid_solution(const std::string& dir, const GridSolution& sol) {
  std::filesystem::create_directories(dir);
  write_field_csv(dir + "/u.csv", sol.u);
  write_field_csv(dir + "/v_cells.csv", sol.v);
  std::ofstream os(dir + "/diagnostics.json");
  if (!os) throw std::runtime_error("cannot write " + dir + "/diagnostics.json");
  os << sol.diagnostics().dump(2) << "\n";
}

}  // namespace pmc
