#pragma once

#include <functional>
#include <vector>

#include "pmc/core_fields.hpp"
#include "pmc/radial_oracle.hpp"

namespace pmc {

// Minkowski pairing with signature (+,...,+,-); the last slot is the time axis.
double lorentz_dot(const std::vector<double>& x, const std::vector<double>& y);

// Point data of a graph: grad, Hessian (row-major N x N) and the datum rho.
// third, when non-empty, holds u_{ijk} at [(i*N + j)*N + k].
struct Jet2 {
  int N = 3;
  std::vector<double> grad;
  std::vector<double> hess;
  double rho = 0.0;
  std::vector<double> third;

  double h(int i, int j) const { return hess[i * N + j]; }
  double t(int i, int j, int k) const { return third[(i * N + j) * N + k]; }
  double grad_sq() const;
  double v() const;
  std::vector<double> nu_vec() const;  // (grad, 1)/v
  void validate() const;
};

// Random jet with |grad| <= grad_max, Hessian entries in [-1, 1] and, if
// with_third, a symmetric third-derivative tensor; rho is the mean curvature.
Jet2 random_jet(std::mt19937_64& rng, int N, double grad_max, bool with_third);

struct SecondFormSq {
  double direct = 0.0;
  double decomposed = 0.0;
};
SecondFormSq second_form_sq(const Jet2& jet);

// H = -(1/v) sum g^{ij} u_ij
double mean_curvature(const Jet2& jet);
// grad v and its derivative; the Hessian of v needs the third derivatives
std::vector<double> grad_v(const Jet2& jet);
std::vector<double> hess_v(const Jet2& jet);
// gradient of H, from the third derivatives
std::vector<double> grad_mean_curvature(const Jet2& jet);

// Laplace-Beltrami of f on the graph from the Euclidean jet of f:
// sum g^{ij} f_ij - H sum nu_i f_i
double laplace_beltrami(const Jet2& jet, const std::vector<double>& df,
                        const std::vector<double>& d2f);
// (1/v) sum nu_i g_i
double delta_time(const Jet2& jet, const std::vector<double>& dg);

// Brute-force oracle: induced metric g = I - du du^T by finite differences of
// u and the divergence form (1/sqrt g) d_i (sqrt g g^{ij} d_j f) evaluated by
// nested central differences with step h.
using ScalarFn = std::function<double(const std::vector<double>&)>;
double laplace_beltrami_fd(const ScalarFn& u, const ScalarFn& f, const std::vector<double>& x,
                           double h);

// ||delta l||^2 = 1 + l^{-2} (nu, X - X0)^2 with X - X0 = (x - x0, u - u0).
double delta_l_norm_sq(const std::vector<double>& x_minus_x0, double u_minus_u0,
                       const std::vector<double>& grad);

struct LorentzBallData {
  Vec3 center{0, 0, 0};
  double R = 0.0;
  Mask mask;
  ScalarField l;
  bool bounded = true;
  double enclosing_radius = kInf;  // sqrt(R^2 + 4 |u|_inf^2)
  bool inclusion_holds = true;     // mask inside B_{R'}(x0)
};
LorentzBallData lorentz_ball(const ScalarField& u, const Vec3& x0, double R);

// Radial graphs centred at the origin: l(r) = sqrt(r^2 - (u(r) - u(0))^2).
struct RadialLorentz {
  const RadialSolution* sol = nullptr;
  double u0 = 0.0;
  double r_max = 0.0;  // l is increasing on [0, r_max]
  explicit RadialLorentz(const RadialSolution& s);
  double l(double r) const;
  double r_of(double s) const;  // inverse of l
  double s_max() const { return l(r_max); }
  // (nu, X)_L at radius r (X0 the origin point of the graph)
  double nu_dot_X(double r) const;
};

struct LorentzBallRadial {
  double R = 0.0;
  double r_edge = 0.0;  // K_R = B_{r_edge}
  bool bounded = true;
  double enclosing_radius = kInf;
};
LorentzBallRadial lorentz_ball(const RadialSolution& sol, double R);

struct CoareaResult {
  double max_residual = 0.0;
  double s_lo = 0.0, s_hi = 0.0;
  bool range_restricted = false;
};
// h_integrand(r) is a radial function on the graph.
CoareaResult coarea_check(const RadialSolution& sol, const std::function<double(double)>& h,
                          double s_lo, double s_hi, int samples = 20);

struct MonotonicityTerms {
  double lhs = 0.0;    // D_s [s^{-N} int_{L_s} f dA]
  double bulk = 0.0;   // int_{L_s} s^{-N-1} (1/2 (s^2 - l^2) Lap f - f rho (X,nu)) dA
  double flux = 0.0;   // D_s [int_{L_s} f l^{-N-2} (X,nu)^2 dA]
  double residual = 0.0;  // |lhs - (bulk - flux)| / (|lhs| + |bulk| + |flux|)
};
MonotonicityTerms monotonicity_terms(const RadialSolution& sol, double gamma, double s);
double monotonicity_residual(const RadialSolution& sol, double gamma, double s);

// Radial Laplace-Beltrami of a radial function with derivatives f', f''.
double laplace_beltrami_radial(const RadialSolution& sol, double r, double fp, double fpp);

}  // namespace pmc
