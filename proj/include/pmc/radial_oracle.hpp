#pragma once

#include <string>
#include <vector>

#include "pmc/core_fields.hpp"

namespace pmc {

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DensityKind { Zero, Power, Bump, Tabulated };

// Radial datum rho(|x|).
//   Power:     amplitude * r^{-exponent} on (0, radius], zero outside
//              (exponent 0 is the constant-on-ball datum)
//   Bump:      amplitude * exp(1 - 1/(1 - (r/radius)^2)) for r < radius
//   Tabulated: piecewise linear through (tab_r, tab_v), zero past the last node
struct RadialDensity {
  DensityKind kind = DensityKind::Zero;
  double amplitude = 0.0;
  double exponent = 0.0;
  double radius = 1.0;
  std::vector<double> tab_r, tab_v;

  static RadialDensity zero();
  static RadialDensity power(double amplitude, double exponent, double radius);
  static RadialDensity constant(double rho0, double radius);
  static RadialDensity bump(double amplitude, double radius);
  static RadialDensity tabulated(std::vector<double> r, std::vector<double> v);

  double operator()(double r) const;
  double deriv(double r) const;  // d rho / dr away from breakpoints
  double support_radius() const;
  std::vector<double> breakpoints() const;
  // Exponent of the leading singularity at the origin (0 if bounded).
  double leading_power() const { return kind == DensityKind::Power ? exponent : 0.0; }
  // Integrability tags from exponent arithmetic p*a < N.
  bool in_Lp_loc(double p, int N) const;

  // int_0^r s^{N-1} rho(s) ds; throws DivergenceError if not integrable at 0.
  double mass(double r, int N) const;
  // |rho|_{p, B_ball}; ball = inf for the whole space. +inf when not integrable.
  double lp_norm(double p, int N, double ball = kInf) const;
  // rho(x/t)/t
  RadialDensity rescaled(double t) const;
  std::string describe() const;
};

// w(r) = -r^{1-N} int_0^r s^{N-1} rho
double radial_flux(const RadialDensity& rho, int N, double r);

struct RadialSolution {
  RadialGrid grid;
  ParamSet params;
  RadialDensity rho;
  std::vector<double> u, uprime, v, nu, w;
  std::vector<double> mass;  // int_0^{r_i} s^{N-1} rho
  // Nodes where the flux is not finite: v stored as 0 and nu as +inf.
  std::vector<std::size_t> degenerate;
  bool analytic = true;  // false for hand-made profiles

  int N() const { return params.N; }
  // Off-grid evaluation, exact up to Gauss-Legendre on one segment.
  double mass_at(double r) const;
  double w_at(double r) const;
  double uprime_at(double r) const;
  double v_at(double r) const;
  double nu_at(double r) const;
  double u_at(double r) const;
  double rho_at(double r) const { return rho(r); }
  double wprime_at(double r) const;  // -(N-1) w/r - rho
  double wpp_at(double r) const;
  double vpp_at(double r) const;
  double upp_at(double r) const;     // u''
  double vprime_at(double r) const;  // v'
};

RadialGrid default_radial_grid(const RadialDensity& rho, int per_decade = 120);

RadialSolution radial_solve(const RadialDensity& rho, const ParamSet& params,
                            const RadialGrid& grid);
RadialSolution radial_solve(const RadialDensity& rho, const ParamSet& params);

// Solution-shaped record from a prescribed u' profile (diagnostics only).
RadialSolution from_profile(const RadialGrid& grid, const std::vector<double>& uprime,
                            const ParamSet& params);

// t*u(x/t) with datum rho(x/t)/t on the grid t*r.
RadialSolution rescale(const RadialSolution& sol, double t);

struct AsymptoticMargin {
  double value = 0.0;  // min over the outer half of (1-u'^2) r^2
  double r_at_min = 0.0;
  bool holds = true;   // false when the minimum sits at the outermost node
};
AsymptoticMargin asymptotic_margin(const RadialSolution& sol);

void write_radial_solution_csv(const std::string& path, const RadialSolution& sol);

}  // namespace pmc
