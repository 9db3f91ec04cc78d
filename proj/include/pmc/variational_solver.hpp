#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmc/core_fields.hpp"
#include "pmc/radial_oracle.hpp"

namespace pmc {

// Cap r -> c(r): identity below 1 - tau, constant 1 - tau/2 above 1 - tau/2,
// joined by a C-infinity step. a_tau(z) = z / sqrt(1 - c(|z|)^2).
struct RegularizedOperator {
  double tau = 0.5;

  explicit RegularizedOperator(double t);
  double cap(double r) const;
  double cap_deriv(double r) const;
  // G(r) = 1/sqrt(1 - c(r)^2) and dG/dr
  double G(double r) const;
  double Gprime(double r) const;
  // Phi(r) = int_0^r s G(s) ds, so grad_z Phi(|z|) = a_tau(z)
  double potential(double r) const;
  // sup_z (|a| + |Da| |z|) / |z|
  double lipschitz() const { return L_; }

 private:
  double r0_ = 0.5, r1_ = 0.75;
  std::vector<double> table_;  // Phi on a uniform grid over [r0, r1]
  double L_ = 0.0;
};

Vec3 regularized_flux(const Vec3& z, double tau);

struct EllipticityResult {
  bool growth_ok = false;
  bool ellipticity_ok = false;
  double growth_ratio = 0.0;  // (|a| + |Da||z|)/|z| at z
  double L = 0.0;             // the operator's global bound
  double min_quotient = 0.0;  // min Rayleigh quotient of the FD Jacobian
};
EllipticityResult ellipticity_check(const Vec3& z, double tau);

struct SolverOptions {
  double tol = 1e-8;      // on max_i |dI/du_i| / h^3
  int max_iter = 5000;    // Newton steps over all stages
  double tau0 = 0.5;
  double tau_min = 1e-10;
  double feas_margin = 1e-12;
  int max_cg = 400;
  // Dirichlet values on the box boundary; zero when absent
  std::optional<ScalarField> boundary;
  // starting guess (its boundary values are overwritten)
  std::optional<ScalarField> initial;
};

struct GridSolution {
  ScalarField u, rho;
  ScalarField v, nu;  // on cells: worst of the six tetrahedra
  double energy = 0.0;
  double residual = 0.0;
  double max_grad = 0.0;
  int iterations = 0;
  int cg_iterations = 0;
  double tau_final = 0.0;
  bool converged = false;
  std::string message;
  // objective after each accepted step, and the tau it belonged to (0 = true energy)
  std::vector<double> energy_history;
  std::vector<double> tau_history;

  nlohmann::json diagnostics() const;
};

// Born-Infeld energy of a nodal field on the Kuhn P1 mesh with lumped load.
// Throws std::domain_error when some tetrahedron has |grad u| > 1.
double discrete_energy(const ScalarField& u, const ScalarField& rho);
// max over tetrahedra of |grad u|
double max_cell_gradient(const ScalarField& u);

GridSolution minimize_energy(const ScalarField& rho, const SolverOptions& opts = {});

struct WeakResidual {
  double value = 0.0;  // max over interior hats of |<DI(u), psi>| / |psi|_1
  int excluded = 0;    // tetrahedra with v = 0
};
WeakResidual weak_residual(const ScalarField& u, const ScalarField& rho);
double weak_residual(const GridSolution& sol);

// Radial helpers for grid runs centred at the origin.
ScalarField sample_radial(const CartesianGrid& g, const RadialDensity& rho);
ScalarField oracle_boundary(const CartesianGrid& g, const RadialSolution& sol);
ScalarField oracle_field(const CartesianGrid& g, const RadialSolution& sol);
// trilinear interpolation onto another grid covering the same box
ScalarField prolong(const ScalarField& coarse, const CartesianGrid& fine);
// int_box (1 - v) - int rho u for the oracle solution on the grid's box
double oracle_box_energy(const RadialSolution& sol, const CartesianGrid& g);

struct OracleComparison {
  double grad_err = 0.0;     // max over interior nodes, centred differences
  double energy_rel = 0.0;
  double energy_grid = 0.0, energy_oracle = 0.0;
};
OracleComparison compare_with_oracle(const GridSolution& sol, const RadialSolution& oracle);

void write_grid_solution(const std::string& dir, const GridSolution& sol);

}  // namespace pmc
