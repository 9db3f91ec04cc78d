#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pmc/core_fields.hpp"
#include "pmc/estimate_engine.hpp"
#include "pmc/variational_solver.hpp"

namespace pmc {

// Convolution with the normalised exp(-1/(1-|x/eps|^2)) kernel at eps = 1/n,
// sampled on the grid and scaled to unit discrete mass. Throws if the kernel
// would carry mass onto the box boundary.
ScalarField mollify(const ScalarField& rho, int n);

// discrete (|u|_q^q + |grad u|_q^q + |D^2 u|_q^q)^{1/q} over |x|_inf <= window
double w2q_norm(const ScalarField& u, double q, double window);

struct HolderAudit {
  double alpha = 0.0;
  std::vector<double> scales;    // 2^k h
  std::vector<double> seminorm;  // max |grad u(x+se) - grad u(x)| / s^alpha
  bool finite = false;
  double sup() const;
};
// interior nodes only (one node away from the boundary), axis offsets
HolderAudit holder_audit(const ScalarField& u, double alpha);

struct PipelineOptions {
  std::vector<int> n_list{4, 8, 16, 32};
  double Rbar = 0.5;
  double window = 0.25;  // half-width of the W^{2,q} window
  double conv_tol = 1e-3;
  double w2q_factor = 2.0;
  SolverOptions solver;
};

struct StageRecord {
  int n = 0;
  double eps = 0.0;
  ScalarField rho_n;
  GridSolution sol;
  double rho_1 = 0.0, rho_m = 0.0, rho_q = 0.0;
  double sup_u = 0.0, sup_bound = 0.0;
  double collar = 0.0;  // R' = sqrt(Rbar^2 + 4 C^2) with C the sup bound
  int exterior_cells = 0;
  double exterior_grad = 0.0, delta_ext = 0.0;
  double theta = 0.0, nu_max = 0.0;
  double coeff_min = 0.0, coeff_max = 0.0;  // eigenvalue range of a_ij over nodes
  double w2q = 0.0;
  double err_inf = 0.0;  // |u_n - u_ref|_inf

  nlohmann::json to_json() const;
};

struct PipelineSummary {
  bool sup_ok = false;        // (a)
  bool exterior_ok = false;   // (b)
  bool theta_ok = false;      // (c)
  bool w2q_ok = false;        // (d)
  bool converge_ok = false;   // (e)
  bool coeff_ok = false;
  bool contraction_ok = false;
  bool holder_ok = false;
  double theta_star = 0.0;    // measured max_n theta_n
  double nu_bar = 0.0;        // certified bound on sup nu
  double nu_measured = 0.0;
  double w2q_ratio = 0.0;
  double delta_ext = 0.0;     // from the un-mollified datum
  int exterior_cells = 0;     // summed over stages; 0 means (b) held vacuously
  bool all() const {
    return sup_ok && exterior_ok && theta_ok && w2q_ok && converge_ok && coeff_ok && contraction_ok &&
           holder_ok;
  }
  nlohmann::json to_json() const;
};

struct PipelineResult {
  std::vector<StageRecord> stages;
  GridSolution reference;
  HolderAudit holder;
  PipelineSummary summary;
  bool complete = false;
  std::string error;

  nlohmann::json to_json() const;
  void write_csv(const std::string& path) const;
};

PipelineResult run_pipeline(const ScalarField& rho, const ParamSet& p, const DerivedConstants& c,
                            const PipelineOptions& opts = {});

}  // namespace pmc
