#include "pmc/mollify_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace pmc {

ScalarField mollify(const ScalarField& rho, int n) {
  if (n < 1) throw std::invalid_argument("mollify: n must be >= 1");
  const auto& g = rho.grid;
  const double eps = 1.0 / n;
  const int kr = int(std::floor(eps / g.h * (1.0 + 1e-12)));
  // kernel stencil
  std::vector<std::array<int, 3>> off;
  std::vector<double> wt;
  for (int c = -kr; c <= kr; ++c)
    for (int b = -kr; b <= kr; ++b)
      for (int a = -kr; a <= kr; ++a) {
        double s2 = (double(a) * a + double(b) * b + double(c) * c) * g.h * g.h / (eps * eps);
        if (s2 >= 1.0) continue;
        off.push_back({a, b, c});
        wt.push_back(std::exp(-1.0 / (1.0 - s2)));
      }
  if (off.empty()) {  // eps below the spacing: the kernel is a single node
    off.push_back({0, 0, 0});
    wt.push_back(1.0);
  }
  double mass = pairwise_sum(wt);
  for (double& w : wt) w /= mass * g.h * g.h * g.h;
  const double h3 = g.h * g.h * g.h;

  ScalarField out(g);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        double r = rho.at(i, j, k);
        if (r == 0.0) continue;
        int reach = off.size() == 1 ? 0 : kr;
        if (i - reach < 1 || j - reach < 1 || k - reach < 1 || i + reach > g.n - 2 || j + reach > g.n - 2 ||
            k + reach > g.n - 2)
          throw std::invalid_argument("mollify: kernel support reaches the box boundary (need margin " +
                                      std::to_string(eps) + ")");
        for (std::size_t q = 0; q < off.size(); ++q)
          out.at(i + off[q][0], j + off[q][1], k + off[q][2]) += r * wt[q] * h3;
      }
  return out;
}

namespace {

// JSON has no infinity
nlohmann::json num(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

Mask window_mask(const CartesianGrid& g, double window) {
  Mask m(g.size(), 0);
  for (int k = 1; k + 1 < g.n; ++k)
    for (int j = 1; j + 1 < g.n; ++j)
      for (int i = 1; i + 1 < g.n; ++i) {
        double a = std::max({std::abs(g.coord(i)), std::abs(g.coord(j)), std::abs(g.coord(k))});
        if (a <= window + 1e-12 * g.h) m[g.idx(i, j, k)] = 1;
      }
  return m;
}

double vnorm(const Vec3& z) { return std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]); }

// squared distance transform along one line (Felzenszwalb-Huttenlocher)
void edt_line(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (std::isinf(f[q])) continue;
    if (std::isinf(f[v[k]])) {
      v[k] = q;
      continue;
    }
    double s;
    while (true) {
      s = ((f[q] + double(q) * q) - (f[v[k]] + double(v[k]) * v[k])) / (2.0 * q - 2.0 * v[k]);
      if (s <= z[k] && k > 0) --k;
      else break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    d[q] = std::isinf(f[v[k]]) ? kInf : (double(q) - v[k]) * (q - v[k]) + f[v[k]];
  }
}

// squared distance (in grid units) from every node to the nearest node with mask set
std::vector<double> distance_sq(const CartesianGrid& g, const Mask& seed) {
  const int n = g.n;
  std::vector<double> D(g.size());
  for (std::size_t i = 0; i < D.size(); ++i) D[i] = seed[i] ? 0.0 : kInf;
  std::vector<double> f(n), d(n), z;
  std::vector<int> v;
  const std::size_t stride[3] = {1, std::size_t(n), std::size_t(n) * n};
  for (int ax = 0; ax < 3; ++ax) {
    const int a1 = (ax + 1) % 3, a2 = (ax + 2) % 3;
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        std::size_t base = b * stride[a1] + c * stride[a2];
        for (int q = 0; q < n; ++q) f[q] = D[base + q * stride[ax]];
        edt_line(f.data(), d.data(), n, v, z);
        for (int q = 0; q < n; ++q) D[base + q * stride[ax]] = d[q];
      }
  }
  return D;
}

}  // namespace

double w2q_norm(const ScalarField& u, double q, double window) {
  const auto& g = u.grid;
  auto mask = window_mask(g, window);
  auto G = gradient(u);
  auto H = hessian(u);
  ScalarField gn(g), hn(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    gn.v[i] = vnorm(G[i]);
    const auto& s = H[i];
    hn.v[i] = std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + 2 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]));
  }
  double a = lq_norm(u, &mask, q), b = lq_norm(gn, &mask, q), c = lq_norm(hn, &mask, q);
  return std::pow(std::pow(a, q) + std::pow(b, q) + std::pow(c, q), 1.0 / q);
}

double HolderAudit::sup() const {
  double m = 0.0;
  for (double s : seminorm) m = std::max(m, s);
  return m;
}

HolderAudit holder_audit(const ScalarField& u, double alpha) {
  const auto& g = u.grid;
  HolderAudit out;
  out.alpha = alpha;
  auto G = gradient(u);
  for (int step = 1; 2 * step < g.n - 2; step *= 2) {
    double s = step * g.h, best = 0.0;
    for (int k = 1; k + 1 < g.n; ++k)
      for (int j = 1; j + 1 < g.n; ++j)
        for (int i = 1; i + 1 < g.n; ++i) {
          const auto& a = G[g.idx(i, j, k)];
          int c[3] = {i, j, k};
          for (int ax = 0; ax < 3; ++ax) {
            int d[3] = {c[0], c[1], c[2]};
            d[ax] += step;
            if (d[ax] > g.n - 2) continue;
            const auto& b = G[g.idx(d[0], d[1], d[2])];
            Vec3 diff{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
            best = std::max(best, vnorm(diff));
          }
        }
    out.scales.push_back(s);
    out.seminorm.push_back(best / std::pow(s, alpha));
  }
  out.finite = !out.seminorm.empty();
  for (double x : out.seminorm) out.finite = out.finite && std::isfinite(x);
  return out;
}

nlohmann::json StageRecord::to_json() const {
  return {{"n", n},
          {"eps", eps},
          {"rho_1", rho_1},
          {"rho_m", rho_m},
          {"rho_q", rho_q},
          {"sup_u", sup_u},
          {"sup_bound", sup_bound},
          {"collar", collar},
          {"exterior_cells", exterior_cells},
          {"exterior_grad", exterior_grad},
          {"delta_ext", delta_ext},
          {"theta", theta},
          {"nu_max", nu_max},
          {"coeff_min", coeff_min},
          {"coeff_max", coeff_max},
          {"w2q_norm", w2q},
          {"err_inf", err_inf},
          {"solver", sol.diagnostics()}};
}

nlohmann::json PipelineSummary::to_json() const {
  return {{"a_sup_bound", sup_ok},     {"b_exterior", exterior_ok},   {"c_theta", theta_ok},
          {"d_w2q_uniform", w2q_ok},   {"e_convergence", converge_ok}, {"coeff_ellipticity", coeff_ok},
          {"contraction", contraction_ok}, {"holder_finite", holder_ok}, {"theta_star", theta_star},
          {"nu_bar", num(nu_bar)},     {"nu_bar_finite", std::isfinite(nu_bar)},
          {"nu_measured", nu_measured}, {"w2q_ratio", num(w2q_ratio)}, {"delta_ext", delta_ext},
          {"exterior_cells", exterior_cells}, {"all", all()}};
}

nlohmann::json PipelineResult::to_json() const {
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : stages) st.push_back(s.to_json());
  return {{"complete", complete},
          {"error", error},
          {"stages", st},
          {"reference", reference.diagnostics()},
          {"holder", {{"alpha", holder.alpha}, {"scales", holder.scales}, {"seminorm", holder.seminorm},
                      {"finite", holder.finite}}},
          {"summary", summary.to_json()}};
}

void PipelineResult::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os.precision(17);
  os << "n,sup_u,exterior_grad,theta,w2q_norm,err_inf\n";
  for (const auto& s : stages)
    os << s.n << "," << s.sup_u << "," << s.exterior_grad << "," << s.theta << "," << s.w2q << ","
       << s.err_inf << "\n";
}

PipelineResult run_pipeline(const ScalarField& rho, const ParamSet& p, const DerivedConstants& c,
                            const PipelineOptions& opts) {
  p.validate();
  if (p.N != 3) throw std::invalid_argument("pipeline: grid runs need N = 3");
  for (std::size_t i = 1; i < opts.n_list.size(); ++i)
    if (opts.n_list[i] <= opts.n_list[i - 1]) throw std::invalid_argument("pipeline: n_list must increase");
  const auto& g = rho.grid;
  PipelineResult res;
  double rho_q0 = lq_norm(rho, nullptr, p.q), rho_m0 = lq_norm(rho, nullptr, p.m),
         rho_10 = lq_norm(rho, nullptr, 1.0);

  res.reference = minimize_energy(rho, opts.solver);
  if (!res.reference.converged) {
    res.error = "reference solve: " + res.reference.message;
    return res;
  }
  auto cells = g.cells();
  for (int n : opts.n_list) {
    StageRecord st;
    st.n = n;
    st.eps = 1.0 / n;
    try {
      st.rho_n = mollify(rho, n);
    } catch (const std::exception& e) {
      res.error = "stage n=" + std::to_string(n) + ": " + e.what();
      return res;
    }
    st.rho_1 = lq_norm(st.rho_n, nullptr, 1.0);
    st.rho_m = lq_norm(st.rho_n, nullptr, p.m);
    st.rho_q = lq_norm(st.rho_n, nullptr, p.q);
    st.sol = minimize_energy(st.rho_n, opts.solver);
    if (!st.sol.converged) {
      res.error = "stage n=" + std::to_string(n) + ": " + st.sol.message;
      res.stages.push_back(std::move(st));
      return res;
    }
    // Step 1
    st.sup_u = lq_norm(st.sol.u, nullptr, kInf);
    st.sup_bound = sup_bound(p, st.rho_m);
    // Step 2: cells whose centre is at distance >= R' from supp rho_n
    st.collar = std::sqrt(opts.Rbar * opts.Rbar + 4.0 * st.sup_bound * st.sup_bound);
    st.delta_ext = exterior_delta(p, c, st.rho_m, opts.Rbar);
    // a cell is exterior when all of its corners are at distance >= R' from supp rho_n
    Mask seed(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) seed[i] = st.rho_n.v[i] != 0.0;
    auto D2 = distance_sq(g, seed);
    const double R2 = st.collar * st.collar / (g.h * g.h);
    for (int k = 0; k < cells.n; ++k)
      for (int j = 0; j < cells.n; ++j)
        for (int i = 0; i < cells.n; ++i) {
          bool inside = false;
          for (int c3 = 0; c3 < 8 && !inside; ++c3)
            inside = D2[g.idx(i + (c3 & 1), j + ((c3 >> 1) & 1), k + ((c3 >> 2) & 1))] < R2;
          if (inside) continue;
          ++st.exterior_cells;
          double v = st.sol.v.at(i, j, k);
          st.exterior_grad = std::max(st.exterior_grad, std::sqrt(std::max(0.0, 1.0 - v * v)));
        }
    // Step 3
    st.theta = st.sol.max_grad;
    st.nu_max = 1.0 / std::sqrt((1.0 - st.theta) * (1.0 + st.theta));
    // Step 5 coefficients at nodes
    auto G = gradient(st.sol.u);
    st.coeff_min = kInf;
    st.coeff_max = -kInf;
    for (const auto& z : G) {
      Eigen::Vector3d pz(z[0], z[1], z[2]);
      Eigen::Matrix3d a = (1.0 - pz.squaredNorm()) * Eigen::Matrix3d::Identity() + pz * pz.transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(a, Eigen::EigenvaluesOnly);
      st.coeff_min = std::min(st.coeff_min, es.eigenvalues().minCoeff());
      st.coeff_max = std::max(st.coeff_max, es.eigenvalues().maxCoeff());
    }
    st.w2q = w2q_norm(st.sol.u, p.q, opts.window);
    double e = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) e = std::max(e, std::abs(st.sol.u.v[i] - res.reference.u.v[i]));
    st.err_inf = e;
    res.stages.push_back(std::move(st));
  }
  res.complete = true;

  auto& S = res.summary;
  S.sup_ok = S.exterior_ok = S.coeff_ok = S.contraction_ok = true;
  double wmin = kInf, wmax = 0.0;
  for (const auto& st : res.stages) {
    S.sup_ok = S.sup_ok && st.sup_u <= st.sup_bound;
    S.exterior_ok = S.exterior_ok && st.exterior_grad <= st.delta_ext;
    S.coeff_ok = S.coeff_ok && st.coeff_min >= (1.0 - st.theta * st.theta) - 1e-12 && st.coeff_max <= 1.0 + 1e-12;
    const double rt = 1e-12;
    S.contraction_ok = S.contraction_ok && st.rho_1 <= rho_10 * (1 + rt) && st.rho_m <= rho_m0 * (1 + rt) &&
                       st.rho_q <= rho_q0 * (1 + rt);
    S.exterior_cells += st.exterior_cells;
    S.theta_star = std::max(S.theta_star, st.theta);
    S.nu_measured = std::max(S.nu_measured, st.nu_max);
    wmin = std::min(wmin, st.w2q);
    wmax = std::max(wmax, st.w2q);
  }
  // certified sup nu: nu0 from the exterior bound, norms of rho (mollified norms are smaller)
  double delta = exterior_delta(p, c, rho_m0, opts.Rbar);
  S.delta_ext = delta;
  double nu0 = 1.0 / std::sqrt(std::max(1e-300, (1.0 - delta) * (1.0 + delta)));
  S.nu_bar = nu_bar(p, c, std::max(nu0, 1.0 + 1e-9), sup_bound(p, rho_m0), rho_q0, opts.Rbar);
  S.theta_ok = S.theta_star < 1.0 && S.nu_measured <= S.nu_bar;
  S.w2q_ratio = wmin > 0.0 ? wmax / wmin : (wmax == 0.0 ? 1.0 : kInf);
  S.w2q_ok = S.w2q_ratio <= opts.w2q_factor;
  S.converge_ok = !res.stages.empty();
  for (std::size_t i = 1; i < res.stages.size(); ++i)
    S.converge_ok = S.converge_ok && res.stages[i].err_inf <= res.stages[i - 1].err_inf;
  S.converge_ok = S.converge_ok && res.stages.back().err_inf < opts.conv_tol;
  res.holder = holder_audit(res.stages.back().sol.u, 1.0 - double(p.N) / p.q - 0.1);
  S.holder_ok = res.holder.finite;
  return res;
}

}  // namespace pmc
