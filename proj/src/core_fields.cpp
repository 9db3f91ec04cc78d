#include "pmc/core_fields.hpp"

#include <algorithm>
#include <queue>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pmc {

double ball_volume(int N) { return std::pow(kPi, 0.5 * N) / std::tgamma(0.5 * N + 1.0); }
double sphere_area(int N) { return N * ball_volume(N); }

void ParamSet::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (N < 3) fail("N: must be >= 3");
  if (!(q > N)) fail("q: must exceed N");
  if (!(m >= 1.0 && m <= two_star() + 1e-15)) fail("m: must lie in [1, 2N/(N+2)]");
  if (!(s > N)) fail("s: must exceed N");
  if (!(gamma > 0.0 && gamma < 1.0 / N)) fail("gamma: must lie in (0, 1/N)");
  double b = beta();
  if (!(b > 0.0 && b < 2.0)) fail("beta: 2N/q must lie in (0, 2)");
  double a = alpha_holder();
  if (!(a > 0.0 && a < 1.0)) fail("alpha_holder: 1 - N/q must lie in (0, 1)");
}

ParamSet ParamSet::defaults(int N) {
  ParamSet p;
  p.N = N;
  p.q = N + 1.0;
  p.m = 2.0 * N / (N + 2.0);
  // the Morrey chain needs Ns/(N+s) >= 2
  p.s = std::max(N + 1.0, 2.0 * N / (N - 2.0));
  p.gamma = 1.0 / (8.0 * N);
  return p;
}

RadialGrid RadialGrid::log_spaced(double r1, double rM, int per_decade,
                                  const std::vector<double>& extra) {
  if (!(r1 > 0.0 && rM > r1 && per_decade > 0))
    throw std::invalid_argument("radial grid: need 0 < r1 < rM and per_decade > 0");
  RadialGrid g;
  double l1 = std::log10(r1), lM = std::log10(rM);
  int n = int(std::ceil((lM - l1) * per_decade));
  for (int i = 0; i <= n; ++i) g.r.push_back(std::pow(10.0, l1 + (lM - l1) * i / n));
  g.r.front() = r1;
  g.r.back() = rM;
  for (double e : extra) {
    if (!(e > r1 && e < rM)) continue;
    auto it = std::lower_bound(g.r.begin(), g.r.end(), e);
    // snap a nearby node onto e rather than creating a sliver segment
    double lo = (it == g.r.begin()) ? -kInf : *(it - 1);
    double hi = *it;
    double tol = 0.25 * std::log(10.0) / per_decade;
    if (std::abs(std::log(hi / e)) < tol && it + 1 != g.r.end())
      *it = e;
    else if (std::isfinite(lo) && std::abs(std::log(e / lo)) < tol && it - 1 != g.r.begin())
      *(it - 1) = e;
    else
      g.r.insert(it, e);
  }
  g.validate();
  return g;
}

void RadialGrid::validate() const {
  if (r.size() < 2) throw std::invalid_argument("radial grid: need at least two nodes");
  if (!(r[0] > 0.0)) throw std::invalid_argument("radial grid: nodes must be positive");
  for (std::size_t i = 1; i < r.size(); ++i)
    if (!(r[i] > r[i - 1])) throw std::invalid_argument("radial grid: nodes not increasing");
}

std::size_t RadialGrid::segment(double x) const {
  auto it = std::upper_bound(r.begin(), r.end(), x);
  if (it == r.begin()) return 0;
  std::size_t i = std::size_t(it - r.begin()) - 1;
  return std::min(i, r.size() - 2);
}

double lq_norm(const RadialGrid& grid, const std::vector<double>& f, int N, double p,
               const Mask* mask, double lead_power) {
  const auto& r = grid.r;
  auto on = [&](std::size_t i) { return !mask || (*mask)[i]; };
  if (std::isinf(p)) {
    if (lead_power > 0.0 && on(0) && f[0] != 0.0) return kInf;
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
      if (on(i)) s = std::max(s, std::abs(f[i]));
    return s;
  }
  if (p * lead_power >= N && on(0) && f[0] != 0.0) return kInf;
  std::vector<double> parts;
  parts.reserve(r.size());
  if (on(0)) {
    double a = p * lead_power;
    parts.push_back(std::pow(std::abs(f[0]), p) * std::pow(r[0], N) / (N - a));
  }
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    if (!(on(i) && on(i + 1))) continue;
    double g0 = std::pow(std::abs(f[i]), p) * std::pow(r[i], N - 1);
    double g1 = std::pow(std::abs(f[i + 1]), p) * std::pow(r[i + 1], N - 1);
    parts.push_back(0.5 * (r[i + 1] - r[i]) * (g0 + g1));
  }
  return std::pow(sphere_area(N) * pairwise_sum(parts), 1.0 / p);
}

CartesianGrid CartesianGrid::box(double L, int n) {
  if (!(L > 0.0) || n < 3) throw std::invalid_argument("grid: need L > 0 and n >= 3");
  return CartesianGrid{n, -L, 2.0 * L / (n - 1)};
}

ScalarField ScalarField::sample(const CartesianGrid& g,
                                const std::function<double(double, double, double)>& f) {
  ScalarField out(g);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) out.at(i, j, k) = f(g.coord(i), g.coord(j), g.coord(k));
  return out;
}

double lq_norm(const ScalarField& f, const Mask* mask, double p) {
  std::vector<double> t;
  t.reserve(f.v.size());
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    t.push_back(std::isinf(p) ? std::abs(f.v[i]) : std::pow(std::abs(f.v[i]), p));
  }
  if (t.empty()) return 0.0;
  if (std::isinf(p)) return *std::max_element(t.begin(), t.end());
  double h3 = f.grid.h * f.grid.h * f.grid.h;
  return std::pow(pairwise_sum(t) * h3, 1.0 / p);
}

namespace {

// first derivative along axis a at node (i,j,k)
double d1(const ScalarField& f, int i, int j, int k, int a) {
  const auto& g = f.grid;
  int c[3] = {i, j, k};
  auto val = [&](int off) {
    int d[3] = {c[0], c[1], c[2]};
    d[a] += off;
    return f.at(d[0], d[1], d[2]);
  };
  if (c[a] == 0) return (-3 * val(0) + 4 * val(1) - val(2)) / (2 * g.h);
  if (c[a] == g.n - 1) return (3 * val(0) - 4 * val(-1) + val(-2)) / (2 * g.h);
  return (val(1) - val(-1)) / (2 * g.h);
}

double d2(const ScalarField& f, int i, int j, int k, int a) {
  const auto& g = f.grid;
  int c[3] = {i, j, k};
  auto val = [&](int off) {
    int d[3] = {c[0], c[1], c[2]};
    d[a] += off;
    return f.at(d[0], d[1], d[2]);
  };
  double h2 = g.h * g.h;
  if (c[a] == 0) return (2 * val(0) - 5 * val(1) + 4 * val(2) - val(3)) / h2;
  if (c[a] == g.n - 1) return (2 * val(0) - 5 * val(-1) + 4 * val(-2) - val(-3)) / h2;
  return (val(1) - 2 * val(0) + val(-1)) / h2;
}

}  // namespace

std::vector<Vec3> gradient(const ScalarField& f) {
  const auto& g = f.grid;
  std::vector<Vec3> out(g.size());
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i)
        out[g.idx(i, j, k)] = {d1(f, i, j, k, 0), d1(f, i, j, k, 1), d1(f, i, j, k, 2)};
  return out;
}

std::vector<Sym3> hessian(const ScalarField& f) {
  const auto& g = f.grid;
  auto grad = gradient(f);
  // mixed terms: derivative of the gradient component, symmetrised
  auto mixed = [&](int i, int j, int k, int a, int b) {
    int c[3] = {i, j, k};
    auto comp = [&](int off) {
      int d[3] = {c[0], c[1], c[2]};
      d[b] += off;
      return grad[g.idx(d[0], d[1], d[2])][a];
    };
    if (c[b] == 0) return (-3 * comp(0) + 4 * comp(1) - comp(2)) / (2 * g.h);
    if (c[b] == g.n - 1) return (3 * comp(0) - 4 * comp(-1) + comp(-2)) / (2 * g.h);
    return (comp(1) - comp(-1)) / (2 * g.h);
  };
  std::vector<Sym3> out(g.size());
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        Sym3 H;
        H[0] = d2(f, i, j, k, 0);
        H[1] = d2(f, i, j, k, 1);
        H[2] = d2(f, i, j, k, 2);
        H[3] = 0.5 * (mixed(i, j, k, 0, 1) + mixed(i, j, k, 1, 0));
        H[4] = 0.5 * (mixed(i, j, k, 0, 2) + mixed(i, j, k, 2, 0));
        H[5] = 0.5 * (mixed(i, j, k, 1, 2) + mixed(i, j, k, 2, 1));
        out[g.idx(i, j, k)] = H;
      }
  return out;
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

namespace {

struct Piece {
  double a, b, val, err, l1;
  bool operator<(const Piece& o) const { return err < o.err; }
};

// One GK31 panel. Boost leaves the error in [-1, 1] units; rescale it here.
Piece gk_panel(const std::function<double(double)>& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double err = 0.0, l1 = 0.0;
  double val = GK::integrate(f, a, b, 0, 0.0, &err, &l1);
  return {a, b, val, 0.5 * (b - a) * err, l1};
}

}  // namespace

// Global bisection of the worst panel, capped at a fixed panel budget.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const std::vector<double>& breaks, double tol) {
  if (!(b > a)) return 0.0;
  std::vector<double> pts{a};
  for (double c : breaks)
    if (c > a && c < b) pts.push_back(c);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  std::priority_queue<Piece> heap;
  double val = 0.0, err = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (!(pts[i + 1] > pts[i])) continue;
    Piece p = gk_panel(f, pts[i], pts[i + 1]);
    val += p.val;
    err += p.err;
    l1 += p.l1;
    heap.push(p);
  }
  const double floor = 50.0 * std::numeric_limits<double>::epsilon();
  for (int it = 0; it < 4000 && !heap.empty(); ++it) {
    if (err <= std::max(tol, floor) * l1 || !std::isfinite(val)) break;
    Piece p = heap.top();
    double m = 0.5 * (p.a + p.b);
    if (!(m > p.a && m < p.b)) break;
    heap.pop();
    Piece lo = gk_panel(f, p.a, m), hi = gk_panel(f, m, p.b);
    val += lo.val + hi.val - p.val;
    err += lo.err + hi.err - p.err;
    l1 += lo.l1 + hi.l1 - p.l1;
    heap.push(lo);
    heap.push(hi);
  }
  // re-add in a fixed order so the sum does not carry update drift
  std::vector<Piece> all;
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(), [](const Piece& x, const Piece& y) { return x.a < y.a; });
  std::vector<double> parts;
  for (const auto& p : all) parts.push_back(p.val);
  return pairwise_sum(parts);
}

double uniform(std::mt19937_64& rng, double a, double b) {
  double u = double(rng() >> 11) * 0x1.0p-53;
  return a + (b - a) * u;
}

nlohmann::json grid_header(const CartesianGrid& g) {
  return {{"dimension", 3}, {"nodes_per_axis", g.n}, {"lo", g.lo}, {"h", g.h},
          {"half_width", g.half_width()}};
}

void write_field_csv(const std::string& path, const ScalarField& f) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << "x,y,z,value\n";
  char buf[128];
  const auto& g = f.grid;
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.17g\n", g.coord(i), g.coord(j),
                      g.coord(k), f.at(i, j, k));
        os << buf;
      }
}

void write_radial_csv(const std::string& path, const std::vector<std::string>& names,
                      const std::vector<const std::vector<double>*>& cols) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  for (std::size_t c = 0; c < names.size(); ++c) os << (c ? "," : "") << names[c];
  os << "\n";
  char buf[64];
  std::size_t n = cols.empty() ? 0 : cols[0]->size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", (*cols[c])[i]);
      os << (c ? "," : "") << buf;
    }
    os << "\n";
  }
}

}  // namespace pmc
