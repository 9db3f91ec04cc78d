#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace pmc {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Volume of the unit ball and area of the unit sphere in R^N.
double ball_volume(int N);
double sphere_area(int N);

struct ParamSet {
  int N = 3;
  double q = 4.0;
  double m = 1.2;
  double s = 6.0;
  double gamma = 1.0 / 24.0;

  double beta() const { return 2.0 * N / q; }
  double alpha_holder() const { return 1.0 - N / q; }
  double two_star() const { return 2.0 * N / (N + 2.0); }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  static ParamSet defaults(int N);
};

struct RadialGrid {
  std::vector<double> r;

  // Log-spaced nodes from r1 to rM; extra radii (support edges) are merged in
  // as exact nodes.
  static RadialGrid log_spaced(double r1, double rM, int per_decade,
                               const std::vector<double>& extra = {});
  std::size_t size() const { return r.size(); }
  void validate() const;
  // Index i with r[i] <= x < r[i+1], clamped to [0, size-2].
  std::size_t segment(double x) const;
};

using Mask = std::vector<std::uint8_t>;

// Radial L^p norm with weight sigma_{N-1} r^{N-1} dr. Composite trapezoid over
// segments whose two ends are masked; the inner disc [0, r1] is added with the
// local antiderivative of f(r1)(r/r1)^{-lead_power}. Returns +inf when
// p*lead_power >= N (non-integrable at the origin) or p = inf with an unbounded
// lead power.
double lq_norm(const RadialGrid& grid, const std::vector<double>& f, int N, double p,
               const Mask* mask = nullptr, double lead_power = 0.0);

struct CartesianGrid {
  int n = 2;         // nodes per axis
  double lo = -1.0;  // coordinate of node 0 on every axis
  double h = 1.0;

  static CartesianGrid box(double L, int n);
  double coord(int i) const { return lo + h * i; }
  std::size_t size() const { return std::size_t(n) * n * n; }
  std::size_t idx(int i, int j, int k) const {
    return (std::size_t(k) * n + j) * n + i;
  }
  double half_width() const { return 0.5 * h * (n - 1); }
  // Grid of cube centres.
  CartesianGrid cells() const { return CartesianGrid{n - 1, lo + 0.5 * h, h}; }
  bool on_boundary(int i, int j, int k) const {
    return i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1;
  }
};

struct ScalarField {
  CartesianGrid grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const CartesianGrid& g, double fill = 0.0)
      : grid(g), v(g.size(), fill) {}
  static ScalarField sample(const CartesianGrid& g,
                            const std::function<double(double, double, double)>& f);
  double& at(int i, int j, int k) { return v[grid.idx(i, j, k)]; }
  double at(int i, int j, int k) const { return v[grid.idx(i, j, k)]; }
};

// (sum |f|^p h^3)^{1/p} over masked nodes; p = inf gives the masked sup.
double lq_norm(const ScalarField& f, const Mask* mask, double p);

using Vec3 = std::array<double, 3>;
// xx, yy, zz, xy, xz, yz
using Sym3 = std::array<double, 6>;

std::vector<Vec3> gradient(const ScalarField& f);
std::vector<Sym3> hessian(const ScalarField& f);

// Summation in a fixed pairwise order, independent of any threading.
double pairwise_sum(const double* x, std::size_t n);
inline double pairwise_sum(const std::vector<double>& x) {
  return pairwise_sum(x.data(), x.size());
}

// 1D adaptive Gauss-Kronrod on [a, b] split at the given interior points.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const std::vector<double>& breaks = {}, double tol = 1e-13);

// Portable uniform draw in [a, b).
double uniform(std::mt19937_64& rng, double a, double b);

nlohmann::json grid_header(const CartesianGrid& g);
void write_field_csv(const std::string& path, const ScalarField& f);
void write_radial_csv(const std::string& path, const std::vector<std::string>& names,
                      const std::vector<const std::vector<double>*>& cols);

}  // namespace pmc
