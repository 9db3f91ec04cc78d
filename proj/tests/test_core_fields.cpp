#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "pmc/core_fields.hpp"

using namespace pmc;

TEST_CASE("ball volume and sphere area") {
  CHECK(ball_volume(3) == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-15));
  CHECK(ball_volume(4) == doctest::Approx(kPi * kPi / 2.0).epsilon(1e-15));
  CHECK(sphere_area(3) == doctest::Approx(4.0 * kPi).epsilon(1e-15));
}

TEST_CASE("ParamSet invariants") {
  for (int N : {3, 4, 5}) CHECK_NOTHROW(ParamSet::defaults(N).validate());
  ParamSet p = ParamSet::defaults(3);
  CHECK(p.beta() == doctest::Approx(1.5));
  CHECK(p.alpha_holder() == doctest::Approx(0.25));
  CHECK(p.two_star() == doctest::Approx(1.2));

  auto expect_field = [](ParamSet bad, const std::string& field) {
    try {
      bad.validate();
      FAIL("accepted invalid " << field);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).rfind(field, 0) == 0);
    }
  };
  ParamSet b = p;
  b.q = 3.0;
  expect_field(b, "q");
  b = p;
  b.N = 2;
  expect_field(b, "N");
  b = p;
  b.m = 1.3;
  expect_field(b, "m");
  b = p;
  b.s = 2.5;
  expect_field(b, "s");
  b = p;
  b.gamma = 0.4;
  expect_field(b, "gamma");
}

TEST_CASE("radial grid merges support edges exactly") {
  auto g = RadialGrid::log_spaced(1e-6, 1e3, 40, {0.37, 1.0});
  CHECK(std::find(g.r.begin(), g.r.end(), 0.37) != g.r.end());
  CHECK(std::find(g.r.begin(), g.r.end(), 1.0) != g.r.end());
  CHECK_NOTHROW(g.validate());
  CHECK(g.segment(0.5) < g.size() - 1);
  CHECK(g.r[g.segment(0.5)] <= 0.5);
  CHECK_THROWS_AS(RadialGrid::log_spaced(1.0, 0.5, 10), std::invalid_argument);
}

TEST_CASE("radial L^p norms") {
  auto g = RadialGrid::log_spaced(1e-6, 1.0, 400);
  std::vector<double> zero(g.size(), 0.0), one(g.size(), 1.0);
  CHECK(lq_norm(g, zero, 3, 2.0) == 0.0);
  // volume of the unit ball by quadrature
  CHECK(lq_norm(g, one, 3, 1.0) == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-4));
  // r^{-1.5} on (0,1] is not in L^2(R^3): 2 * 1.5 >= 3
  std::vector<double> sing(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) sing[i] = std::pow(g.r[i], -1.5);
  CHECK(std::isinf(lq_norm(g, sing, 3, 2.0, nullptr, 1.5)));
  // r^{-1} is in L^2(R^3): ||.||_2^2 = 4 pi
  std::vector<double> s1(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) s1[i] = 1.0 / g.r[i];
  double n2 = lq_norm(g, s1, 3, 2.0, nullptr, 1.0);
  CHECK(n2 * n2 == doctest::Approx(4.0 * kPi).epsilon(1e-4));
  Mask none(g.size(), 0);
  CHECK(lq_norm(g, one, 3, 2.0, &none) == 0.0);
  CHECK(lq_norm(g, s1, 3, kInf, nullptr, 0.0) == doctest::Approx(1e6));
}

TEST_CASE("cartesian field norms and masks") {
  auto g = CartesianGrid::box(1.0, 11);
  CHECK(g.h == doctest::Approx(0.2));
  CHECK(g.half_width() == doctest::Approx(1.0));
  ScalarField f(g, 2.0);
  Mask m(g.size(), 0);
  CHECK(lq_norm(f, &m, 2.0) == 0.0);
  m[g.idx(3, 4, 5)] = 1;
  CHECK(lq_norm(f, &m, kInf) == 2.0);
  CHECK(lq_norm(f, &m, 1.0) == doctest::Approx(2.0 * 0.008));
  CHECK(lq_norm(f, nullptr, 1.0) == doctest::Approx(2.0 * 0.008 * 1331));
}

TEST_CASE("finite differences are exact on quadratics") {
  auto g = CartesianGrid::box(1.0, 9);
  auto f = ScalarField::sample(g, [](double x, double y, double z) {
    return 1.0 + 2 * x - y + 0.5 * z + x * x - 3 * x * y + 2 * y * z + 0.25 * z * z;
  });
  auto G = gradient(f);
  auto H = hessian(f);
  for (int k = 0; k < g.n; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        double x = g.coord(i), y = g.coord(j), z = g.coord(k);
        auto id = g.idx(i, j, k);
        CHECK(G[id][0] == doctest::Approx(2 + 2 * x - 3 * y).epsilon(1e-10));
        CHECK(G[id][1] == doctest::Approx(-1 - 3 * x + 2 * z).epsilon(1e-10));
        CHECK(G[id][2] == doctest::Approx(0.5 + 2 * y + 0.5 * z).epsilon(1e-10));
        CHECK(H[id][0] == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(H[id][1] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(H[id][2] == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(H[id][3] == doctest::Approx(-3.0).epsilon(1e-9));
        CHECK(H[id][4] == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(H[id][5] == doctest::Approx(2.0).epsilon(1e-9));
      }
}

TEST_CASE("pairwise sum and quadrature") {
  std::vector<double> x(1001);
  std::iota(x.begin(), x.end(), 0.0);
  CHECK(pairwise_sum(x) == 500500.0);
  CHECK(integrate([](double t) { return t * t; }, 0.0, 1.0) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  CHECK(integrate([](double t) { return std::abs(t - 0.3); }, 0.0, 1.0, {0.3}) ==
        doctest::Approx(0.045 + 0.245).epsilon(1e-14));
}

TEST_CASE("uniform draws are reproducible and in range") {
  std::mt19937_64 a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    double x = uniform(a, -2.0, 3.0);
    CHECK(x >= -2.0);
    CHECK(x < 3.0);
    CHECK(x == uniform(b, -2.0, 3.0));
  }
}
