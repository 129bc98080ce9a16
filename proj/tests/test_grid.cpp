#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smoothclt/grid.hpp"

#include <cmath>
#include <sstream>

using namespace smoothclt;

namespace {

GridDensityd sampled(double x0, double h, int count, auto fn) {
  ArrayX<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = fn(x0 + h * i);
  return GridDensityd(x0, h, v);
}

}  // namespace

TEST_CASE("integration is exact on cubics for odd and even node counts") {
  for (int count : {5, 6, 7, 10, 101}) {
    auto p = sampled(-1.0, 2.0 / (count - 1), count, [](double x) { return 1 + x - 2 * x * x + x * x * x; });
    // int_{-1}^{1} (1 + x - 2x^2 + x^3) dx = 2 - 4/3
    CHECK(p.total_mass() == doctest::Approx(2.0 - 4.0 / 3.0).epsilon(1e-13));
  }
}

TEST_CASE("partial ranges integrate a quadratic exactly") {
  auto p = sampled(0.0, 0.1, 41, [](double x) { return x * x; });
  const double lo = 0.537;
  const double hi = 3.21;
  const double got = p.integrate([](double, double v) { return v; }, lo, hi);
  CHECK(got == doctest::Approx((hi * hi * hi - lo * lo * lo) / 3).epsilon(1e-13));
}

TEST_CASE("breaks make step functions integrate exactly") {
  // 1/2 on (-1, 1) sampled on a grid whose nodes miss the jumps.
  const double x0 = -3.0;
  const double h = 0.07;
  const int count = 87;
  ArrayX<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = std::abs(x0 + h * i) < 1 ? 0.5 : 0.0;
  GridDensityd p(x0, h, v, {{-1.0, 0.0, 0.5}, {1.0, 0.5, 0.0}});
  CHECK(p.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
  const double m2 = p.integrate([](double x, double pv) { return x * x * pv; });
  CHECK(m2 == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(p.value_at(1.0, Side::left) == 0.5);
  CHECK(p.value_at(1.0, Side::right) == 0.0);
  CHECK(p.value_at(0.333, Side::left) == doctest::Approx(0.5));
  CHECK(p.cell_masses().sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("a break on a node keeps both one-sided limits") {
  ArrayX<double> v(9);
  for (int i = 0; i < 9; ++i) v[i] = i < 4 ? 1.0 : (i == 4 ? 1.5 : 2.0);
  GridDensityd p(0.0, 0.25, v, {{1.0, 1.0, 2.0}});
  CHECK(p.total_mass() == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(p.sup_over_knots([](double, double pv) { return pv; }) == 2.0);
}

TEST_CASE("pair integration rejects mismatched grids") {
  auto p = sampled(0.0, 0.1, 11, [](double) { return 1.0; });
  auto q = sampled(0.0, 0.2, 11, [](double) { return 1.0; });
  CHECK_THROWS_AS(GridDensityd::integrate_pair(p, q, [](double, double a, double b) { return a * b; }),
                  PreconditionError);
}

TEST_CASE("text serialization round-trips") {
  auto p = sampled(-2.0, 0.5, 9, [](double x) { return std::exp(-x * x); });
  std::stringstream ss;
  write_grid_density(ss, p);
  const auto first = ss.str().substr(0, ss.str().find('\n'));
  CHECK(first.rfind("# x0", 0) == 0);
  auto q = read_grid_density<double>(ss);
  CHECK(q.same_grid(p));
  CHECK((q.values() - p.values()).abs().maxCoeff() == 0.0);
}
