#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smoothclt/model.hpp"
#include "smoothclt/rng.hpp"

#include <cmath>
#include <numbers>

using namespace smoothclt;

namespace {

constexpr double kPiD = std::numbers::pi;

// Plain composite Simpson on [a, b] with m panels, independent of GridDensity.
double simpson(auto f, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4 : 2) * f(a + h * i);
  return s * h / 3;
}

}  // namespace

TEST_CASE("uniform width 2 has a CF vanishing at every nonzero multiple of pi") {
  const auto noise = make_noise<double>("uniform_width", {{{"w", 2.0}}, {}});
  CHECK(noise.family == NoiseFamily::uniform_width);
  CHECK(noise.cf(1.0).real() == doctest::Approx(std::sin(1.0)));
  for (int k = 1; k <= 50; ++k) {
    CHECK(std::abs(noise.cf(kPiD * k)) < 1e-15);
    CHECK(std::abs(noise.cf(-kPiD * k)) < 1e-15);
  }
  CHECK(noise.second_moment == doctest::Approx(4.0 / 12.0));
}

TEST_CASE("gaussian CF at pi") {
  const auto noise = make_noise<double>("gaussian", {{{"sigma", 1.0}}, {}});
  CHECK(noise.cf(kPiD).real() == doctest::Approx(std::exp(-kPiD * kPiD / 2)).epsilon(1e-14));
  CHECK(noise.cf(kPiD).real() == doctest::Approx(0.0072).epsilon(0.01));
}

TEST_CASE("triangular CF support radius equals 1/beta3 of the +-1 step") {
  const auto noise = make_noise<double>("triangular_cf", {{{"T", 1.0}}, {}});
  REQUIRE(noise.cf_support_radius.has_value());
  CHECK(*noise.cf_support_radius == 1.0);
  CHECK(*noise.cf_support_radius == doctest::Approx(1 / beta3_of(LatticeLaw<double>::bernoulli())));
  CHECK(noise.cf(1.0).real() == 0.0);
  CHECK(noise.cf(0.25).real() == doctest::Approx(0.75));
  CHECK_FALSE(noise.finite_second_moment());
}

TEST_CASE("beta3 of lattice laws") {
  CHECK(beta3_of(LatticeLaw<double>::bernoulli()) == 1.0);
  CHECK(beta3_of(LatticeLaw<double>({{-2, 0.25}, {0, 0.5}, {2, 0.25}})) == doctest::Approx(4.0));
  CHECK(beta3_of(LatticeLaw<double>({{0, 1.0}})) == 0.0);
}

TEST_CASE("bernoulli step moments") {
  const auto b = LatticeLaw<double>::bernoulli();
  CHECK(b.mean() == 0.0);
  CHECK(b.variance() == 1.0);
}

TEST_CASE("factory rejects bad input") {
  CHECK_THROWS_AS(make_noise<double>("cauchy", {{{"s", 1.0}}, {}}), PreconditionError);
  CHECK_THROWS_AS(make_noise<double>("uniform_width", {{{"w", -1.0}}, {}}), PreconditionError);
  CHECK_THROWS_AS(make_noise<double>("gaussian", {{{"sigma", 0.0}}, {}}), PreconditionError);
  CHECK_THROWS_AS(make_noise<double>("triangular_cf", {{{"T", 0.0}}, {}}), PreconditionError);
  CHECK_THROWS_AS(LatticeLaw<double>({{0, 0.6}, {1, 0.6}}), PreconditionError);
  CHECK_THROWS_AS(make_scenario(gaussian_noise(1.0), LatticeLaw<double>::bernoulli(), {4, 4}), PreconditionError);
}

TEST_CASE("closed-form CF derivatives match central differences") {
  CounterRng rng(2024, 1);
  const std::vector<NoiseModel<double>> noises = {gaussian_noise(1.0), gaussian_noise(0.4), uniform_noise(2.0),
                                                  uniform_noise(0.7), triangular_cf_noise(1.0),
                                                  triangular_cf_noise(3.0)};
  for (const auto& noise : noises) {
    int checked = 0;
    while (checked < 200) {
      const double t = 20 * rng.uniform() - 10;
      const double h = 1e-5;
      // Skip points near the kinks of the triangle.
      if (noise.family == NoiseFamily::triangular_cf &&
          (std::abs(t) < 10 * h || std::abs(std::abs(t) - noise.parameter) < 10 * h)) {
        continue;
      }
      const auto fd = (noise.cf(t + h) - noise.cf(t - h)) / (2 * h);
      const auto exact = noise.cf_derivative(t);
      const double scale = std::max(std::abs(exact), 1e-3);
      CHECK(std::abs(fd - exact) / scale <= 1e-5);
      ++checked;
    }
  }
}

TEST_CASE("noise densities have unit mass and the declared second moment") {
  for (const auto& noise : {gaussian_noise(1.0), gaussian_noise(0.5), uniform_noise(2.0), uniform_noise(1.0)}) {
    double lo = -noise.tail_radius;
    double hi = noise.tail_radius;
    if (noise.family == NoiseFamily::gaussian) {
      lo = -12 * noise.parameter;
      hi = 12 * noise.parameter;
    }
    // One-sided values at the ends so a box density is sampled from inside.
    auto inner = [&](double x) { return noise.density_at(x, x < 0 ? Side::right : Side::left); };
    const auto mass = simpson(inner, lo, hi, 20000);
    const auto m2 = simpson([&](double x) { return x * x * inner(x); }, lo, hi, 20000);
    INFO(noise.label());
    CHECK(std::abs(mass - 1) <= 1e-8);
    CHECK(std::abs(m2 - noise.second_moment) <= 1e-8);
  }
}

TEST_CASE("triangular CF density is a nonnegative unit-mass law") {
  const auto noise = triangular_cf_noise(1.0);
  double mass = 0;
  double lowest = 1;
  for (int i = -2000000; i <= 2000000; ++i) {
    const double v = noise.density(i * 0.01);
    lowest = std::min(lowest, v);
    mass += v * 0.01;
  }
  CHECK(lowest >= 0);
  // Tails beyond |x| = 20000 carry about 2/(pi * 20000) of the mass.
  CHECK(mass == doctest::Approx(1 - 2 / (kPiD * 20000)).epsilon(1e-6));
  CHECK(noise.density(0.0) == doctest::Approx(1 / (2 * kPiD)));
}

TEST_CASE("custom CF tables interpolate and differentiate numerically") {
  std::vector<std::array<double, 3>> table;
  for (int i = 0; i <= 100; ++i) {
    const double t = 0.02 * i;
    table.push_back({t, std::max(0.0, 1 - t / 2), 0.0});
  }
  const auto noise = make_noise<double>("custom", {{{"second_moment", 1.0}}, table});
  CHECK(noise.cf(0.5).real() == doctest::Approx(0.75));
  CHECK(noise.cf(-0.5).real() == doctest::Approx(0.75));
  CHECK(noise.cf(3.0).real() == 0.0);
  CHECK(noise.cf_derivative(0.5).real() == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(noise.cf_support_radius.value() == 2.0);
}

TEST_CASE("lattice sums match the binomial law") {
  const auto atoms = lattice_sum(LatticeLaw<double>::bernoulli(), 4);
  REQUIRE(atoms.points.size() == 5);
  const double expect[] = {1, 4, 6, 4, 1};
  for (int i = 0; i < 5; ++i) {
    CHECK(atoms.points[i] == -4 + 2 * i);
    CHECK(atoms.probs[i] == doctest::Approx(expect[i] / 16).epsilon(1e-14));
  }
  const auto big = lattice_sum(LatticeLaw<double>::bernoulli(), 1024);
  double total = 0;
  for (double w : big.probs) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const LatticeLaw<double> three({{-1, 0.2}, {0, 0.5}, {2, 0.3}});
  const auto conv = lattice_sum(three, 3);
  double mean = 0;
  total = 0;
  for (std::size_t i = 0; i < conv.points.size(); ++i) {
    mean += conv.points[i] * conv.probs[i];
    total += conv.probs[i];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mean == doctest::Approx(3 * three.mean()).epsilon(1e-14));
  CHECK_THROWS_AS(lattice_sum(three, 1000, 100), PreconditionError);
}

TEST_CASE("scenario moments") {
  const auto s = make_scenario(uniform_noise(2.0), LatticeLaw<double>::bernoulli(), {4, 16});
  CHECK(s.second_moment(4) == doctest::Approx(1 + (1.0 / 3.0) / 4));
  CHECK(s.mean(16) == 0.0);
  const auto prod = make_product_scenario(s, s);
  CHECK(prod.dimension == 2);
  CHECK(prod.component(1).noise.parameter == 2.0);
}
