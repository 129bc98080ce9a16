#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smoothclt/rng.hpp"
#include "smoothclt/special.hpp"

#include <cmath>
#include <set>

using namespace smoothclt;

TEST_CASE("normal quantile inverts the cdf across the tails") {
  for (double u : {1e-300, 1e-12, 1e-4, 0.02, 0.3, 0.5, 0.7, 0.98, 1 - 1e-9}) {
    const double z = normal_quantile(u);
    const double back = z < 0 ? normal_cdf(z) : 1 - normal_sf(z);
    CHECK(back == doctest::Approx(u).epsilon(1e-12));
  }
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
}

TEST_CASE("digamma matches known values") {
  const double euler_gamma = 0.5772156649015329;
  CHECK(digamma(1.0) == doctest::Approx(-euler_gamma).epsilon(1e-13));
  CHECK(digamma(0.5) == doctest::Approx(-euler_gamma - 2 * std::log(2.0)).epsilon(1e-13));
  // psi(x + 1) = psi(x) + 1/x
  for (double x : {0.3, 2.5, 17.0, 316.0}) CHECK(digamma(x + 1) - digamma(x) == doctest::Approx(1 / x).epsilon(1e-12));
}

TEST_CASE("log binomial agrees with direct products") {
  double direct = 0;
  for (int k = 0; k <= 30; ++k) {
    if (k > 0) direct += std::log((30.0 - k + 1) / k);
    CHECK(log_binomial<double>(30, k) == doctest::Approx(direct).epsilon(1e-12));
  }
  // 1024 choose 512 has a log near 706, far past double factorial range.
  CHECK(std::isfinite(log_binomial<double>(1024, 512)));
}

TEST_CASE("sinc and its derivative are smooth through zero") {
  for (double u : {-1e-5, 0.0, 1e-5, 1e-3, 2.0}) {
    const double ref = u == 0 ? 1.0 : std::sin(u) / u;
    CHECK(sinc(u) == doctest::Approx(ref).epsilon(1e-14));
    const double h = 1e-6;
    CHECK(sinc_derivative(u) == doctest::Approx((sinc(u + h) - sinc(u - h)) / (2 * h)).epsilon(1e-8));
  }
}

TEST_CASE("counter rng is a pure function of seed, stream and counter") {
  CounterRng a(42, 7);
  CounterRng b(42, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CounterRng c(42, 7, 50);
  CounterRng d(42, 7);
  for (int i = 0; i < 50; ++i) d.next_u64();
  CHECK(c.next_u64() == d.next_u64());
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 64; ++s) firsts.insert(CounterRng(1, s).next_u64());
  CHECK(firsts.size() == 64);
  CounterRng u(3, 0);
  double mean = 0;
  for (int i = 0; i < 100000; ++i) mean += u.uniform();
  CHECK(mean / 100000 == doctest::Approx(0.5).epsilon(0.01));
}
