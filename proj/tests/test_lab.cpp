#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "smoothclt/lab.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

using namespace smoothclt;
using namespace smoothclt::lab;

namespace {

const LatticeLaw<double> kBern = LatticeLaw<double>::bernoulli();
const std::vector<int> kNs{4, 16, 64, 256};

// H(Bin(n, 1/2)) by direct summation.
double binomial_entropy(int n) {
  double h = 0;
  for (int k = 0; k <= n; ++k) {
    const double p = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

// Bernoulli steps plus a box of width w: Z_n is a histogram whose cells have
// width w / sqrt(n), so h = H(Bin) + log(w / sqrt(n)) for w <= 2.
double histogram_entropy(int n, double w) { return binomial_entropy(n) + std::log(w / std::sqrt(double(n))); }

double histogram_kl(int n, double w) {
  const double m2 = 1 + w * w / 12 / n;
  return -histogram_entropy(n, w) + 0.5 * std::log(2 * std::numbers::pi) + m2 / 2;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(R"({
    "noise": {"family": "uniform_width", "params": {"w": 2}},
    "step": {"pmf": {"-1": 0.5, "1": 0.5}},
    "n_values": [4, 16],
    "grid": {"window": 10, "nodes": 4097},
    "seed": 7
  })");
  CHECK(c.scenario.noise.family == NoiseFamily::uniform_width);
  CHECK(c.scenario.noise.parameter == 2.0);
  CHECK(c.scenario.n_values == std::vector<int>{4, 16});
  CHECK(c.grid.window == 10.0);
  CHECK(c.grid.nodes == 4097);
  CHECK(c.seed == 7u);
  CHECK(c.dichotomy_noises.size() == 3);

  const auto d = parse_config(R"({"noise": {"family": "gaussian", "params": {"sigma": 1}}, "dimension": 2,
                                   "second": {"noise": {"family": "uniform_width", "params": {"w": 2}}}})");
  CHECK(d.scenario.dimension == 2);
  CHECK(d.scenario.component(0).step.variance() == doctest::Approx(1.0));
  CHECK(d.scenario.component(1).noise.family == NoiseFamily::uniform_width);

  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"noise": {"family": "cauchy"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"noise": {"family": "gaussian", "params": {"sigma": -1}}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"noise": {"family": "gaussian", "params": {"sigma": 1}}, "n_values": [2048]})"),
                  ConfigError);
  CHECK_NOTHROW(parse_config(
      R"({"noise": {"family": "gaussian", "params": {"sigma": 1}}, "n_values": [2048], "allow_large_n": true})"));
  CHECK_THROWS_AS(parse_config(R"({"noise": {"family": "gaussian", "params": {"sigma": 1}}, "step": {"pmf": {"x": 1}}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"noise": {"family": "gaussian", "params": {"sigma": 1}}, "n_values": [4, 2]})"),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("digest is 64-bit FNV-1a") {
  CHECK(digest("") == "cbf29ce484222325");
  CHECK(digest("a") == "af63dc4c8601ec8c");
  CHECK(digest("foobar") == "85944171f73967e8");
}

TEST_CASE("positive regime sweep against the binomial histogram") {
  const auto r = run_sweep(make_scenario(uniform_noise(2.0), kBern, kNs), GridSpec<double>{});
  REQUIRE(r.rows.size() == kNs.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    CHECK(row.n == kNs[i]);
    CHECK(row.h == doctest::Approx(histogram_entropy(row.n, 2.0)).epsilon(1e-9));
    CHECK(row.kl == doctest::Approx(histogram_kl(row.n, 2.0)).epsilon(1e-7));
    CHECK(std::abs(row.second_moment - (1 + 1.0 / 3 / row.n)) < 1e-4);
    if (i > 0) CHECK(row.kl < r.rows[i - 1].kl);
    CHECK(std::isnan(row.cross_route_gap));
  }
  CHECK(r.rows[0].h == doctest::Approx(1.40755).epsilon(1e-3 / 1.40755));
  CHECK(r.rows.back().kl < 0.01);
  CHECK(r.digest.size() == 16);
}

TEST_CASE("negative regime sweep stalls at log 2") {
  const auto r = run_sweep(make_scenario(uniform_noise(1.0), kBern, kNs), GridSpec<double>{});
  for (const auto& row : r.rows) {
    CHECK(row.h == doctest::Approx(histogram_entropy(row.n, 1.0)).epsilon(1e-9));
    CHECK(row.kl == doctest::Approx(histogram_kl(row.n, 1.0)).epsilon(1e-7));
  }
  CHECK(std::abs(r.rows.back().kl - std::log(2.0)) <= 0.02);
}

TEST_CASE("Gaussian noise: both density routes agree") {
  const auto r = run_sweep(make_scenario(gaussian_noise(1.0), kBern, {1, 4, 16, 64}), GridSpec<double>{});
  CHECK(r.cross_routes_agree());
  for (const auto& row : r.rows) {
    REQUIRE_FALSE(std::isnan(row.cross_route_gap));
    CHECK(row.cross_route_gap <= kCrossRouteTolerance);
    CHECK(std::abs(row.second_moment - (1 + 1.0 / row.n)) < 1e-4);
  }
}

TEST_CASE("compact-CF noise: Delta decreases, moments are infinite") {
  const auto r = run_sweep(make_scenario(triangular_cf_noise(1.0), kBern, {4, 16, 64}), GridSpec<double>{});
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    CHECK(std::isnan(row.h));
    CHECK(std::isinf(row.kl));
    CHECK(std::isinf(row.second_moment));
    CHECK(row.cross_route_gap <= kCrossRouteTolerance);
    if (i > 0) {
      CHECK(row.delta < r.rows[i - 1].delta);
      CHECK(row.sup_gap < r.rows[i - 1].sup_gap);
    }
  }
}

TEST_CASE("two-dimensional product sweep") {
  const auto a = make_scenario(gaussian_noise(1.0), kBern, {4, 16});
  const auto b = make_scenario(gaussian_noise(0.5), kBern, {4, 16});
  const auto grid = GridSpec<double>{12.0, (1 << 12) + 1};
  const auto r = run_sweep(make_product_scenario(a, b), grid);
  const auto ra = run_sweep(a, grid);
  const auto rb = run_sweep(b, grid);
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].h == doctest::Approx(ra.rows[i].h + rb.rows[i].h));
    CHECK(r.rows[i].kl == doctest::Approx(ra.rows[i].kl + rb.rows[i].kl));
    CHECK(r.rows[i].second_moment == doctest::Approx(ra.rows[i].second_moment + rb.rows[i].second_moment));
  }
  // Delta by a brute-force two-dimensional midpoint sum.
  const int n = 4;
  const auto pa = scenario_density(a, n, grid);
  const auto pb = scenario_density(b, n, grid);
  const int cells = 800;
  const double h = 16.0 / cells;
  double acc = 0;
  for (int i = 0; i < cells; ++i) {
    const double x = -8 + h * (i + 0.5);
    const double px = pa.value_at(x, Side::right);
    for (int j = 0; j < cells; ++j) {
      const double y = -8 + h * (j + 0.5);
      const double e = px * pb.value_at(y, Side::right) - normal_pdf(x) * normal_pdf(y);
      acc += e * e;
    }
  }
  CHECK(r.rows[0].delta == doctest::Approx(std::sqrt(acc * h * h)).epsilon(1e-4));
  CHECK(r.rows[0].sup_gap > 0);
}

TEST_CASE("dichotomy experiment") {
  const auto rows = dichotomy_experiment({uniform_noise(2.0), uniform_noise(1.0), gaussian_noise(1.0)}, kBern, kNs,
                                         GridSpec<double>{});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].zero.pass);
  CHECK(rows[0].regime == Regime::converges);
  CHECK_FALSE(rows[1].zero.pass);
  CHECK(rows[1].zero.worst_k == 1);
  CHECK(rows[1].regime == Regime::stalls);
  CHECK_FALSE(rows[2].zero.pass);
  CHECK(rows[2].exempt);
  for (const auto& r : rows) {
    CHECK(r.consistent);
    // Small D goes with small Delta on the built-in scenarios.
    if (!r.exempt) CHECK((r.regime == Regime::converges) == (r.terminal_delta < 0.02));
  }
  // Ripple of the Gaussian stall, 2 e^{-pi^2 / 2}, is far below the 0.01 threshold.
  CHECK(rows[2].terminal_kl < 2 * std::exp(-std::numbers::pi * std::numbers::pi / 2));
}

TEST_CASE("terminal classification thresholds") {
  CHECK(classify_terminal(0.005) == Regime::converges);
  CHECK(classify_terminal(0.05) == Regime::undecided);
  CHECK(classify_terminal(0.5) == Regime::stalls);
  CHECK(classify_terminal(std::numeric_limits<double>::infinity()) == Regime::stalls);
}

TEST_CASE("bound corpus") {
  const auto reports = bound_corpus(4, 99);
  std::set<std::string> anchors;
  for (const auto& r : reports) {
    anchors.insert(r.anchor);
    CHECK_MESSAGE(r.satisfied, r.anchor << " " << r.context);
  }
  for (const char* a : {"gaussian_tail.mass", "weighted_tail", "kl_truncation", "kl_simplified", "combined_upper",
                        "l2_lower", "moment_control.master", "mixture_entropy", "discrete_max_entropy", "talagrand"}) {
    CHECK(anchors.count(a) == 1);
  }
  std::ostringstream a, b, c;
  write_reports(a, reports, Format::jsonl);
  write_reports(b, bound_corpus(4, 99), Format::jsonl);
  write_reports(c, bound_corpus(4, 100), Format::jsonl);
  CHECK(a.str() == b.str());
  CHECK(a.str() != c.str());
}

TEST_CASE("claims fixture") {
  const auto claims = load_claims(std::string(FIXTURE_DIR) + "/false_claim.jsonl");
  REQUIRE(claims.size() == 1);
  CHECK_FALSE(claims[0].satisfied);
  CHECK(load_claims(std::string(FIXTURE_DIR) + "/true_claim.jsonl")[0].satisfied);
}

TEST_CASE("emitters") {
  const auto s = make_scenario(uniform_noise(2.0), kBern, kNs);
  const auto r = run_sweep(s, GridSpec<double>{});
  std::ostringstream csv, again, jsonl;
  write_sweep(csv, r, Format::csv);
  write_sweep(again, run_sweep(s, GridSpec<double>{}), Format::csv);
  CHECK(csv.str() == again.str());
  int lines = 0;
  for (char ch : csv.str()) lines += ch == '\n';
  CHECK(lines == 1 + static_cast<int>(kNs.size()));
  CHECK(csv.str().rfind("n,h,kl,delta,sup_gap,second_moment,w2", 0) == 0);

  write_sweep(jsonl, r, Format::jsonl);
  lines = 0;
  for (char ch : jsonl.str()) lines += ch == '\n';
  CHECK(lines == static_cast<int>(kNs.size()));

  const auto reports = bound_corpus(1, 5);
  std::ostringstream rep;
  write_reports(rep, reports, Format::jsonl);
  lines = 0;
  for (char ch : rep.str()) lines += ch == '\n';
  CHECK(lines == static_cast<int>(reports.size()));
  CHECK_THROWS_AS(write_reports(rep, reports, Format::plotdata), ConfigError);

  const auto dir = std::filesystem::temp_directory_path() / "smoothclt_plotdata_test";
  std::filesystem::remove_all(dir);
  const GridSpec<double> grid{12.0, 2049};
  write_plotdata(dir, make_scenario(uniform_noise(2.0), kBern, {16}), grid,
                 run_sweep(make_scenario(uniform_noise(2.0), kBern, {16}), grid));
  std::ifstream in(dir / "density_n16.txt");
  const auto p = read_grid_density<double>(in);
  CHECK(p.size() == grid.nodes);
  CHECK(std::filesystem::exists(dir / "kl_trace.txt"));
  std::filesystem::remove_all(dir);

  CHECK(parse_format("csv") == Format::csv);
  CHECK_THROWS_AS(parse_format("xml"), ConfigError);
}
