#include "smoothclt/lab.hpp"

#include "smoothclt/rng.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

namespace smoothclt::lab {

namespace {

const GridSpec<double> kCorpusGrid{16.0, (1 << 14) + 1};

struct Case {
  GridDensity<double> p;
  MomentSummary<double> m;
  std::string label;
};

double between(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

std::string fmt(const char* pattern, auto... args) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Case gaussian_case(CounterRng& rng, bool isotropic) {
  double a = between(rng, -1, 1);
  double v = std::exp(between(rng, std::log(0.25), std::log(4.0)));
  if (isotropic) {
    const double b2 = 1 / (a * a + v);
    a *= std::sqrt(b2);
    v *= b2;
  }
  const double s = std::sqrt(v);
  return {GridDensity<double>::sample(kCorpusGrid, [a, s](double x) { return normal_pdf(x, a, s); }),
          gaussian_moments(a, v), fmt("gaussian(a=%.6g,var=%.6g)", a, v)};
}

Case mixture_case(CounterRng& rng, bool isotropic) {
  const double w = between(rng, 0.2, 0.8);
  double a1 = between(rng, -1.5, 1.5), a2 = between(rng, -1.5, 1.5);
  double s1 = between(rng, 0.3, 1.2), s2 = between(rng, 0.3, 1.2);
  if (isotropic) {
    const double b = 1 / std::sqrt(w * (a1 * a1 + s1 * s1) + (1 - w) * (a2 * a2 + s2 * s2));
    a1 *= b, a2 *= b, s1 *= b, s2 *= b;
  }
  const double mean = w * a1 + (1 - w) * a2;
  const double m2 = w * (a1 * a1 + s1 * s1) + (1 - w) * (a2 * a2 + s2 * s2);
  auto p = GridDensity<double>::sample(kCorpusGrid, [=](double x) {
    return w * normal_pdf(x, a1, s1) + (1 - w) * normal_pdf(x, a2, s2);
  });
  return {std::move(p), {{mean}, {m2 - mean * mean}, m2},
          fmt("mixture(w=%.6g,a=%.6g/%.6g,s=%.6g/%.6g)", w, a1, a2, s1, s2)};
}

Case scenario_case(CounterRng& rng, bool isotropic) {
  const bool gaussian = rng.uniform() < 0.5;
  const double param = gaussian ? between(rng, 0.3, 1.5) : between(rng, 0.5, 3.0);
  const int n = 1 + static_cast<int>(64 * rng.uniform());
  const auto s = make_scenario(gaussian ? gaussian_noise(param) : uniform_noise(param),
                               LatticeLaw<double>::bernoulli(), {n});
  const double scale = isotropic ? 1 / std::sqrt(s.second_moment(n)) : 1.0;
  auto m = scenario_moments(s, n);
  m.mean[0] *= scale;
  m.variances[0] *= scale * scale;
  m.second_moment *= scale * scale;
  return {exact_mixture_density(s, n, kCorpusGrid, scale), std::move(m),
          fmt("%s+bernoulli n=%d scale=%.6g", s.noise.label().c_str(), n, scale)};
}

Case draw_case(CounterRng& rng, bool isotropic) {
  const double u = rng.uniform();
  if (u < 1.0 / 3) return gaussian_case(rng, isotropic);
  if (u < 2.0 / 3) return mixture_case(rng, isotropic);
  return scenario_case(rng, isotropic);
}

LatticeLaw<double> random_pmf(CounterRng& rng, int max_atoms, long span) {
  const int atoms = 1 + static_cast<int>(max_atoms * rng.uniform());
  std::map<long, double> pmf;
  while (static_cast<int>(pmf.size()) < atoms) {
    const long k = -span + static_cast<long>((2 * span + 1) * rng.uniform());
    pmf[k] = between(rng, 0.05, 1.0);
  }
  double total = 0;
  for (const auto& [k, p] : pmf) total += p;
  double rest = 1;
  for (auto it = pmf.begin(); it != pmf.end(); ++it) {
    if (std::next(it) == pmf.end()) {
      it->second = rest;
    } else {
      it->second /= total;
      rest -= it->second;
    }
  }
  return LatticeLaw<double>(std::move(pmf));
}

std::string pmf_label(const LatticeLaw<double>& law) {
  std::string s = "pmf{";
  for (const auto& [k, p] : law.pmf()) s += fmt("%ld:%.6g,", k, p);
  return s + "}";
}

// Runs `one` until `cases` of its inputs were valid.
void collect(std::vector<BoundReport>& out, int cases, std::uint64_t seed, std::uint64_t stream,
             const std::function<std::vector<BoundReport>(CounterRng&, int)>& one) {
  CounterRng rng(seed, stream);
  int valid = 0;
  for (int attempt = 0; valid < cases; ++attempt) {
    if (attempt > 20 * cases) throw NumericalError("bound corpus could not draw enough valid cases");
    try {
      auto reports = one(rng, valid);
      if (reports.empty()) continue;
      for (auto& r : reports) out.push_back(std::move(r));
      ++valid;
    } catch (const PreconditionError&) {
    } catch (const NumericalError& e) {
      throw NumericalError("stream " + std::to_string(stream) + " attempt " + std::to_string(attempt) + ": " + e.what());
    }
  }
}

std::string tag(int i, const std::string& label) { return "case=" + std::to_string(i) + " " + label; }

}  // namespace

std::vector<BoundReport> bound_corpus(int cases_per_checker, std::uint64_t seed) {
  require(cases_per_checker >= 1, "corpus needs at least one case per checker");
  std::vector<BoundReport> out;
  const int cases = cases_per_checker;

  collect(out, cases, seed, 1, [](CounterRng& rng, int) {
    const double T = between(rng, 1, 6);
    const int d = rng.uniform() < 0.5 ? 1 : 2;
    auto [a, b] = gaussian_tail_bounds(T, d);
    return std::vector{a, b};
  });
  collect(out, cases, seed, 2, [](CounterRng& rng, int i) {
    auto c = draw_case(rng, true);
    return std::vector{weighted_tail_bound(c.p, c.m, between(rng, 1, 5), tag(i, c.label))};
  });
  collect(out, cases, seed, 3, [](CounterRng& rng, int i) {
    auto c = draw_case(rng, false);
    return std::vector{kl_truncation_bound(c.p, c.m, between(rng, 1, 5), tag(i, c.label))};
  });
  collect(out, cases, seed, 4, [](CounterRng& rng, int i) {
    auto c = draw_case(rng, false);
    return std::vector{kl_simplified_bound(c.p, c.m, between(rng, 1, 5), tag(i, c.label))};
  });
  collect(out, cases, seed, 5, [](CounterRng& rng, int i) {
    auto c = draw_case(rng, true);
    if (l2_distance_to_std_normal(c.p) > std::exp(-1.0)) return std::vector<BoundReport>{};
    return std::vector{combined_upper_bound(c.p, c.m, tag(i, c.label))};
  });
  collect(out, cases, seed, 6, [](CounterRng& rng, int i) {
    auto c = draw_case(rng, true);
    const double sup = c.p.sup_over_knots([](double, double v) { return v; });
    const double M = std::max(sup, 1 / std::sqrt(2 * kPi<double>)) * between(rng, 1, 2);
    return std::vector{l2_lower_bound(c.p, c.m, M, tag(i, c.label))};
  });
  collect(out, cases, seed, 7, [](CounterRng& rng, int i) {
    auto c = draw_case(rng, false);
    return moment_control_bounds(kl_to_std_normal(c.p, c.m).value, c.m, tag(i, c.label));
  });
  collect(out, cases, seed, 8, [](CounterRng& rng, int i) {
    const bool gaussian = rng.uniform() < 0.5;
    const double param = gaussian ? between(rng, 0.3, 1.2) : between(rng, 0.3, 3.0);
    const auto noise = gaussian ? gaussian_noise(param) : uniform_noise(param);
    const auto pmf = random_pmf(rng, 6, 5);
    const double hX = gaussian ? 0.5 * (kLog2Pi<double> + 1) + std::log(param) : std::log(param);
    const auto sum = exact_mixture_density(make_scenario(noise, pmf, {1}), 1, kCorpusGrid);
    return std::vector{mixture_entropy_check(hX, discrete_entropy(pmf), differential_entropy(sum),
                                             tag(i, noise.label() + " " + pmf_label(pmf)))};
  });
  collect(out, cases, seed, 9, [](CounterRng& rng, int i) {
    const auto pmf = random_pmf(rng, 12, 10);
    return std::vector{discrete_max_entropy_check(pmf, tag(i, pmf_label(pmf)))};
  });
  collect(out, cases, seed, 10, [](CounterRng& rng, int i) {
    auto c = draw_case(rng, false);
    return std::vector{talagrand_check(c.p, c.m, tag(i, c.label))};
  });
  collect(out, cases, seed, 11, [](CounterRng& rng, int i) {
    const double t = std::exp(between(rng, std::log(1e-3), std::log(1e3)));
    auto r = psi_lower_bound_check(t);
    r.context = tag(i, fmt("t=%.6g", t));
    return std::vector{r};
  });
  return out;
}

}  // namespace smoothclt::lab
