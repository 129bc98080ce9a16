#pragma once

#include "smoothclt/common.hpp"
#include "smoothclt/grid.hpp"
#include "smoothclt/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace smoothclt {

enum class NoiseFamily { gaussian, uniform_width, triangular_cf, custom };

inline std::string_view to_string(NoiseFamily f) {
  switch (f) {
    case NoiseFamily::gaussian: return "gaussian";
    case NoiseFamily::uniform_width: return "uniform_width";
    case NoiseFamily::triangular_cf: return "triangular_cf";
    case NoiseFamily::custom: return "custom";
  }
  return "unknown";
}

/// Continuous noise law X: density, characteristic function and its
/// derivative, plus the moment metadata the experiments need.
///
/// Immutable once built; all evaluators are pure.
template <Real Scalar>
struct NoiseModel {
  using Complex = std::complex<Scalar>;

  NoiseFamily family = NoiseFamily::gaussian;
  Scalar parameter = 1;  // sigma, width w, or CF support radius T
  std::function<Scalar(Scalar, Side)> density_at;  // empty when no closed form exists
  std::function<Complex(Scalar)> cf;
  std::function<Complex(Scalar)> cf_derivative;
  Scalar second_moment = 1;  // +inf for heavy-tailed laws
  std::optional<Scalar> beta3;
  std::optional<Scalar> cf_support_radius;
  std::vector<Scalar> jumps;  // discontinuities of the density
  Scalar tail_radius = std::numeric_limits<Scalar>::infinity();  // density is zero beyond
  bool symmetric = true;

  bool has_density() const { return static_cast<bool>(density_at); }
  bool finite_second_moment() const { return std::isfinite(second_moment); }

  Scalar density(Scalar x) const {
    if (!has_density()) throw PreconditionError("noise law has no closed-form density");
    return (density_at(x, Side::left) + density_at(x, Side::right)) / 2;
  }

  std::string label() const {
    if (family == NoiseFamily::custom) return "custom";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s(%.6g)", std::string(to_string(family)).c_str(),
                  static_cast<double>(parameter));
    return buf;
  }
};

template <Real Scalar>
NoiseModel<Scalar> gaussian_noise(Scalar sigma) {
  require(sigma > 0, "gaussian noise needs sigma > 0");
  NoiseModel<Scalar> m;
  m.family = NoiseFamily::gaussian;
  m.parameter = sigma;
  m.density_at = [sigma](Scalar x, Side) { return normal_pdf(x, Scalar(0), sigma); };
  m.cf = [sigma](Scalar t) { return std::complex<Scalar>(std::exp(-sigma * sigma * t * t / 2), 0); };
  m.cf_derivative = [sigma](Scalar t) {
    return std::complex<Scalar>(-sigma * sigma * t * std::exp(-sigma * sigma * t * t / 2), 0);
  };
  m.second_moment = sigma * sigma;
  m.beta3 = 2 * std::sqrt(2 / kPi<Scalar>) * sigma * sigma * sigma;
  m.tail_radius = 40 * sigma;
  return m;
}

/// Uniform law on (-w/2, w/2); its CF sin(wt/2)/(wt/2) vanishes on 2*pi/w * Z.
template <Real Scalar>
NoiseModel<Scalar> uniform_noise(Scalar width) {
  require(width > 0, "uniform noise needs width > 0");
  NoiseModel<Scalar> m;
  m.family = NoiseFamily::uniform_width;
  m.parameter = width;
  const Scalar half = width / 2;
  m.density_at = [half, width](Scalar x, Side side) {
    const bool inside = side == Side::left ? (x > -half && x <= half) : (x >= -half && x < half);
    return inside ? 1 / width : Scalar(0);
  };
  m.cf = [half](Scalar t) { return std::complex<Scalar>(sinc(half * t), 0); };
  m.cf_derivative = [half](Scalar t) { return std::complex<Scalar>(half * sinc_derivative(half * t), 0); };
  m.second_moment = width * width / 12;
  m.beta3 = width * width * width / 32;
  m.jumps = {-half, half};
  m.tail_radius = half;
  return m;
}

/// Fejer-type law with triangular CF max(0, 1 - |t|/T), density
/// (T/2pi) * (sin(Tx/2)/(Tx/2))^2. Its tails decay like x^-2, so the second
/// moment is infinite.
template <Real Scalar>
NoiseModel<Scalar> triangular_cf_noise(Scalar radius) {
  require(radius > 0, "triangular_cf noise needs T > 0");
  NoiseModel<Scalar> m;
  m.family = NoiseFamily::triangular_cf;
  m.parameter = radius;
  m.density_at = [radius](Scalar x, Side) {
    const Scalar s = sinc(radius * x / 2);
    return radius / (2 * kPi<Scalar>)*s * s;
  };
  m.cf = [radius](Scalar t) { return std::complex<Scalar>(std::max(Scalar(0), 1 - std::abs(t) / radius), 0); };
  m.cf_derivative = [radius](Scalar t) {
    if (t == 0 || std::abs(t) >= radius) return std::complex<Scalar>(0, 0);
    return std::complex<Scalar>(t > 0 ? -1 / radius : 1 / radius, 0);
  };
  m.second_moment = std::numeric_limits<Scalar>::infinity();
  m.cf_support_radius = radius;
  return m;
}

/// CF given as a table of (t, Re f, Im f) rows with t ascending from 0.
/// Linear interpolation inside the table, f(-t) = conj f(t), zero beyond the
/// last row; f' by central differences with step 1e-4.
template <Real Scalar>
NoiseModel<Scalar> custom_noise(std::vector<std::array<Scalar, 3>> table, Scalar second_moment) {
  require(table.size() >= 2, "custom noise needs at least two CF table rows");
  require(table.front()[0] == 0 && std::abs(table.front()[1] - 1) < Scalar(1e-12) &&
              std::abs(table.front()[2]) < Scalar(1e-12),
          "custom CF table must start at t = 0 with value 1");
  for (std::size_t i = 1; i < table.size(); ++i) {
    require(table[i][0] > table[i - 1][0], "custom CF table must be strictly increasing in t");
    require(std::hypot(table[i][1], table[i][2]) <= 1 + Scalar(1e-12), "custom CF exceeds modulus 1");
  }
  require(second_moment >= 0, "custom noise needs a nonnegative second moment");

  NoiseModel<Scalar> m;
  m.family = NoiseFamily::custom;
  m.parameter = 0;
  const Scalar radius = table.back()[0];
  m.symmetric = std::all_of(table.begin(), table.end(), [](const auto& r) { return r[2] == 0; });
  auto eval = [table = std::move(table)](Scalar t) {
    const bool negative = t < 0;
    const Scalar a = std::abs(t);
    if (a >= table.back()[0]) return std::complex<Scalar>(0, 0);
    auto it = std::upper_bound(table.begin(), table.end(), a,
                               [](Scalar v, const std::array<Scalar, 3>& r) { return v < r[0]; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const Scalar w = (a - lo[0]) / (hi[0] - lo[0]);
    std::complex<Scalar> v(lo[1] + w * (hi[1] - lo[1]), lo[2] + w * (hi[2] - lo[2]));
    return negative ? std::conj(v) : v;
  };
  m.cf = eval;
  m.cf_derivative = [eval](Scalar t) {
    constexpr Scalar step = Scalar(1e-4);
    return (eval(t + step) - eval(t - step)) / (2 * step);
  };
  m.second_moment = second_moment;
  m.cf_support_radius = radius;
  return m;
}

/// Parameters for the tag-based factory used by configuration files.
template <Real Scalar>
struct NoiseParams {
  std::map<std::string, Scalar> values;
  std::vector<std::array<Scalar, 3>> cf_table;
};

template <Real Scalar>
NoiseModel<Scalar> make_noise(std::string_view tag, const NoiseParams<Scalar>& params) {
  auto get = [&](std::initializer_list<const char*> names) {
    for (const char* n : names) {
      if (auto it = params.values.find(n); it != params.values.end()) return it->second;
    }
    throw PreconditionError("noise '" + std::string(tag) + "' is missing parameter '" +
                            *names.begin() + "'");
  };
  if (tag == "gaussian") return gaussian_noise(get({"sigma", "s"}));
  if (tag == "uniform_width") return uniform_noise(get({"w", "width"}));
  if (tag == "triangular_cf") return triangular_cf_noise(get({"T", "radius"}));
  if (tag == "custom") return custom_noise(params.cf_table, get({"second_moment"}));
  throw PreconditionError("unknown noise family '" + std::string(tag) + "'");
}

/// Integer-valued step law with finite support.
template <Real Scalar>
class LatticeLaw {
 public:
  explicit LatticeLaw(std::map<long, Scalar> pmf) : pmf_(std::move(pmf)) {
    require(!pmf_.empty(), "pmf must have at least one atom");
    Scalar total = 0;
    for (const auto& [k, p] : pmf_) {
      require(p >= 0, "pmf probabilities must be nonnegative");
      total += p;
    }
    require(std::abs(total - 1) <= Scalar(1e-12), "pmf probabilities must sum to 1");
    std::erase_if(pmf_, [](const auto& kv) { return kv.second == 0; });
    for (const auto& [k, p] : pmf_) {
      const auto kk = static_cast<Scalar>(k);
      mean_ += p * kk;
      second_ += p * kk * kk;
      beta3_ += p * std::abs(kk * kk * kk);
    }
    variance_ = 0;
    for (const auto& [k, p] : pmf_) variance_ += p * (static_cast<Scalar>(k) - mean_) * (static_cast<Scalar>(k) - mean_);
  }

  static LatticeLaw bernoulli() { return LatticeLaw({{-1, Scalar(0.5)}, {1, Scalar(0.5)}}); }

  const std::map<long, Scalar>& pmf() const { return pmf_; }
  Scalar mean() const { return mean_; }
  Scalar variance() const { return variance_; }
  Scalar second_moment() const { return second_; }
  Scalar beta3() const { return beta3_; }
  long min_atom() const { return pmf_.begin()->first; }
  long max_atom() const { return pmf_.rbegin()->first; }

  std::complex<Scalar> cf(Scalar t) const {
    std::complex<Scalar> v(0, 0);
    for (const auto& [k, p] : pmf_) v += p * std::polar(Scalar(1), t * static_cast<Scalar>(k));
    return v;
  }

 private:
  std::map<long, Scalar> pmf_;
  Scalar mean_ = 0;
  Scalar second_ = 0;
  Scalar variance_ = 0;
  Scalar beta3_ = 0;
};

/// E|X1|^3 of the step law.
template <Real Scalar>
Scalar beta3_of(const LatticeLaw<Scalar>& step) {
  return step.beta3();
}

/// Law of S_n = X_1 + ... + X_n as explicit atoms.
template <Real Scalar>
struct LatticeAtoms {
  std::vector<long> points;
  std::vector<Scalar> probs;
};

/// n-fold convolution of the step law. Two-point laws use log-space binomial
/// weights; everything else uses repeated squaring of the pmf.
template <Real Scalar>
LatticeAtoms<Scalar> lattice_sum(const LatticeLaw<Scalar>& step, long n, long node_budget = 1L << 20) {
  require(n >= 1, "number of summands must be positive");
  const long span = step.max_atom() - step.min_atom();
  require(span == 0 || n <= (node_budget - 1) / span, "lattice support of S_n exceeds the node budget");

  LatticeAtoms<Scalar> out;
  const auto& pmf = step.pmf();
  if (pmf.size() == 1) {
    out.points.push_back(n * pmf.begin()->first);
    out.probs.push_back(1);
    return out;
  }
  if (pmf.size() == 2) {
    const long a = pmf.begin()->first;
    const long b = pmf.rbegin()->first;
    const Scalar log_pa = std::log(pmf.begin()->second);
    const Scalar log_pb = std::log(pmf.rbegin()->second);
    for (long j = 0; j <= n; ++j) {
      const Scalar lw = log_binomial<Scalar>(n, j) + static_cast<Scalar>(j) * log_pb +
                        static_cast<Scalar>(n - j) * log_pa;
      out.points.push_back(n * a + j * (b - a));
      out.probs.push_back(std::exp(lw));
    }
    return out;
  }

  // Dense representation on [lo, hi] with repeated squaring.
  auto convolve = [](const std::vector<Scalar>& x, const std::vector<Scalar>& y) {
    std::vector<Scalar> z(x.size() + y.size() - 1, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] == 0) continue;
      for (std::size_t j = 0; j < y.size(); ++j) z[i + j] += x[i] * y[j];
    }
    return z;
  };
  std::vector<Scalar> base(static_cast<std::size_t>(span + 1), 0);
  for (const auto& [k, p] : pmf) base[static_cast<std::size_t>(k - step.min_atom())] = p;
  std::vector<Scalar> acc{1};
  long acc_lo = 0;
  long base_lo = step.min_atom();
  for (long m = n; m > 0; m >>= 1) {
    if (m & 1) {
      acc = convolve(acc, base);
      acc_lo += base_lo;
    }
    if (m > 1) {
      base = convolve(base, base);
      base_lo *= 2;
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) {
    if (acc[i] <= 0) continue;
    out.points.push_back(acc_lo + static_cast<long>(i));
    out.probs.push_back(acc[i]);
  }
  return out;
}

/// Smoothed lattice-sum setting Z_n = (X + X_1 + ... + X_n)/sqrt(n).
/// Dimension 2 is the independent product of two one-dimensional components.
template <Real Scalar>
struct Scenario {
  NoiseModel<Scalar> noise;
  LatticeLaw<Scalar> step = LatticeLaw<Scalar>::bernoulli();
  int dimension = 1;
  std::vector<int> n_values;
  std::vector<Scenario> components;

  const Scenario& component(int i) const { return dimension == 1 ? *this : components.at(static_cast<std::size_t>(i)); }

  /// E Z_n for a one-dimensional scenario (noise assumed centered).
  Scalar mean(int n) const {
    return std::sqrt(static_cast<Scalar>(n)) * step.mean();
  }

  /// E Z_n^2 for a one-dimensional scenario (noise assumed centered).
  Scalar second_moment(int n) const {
    const auto nn = static_cast<Scalar>(n);
    return (noise.second_moment + nn * step.variance() + nn * nn * step.mean() * step.mean()) / nn;
  }
};

inline void validate_n_values(const std::vector<int>& n_values) {
  require(!n_values.empty(), "scenario needs at least one n value");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    require(n_values[i] >= 1, "n values must be positive");
    require(i == 0 || n_values[i] > n_values[i - 1], "n values must be strictly increasing");
  }
}

template <Real Scalar>
Scenario<Scalar> make_scenario(NoiseModel<Scalar> noise, LatticeLaw<Scalar> step, std::vector<int> n_values) {
  validate_n_values(n_values);
  Scenario<Scalar> s;
  s.noise = std::move(noise);
  s.step = std::move(step);
  s.dimension = 1;
  s.n_values = std::move(n_values);
  return s;
}

template <Real Scalar>
Scenario<Scalar> make_product_scenario(const Scenario<Scalar>& first, const Scenario<Scalar>& second) {
  require(first.dimension == 1 && second.dimension == 1, "product scenarios combine one-dimensional components");
  require(first.n_values == second.n_values, "product components must share n values");
  Scenario<Scalar> s = first;
  s.dimension = 2;
  s.components = {first, second};
  return s;
}

}  // namespace smoothclt
