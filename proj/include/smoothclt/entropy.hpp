#pragma once

#include "smoothclt/common.hpp"
#include "smoothclt/grid.hpp"
#include "smoothclt/model.hpp"
#include "smoothclt/report.hpp"
#include "smoothclt/rng.hpp"
#include "smoothclt/special.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

namespace smoothclt {

/// Mean vector, per-axis variances and total second moment of a law.
template <Real Scalar>
struct MomentSummary {
  std::vector<Scalar> mean;
  std::vector<Scalar> variances;
  Scalar second_moment = 0;

  int dimension() const { return static_cast<int>(mean.size()); }
};

template <Real Scalar>
MomentSummary<Scalar> gaussian_moments(Scalar a, Scalar variance) {
  return {{a}, {variance}, a * a + variance};
}

/// Product of one-dimensional summaries (independent coordinates).
template <Real Scalar>
MomentSummary<Scalar> product_moments(const MomentSummary<Scalar>& x, const MomentSummary<Scalar>& y) {
  MomentSummary<Scalar> m = x;
  m.mean.insert(m.mean.end(), y.mean.begin(), y.mean.end());
  m.variances.insert(m.variances.end(), y.variances.begin(), y.variances.end());
  m.second_moment = x.second_moment + y.second_moment;
  return m;
}

template <Real Scalar>
MomentSummary<Scalar> moments_of(const GridDensity<Scalar>& p) {
  const Scalar mass = p.total_mass();
  const Scalar m1 = p.integrate([](Scalar x, Scalar v) { return x * v; }) / mass;
  const Scalar m2 = p.integrate([](Scalar x, Scalar v) { return x * x * v; }) / mass;
  return {{m1}, {m2 - m1 * m1}, m2};
}

/// Exact moments of Z_n (noise assumed centered), or +inf second moment when
/// the noise has none.
template <Real Scalar>
MomentSummary<Scalar> scenario_moments(const Scenario<Scalar>& s, int n) {
  const Scalar a = s.mean(n);
  const Scalar m2 = s.second_moment(n);
  return {{a}, {m2 - a * a}, m2};
}

namespace detail {

template <Real Scalar>
void check_density(const GridDensity<Scalar>& p) {
  if (std::abs(p.total_mass() - 1) > Scalar(1e-4)) {
    throw NumericalError("density mass " + std::to_string(static_cast<double>(p.total_mass())) +
                         " drifts more than 1e-4 from 1");
  }
  const Scalar low = p.values().minCoeff();
  if (low < Scalar(-1e-12)) {
    throw NumericalError("density takes value " + std::to_string(static_cast<double>(low)) + " below -1e-12");
  }
}

template <Real Scalar>
Scalar xlogx(Scalar v) {
  return v > 0 ? v * std::log(v) : Scalar(0);
}

}  // namespace detail

/// h(p) = -int p log p, with 0 log 0 = 0 and tiny negative samples clamped.
template <Real Scalar>
Scalar differential_entropy(const GridDensity<Scalar>& p) {
  detail::check_density(p);
  return -p.integrate([](Scalar, Scalar v) { return detail::xlogx(v); });
}

template <Real Scalar>
Scalar discrete_entropy(const std::vector<Scalar>& probs) {
  Scalar sum = 0;
  for (Scalar w : probs) {
    require(w >= 0, "probabilities must be nonnegative");
    sum += w;
  }
  require(std::abs(sum - 1) <= Scalar(1e-9), "probabilities must sum to 1");
  Scalar h = 0;
  for (Scalar w : probs) h -= detail::xlogx(w);
  return h;
}

template <Real Scalar>
Scalar discrete_entropy(const LatticeLaw<Scalar>& law) {
  std::vector<Scalar> probs;
  for (const auto& [k, w] : law.pmf()) probs.push_back(w);
  return discrete_entropy(probs);
}

template <Real Scalar>
struct KlEstimate {
  Scalar value = 0;    // moment identity
  Scalar direct = 0;   // quadrature of p log(p / phi)
  Scalar entropy = 0;  // h(p) used by the identity
};

/// D(p || N(0,1)) = -h(p) + log(2 pi)/2 + E X^2 / 2, with the second moment
/// taken from `moments`. The direct quadrature must agree within 1e-6.
template <Real Scalar>
KlEstimate<Scalar> kl_to_std_normal(const GridDensity<Scalar>& p, const MomentSummary<Scalar>& moments) {
  require(moments.dimension() == 1, "grid densities are one-dimensional");
  require(std::isfinite(moments.second_moment), "KL to the normal needs a finite second moment");
  const Scalar grid_m2 = p.integrate([](Scalar x, Scalar v) { return x * x * v; });
  if (std::abs(grid_m2 - moments.second_moment) > Scalar(1e-3) * std::max(moments.second_moment, Scalar(1))) {
    throw PreconditionError("stated second moment disagrees with the grid density by more than 1e-3 relative");
  }
  KlEstimate<Scalar> kl;
  kl.entropy = differential_entropy(p);
  kl.value = -kl.entropy + kLog2Pi<Scalar> / 2 + moments.second_moment / 2;
  kl.direct = p.integrate([](Scalar x, Scalar v) {
    return v > 0 ? v * (std::log(v) + x * x / 2 + kLog2Pi<Scalar> / 2) : Scalar(0);
  });
  if (std::abs(kl.value - kl.direct) > Scalar(1e-6)) {
    throw NumericalError("KL moment identity and direct quadrature differ by " +
                         std::to_string(static_cast<double>(kl.value - kl.direct)));
  }
  return kl;
}

/// psi(t) = log(1/t) + t - 1.
template <Real Scalar>
Scalar psi(Scalar t) {
  require(t > 0, "psi needs t > 0");
  return -std::log(t) + t - 1;
}

template <Real Scalar>
BoundReport psi_lower_bound_check(Scalar t) {
  const Scalar e = std::abs(t - 1);
  return make_report("psi_lower_bound", static_cast<double>(std::min(e, e * e) / 8), static_cast<double>(psi(t)),
                     "t=" + std::to_string(static_cast<double>(t)));
}

template <Real Scalar>
struct KlDecomposition {
  Scalar d_shape = 0;
  Scalar mean_term = 0;    // |a|^2 / 2
  Scalar shape_terms = 0;  // sum psi(sigma_i^2) / 2
  bool nonnegative = true; // d_shape >= -1e-8
};

/// Splits D(X||Z) into the Gaussian-fit terms and the residual distance to
/// the closest normal law.
template <Real Scalar>
KlDecomposition<Scalar> kl_decomposition(Scalar d_total, const MomentSummary<Scalar>& moments) {
  KlDecomposition<Scalar> out;
  for (Scalar a : moments.mean) out.mean_term += a * a / 2;
  for (Scalar s2 : moments.variances) {
    require(s2 > 0, "variances must be positive");
    out.shape_terms += psi(s2) / 2;
  }
  out.d_shape = d_total - out.mean_term - out.shape_terms;
  if (out.d_shape < Scalar(-1e-6)) {
    throw NumericalError("negative residual " + std::to_string(static_cast<double>(out.d_shape)) +
                         " in the KL decomposition");
  }
  out.nonnegative = out.d_shape >= Scalar(-1e-8);
  return out;
}

/// Piecewise-constant density equal to pmf(k) on (k - 1/2, k + 1/2).
template <Real Scalar>
struct StaircaseDensity {
  LatticeLaw<Scalar> pmf;
  GridDensity<Scalar> density;

  Scalar entropy() const { return discrete_entropy(pmf); }
  Scalar mean() const { return pmf.mean(); }
  Scalar variance() const { return pmf.variance() + Scalar(1) / 12; }
};

template <Real Scalar>
StaircaseDensity<Scalar> staircase(const LatticeLaw<Scalar>& pmf, int nodes_per_unit = 8) {
  require(nodes_per_unit >= 2 && nodes_per_unit % 2 == 0, "staircase needs an even node count per unit");
  const Scalar h = Scalar(1) / static_cast<Scalar>(nodes_per_unit);
  const Scalar x0 = static_cast<Scalar>(pmf.min_atom()) - 1;
  const Index count = (pmf.max_atom() - pmf.min_atom() + 2) * nodes_per_unit + 1;
  auto mass = [&](long k) {
    auto it = pmf.pmf().find(k);
    return it == pmf.pmf().end() ? Scalar(0) : it->second;
  };
  ArrayX<Scalar> values(count);
  for (Index i = 0; i < count; ++i) {
    const Scalar x = x0 + h * static_cast<Scalar>(i);
    const Scalar shifted = x + Scalar(0.5);
    const auto k = static_cast<long>(std::floor(shifted));
    if (shifted == std::floor(shifted)) {
      values[i] = (mass(k - 1) + mass(k)) / 2;  // on a jump
    } else {
      values[i] = mass(static_cast<long>(std::lround(x)));
    }
  }
  std::vector<Break<Scalar>> breaks;
  for (long k = pmf.min_atom(); k <= pmf.max_atom() + 1; ++k) {
    breaks.push_back({static_cast<Scalar>(k) - Scalar(0.5), mass(k - 1), mass(k)});
  }
  return {pmf, GridDensity<Scalar>(x0, h, std::move(values), std::move(breaks))};
}

namespace detail {

// Mass of p over [x_i, x_i + tau*h] for tau in [0, 1], consistent with
// GridDensity::cell_masses (cubic on smooth stretches, linear between knots
// otherwise).
template <Real Scalar>
class CellPrimitive {
 public:
  CellPrimitive(const GridDensity<Scalar>& p, Index i) : h_(p.step()) {
    const auto& v = p.values();
    const Scalar xl = p.x(i);
    const Scalar xr = p.x(i + 1);
    bool smooth = i >= 1 && i + 2 < p.size();
    for (const auto& b : p.breaks()) {
      if (b.x >= p.x(std::max<Index>(i - 1, 0)) - h_ * Scalar(1e-9) &&
          b.x <= p.x(std::min<Index>(i + 2, p.size() - 1)) + h_ * Scalar(1e-9)) {
        smooth = false;
      }
      if (b.x > xl && b.x < xr) knots_.push_back({(b.x - xl) / h_, b.left, b.right});
    }
    if (smooth) {
      // Cubic through nodes i-1..i+2 in the local variable t = (x - x_i)/h.
      const Scalar a = v[i - 1];
      const Scalar b = v[i];
      const Scalar c = v[i + 1];
      const Scalar d = v[i + 2];
      cubic_ = true;
      c0_ = b;
      c1_ = -a / 3 - b / 2 + c - d / 6;
      c2_ = (a + c) / 2 - b;
      c3_ = (d - a) / 6 + (b - c) / 2;
    } else {
      left_ = p.node_or_limit(i, Side::right);
      right_ = p.node_or_limit(i + 1, Side::left);
    }
  }

  Scalar mass_to(Scalar tau) const {
    if (cubic_) return h_ * tau * (c0_ + tau * (c1_ / 2 + tau * (c2_ / 3 + tau * c3_ / 4)));
    Scalar acc = 0;
    Scalar t0 = 0;
    Scalar v0 = left_;
    for (const auto& k : knots_) {
      if (k[0] >= tau) break;
      acc += (k[0] - t0) * (v0 + k[1]) / 2;
      t0 = k[0];
      v0 = k[2];
    }
    Scalar t1 = 1;
    Scalar v1 = right_;
    for (const auto& k : knots_) {
      if (k[0] >= tau) {
        t1 = k[0];
        v1 = k[1];
        break;
      }
    }
    const Scalar vt = v0 + (v1 - v0) * (tau - t0) / (t1 - t0);
    acc += (tau - t0) * (v0 + vt) / 2;
    return h_ * acc;
  }

  /// Smallest tau in [0, 1] with mass_to(tau) >= target (bisection).
  Scalar solve(Scalar target) const {
    Scalar lo = 0;
    Scalar hi = 1;
    for (int it = 0; it < 60; ++it) {
      const Scalar mid = (lo + hi) / 2;
      if (mass_to(mid) < target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return (lo + hi) / 2;
  }

 private:
  Scalar h_;
  bool cubic_ = false;
  Scalar c0_ = 0, c1_ = 0, c2_ = 0, c3_ = 0;
  Scalar left_ = 0, right_ = 0;
  std::vector<std::array<Scalar, 3>> knots_;
};

}  // namespace detail

/// Transport map z -> F^{-1}(Phi(z)) of the monotone coupling of N(0,1) onto p.
/// Left tails are matched through the CDF and right tails through the
/// survival function, so both keep relative accuracy. Plateaus resolve to the
/// left-continuous generalized inverse.
template <Real Scalar>
class QuantileMap {
 public:
  explicit QuantileMap(const GridDensity<Scalar>& p) : p_(&p) {
    const auto cells = p.cell_masses();
    const Index m = cells.size();
    cdf_.assign(static_cast<std::size_t>(m + 1), 0);
    sf_.assign(static_cast<std::size_t>(m + 1), 0);
    for (Index i = 0; i < m; ++i) cdf_[i + 1] = cdf_[i] + std::max(cells[i], Scalar(0));
    for (Index i = m; i > 0; --i) sf_[i - 1] = sf_[i] + std::max(cells[i - 1], Scalar(0));
    mass_ = cdf_.back();
  }

  Scalar operator()(Scalar z) const {
    const auto& p = *p_;
    if (z <= 0) {
      const Scalar u = normal_cdf(z) * mass_;
      auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      if (it == cdf_.begin()) return p.x0();
      if (it == cdf_.end()) return p.upper();
      const Index i = (it - cdf_.begin()) - 1;
      const detail::CellPrimitive<Scalar> cell(p, i);
      return p.x(i) + p.step() * cell.solve(u - cdf_[i]);
    }
    const Scalar s = normal_sf(z) * mass_;
    // First index whose survival drops to s or below.
    auto it = std::lower_bound(sf_.begin(), sf_.end(), s, [](Scalar a, Scalar b) { return a > b; });
    if (it == sf_.end()) return p.upper();
    if (it == sf_.begin()) return p.x0();
    const Index i = (it - sf_.begin()) - 1;
    const detail::CellPrimitive<Scalar> cell(p, i);
    const Scalar cell_mass = sf_[i] - sf_[i + 1];
    return p.x(i) + p.step() * cell.solve(cell_mass - (s - sf_[i + 1]));
  }

 private:
  const GridDensity<Scalar>* p_;
  std::vector<Scalar> cdf_;
  std::vector<Scalar> sf_;
  Scalar mass_ = 1;
};

/// W2 between p and N(0,1) by the quantile coupling, written in the normal
/// variable: W2^2 = int (F^{-1}(Phi(z)) - z)^2 phi(z) dz over |z| <= 8
/// (composite Simpson, 2^12 panels).
template <Real Scalar>
Scalar w2_to_std_normal(const GridDensity<Scalar>& p, int panels = 1 << 12) {
  detail::check_density(p);
  require(panels >= 2 && panels % 2 == 0, "W2 quadrature needs an even panel count");
  const QuantileMap<Scalar> map(p);
  const Scalar zmax = 8;
  const Scalar dz = 2 * zmax / static_cast<Scalar>(panels);
  Scalar acc = 0;
  for (int j = 0; j <= panels; ++j) {
    const Scalar z = -zmax + dz * static_cast<Scalar>(j);
    const Scalar w = (j == 0 || j == panels) ? 1 : (j % 2 == 1 ? 4 : 2);
    const Scalar gap = map(z) - z;
    acc += w * gap * gap * normal_pdf(z);
  }
  return std::sqrt(acc * dz / 3);
}

template <Real Scalar>
struct MonteCarloEntropy {
  Scalar estimate = 0;
  Scalar std_error = 0;
};

namespace detail {

// m-spacing estimate on sorted data with windows [i - m, i + m] clamped to
// the sample range: mean_i [log(X_(hi) - X_(lo)) - digamma(hi - lo)] + digamma(N + 1).
// Each term is exactly unbiased for the uniform law.
template <Real Scalar>
Scalar spacing_entropy(const std::vector<Scalar>& sorted) {
  const auto count = static_cast<long>(sorted.size());
  const long m = static_cast<long>(std::floor(std::sqrt(static_cast<double>(count))));
  std::vector<Scalar> dig(static_cast<std::size_t>(2 * m + 1), 0);
  for (long k = 1; k <= 2 * m; ++k) dig[static_cast<std::size_t>(k)] = digamma(static_cast<Scalar>(k));
  Scalar acc = 0;
  for (long i = 0; i < count; ++i) {
    const long lo = std::max(i - m, 0L);
    const long hi = std::min(i + m, count - 1);
    const Scalar gap = sorted[static_cast<std::size_t>(hi)] - sorted[static_cast<std::size_t>(lo)];
    if (!(gap > 0)) throw NumericalError("tied samples in the spacing estimator");
    acc += std::log(gap) - dig[static_cast<std::size_t>(hi - lo)];
  }
  return acc / static_cast<Scalar>(count) + digamma(static_cast<Scalar>(count + 1));
}

}  // namespace detail

/// Sample-based entropy estimate, independent of any grid. The sampler draws
/// one value from the supplied generator; block g of the sample uses stream g,
/// so the result does not depend on how the draws are scheduled.
/// The clamped end windows leave a bias of order m / N = N^{-1/2}; it is
/// removed by a grouped (leave-one-block-out) jackknife extrapolating at that
/// order over 20 blocks. The standard error is the jackknife standard error
/// of the corrected estimate, from leave-two-blocks-out spacing estimates.
template <Real Scalar>
MonteCarloEntropy<Scalar> mc_entropy_oracle(const std::function<Scalar(CounterRng&)>& sampler, long count,
                                            std::uint64_t seed, int groups = 20) {
  require(count >= 1000, "Monte Carlo entropy needs at least 1000 samples");
  require(groups >= 3 && count % groups == 0, "sample count must split evenly into jackknife groups");
  const long per_group = count / groups;
  std::vector<std::pair<Scalar, int>> tagged;
  tagged.reserve(static_cast<std::size_t>(count));
  for (int g = 0; g < groups; ++g) {
    CounterRng rng(seed, static_cast<std::uint64_t>(g));
    for (long j = 0; j < per_group; ++j) tagged.emplace_back(sampler(rng), g);
  }
  std::sort(tagged.begin(), tagged.end());

  // Spacing estimate on the pooled sample without blocks a and b (-1: none).
  std::vector<Scalar> buf;
  buf.reserve(static_cast<std::size_t>(count));
  auto without = [&](int a, int b) {
    buf.clear();
    for (const auto& [x, g] : tagged)
      if (g != a && g != b) buf.push_back(x);
    return detail::spacing_entropy(buf);
  };

  const auto G = static_cast<std::size_t>(groups);
  const Scalar full = without(-1, -1);
  std::vector<Scalar> drop1(G);
  std::vector<std::vector<Scalar>> drop2(G, std::vector<Scalar>(G, 0));
  for (int a = 0; a < groups; ++a) {
    drop1[static_cast<std::size_t>(a)] = without(a, -1);
    for (int b = a + 1; b < groups; ++b)
      drop2[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          drop2[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = without(a, b);
  }

  // Corrected estimate from an estimate on k blocks and the mean of its
  // leave-one-block-out estimates on k - 1 blocks.
  auto corrected = [](Scalar whole, Scalar mean_less, int k) {
    const Scalar ratio = std::sqrt(static_cast<Scalar>(k) / static_cast<Scalar>(k - 1));
    return whole + (whole - mean_less) / (ratio - 1);
  };

  MonteCarloEntropy<Scalar> out;
  out.estimate = corrected(full, std::accumulate(drop1.begin(), drop1.end(), Scalar(0)) / static_cast<Scalar>(groups),
                           groups);
  std::vector<Scalar> pseudo(G);
  for (int a = 0; a < groups; ++a) {
    Scalar acc = 0;
    for (int b = 0; b < groups; ++b)
      if (b != a) acc += drop2[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    pseudo[static_cast<std::size_t>(a)] =
        corrected(drop1[static_cast<std::size_t>(a)], acc / static_cast<Scalar>(groups - 1), groups - 1);
  }
  const Scalar avg = std::accumulate(pseudo.begin(), pseudo.end(), Scalar(0)) / static_cast<Scalar>(groups);
  Scalar ss = 0;
  for (Scalar v : pseudo) ss += (v - avg) * (v - avg);
  out.std_error = std::sqrt(ss * static_cast<Scalar>(groups - 1) / static_cast<Scalar>(groups));
  return out;
}

/// Draw from a built-in noise law.
template <Real Scalar>
Scalar sample_noise(const NoiseModel<Scalar>& noise, CounterRng& rng) {
  switch (noise.family) {
    case NoiseFamily::gaussian:
      return noise.parameter * static_cast<Scalar>(rng.normal());
    case NoiseFamily::uniform_width:
      return noise.parameter * static_cast<Scalar>(rng.uniform() - 0.5);
    case NoiseFamily::triangular_cf: {
      // Rejection from the Cauchy-type envelope min(1, 4/(T x)^2) on the
      // (T/2pi) sinc^2(T x / 2) density.
      const Scalar T = noise.parameter;
      for (;;) {
        const Scalar u = static_cast<Scalar>(rng.uniform());
        const Scalar v = static_cast<Scalar>(rng.uniform());
        // Envelope in y = T x / 2: g(y) = min(1, 1/y^2), total mass 4.
        Scalar y;
        const Scalar side = u < Scalar(0.5) ? -1 : 1;
        const Scalar r = std::abs(2 * u - 1);
        y = r < Scalar(0.5) ? 2 * r : 1 / (2 * (1 - r));
        const Scalar env = y <= 1 ? Scalar(1) : 1 / (y * y);
        const Scalar s = sinc(y);
        if (v * env <= s * s) return side * 2 * y / T;
      }
    }
    case NoiseFamily::custom:
      break;
  }
  throw PreconditionError("no sampler for noise family " + std::string(to_string(noise.family)));
}

/// Draw Z_n = (X + X_1 + ... + X_n) / sqrt(n) for a one-dimensional scenario.
template <Real Scalar>
Scalar sample_smoothed_sum(const Scenario<Scalar>& s, int n, CounterRng& rng) {
  const auto& pmf = s.step.pmf();
  Scalar total = sample_noise(s.noise, rng);
  for (int i = 0; i < n; ++i) {
    Scalar u = static_cast<Scalar>(rng.uniform());
    long k = pmf.rbegin()->first;
    for (const auto& [atom, w] : pmf) {
      if (u < w) {
        k = atom;
        break;
      }
      u -= w;
    }
    total += static_cast<Scalar>(k);
  }
  return total / std::sqrt(static_cast<Scalar>(n));
}

}  // namespace smoothclt
