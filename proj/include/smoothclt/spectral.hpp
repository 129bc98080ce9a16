#pragma once

#include "smoothclt/common.hpp"
#include "smoothclt/grid.hpp"
#include "smoothclt/model.hpp"
#include "smoothclt/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace smoothclt {

/// Characteristic function with the frequency window on which it is
/// negligible outside (or exactly zero, when compact).
template <Real Scalar>
struct CharFnCurve {
  using Complex = std::complex<Scalar>;

  std::function<Complex(Scalar)> eval;
  Scalar window = 0;
  bool integrable = false;
  bool compact = false;

  Complex operator()(Scalar t) const { return eval(t); }
};

template <Real Scalar>
CharFnCurve<Scalar> gaussian_cf(Scalar mean = 0, Scalar sigma = 1) {
  CharFnCurve<Scalar> c;
  c.eval = [mean, sigma](Scalar t) {
    return std::polar(std::exp(-sigma * sigma * t * t / 2), mean * t);
  };
  c.window = std::sqrt(Scalar(82)) / sigma;
  c.integrable = true;
  return c;
}

template <Real Scalar>
CharFnCurve<Scalar> standard_normal_cf() {
  return gaussian_cf<Scalar>(0, 1);
}

/// CF of scale * Z_n: t -> f(u) v(u)^n with u = scale * t / sqrt(n), v the
/// step CF (cos u for the symmetric Bernoulli step).
template <Real Scalar>
CharFnCurve<Scalar> smoothed_sum_cf(const Scenario<Scalar>& scenario, int n, Scalar scale = 1) {
  require(n >= 1, "smoothed_sum_cf needs n >= 1");
  require(scale > 0, "scale must be positive");
  const auto& noise = scenario.noise;
  const auto& step = scenario.step;
  const Scalar c = scale / std::sqrt(static_cast<Scalar>(n));
  const bool bernoulli = step.pmf().size() == 2 && step.pmf().begin()->first == -1 &&
                         step.pmf().rbegin()->first == 1 && step.pmf().begin()->second == Scalar(0.5);

  CharFnCurve<Scalar> curve;
  curve.eval = [noise_cf = noise.cf, step, c, n, bernoulli](Scalar t) {
    const Scalar u = c * t;
    const std::complex<Scalar> f = noise_cf(u);
    if (f == std::complex<Scalar>(0, 0)) return f;
    if (bernoulli) return f * std::pow(std::cos(u), n);
    return f * std::pow(step.cf(u), n);
  };
  if (noise.cf_support_radius) {
    curve.window = *noise.cf_support_radius / c;
    curve.integrable = true;
    curve.compact = true;
  } else if (noise.family == NoiseFamily::gaussian) {
    curve.window = std::sqrt(Scalar(82)) / noise.parameter / c;
    curve.integrable = true;
  } else {
    // Box noise: |f(u)| <= 2/(w|u|), so 1e-3 at the window edge.
    curve.window = 2000 / noise.parameter / c;
    curve.integrable = false;
  }
  return curve;
}

template <Real Scalar>
struct InversionOptions {
  Scalar dt = Scalar(0.05);
  // Cesaro (Fejer-weighted) summation for CFs that are not absolutely
  // integrable; converges at every continuity point of the density.
  bool cesaro_truncation = false;
  // Heavy-tailed laws lose mass outside any fixed window; with the check off
  // the raw values are kept and no renormalization happens.
  bool check_mass = true;
};

template <Real Scalar>
struct InversionResult {
  GridDensity<Scalar> density;
  Scalar imaginary_residue = 0;  // max |Im| of the inversion integral over probe nodes
  Scalar mass_drift = 0;         // |mass - 1| before renormalization
};

namespace detail {

// Simpson weights times the sampled CF on [0, window], pre-scaled by 1/pi.
template <Real Scalar>
std::vector<std::complex<Scalar>> weighted_half_line(const CharFnCurve<Scalar>& cf, Scalar dt,
                                                     bool cesaro, Scalar& step) {
  Index intervals = static_cast<Index>(std::ceil(cf.window / dt));
  intervals += intervals % 2;
  intervals = std::max<Index>(intervals, 2);
  step = cf.window / static_cast<Scalar>(intervals);
  std::vector<std::complex<Scalar>> w(static_cast<std::size_t>(intervals + 1));
  for (Index j = 0; j <= intervals; ++j) {
    const Scalar t = step * static_cast<Scalar>(j);
    Scalar simpson = (j == 0 || j == intervals) ? 1 : (j % 2 == 1 ? 4 : 2);
    simpson *= step / 3;
    if (cesaro) simpson *= 1 - t / cf.window;
    w[static_cast<std::size_t>(j)] = cf(t) * (simpson / kPi<Scalar>);
  }
  return w;
}

// sum_j Re[w_j exp(-i t_j x)] with t_j = j * step, by rotation recurrence.
template <Real Scalar>
Scalar rotate_sum(const std::vector<std::complex<Scalar>>& w, Scalar step, Scalar x) {
  const std::complex<Scalar> rot = std::polar(Scalar(1), -step * x);
  std::complex<Scalar> z(1, 0);
  Scalar acc = 0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    if ((j & 63U) == 0) z = std::polar(Scalar(1), -step * static_cast<Scalar>(j) * x);
    acc += w[j].real() * z.real() - w[j].imag() * z.imag();
    z *= rot;
  }
  return acc;
}

}  // namespace detail

/// Fourier inversion p(x) = (1/2pi) int exp(-itx) f(t) dt on a uniform grid,
/// composite Simpson on the CF window. Uses f(-t) = conj f(t).
template <Real Scalar>
InversionResult<Scalar> invert_to_density(const CharFnCurve<Scalar>& cf, const GridSpec<Scalar>& grid,
                                          const InversionOptions<Scalar>& options = {}) {
  grid.validate();
  require(options.dt > 0, "inversion step must be positive");
  if (!cf.integrable && !cf.compact && !options.cesaro_truncation) {
    // Tail test: the CF must already be negligible near the window edge.
    Scalar tail = 0;
    for (int j = 0; j <= 200; ++j) {
      const Scalar t = cf.window * (Scalar(0.9) + Scalar(0.1) * static_cast<Scalar>(j) / 200);
      tail = std::max(tail, std::abs(cf(t)));
    }
    if (tail > Scalar(1e-10)) {
      throw PreconditionError("characteristic function is not integrable on its window");
    }
  }

  Scalar step = 0;
  const auto weights = detail::weighted_half_line(cf, options.dt, options.cesaro_truncation, step);
  ArrayX<Scalar> values(grid.nodes);
  const Scalar h = grid.step();
  for (Index i = 0; i < grid.nodes; ++i) {
    values[i] = detail::rotate_sum(weights, step, grid.lower() + h * static_cast<Scalar>(i));
  }

  InversionResult<Scalar> result;
  // Imaginary part over the full line at a handful of probe nodes.
  for (int probe = 0; probe <= 16; ++probe) {
    const Scalar x = grid.lower() + 2 * grid.window * static_cast<Scalar>(probe) / 16;
    Scalar im = 0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
      const Scalar t = step * static_cast<Scalar>(j);
      const Scalar pos = std::imag(weights[j] * std::polar(Scalar(1), -t * x));
      const Scalar neg = std::imag(std::conj(weights[j]) * std::polar(Scalar(1), t * x));
      im += (j == 0 ? pos : pos + neg);
    }
    result.imaginary_residue = std::max(result.imaginary_residue, std::abs(im) / 2);
  }

  GridDensity<Scalar> raw(grid.lower(), h, values);
  result.mass_drift = std::abs(raw.total_mass() - 1);
  if (!options.check_mass) {
    result.density = std::move(raw);
    return result;
  }
  if (result.mass_drift > Scalar(1e-4)) {
    throw NumericalError("inverted density has mass drift " + std::to_string(static_cast<double>(result.mass_drift)) +
                         "; check the grid window and CF window");
  }
  values /= raw.total_mass();
  result.density = GridDensity<Scalar>(grid.lower(), h, std::move(values));
  return result;
}

enum class MassCheck { strict, report };

/// Density of scale * Z_n built directly in space:
/// p(x) = c sum_k P{S_n = k} p_X(c x - k), c = sqrt(n) / scale.
/// Jumps of the noise density are carried as explicit breaks.
template <Real Scalar>
GridDensity<Scalar> exact_mixture_density(const Scenario<Scalar>& scenario, int n, const GridSpec<Scalar>& grid,
                                          Scalar scale = 1, MassCheck check = MassCheck::strict,
                                          long node_budget = 1L << 20) {
  grid.validate();
  require(scale > 0, "scale must be positive");
  const auto& noise = scenario.noise;
  require(noise.has_density(), "exact mixture needs a closed-form noise density");
  const auto atoms = lattice_sum(scenario.step, n, node_budget);
  const Scalar c = std::sqrt(static_cast<Scalar>(n)) / scale;
  const Scalar h = grid.step();
  const Scalar x0 = grid.lower();
  const Index count = grid.nodes;

  ArrayX<Scalar> values = ArrayX<Scalar>::Zero(count);
  const Scalar radius = noise.tail_radius;
  for (std::size_t a = 0; a < atoms.points.size(); ++a) {
    const auto k = static_cast<Scalar>(atoms.points[a]);
    const Scalar w = atoms.probs[a] * c;
    Index lo = 0;
    Index hi = count - 1;
    if (std::isfinite(radius)) {
      lo = std::max<Index>(0, static_cast<Index>(std::floor(((k - radius) / c - x0) / h)));
      hi = std::min<Index>(count - 1, static_cast<Index>(std::ceil(((k + radius) / c - x0) / h)));
    }
    for (Index i = lo; i <= hi; ++i) {
      values[i] += w * noise.density(c * (x0 + h * static_cast<Scalar>(i)) - k);
    }
  }

  std::vector<Break<Scalar>> breaks;
  if (!noise.jumps.empty()) {
    std::vector<Scalar> positions;  // in units of the noise variable
    for (long k : atoms.points) {
      for (Scalar j : noise.jumps) positions.push_back(static_cast<Scalar>(k) + j);
    }
    std::sort(positions.begin(), positions.end());
    positions.erase(std::unique(positions.begin(), positions.end()), positions.end());
    for (Scalar q : positions) {
      const Scalar bx = q / c;
      if (bx <= x0 || bx >= x0 + h * static_cast<Scalar>(count - 1)) continue;
      Scalar left = 0;
      Scalar right = 0;
      for (std::size_t a = 0; a < atoms.points.size(); ++a) {
        Scalar u = q - static_cast<Scalar>(atoms.points[a]);
        // q - k is a jump up to rounding; the one-sided limits need it exact.
        for (Scalar j : noise.jumps) {
          if (std::abs(u - j) <= 64 * std::numeric_limits<Scalar>::epsilon() * (1 + std::abs(q))) u = j;
        }
        if (std::abs(u) > radius) continue;
        left += atoms.probs[a] * noise.density_at(u, Side::left);
        right += atoms.probs[a] * noise.density_at(u, Side::right);
      }
      breaks.push_back({bx, left * c, right * c});
    }
  }

  GridDensity<Scalar> p(x0, h, std::move(values), std::move(breaks));
  if (check == MassCheck::strict && std::abs(p.total_mass() - 1) > Scalar(1e-6)) {
    throw NumericalError("mixture density mass " + std::to_string(static_cast<double>(p.total_mass())) +
                         " is not within 1e-6 of 1; widen the grid window");
  }
  return p;
}

template <Real Scalar>
GridDensity<Scalar> sample_std_normal(const GridSpec<Scalar>& grid) {
  return GridDensity<Scalar>::sample(grid, [](Scalar x) { return normal_pdf(x); });
}

template <Real Scalar>
Scalar l2_distance(const GridDensity<Scalar>& p, const GridDensity<Scalar>& q) {
  const Scalar sq = GridDensity<Scalar>::integrate_pair(
      p, q, [](Scalar, Scalar a, Scalar b) { return (a - b) * (a - b); });
  return std::sqrt(std::max(sq, Scalar(0)));
}

/// Delta = ||p - phi||_2 with phi evaluated in closed form.
template <Real Scalar>
Scalar l2_distance_to_std_normal(const GridDensity<Scalar>& p) {
  const Scalar inside = p.integrate([](Scalar x, Scalar v) {
    const Scalar d = v - normal_pdf(x);
    return d * d;
  });
  // phi^2 outside the window, in closed form: phi(x)^2 = phi(sqrt2 x)/sqrt(4 pi).
  const Scalar r2 = std::numbers::sqrt2_v<Scalar>;
  const Scalar outside = (normal_sf(-p.x0() * r2) + normal_sf(p.upper() * r2)) / (2 * std::sqrt(kPi<Scalar>));
  return std::sqrt(std::max(inside + outside, Scalar(0)));
}

/// Delta via Plancherel: (2pi)^{-1/2} ||f1 - f2||_2 over the larger window.
template <Real Scalar>
Scalar l2_distance_plancherel(const CharFnCurve<Scalar>& f1, const CharFnCurve<Scalar>& f2, Scalar dt = Scalar(0.01),
                              std::optional<Scalar> window_override = std::nullopt) {
  Scalar window = 0;
  if (window_override) {
    window = *window_override;
  } else {
    require(f1.integrable && f2.integrable, "Plancherel route needs CFs that are negligible beyond their windows");
    window = std::max(f1.window, f2.window);
  }
  require(window > 0 && dt > 0, "Plancherel window and step must be positive");
  Index intervals = static_cast<Index>(std::ceil(window / dt));
  intervals += intervals % 2;
  const Scalar step = window / static_cast<Scalar>(intervals);
  Scalar acc = 0;
  for (Index j = 0; j <= intervals; ++j) {
    const Scalar t = step * static_cast<Scalar>(j);
    const Scalar w = (j == 0 || j == intervals) ? 1 : (j % 2 == 1 ? 4 : 2);
    acc += w * std::norm(f1(t) - f2(t));
  }
  acc *= step / 3;
  // Both halves of the line contribute equally for CFs of real laws.
  return std::sqrt(2 * acc / (2 * kPi<Scalar>));
}

/// sup over the grid (nodes and break limits) of |p - phi|.
template <Real Scalar>
Scalar sup_gap_to_std_normal(const GridDensity<Scalar>& p) {
  return p.sup_over_knots([](Scalar x, Scalar v) { return v - normal_pdf(x); });
}

template <Real Scalar>
Scalar sup_distance(const GridDensity<Scalar>& p, const GridDensity<Scalar>& q) {
  if (!p.same_grid(q)) throw PreconditionError("grid mismatch between densities");
  return (p.values() - q.values()).abs().maxCoeff();
}

template <Real Scalar>
struct ZeroConditionReport {
  bool pass = false;
  long worst_k = 0;
  Scalar worst_value = 0;  // |f(pi k)| at worst_k
  std::vector<std::pair<long, Scalar>> values;
};

/// Checks f(pi k) = 0 for 1 <= |k| <= K at tolerance 1e-10.
template <Real Scalar>
ZeroConditionReport<Scalar> zero_condition(const NoiseModel<Scalar>& noise, long K) {
  require(K >= 1, "zero condition needs K >= 1");
  ZeroConditionReport<Scalar> r;
  for (long k = 1; k <= K; ++k) {
    for (long s : {k, -k}) {
      if (s < 0 && noise.symmetric) continue;
      const Scalar v = std::abs(noise.cf(kPi<Scalar> * static_cast<Scalar>(s)));
      r.values.emplace_back(s, v);
      if (v > r.worst_value) {
        r.worst_value = v;
        r.worst_k = s;
      }
    }
  }
  if (r.worst_k == 0) r.worst_k = 1;
  r.pass = r.worst_value <= Scalar(1e-10);
  return r;
}

enum class Convergence { convergent, divergent, undecided };

inline std::string_view to_string(Convergence c) {
  switch (c) {
    case Convergence::convergent: return "convergent";
    case Convergence::divergent: return "divergent";
    case Convergence::undecided: return "undecided";
  }
  return "unknown";
}

template <Real Scalar>
struct IntegralVerdict {
  Convergence verdict = Convergence::undecided;
  std::array<Scalar, 3> last_ratios{};  // tail-increment ratios over the last three doublings
  Scalar partial_integral = 0;         // truncated integral at the largest radius
};

template <Real Scalar>
struct IntegralConditions {
  IntegralVerdict<Scalar> c44;   // int |f||f'|
  IntegralVerdict<Scalar> c45a;  // int |f|
  IntegralVerdict<Scalar> c45b;  // int |f'|
};

/// One-dimensional integrability classifier for |f||f'|, |f| and |f'|.
///
/// The truncated integrals over |t| <= R are computed for R = 1, 2, ..., 2^14;
/// the tail increments I(2R) - I(R) must shrink geometrically (ratio <= 0.75
/// over the last three doublings) for a convergent verdict, and a ratio of at
/// least 0.95 throughout means divergence. Anything else is undecided.
template <Real Scalar>
IntegralConditions<Scalar> integral_conditions(const NoiseModel<Scalar>& noise, Scalar max_step = Scalar(0.02)) {
  constexpr int kDoublings = 14;
  std::array<std::array<Scalar, kDoublings + 1>, 3> increments{};  // [integrand][j]

  auto sample = [&](Scalar t) {
    const Scalar f = std::abs(noise.cf(t));
    const Scalar fp = std::abs(noise.cf_derivative(t));
    return std::array<Scalar, 3>{f * fp, f, fp};
  };

  Scalar lo = 0;
  for (int j = 0; j <= kDoublings; ++j) {
    const Scalar hi = std::ldexp(Scalar(1), j);
    Index intervals = static_cast<Index>(std::ceil((hi - lo) / max_step));
    intervals += intervals % 2;
    const Scalar h = (hi - lo) / static_cast<Scalar>(intervals);
    std::array<Scalar, 3> acc{};
    for (Index i = 0; i <= intervals; ++i) {
      const Scalar w = (i == 0 || i == intervals) ? 1 : (i % 2 == 1 ? 4 : 2);
      const auto v = sample(lo + h * static_cast<Scalar>(i));
      for (int q = 0; q < 3; ++q) acc[q] += w * v[q];
    }
    // Real laws: |f| and |f'| are even, so the negative half doubles each piece.
    for (int q = 0; q < 3; ++q) increments[q][j] = 2 * acc[q] * h / 3;
    lo = hi;
  }

  auto classify = [&](const std::array<Scalar, kDoublings + 1>& inc) {
    IntegralVerdict<Scalar> v;
    Scalar total = 0;
    for (Scalar x : inc) total += x;
    v.partial_integral = total;
    for (int r = 0; r < 3; ++r) {
      const int j = kDoublings - 2 + r;
      const Scalar num = inc[j];
      const Scalar den = inc[j - 1];
      const Scalar negligible = Scalar(1e-13) * std::max(total, std::numeric_limits<Scalar>::min());
      if (num <= negligible) {
        v.last_ratios[r] = 0;
      } else if (den <= negligible) {
        v.last_ratios[r] = std::numeric_limits<Scalar>::infinity();
      } else {
        v.last_ratios[r] = num / den;
      }
    }
    const Scalar hi_ratio = *std::max_element(v.last_ratios.begin(), v.last_ratios.end());
    const Scalar lo_ratio = *std::min_element(v.last_ratios.begin(), v.last_ratios.end());
    if (hi_ratio <= Scalar(0.75)) {
      v.verdict = Convergence::convergent;
    } else if (lo_ratio >= Scalar(0.95)) {
      v.verdict = Convergence::divergent;
    } else {
      v.verdict = Convergence::undecided;
    }
    return v;
  };

  IntegralConditions<Scalar> out;
  out.c44 = classify(increments[0]);
  out.c45a = classify(increments[1]);
  out.c45b = classify(increments[2]);
  return out;
}

}  // namespace smoothclt
