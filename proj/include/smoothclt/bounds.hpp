#pragma once

#include "smoothclt/common.hpp"
#include "smoothclt/entropy.hpp"
#include "smoothclt/grid.hpp"
#include "smoothclt/report.hpp"
#include "smoothclt/spectral.hpp"

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace smoothclt {

namespace detail {

template <Real Scalar>
std::string fmt(Scalar v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", static_cast<double>(v));
  return buf;
}

template <Real Scalar>
void require_tail_radius(Scalar T) {
  require(T >= 1, "tail radius T must be at least 1 (got " + fmt(T) + ")");
}

template <Real Scalar>
void require_unit_second_moment(const MomentSummary<Scalar>& m) {
  const auto d = static_cast<Scalar>(m.dimension());
  require(std::abs(m.second_moment - d) <= Scalar(1e-3),
          "second moment must equal the dimension within 1e-3 (got " + fmt(m.second_moment) + ")");
}

// int_{|x| >= T} g(x, p(x)) dx over the grid.
template <Real Scalar, class Fn>
Scalar outer_integral(const GridDensity<Scalar>& p, Scalar T, Fn&& g) {
  return p.integrate(g, -std::numeric_limits<Scalar>::infinity(), -T) +
         p.integrate(g, T, std::numeric_limits<Scalar>::infinity());
}

}  // namespace detail

/// Gaussian tail masses against their explicit bounds:
/// first P(|Z| >= T) <= 2d T^{d-2} e^{-T^2/2}, then
/// E|Z|^2 1{|Z| >= T} <= 2d T^d e^{-T^2/2}.
template <Real Scalar>
std::pair<BoundReport, BoundReport> gaussian_tail_bounds(Scalar T, int d) {
  detail::require_tail_radius(T);
  require(d == 1 || d == 2, "dimension must be 1 or 2");
  const Scalar g = std::exp(-T * T / 2);
  Scalar mass = 0;
  Scalar second = 0;
  if (d == 1) {
    mass = 2 * normal_sf(T);
    second = 2 * (T * normal_pdf(T) + normal_sf(T));
  } else {
    // |Z|^2 is exponential with mean 2.
    mass = g;
    second = (T * T + 2) * g;
  }
  const auto dd = static_cast<Scalar>(d);
  const std::string ctx = "T=" + detail::fmt(T) + " d=" + std::to_string(d);
  return {make_report("gaussian_tail.mass", mass, 2 * dd * std::pow(T, dd - 2) * g, ctx),
          make_report("gaussian_tail.second_moment", second, 2 * dd * std::pow(T, dd) * g, ctx)};
}

/// Quadratic tail of p controlled by its L2 distance to the normal density:
/// int_{|x|>=T} x^2 p <= 2 T^{(d+4)/2} Delta + 2d T^d e^{-T^2/2}.
template <Real Scalar>
BoundReport weighted_tail_bound(const GridDensity<Scalar>& p, const MomentSummary<Scalar>& moments, Scalar T,
                                const std::string& context = {}) {
  detail::require_tail_radius(T);
  detail::require_unit_second_moment(moments);
  const Scalar d = 1;
  const Scalar lhs = detail::outer_integral(p, T, [](Scalar x, Scalar v) { return x * x * v; });
  const Scalar delta = l2_distance_to_std_normal(p);
  const Scalar rhs = 2 * std::pow(T, (d + 4) / 2) * delta + 2 * d * std::pow(T, d) * std::exp(-T * T / 2);
  return make_report("weighted_tail", lhs, rhs, context + " T=" + detail::fmt(T));
}

/// KL split at radius T:
/// D <= 2d T^{d-2} e^{-T^2/2} + (2 pi)^{d/2} int_{|x|<=T} (p - phi)^2 e^{|x|^2/2}
///      + (2d - 1)/2 int_{|x|>=T} |x|^2 p + int_{|x|>=T} p log p.
template <Real Scalar>
BoundReport kl_truncation_bound(const GridDensity<Scalar>& p, const MomentSummary<Scalar>& moments, Scalar T,
                                const std::string& context = {}) {
  detail::require_tail_radius(T);
  const Scalar d = 1;
  const Scalar kl = kl_to_std_normal(p, moments).value;
  const Scalar inner = p.integrate(
      [](Scalar x, Scalar v) {
        const Scalar e = v - normal_pdf(x);
        return e * e * std::exp(x * x / 2);
      },
      -T, T);
  const Scalar tail2 = detail::outer_integral(p, T, [](Scalar x, Scalar v) { return x * x * v; });
  const Scalar tail_ent = detail::outer_integral(p, T, [](Scalar, Scalar v) { return detail::xlogx(v); });
  const Scalar rhs = 2 * d * std::pow(T, d - 2) * std::exp(-T * T / 2) +
                     std::pow(2 * kPi<Scalar>, d / 2) * inner + (2 * d - 1) / 2 * tail2 + tail_ent;
  return make_report("kl_truncation", kl, rhs, context + " T=" + detail::fmt(T));
}

/// Right side of the simplified KL bound at radius T:
/// (2d+1) T^{d-1} e^{-T^2/2} + ((2 pi)^{d/2} + 1) e^{T^2/2} Delta^2 + d int_{|x|>=T} |x|^2 p.
template <Real Scalar>
Scalar kl_simplified_rhs(const GridDensity<Scalar>& p, Scalar T, Scalar delta) {
  const Scalar d = 1;
  const Scalar tail2 = detail::outer_integral(p, T, [](Scalar x, Scalar v) { return x * x * v; });
  return (2 * d + 1) * std::pow(T, d - 1) * std::exp(-T * T / 2) +
         (std::pow(2 * kPi<Scalar>, d / 2) + 1) * std::exp(T * T / 2) * delta * delta + d * tail2;
}

template <Real Scalar>
BoundReport kl_simplified_bound(const GridDensity<Scalar>& p, const MomentSummary<Scalar>& moments, Scalar T,
                                const std::string& context = {}) {
  detail::require_tail_radius(T);
  const Scalar kl = kl_to_std_normal(p, moments).value;
  const Scalar delta = l2_distance_to_std_normal(p);
  return make_report("kl_simplified", kl, kl_simplified_rhs(p, T, delta), context + " T=" + detail::fmt(T));
}

/// T = sqrt(2 log(1/Delta) + (d/2) log log(1/Delta)), defined for 0 < Delta <= 1/e.
template <Real Scalar>
Scalar prescribed_radius(Scalar delta, int d = 1) {
  require(delta > 0 && delta <= std::exp(Scalar(-1)), "prescribed radius needs 0 < Delta <= 1/e");
  const Scalar l = std::log(1 / delta);
  return std::sqrt(2 * l + static_cast<Scalar>(d) / 2 * std::log(l));
}

/// Fully explicit upper bound at the prescribed radius:
/// D <= (2d^2+2d+1) T^d e^{-T^2/2} + ((2 pi)^{d/2}+1) e^{T^2/2} Delta^2 + 2d T^{(d+4)/2} Delta.
/// The note carries D / (Delta log^{(d+4)/4}(1/Delta)) for inspection.
/// Delta below kDeltaFloor is quadrature noise and is reported as the vacuous Delta = 0 case.
inline constexpr double kDeltaFloor = 1e-12;

template <Real Scalar>
BoundReport combined_upper_bound(const GridDensity<Scalar>& p, const MomentSummary<Scalar>& moments,
                                 const std::string& context = {}) {
  detail::require_unit_second_moment(moments);
  const Scalar d = 1;
  const Scalar kl = kl_to_std_normal(p, moments).value;
  const Scalar delta = l2_distance_to_std_normal(p);
  if (delta <= kDeltaFloor) {
    auto r = make_report("combined_upper", kl, 0, context);
    r.note = "vacuous";
    return r;
  }
  if (delta > std::exp(Scalar(-1))) {
    auto r = make_report("combined_upper", kl, std::numeric_limits<double>::quiet_NaN(), context);
    r.satisfied = false;
    r.note = "hypothesis violated: Delta=" + detail::fmt(delta) + " > 1/e";
    return r;
  }
  const Scalar T = prescribed_radius(delta, 1);
  const Scalar rhs = (2 * d * d + 2 * d + 1) * std::pow(T, d) * std::exp(-T * T / 2) +
                     (std::pow(2 * kPi<Scalar>, d / 2) + 1) * std::exp(T * T / 2) * delta * delta +
                     2 * d * std::pow(T, (d + 4) / 2) * delta;
  auto r = make_report("combined_upper", kl, rhs, context + " T=" + detail::fmt(T));
  r.note = "ratio=" + detail::fmt(kl / (delta * std::pow(std::log(1 / delta), (d + 4) / 4)));
  return r;
}

/// D >= Delta^2 / (2M) for densities bounded by M >= (2 pi)^{-d/2}.
template <Real Scalar>
BoundReport l2_lower_bound(const GridDensity<Scalar>& p, const MomentSummary<Scalar>& moments, Scalar M,
                           const std::string& context = {}) {
  detail::require_unit_second_moment(moments);
  const Scalar sup = p.sup_over_knots([](Scalar, Scalar v) { return v; });
  require(M >= sup * (1 - Scalar(1e-12)), "M=" + detail::fmt(M) + " is below sup p=" + detail::fmt(sup));
  require(M >= std::exp(-kLog2Pi<Scalar> / 2) * (1 - Scalar(1e-12)), "M must be at least (2 pi)^{-1/2}");
  const Scalar kl = kl_to_std_normal(p, moments).value;
  const Scalar delta = l2_distance_to_std_normal(p);
  return make_report("l2_lower", delta * delta / (2 * M), kl, context + " M=" + detail::fmt(M));
}

/// Moment control by D: the master inequality and its three consequences for
/// the mean, the variances and the second moment.
template <Real Scalar>
std::vector<BoundReport> moment_control_bounds(Scalar D, const MomentSummary<Scalar>& moments,
                                               const std::string& context = {}) {
  require(D >= Scalar(-1e-9), "D must be nonnegative");
  const Scalar Dp = std::max(D, Scalar(0));
  const auto dec = kl_decomposition(D, moments);
  const auto d = static_cast<Scalar>(moments.dimension());
  Scalar penalty = 0;
  Scalar a2 = 0;
  Scalar worst_var = 0;
  for (Scalar a : moments.mean) a2 += a * a;
  for (Scalar s2 : moments.variances) {
    const Scalar e = std::abs(s2 - 1);
    penalty += std::min(e, e * e);
    worst_var = std::max(worst_var, e);
  }
  const Scalar root = std::sqrt(Dp);
  std::vector<BoundReport> out;
  out.push_back(make_report("moment_control.master", dec.d_shape + a2 / 2 + penalty / 16, D, context));
  out.push_back(make_report("moment_control.mean", a2, 2 * D, context));
  out.push_back(make_report("moment_control.variance", worst_var, 4 * root + 16 * Dp, context));
  out.push_back(
      make_report("moment_control.second_moment", std::abs(moments.second_moment - d), 4 * d * root + 16 * d * Dp, context));
  return out;
}

/// h(X + Y) <= h(X) + H(Y) for continuous X and discrete Y.
inline BoundReport mixture_entropy_check(double hX, double HY, double hSum, const std::string& context = {}) {
  return make_report("mixture_entropy", hSum, hX + HY, context);
}

/// H(Y) <= log(2 pi e (Var Y + 1/12)) / 2 for integer-valued Y.
template <Real Scalar>
BoundReport discrete_max_entropy_check(const LatticeLaw<Scalar>& pmf, const std::string& context = {}) {
  const Scalar H = discrete_entropy(pmf);
  const Scalar rhs = (kLog2Pi<Scalar> + 1 + std::log(pmf.variance() + Scalar(1) / 12)) / 2;
  return make_report("discrete_max_entropy", H, rhs, context);
}

/// W2(p, N(0,1))^2 <= 2 D(p || N(0,1)).
template <Real Scalar>
BoundReport talagrand_check(const GridDensity<Scalar>& p, const MomentSummary<Scalar>& moments,
                            const std::string& context = {}) {
  const Scalar kl = kl_to_std_normal(p, moments).value;
  const Scalar w2 = w2_to_std_normal(p);
  return make_report("talagrand", w2 * w2, 2 * kl, context);
}

template <Real Scalar>
struct EntropyRow {
  int n = 0;
  Scalar h = 0;
};

/// Finite-n entropy ceiling along a sweep, one report per row:
/// h(Z_n) <= h(X) + (d/2) log(2 pi e (1 + 1/(12n))),
/// plus a trend report that the top quartile of n stays within 1e-3 of
/// h(X) + h(Z). The steps must have unit variance.
template <Real Scalar>
std::vector<BoundReport> entropy_ceiling_check(const std::vector<EntropyRow<Scalar>>& rows, Scalar hX, int d,
                                               Scalar step_variance, const std::string& context = {}) {
  require(std::abs(step_variance - 1) <= Scalar(1e-9), "entropy ceiling needs unit-variance steps");
  require(!rows.empty(), "entropy ceiling needs sweep rows");
  const auto dd = static_cast<Scalar>(d);
  const Scalar hZ = dd / 2 * (kLog2Pi<Scalar> + 1);
  std::vector<BoundReport> out;
  for (const auto& r : rows) {
    const auto n = static_cast<Scalar>(r.n);
    const Scalar rhs = hX + dd / 2 * (kLog2Pi<Scalar> + 1 + std::log1p(1 / (12 * n)));
    out.push_back(make_report("entropy_ceiling.finite_n", r.h, rhs, context + " n=" + std::to_string(r.n)));
  }
  const std::size_t top = rows.size() - std::max<std::size_t>(1, rows.size() / 4);
  Scalar excess = -std::numeric_limits<Scalar>::infinity();
  for (std::size_t i = top; i < rows.size(); ++i) excess = std::max(excess, rows[i].h - (hX + hZ));
  out.push_back(make_report("entropy_ceiling.trend", excess, Scalar(1e-3), context));
  return out;
}

}  // namespace smoothclt
