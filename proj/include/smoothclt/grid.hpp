#pragma once

#include "smoothclt/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace smoothclt {

/// Uniform grid request: nodes span [-window, window] inclusive.
template <Real Scalar>
struct GridSpec {
  Scalar window = 12;
  Index nodes = (Index{1} << 14) + 1;

  Scalar lower() const { return -window; }
  Scalar step() const { return 2 * window / static_cast<Scalar>(nodes - 1); }
  void validate() const {
    require(window > 0, "grid window must be positive");
    require(nodes >= 5 && nodes % 2 == 1, "grid node count must be odd and at least 5");
  }
};

enum class Side { left, right };

/// A jump discontinuity of a sampled density, with both one-sided limits.
template <Real Scalar>
struct Break {
  Scalar x;
  Scalar left;
  Scalar right;
};

/// Density sampled on a uniform grid x_i = x0 + i*h.
///
/// Densities with jumps (lattice sums smoothed by a box noise) carry their
/// discontinuities explicitly; quadrature splits at every break so that the
/// piecewise-smooth pieces are integrated without a jump inside a panel.
/// If a break falls on a node, the node value is informational only.
template <Real Scalar>
class GridDensity {
 public:
  using Array = ArrayX<Scalar>;

  GridDensity() = default;

  GridDensity(Scalar x0, Scalar step, Array values, std::vector<Break<Scalar>> breaks = {})
      : x0_(x0), step_(step), values_(std::move(values)), breaks_(std::move(breaks)) {
    require(step_ > 0, "grid step must be positive");
    require(values_.size() >= 3, "grid needs at least three nodes");
    std::sort(breaks_.begin(), breaks_.end(),
              [](const Break<Scalar>& a, const Break<Scalar>& b) { return a.x < b.x; });
    std::erase_if(breaks_, [&](const Break<Scalar>& b) { return b.x <= x0_ || b.x >= upper(); });
    mass_ = integrate([](Scalar, Scalar v) { return v; });
  }

  template <class Fn>
  static GridDensity sample(const GridSpec<Scalar>& spec, Fn&& density) {
    spec.validate();
    Array values(spec.nodes);
    const Scalar h = spec.step();
    for (Index i = 0; i < spec.nodes; ++i) values[i] = density(spec.lower() + h * static_cast<Scalar>(i));
    return GridDensity(spec.lower(), h, std::move(values));
  }

  Scalar x0() const { return x0_; }
  Scalar step() const { return step_; }
  Index size() const { return values_.size(); }
  Scalar x(Index i) const { return x0_ + step_ * static_cast<Scalar>(i); }
  Scalar upper() const { return x(size() - 1); }
  const Array& values() const { return values_; }
  const std::vector<Break<Scalar>>& breaks() const { return breaks_; }
  Scalar total_mass() const { return mass_; }

  Array nodes() const { return Array::LinSpaced(size(), x0_, upper()); }

  bool same_grid(const GridDensity& other) const {
    const Scalar tol = 64 * std::numeric_limits<Scalar>::epsilon();
    return size() == other.size() && std::abs(x0_ - other.x0_) <= tol * (1 + std::abs(x0_)) &&
           std::abs(step_ - other.step_) <= tol * step_;
  }

  /// One-sided value at an arbitrary point of the window.
  Scalar value_at(Scalar xv, Side side) const {
    if (xv <= x0_) return side == Side::left && xv < x0_ ? Scalar(0) : values_[0];
    if (xv >= upper()) return side == Side::right && xv > upper() ? Scalar(0) : values_[size() - 1];
    if (const Break<Scalar>* b = break_at(xv)) return side == Side::left ? b->left : b->right;

    const Scalar s = (xv - x0_) / step_;
    Index i = static_cast<Index>(std::floor(s));
    i = std::clamp<Index>(i, 0, size() - 2);
    const Scalar frac = s - static_cast<Scalar>(i);
    if (frac <= tolerance()) return node_or_limit(i, Side::right);

    const Scalar xl = x(i);
    const Scalar xr = x(i + 1);
    // Smooth neighbourhood: cubic through four nodes.
    if (i >= 1 && i + 2 < size() && !has_break_in(x(i - 1), x(i + 2))) {
      const Scalar t = frac;
      const Scalar w0 = -t * (t - 1) * (t - 2) / 6;
      const Scalar w1 = (t + 1) * (t - 1) * (t - 2) / 2;
      const Scalar w2 = -(t + 1) * t * (t - 2) / 2;
      const Scalar w3 = (t + 1) * t * (t - 1) / 6;
      return w0 * values_[i - 1] + w1 * values_[i] + w2 * values_[i + 1] + w3 * values_[i + 2];
    }
    // Otherwise linear on the knot list (nodes plus break limits).
    Scalar a = xl;
    Scalar va = node_or_limit(i, Side::right);
    Scalar b = xr;
    Scalar vb = node_or_limit(i + 1, Side::left);
    for (auto it = first_break_after(xl); it != breaks_.end() && it->x < xr; ++it) {
      const auto& br = *it;
      if (br.x <= xl) continue;
      if (br.x < xv) {
        a = br.x;
        va = br.right;
      } else {
        b = br.x;
        vb = br.left;
        break;
      }
    }
    return va + (vb - va) * (xv - a) / (b - a);
  }

  /// Largest |value| over nodes and break limits.
  template <class Fn>
  Scalar sup_over_knots(Fn&& g) const {
    Scalar m = 0;
    for (Index i = 0; i < size(); ++i) {
      if (break_at(x(i)) == nullptr) m = std::max(m, std::abs(g(x(i), values_[i])));
    }
    for (const auto& b : breaks_) {
      m = std::max({m, std::abs(g(b.x, b.left)), std::abs(g(b.x, b.right))});
    }
    return m;
  }

  /// Integral of g(x, p(x)) over [lo, hi] (defaults to the whole window).
  template <class Fn>
  Scalar integrate(Fn&& g, Scalar lo = -std::numeric_limits<Scalar>::infinity(),
                   Scalar hi = std::numeric_limits<Scalar>::infinity()) const {
    std::vector<Scalar> knots;
    knots.reserve(breaks_.size());
    for (const auto& b : breaks_) knots.push_back(b.x);
    return integrate_segments(
        *this, knots, lo, hi, [&](Index i) { return g(x(i), values_[i]); },
        [&](Scalar xv, Side side) { return g(xv, value_at(xv, side)); });
  }

  /// Integral of g(x, p(x), q(x)) for two densities sampled on the same grid.
  template <class Fn>
  static Scalar integrate_pair(const GridDensity& p, const GridDensity& q, Fn&& g,
                               Scalar lo = -std::numeric_limits<Scalar>::infinity(),
                               Scalar hi = std::numeric_limits<Scalar>::infinity()) {
    if (!p.same_grid(q)) throw PreconditionError("grid mismatch between densities");
    std::vector<Scalar> knots;
    for (const auto& b : p.breaks_) knots.push_back(b.x);
    for (const auto& b : q.breaks_) knots.push_back(b.x);
    return integrate_segments(
        p, knots, lo, hi, [&](Index i) { return g(p.x(i), p.values_[i], q.values_[i]); },
        [&](Scalar xv, Side side) { return g(xv, p.value_at(xv, side), q.value_at(xv, side)); });
  }

  /// Mass of each cell [x_i, x_{i+1}], fourth order on smooth stretches and
  /// exact for piecewise-linear densities.
  Array cell_masses() const {
    Array cells(size() - 1);
    for (Index i = 0; i + 1 < size(); ++i) {
      if (i >= 1 && i + 2 < size() && !has_break_in(x(i - 1), x(i + 2))) {
        cells[i] = step_ * (-values_[i - 1] + 13 * values_[i] + 13 * values_[i + 1] - values_[i + 2]) / 24;
      } else {
        cells[i] = linear_cell_mass(i);
      }
    }
    return cells;
  }

  /// Integral over [x_i, x_{i+1}] of the piecewise-linear interpolant through
  /// the nodes and break limits.
  Scalar linear_cell_mass(Index i) const {
    Scalar a = x(i);
    Scalar va = node_or_limit(i, Side::right);
    Scalar total = 0;
    for (auto it = first_break_after(x(i)); it != breaks_.end() && it->x < x(i + 1); ++it) {
      const auto& br = *it;
      if (br.x <= x(i) + tolerance() * step_ || br.x >= x(i + 1) - tolerance() * step_) continue;
      total += (br.x - a) * (va + br.left) / 2;
      a = br.x;
      va = br.right;
    }
    total += (x(i + 1) - a) * (va + node_or_limit(i + 1, Side::left)) / 2;
    return total;
  }

  Scalar node_or_limit(Index i, Side side) const {
    if (const Break<Scalar>* b = break_at(x(i))) return side == Side::left ? b->left : b->right;
    return values_[i];
  }

 private:
  static constexpr Scalar tolerance() { return Scalar(1e-9); }

  const Break<Scalar>* break_at(Scalar xv) const {
    auto it = std::lower_bound(breaks_.begin(), breaks_.end(), xv - tolerance() * step_,
                               [](const Break<Scalar>& b, Scalar v) { return b.x < v; });
    if (it != breaks_.end() && std::abs(it->x - xv) <= tolerance() * step_) return &*it;
    return nullptr;
  }

  auto first_break_after(Scalar a) const {
    return std::upper_bound(breaks_.begin(), breaks_.end(), a,
                            [](Scalar v, const Break<Scalar>& b) { return v < b.x; });
  }

  bool has_break_in(Scalar a, Scalar b) const {
    auto it = std::lower_bound(breaks_.begin(), breaks_.end(), a - tolerance() * step_,
                               [](const Break<Scalar>& br, Scalar v) { return br.x < v; });
    return it != breaks_.end() && it->x <= b + tolerance() * step_;
  }

  // Splits [lo, hi] at the knots and integrates each smooth piece: composite
  // Simpson over interior nodes, quadratic end corrections for partial cells.
  template <class NodeFn, class PointFn>
  static Scalar integrate_segments(const GridDensity& grid, std::vector<Scalar> knots, Scalar lo,
                                   Scalar hi, NodeFn&& at_node, PointFn&& at_point) {
    lo = std::max(lo, grid.x0_);
    hi = std::min(hi, grid.upper());
    if (!(hi > lo)) return 0;
    std::erase_if(knots, [&](Scalar k) { return k <= lo || k >= hi; });
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end(),
                            [&](Scalar a, Scalar b) { return std::abs(a - b) <= tolerance() * grid.step_; }),
                knots.end());

    Scalar total = 0;
    Scalar a = lo;
    for (std::size_t k = 0; k <= knots.size(); ++k) {
      const Scalar b = k < knots.size() ? knots[k] : hi;
      total += integrate_piece(grid, a, b, at_node, at_point);
      a = b;
    }
    return total;
  }

  template <class NodeFn, class PointFn>
  static Scalar integrate_piece(const GridDensity& grid, Scalar a, Scalar b, NodeFn& at_node,
                                PointFn& at_point) {
    const Scalar h = grid.step_;
    const Scalar tol = tolerance() * h;
    Index first = static_cast<Index>(std::ceil((a + tol - grid.x0_) / h));
    Index last = static_cast<Index>(std::floor((b - tol - grid.x0_) / h));
    first = std::max<Index>(first, 0);
    last = std::min<Index>(last, grid.size() - 1);
    if (grid.x(first) <= a + tol) ++first;
    if (grid.x(last) >= b - tol) --last;

    const Scalar ga = at_point(a, Side::right);
    const Scalar gb = at_point(b, Side::left);
    if (first > last) return (b - a) * (ga + gb) / 2;
    if (first == last) {
      // Single interior node: quadratic through three points.
      return quadratic_span(a, ga, grid.x(first), at_node(first), b, gb);
    }

    Scalar total = 0;
    const Index intervals = last - first;
    Index simpson_end = last;
    if (intervals % 2 == 1) simpson_end = intervals >= 3 ? last - 3 : last - 1;
    for (Index i = first; i < simpson_end; i += 2) {
      total += h * (at_node(i) + 4 * at_node(i + 1) + at_node(i + 2)) / 3;
    }
    if (intervals % 2 == 1) {
      if (intervals >= 3) {
        total += 3 * h *
                 (at_node(last - 3) + 3 * at_node(last - 2) + 3 * at_node(last - 1) + at_node(last)) / 8;
      } else {
        total += h * (at_node(first) + at_node(last)) / 2;
      }
    }

    total += partial_left(a, ga, grid.x(first), at_node(first), at_node(first + 1), h);
    total += partial_left(b, gb, grid.x(last), at_node(last), at_node(last - 1), -h);
    return total;
  }

  // Integral from the edge point e to node x1 of the quadratic through
  // (e, ge), (x1, g1), (x1 + h, g2). A negative h mirrors the construction.
  static Scalar partial_left(Scalar e, Scalar ge, Scalar x1, Scalar g1, Scalar g2, Scalar h) {
    const Scalar delta = (x1 - e) * (h > 0 ? 1 : -1);
    const Scalar ah = std::abs(h);
    if (delta <= tolerance() * ah) return 0;
    const Scalar c = (ah * (ge - g1) + delta * (g2 - g1)) / (delta * ah * (delta + ah));
    const Scalar bcoef = ((g2 - g1) - c * ah * ah) / ah;
    return g1 * delta - bcoef * delta * delta / 2 + c * delta * delta * delta / 3;
  }

  static Scalar quadratic_span(Scalar x0, Scalar g0, Scalar x1, Scalar g1, Scalar x2, Scalar g2) {
    // Exact integral of the Lagrange quadratic over [x0, x2].
    const Scalar a = x0 - x1;
    const Scalar b = x2 - x1;
    if (-a <= 0 || b <= 0) return (x2 - x0) * (g0 + g2) / 2;
    const Scalar denom0 = a * (a - b);
    const Scalar denom1 = a * b;
    const Scalar denom2 = b * (b - a);
    auto moment = [&](int k) {  // integral of s^k over [a, b]
      return (std::pow(b, k + 1) - std::pow(a, k + 1)) / static_cast<Scalar>(k + 1);
    };
    // L0 = s(s-b)/denom0, L1 = (s-a)(s-b)/denom1, L2 = s(s-a)/denom2
    const Scalar i0 = (moment(2) - b * moment(1)) / denom0;
    const Scalar i1 = (moment(2) - (a + b) * moment(1) + a * b * moment(0)) / denom1;
    const Scalar i2 = (moment(2) - a * moment(1)) / denom2;
    return g0 * i0 + g1 * i1 + g2 * i2;
  }

  Scalar x0_ = 0;
  Scalar step_ = 1;
  Array values_;
  std::vector<Break<Scalar>> breaks_;
  Scalar mass_ = 0;
};

using GridDensityd = GridDensity<double>;
using GridSpecd = GridSpec<double>;

/// Two-column text form: a header `# x0 <x0> h <h> count <n>` followed by one
/// `x p(x)` line per node, printed with 17 significant digits.
template <Real Scalar>
void write_grid_density(std::ostream& out, const GridDensity<Scalar>& p) {
  char line[96];
  std::snprintf(line, sizeof line, "# x0 %.17g h %.17g count %lld\n", static_cast<double>(p.x0()),
                static_cast<double>(p.step()), static_cast<long long>(p.size()));
  out << line;
  for (Index i = 0; i < p.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g %.17g\n", static_cast<double>(p.x(i)),
                  static_cast<double>(p.values()[i]));
    out << line;
  }
}

template <Real Scalar>
GridDensity<Scalar> read_grid_density(std::istream& in) {
  std::string hash, kx0, kh, kcount;
  double x0 = 0, h = 0;
  long long count = 0;
  if (!(in >> hash >> kx0 >> x0 >> kh >> h >> kcount >> count) || hash != "#" || kx0 != "x0" ||
      kh != "h" || kcount != "count" || count < 3) {
    throw PreconditionError("malformed grid density header");
  }
  ArrayX<Scalar> values(count);
  for (long long i = 0; i < count; ++i) {
    double xv = 0, pv = 0;
    if (!(in >> xv >> pv)) throw PreconditionError("truncated grid density body");
    values[i] = static_cast<Scalar>(pv);
  }
  return GridDensity<Scalar>(static_cast<Scalar>(x0), static_cast<Scalar>(h), std::move(values));
}

}  // namespace smoothclt
