#include "smoothclt/lab.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace smoothclt::lab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double nan_max(double a, double b) {
  if (std::isnan(a)) return b;
  if (std::isnan(b)) return a;
  return std::max(a, b);
}

std::string describe(const Scenario<double>& s) {
  std::ostringstream os;
  os.precision(17);
  for (int c = 0; c < s.dimension; ++c) {
    const auto& comp = s.component(c);
    if (c > 0) os << " x ";
    os << comp.noise.label() << " + pmf{";
    for (const auto& [k, p] : comp.step.pmf()) os << k << ':' << p << ',';
    os << '}';
  }
  os << " n=";
  for (int n : s.n_values) os << n << ',';
  return os.str();
}

struct ComponentRow {
  SweepRow row;
  GridDensity<double> p;
};

GridDensity<double> invert(const Scenario<double>& s, int n, const GridSpec<double>& grid, bool check_mass) {
  InversionOptions<double> opt;
  opt.check_mass = check_mass;
  return invert_to_density(smoothed_sum_cf(s, n), grid, opt).density;
}

ComponentRow component_row(const Scenario<double>& s, int n, const GridSpec<double>& grid) {
  ComponentRow out;
  SweepRow& r = out.row;
  r.n = n;
  const bool finite = s.noise.finite_second_moment();
  const auto cf = smoothed_sum_cf(s, n);
  const bool second_route = s.noise.has_density() && cf.integrable;

  if (s.noise.has_density()) {
    out.p = exact_mixture_density(s, n, grid, 1.0, finite ? MassCheck::strict : MassCheck::report);
  } else {
    out.p = invert(s, n, grid, true);
  }
  r.delta = l2_distance_to_std_normal(out.p);
  r.sup_gap = std::abs(sup_gap_to_std_normal(out.p));

  if (!finite) {
    // No second moment: D and W2 are infinite and h is not resolved on a window.
    r.h = kNaN;
    r.kl = kInf;
    r.second_moment = kInf;
    r.w2 = kInf;
    if (second_route) {
      const auto q = invert(s, n, grid, false);
      r.cross_route_gap = std::max(std::abs(r.delta - l2_distance_to_std_normal(q)),
                                   std::abs(r.sup_gap - std::abs(sup_gap_to_std_normal(q))));
    }
    return out;
  }

  const auto moments = scenario_moments(s, n);
  r.h = differential_entropy(out.p);
  r.kl = kl_to_std_normal(out.p, moments).value;
  r.second_moment = moments_of(out.p).second_moment;
  r.w2 = w2_to_std_normal(out.p);
  if (second_route) {
    const auto q = invert(s, n, grid, true);
    r.cross_route_gap = std::max({std::abs(r.h - differential_entropy(q)),
                                  std::abs(r.kl - kl_to_std_normal(q, moments).value),
                                  std::abs(r.delta - l2_distance_to_std_normal(q))});
  }
  return out;
}

// |p1 (x) p2 - phi (x) phi| over the product of the two node sets.
double product_sup_gap(const GridDensity<double>& p1, const GridDensity<double>& p2) {
  const ArrayX<double> x1 = p1.nodes();
  const ArrayX<double> x2 = p2.nodes();
  const ArrayX<double> g1 = x1.unaryExpr([](double x) { return normal_pdf(x); });
  const ArrayX<double> g2 = x2.unaryExpr([](double x) { return normal_pdf(x); });
  double sup = 0;
  for (Index i = 0; i < p1.size(); ++i) {
    sup = std::max(sup, (p1.values()[i] * p2.values() - g1[i] * g2).abs().maxCoeff());
  }
  return sup;
}

// ||p1 (x) p2 - phi (x) phi||_2 from one-dimensional inner products.
double product_delta(const GridDensity<double>& p1, const GridDensity<double>& p2) {
  auto norms = [](const GridDensity<double>& p) {
    return std::pair{p.integrate([](double, double v) { return v * v; }),
                     p.integrate([](double x, double v) { return v * normal_pdf(x); })};
  };
  const auto [n1, c1] = norms(p1);
  const auto [n2, c2] = norms(p2);
  const double phi2 = 1 / (2 * std::sqrt(kPi<double>));
  return std::sqrt(std::max(0.0, n1 * n2 - 2 * c1 * c2 + phi2 * phi2));
}

}  // namespace

bool SweepResult::cross_routes_agree() const {
  for (const auto& r : rows) {
    if (!std::isnan(r.cross_route_gap) && r.cross_route_gap > cross_route_tolerance) return false;
  }
  return true;
}

GridDensity<double> scenario_density(const Scenario<double>& scenario, int n, const GridSpec<double>& grid) {
  require(scenario.dimension == 1, "density output is one-dimensional");
  return component_row(scenario, n, grid).p;
}

SweepResult run_sweep(const Scenario<double>& scenario, const GridSpec<double>& grid) {
  validate_n_values(scenario.n_values);
  SweepResult result;
  result.scenario = describe(scenario);
  std::ostringstream key;
  key.precision(17);
  key << result.scenario << " grid=" << grid.window << '/' << grid.nodes;
  result.digest = digest(key.str());

  for (int n : scenario.n_values) {
    try {
      if (scenario.dimension == 1) {
        result.rows.push_back(component_row(scenario, n, grid).row);
        continue;
      }
      const auto a = component_row(scenario.component(0), n, grid);
      const auto b = component_row(scenario.component(1), n, grid);
      SweepRow r;
      r.n = n;
      r.h = a.row.h + b.row.h;
      r.kl = a.row.kl + b.row.kl;
      r.delta = product_delta(a.p, b.p);
      r.sup_gap = product_sup_gap(a.p, b.p);
      r.second_moment = a.row.second_moment + b.row.second_moment;
      r.w2 = std::hypot(a.row.w2, b.row.w2);
      r.cross_route_gap = nan_max(a.row.cross_route_gap, b.row.cross_route_gap);
      result.rows.push_back(r);
    } catch (const PreconditionError& e) {
      throw PreconditionError("n=" + std::to_string(n) + ": " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("n=" + std::to_string(n) + ": " + e.what());
    }
  }
  return result;
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::converges: return "CONVERGES";
    case Regime::stalls: return "STALLS";
    case Regime::undecided: return "UNDECIDED";
  }
  return "UNDECIDED";
}

Regime classify_terminal(double kl) {
  if (kl < kConvergedBelow) return Regime::converges;
  if (kl > kStalledAbove) return Regime::stalls;
  return Regime::undecided;
}

std::vector<DichotomyRow> dichotomy_experiment(const std::vector<NoiseModel<double>>& noises,
                                               const LatticeLaw<double>& step, const std::vector<int>& n_values,
                                               const GridSpec<double>& grid, long zero_k) {
  std::vector<DichotomyRow> out;
  for (const auto& noise : noises) {
    DichotomyRow row;
    row.noise = noise.label();
    row.zero = zero_condition(noise, zero_k);
    const auto sweep = run_sweep(make_scenario(noise, step, n_values), grid);
    row.terminal_kl = sweep.rows.back().kl;
    row.terminal_delta = sweep.rows.back().delta;
    row.regime = classify_terminal(row.terminal_kl);
    if (noise.family == NoiseFamily::gaussian) {
      row.exempt = true;
      row.note = "deficit below resolution";
    } else if (!noise.finite_second_moment()) {
      row.exempt = true;
      row.note = "infinite second moment";
    }
    const Regime expected = row.zero.pass ? Regime::converges : Regime::stalls;
    row.consistent = row.exempt || row.regime == expected;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace smoothclt::lab
