#include "smoothclt/lab.hpp"
#include "smoothclt/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

using namespace smoothclt;
using namespace smoothclt::lab;

namespace {

constexpr int kPass = 0;
constexpr int kUsage = 1;
constexpr int kViolation = 2;

struct Common {
  std::string config;
  std::string out;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::optional<long> grid_nodes;
  std::optional<double> grid_window;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario config (JSON)");
  cmd->add_option("--out", c.out, "output directory (default: stdout)");
  cmd->add_option("--format", c.format, "csv | jsonl | plotdata");
  cmd->add_option("--seed", c.seed, "seed of the Monte Carlo oracle / corpus");
  cmd->add_option("--grid-nodes", c.grid_nodes, "grid node count (odd)");
  cmd->add_option("--grid-window", c.grid_window, "grid half-width");
}

Config load(const Common& c, bool need_scenario) {
  Config cfg;
  if (!c.config.empty()) {
    cfg = load_config(c.config);
  } else if (need_scenario) {
    throw ConfigError("--config is required for this command");
  }
  if (need_scenario && cfg.scenario.n_values.empty()) throw ConfigError("config has no noise / n_values");
  if (c.grid_nodes) cfg.grid.nodes = *c.grid_nodes;
  if (c.grid_window) cfg.grid.window = *c.grid_window;
  if (c.seed) cfg.seed = *c.seed;
  try {
    cfg.grid.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

Format format_of(const Common& c, Format fallback) { return c.format.empty() ? fallback : parse_format(c.format); }

std::string extension(Format f) {
  switch (f) {
    case Format::csv: return ".csv";
    case Format::jsonl: return ".jsonl";
    case Format::plotdata: return ".txt";
  }
  return ".txt";
}

void emit(const Common& c, const std::string& stem, Format f, const std::function<void(std::ostream&)>& body) {
  if (c.out.empty()) {
    body(std::cout);
    return;
  }
  std::filesystem::create_directories(c.out);
  const auto path = std::filesystem::path(c.out) / (stem + extension(f));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  body(os);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Writes named numeric columns as csv or jsonl.
void write_table(std::ostream& os, Format f, const std::vector<std::string>& names,
                 const std::vector<std::vector<double>>& rows) {
  if (f == Format::plotdata) throw ConfigError("plotdata applies to densities and sweeps");
  if (f == Format::csv) {
    for (std::size_t i = 0; i < names.size(); ++i) os << (i ? "," : "") << names[i];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << num(r[i]);
      os << '\n';
    }
    return;
  }
  for (const auto& r : rows) {
    nlohmann::json j;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (std::isfinite(r[i])) {
        j[names[i]] = r[i];
      } else {
        j[names[i]] = std::isnan(r[i]) ? "nan" : "inf";
      }
    }
    os << j.dump() << '\n';
  }
}

int cmd_density(const Common& c, int n) {
  const auto cfg = load(c, true);
  const auto p = scenario_density(cfg.scenario, n, cfg.grid);
  const Format f = format_of(c, Format::plotdata);
  emit(c, "density_n" + std::to_string(n), f, [&](std::ostream& os) {
    if (f == Format::plotdata) {
      write_grid_density(os, p);
      return;
    }
    std::vector<std::vector<double>> rows;
    for (Index i = 0; i < p.size(); ++i) rows.push_back({p.x(i), p.values()[i]});
    write_table(os, f, {"x", "p"}, rows);
  });
  return kPass;
}

int cmd_entropy(const Common& c, long samples) {
  const auto cfg = load(c, true);
  const auto& s = cfg.scenario;
  std::vector<std::vector<double>> rows;
  for (int n : s.n_values) {
    double h = 0;
    for (int k = 0; k < s.dimension; ++k) h += differential_entropy(scenario_density(s.component(k), n, cfg.grid));
    std::vector<double> row{static_cast<double>(n), h};
    if (c.seed) {
      require(s.dimension == 1, "the Monte Carlo oracle is one-dimensional");
      const auto mc = mc_entropy_oracle<double>([&](CounterRng& rng) { return sample_smoothed_sum(s, n, rng); },
                                                samples, cfg.seed);
      row.push_back(mc.estimate);
      row.push_back(mc.std_error);
    }
    rows.push_back(row);
  }
  std::vector<std::string> names{"n", "h"};
  if (c.seed) names.insert(names.end(), {"mc_estimate", "mc_std_error"});
  emit(c, "entropy", format_of(c, Format::csv), [&](std::ostream& os) { write_table(os, format_of(c, Format::csv), names, rows); });
  return kPass;
}

int cmd_kl(const Common& c) {
  const auto cfg = load(c, true);
  const auto& s = cfg.scenario;
  std::vector<std::vector<double>> rows;
  for (int n : s.n_values) {
    double value = 0, direct = 0;
    MomentSummary<double> moments;
    for (int k = 0; k < s.dimension; ++k) {
      const auto& comp = s.component(k);
      const auto m = scenario_moments(comp, n);
      const auto kl = kl_to_std_normal(scenario_density(comp, n, cfg.grid), m);
      value += kl.value;
      direct += kl.direct;
      moments = k == 0 ? m : product_moments(moments, m);
    }
    const auto dec = kl_decomposition(value, moments);
    rows.push_back({static_cast<double>(n), value, direct, dec.d_shape, dec.mean_term});
  }
  const Format f = format_of(c, Format::csv);
  emit(c, "kl", f, [&](std::ostream& os) { write_table(os, f, {"n", "kl", "kl_direct", "d_shape", "mean_term"}, rows); });
  return kPass;
}

int cmd_sweep(const Common& c) {
  const auto cfg = load(c, true);
  const auto result = run_sweep(cfg.scenario, cfg.grid);
  const Format f = format_of(c, Format::csv);
  if (f == Format::plotdata) {
    if (c.out.empty()) throw ConfigError("plotdata needs --out <dir>");
    write_plotdata(c.out, cfg.scenario, cfg.grid, result);
  } else {
    emit(c, "sweep", f, [&](std::ostream& os) { write_sweep(os, result, f); });
  }
  if (!result.cross_routes_agree()) {
    std::cerr << "cross-route disagreement above " << result.cross_route_tolerance << '\n';
    return kViolation;
  }
  return kPass;
}

int cmd_dichotomy(const Common& c) {
  const auto cfg = load(c, true);
  const auto rows = dichotomy_experiment(cfg.dichotomy_noises, cfg.scenario.step, cfg.scenario.n_values, cfg.grid,
                                         cfg.zero_k);
  const Format f = format_of(c, Format::csv);
  emit(c, "dichotomy", f, [&](std::ostream& os) { write_dichotomy(os, rows, f); });
  for (const auto& r : rows) {
    if (!r.consistent) return kViolation;
  }
  return kPass;
}

int cmd_check_bounds(const Common& c, std::optional<int> cases, const std::string& claims) {
  const auto cfg = load(c, false);
  auto reports = bound_corpus(cases.value_or(cfg.corpus_cases), cfg.seed);
  if (!claims.empty()) {
    for (auto& r : load_claims(claims)) reports.push_back(std::move(r));
  }
  const Format f = format_of(c, Format::jsonl);
  emit(c, "check_bounds", f, [&](std::ostream& os) { write_reports(os, reports, f); });
  std::size_t violations = 0;
  for (const auto& r : reports) {
    if (!r.satisfied) {
      ++violations;
      std::cerr << "violation: " << r.anchor << " lhs=" << num(r.lhs) << " rhs=" << num(r.rhs) << ' ' << r.context
                << '\n';
    }
  }
  std::cerr << reports.size() << " checks, " << violations << " violations\n";
  return violations == 0 ? kPass : kViolation;
}

int cmd_zero_cond(const Common& c, std::optional<long> K) {
  const auto cfg = load(c, true);
  const auto& noise = cfg.scenario.noise;
  const auto report = zero_condition(noise, K.value_or(cfg.zero_k));
  std::vector<std::vector<double>> rows;
  for (const auto& [k, v] : report.values) rows.push_back({static_cast<double>(k), v});
  const Format f = format_of(c, Format::csv);
  emit(c, "zero_cond", f, [&](std::ostream& os) { write_table(os, f, {"k", "abs_f_pi_k"}, rows); });
  std::cerr << noise.label() << ": zero condition " << (report.pass ? "PASS" : "FAIL") << " (worst k=" << report.worst_k
            << ", |f(pi k)|=" << num(report.worst_value) << ")\n";
  return report.pass ? kPass : kViolation;
}

int cmd_cond_integrals(const Common& c) {
  const auto cfg = load(c, true);
  const auto ic = integral_conditions(cfg.scenario.noise);
  const Format f = format_of(c, Format::csv);
  if (f == Format::plotdata) throw ConfigError("plotdata applies to densities and sweeps");
  emit(c, "cond_integrals", f, [&](std::ostream& os) {
    const std::pair<const char*, const IntegralVerdict<double>*> items[] = {
        {"abs_f_times_abs_df", &ic.c44}, {"abs_f", &ic.c45a}, {"abs_df", &ic.c45b}};
    if (f == Format::csv) os << "integrand,verdict,ratio1,ratio2,ratio3,partial_integral\n";
    for (const auto& [name, v] : items) {
      if (f == Format::csv) {
        os << name << ',' << to_string(v->verdict) << ',' << num(v->last_ratios[0]) << ',' << num(v->last_ratios[1])
           << ',' << num(v->last_ratios[2]) << ',' << num(v->partial_integral) << '\n';
      } else {
        nlohmann::json j = {{"integrand", name},
                            {"verdict", std::string(to_string(v->verdict))},
                            {"last_ratios", {v->last_ratios[0], v->last_ratios[1], v->last_ratios[2]}},
                            {"partial_integral", v->partial_integral}};
        os << j.dump() << '\n';
      }
    }
  });
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smoothed lattice sums: densities, entropies and inequality checks"};
  app.require_subcommand(1);
  Common common;

  int n = 0;
  auto* density = app.add_subcommand("density", "density of Z_n for one n");
  add_common(density, common);
  density->add_option("--n", n, "number of lattice steps")->required();

  long samples = 100000;
  auto* entropy = app.add_subcommand("entropy", "differential entropy per n (Monte Carlo check with --seed)");
  add_common(entropy, common);
  entropy->add_option("--samples", samples, "Monte Carlo sample count");

  auto* kl = app.add_subcommand("kl", "relative entropy to the standard normal per n");
  add_common(kl, common);
  auto* sweep = app.add_subcommand("sweep", "convergence sweep over n");
  add_common(sweep, common);
  auto* dichotomy = app.add_subcommand("dichotomy", "zero condition against terminal relative entropy");
  add_common(dichotomy, common);

  std::optional<int> cases;
  std::string claims;
  auto* check = app.add_subcommand("check-bounds", "randomized inequality corpus");
  add_common(check, common);
  check->add_option("--cases", cases, "valid cases per checker");
  check->add_option("--claims", claims, "extra lhs <= rhs claims (JSONL)");

  std::optional<long> K;
  auto* zero = app.add_subcommand("zero-cond", "check f(pi k) = 0 for 1 <= k <= K");
  add_common(zero, common);
  zero->add_option("--k", K, "largest k");

  auto* integrals = app.add_subcommand("cond-integrals", "integrability of |f||f'|, |f| and |f'|");
  add_common(integrals, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*density) return cmd_density(common, n);
    if (*entropy) return cmd_entropy(common, samples);
    if (*kl) return cmd_kl(common);
    if (*sweep) return cmd_sweep(common);
    if (*dichotomy) return cmd_dichotomy(common);
    if (*check) return cmd_check_bounds(common, cases, claims);
    if (*zero) return cmd_zero_cond(common, K);
    if (*integrals) return cmd_cond_integrals(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
