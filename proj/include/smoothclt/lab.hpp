#pragma once

#include "smoothclt/bounds.hpp"
#include "smoothclt/entropy.hpp"
#include "smoothclt/model.hpp"
#include "smoothclt/report.hpp"
#include "smoothclt/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace smoothclt::lab {

/// Malformed or unreadable configuration / fixture files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Config {
  Scenario<double> scenario;
  GridSpec<double> grid;
  std::vector<NoiseModel<double>> dichotomy_noises;
  long zero_k = 64;
  int corpus_cases = 100;
  std::uint64_t seed = 20240611;
  std::string canonical;  // normalized JSON text, input of the digest
};

Config parse_config(std::string_view json_text);
Config load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a as 16 hex digits.
std::string digest(std::string_view text);

inline constexpr double kCrossRouteTolerance = 5e-4;
inline constexpr double kConvergedBelow = 0.01;
inline constexpr double kStalledAbove = 0.1;

struct SweepRow {
  int n = 0;
  double h = 0;
  double kl = 0;
  double delta = 0;
  double sup_gap = 0;
  double second_moment = 0;
  double w2 = 0;
  // max |primary - inversion| over h, D and Delta; NaN when no second route
  double cross_route_gap = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  std::string scenario;
  std::string digest;
  double cross_route_tolerance = kCrossRouteTolerance;
  std::vector<SweepRow> rows;

  bool cross_routes_agree() const;
};

/// Per-n convergence quantities of Z_n. The closed-form mixture is the
/// primary route; the CF inversion is the second route where the CF is
/// integrable. Two-dimensional scenarios combine their components.
SweepResult run_sweep(const Scenario<double>& scenario, const GridSpec<double>& grid);

/// Single-n pieces used by the density / entropy / kl commands.
GridDensity<double> scenario_density(const Scenario<double>& scenario, int n, const GridSpec<double>& grid);

enum class Regime { converges, stalls, undecided };
std::string_view to_string(Regime r);
Regime classify_terminal(double kl);

struct DichotomyRow {
  std::string noise;
  ZeroConditionReport<double> zero;
  double terminal_kl = 0;
  double terminal_delta = 0;
  Regime regime = Regime::undecided;
  bool exempt = false;
  std::string note;  // reason for an exemption
  bool consistent = true;
};

std::vector<DichotomyRow> dichotomy_experiment(const std::vector<NoiseModel<double>>& noises,
                                               const LatticeLaw<double>& step, const std::vector<int>& n_values,
                                               const GridSpec<double>& grid, long zero_k = 64);

/// Randomized inequality corpus: cases_per_checker valid inputs per checker,
/// drawn deterministically from seed.
std::vector<BoundReport> bound_corpus(int cases_per_checker, std::uint64_t seed);

/// Claims read from a JSONL file, one {"anchor","lhs","rhs","context"} object
/// per line, re-evaluated as lhs <= rhs.
std::vector<BoundReport> load_claims(const std::filesystem::path& path);

enum class Format { csv, jsonl, plotdata };
Format parse_format(std::string_view name);

void write_sweep(std::ostream& os, const SweepResult& result, Format format);
void write_reports(std::ostream& os, const std::vector<BoundReport>& reports, Format format);
void write_dichotomy(std::ostream& os, const std::vector<DichotomyRow>& rows, Format format);
/// Plot data: one two-column density file per n plus kl_trace.txt.
void write_plotdata(const std::filesystem::path& dir, const Scenario<double>& scenario, const GridSpec<double>& grid,
                    const SweepResult& result);

}  // namespace smoothclt::lab
