#include "smoothclt/lab.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace smoothclt::lab {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json jnum(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

}  // namespace

Format parse_format(std::string_view name) {
  if (name == "csv") return Format::csv;
  if (name == "jsonl") return Format::jsonl;
  if (name == "plotdata") return Format::plotdata;
  throw ConfigError("unknown format '" + std::string(name) + "' (csv, jsonl, plotdata)");
}

void write_sweep(std::ostream& os, const SweepResult& result, Format format) {
  switch (format) {
    case Format::csv:
      os << "n,h,kl,delta,sup_gap,second_moment,w2,cross_route_gap\n";
      for (const auto& r : result.rows) {
        os << r.n << ',' << num(r.h) << ',' << num(r.kl) << ',' << num(r.delta) << ',' << num(r.sup_gap) << ','
           << num(r.second_moment) << ',' << num(r.w2) << ',' << num(r.cross_route_gap) << '\n';
      }
      break;
    case Format::jsonl:
      for (const auto& r : result.rows) {
        json j = {{"scenario", result.scenario},
                  {"digest", result.digest},
                  {"cross_route_tolerance", result.cross_route_tolerance},
                  {"n", r.n},
                  {"h", jnum(r.h)},
                  {"kl", jnum(r.kl)},
                  {"delta", jnum(r.delta)},
                  {"sup_gap", jnum(r.sup_gap)},
                  {"second_moment", jnum(r.second_moment)},
                  {"w2", jnum(r.w2)},
                  {"cross_route_gap", jnum(r.cross_route_gap)}};
        os << j.dump() << '\n';
      }
      break;
    case Format::plotdata:
      os << "# n kl\n";
      for (const auto& r : result.rows) os << r.n << ' ' << num(r.kl) << '\n';
      break;
  }
}

void write_reports(std::ostream& os, const std::vector<BoundReport>& reports, Format format) {
  switch (format) {
    case Format::csv:
      os << "anchor,lhs,rhs,satisfied,margin,context,digest,note\n";
      for (const auto& r : reports) {
        os << r.anchor << ',' << num(r.lhs) << ',' << num(r.rhs) << ',' << (r.satisfied ? "true" : "false") << ','
           << num(r.margin) << ',' << quoted(r.context) << ',' << digest(r.context) << ',' << quoted(r.note) << '\n';
      }
      break;
    case Format::jsonl:
      for (const auto& r : reports) {
        json j = {{"anchor", r.anchor},  {"lhs", jnum(r.lhs)},         {"rhs", jnum(r.rhs)},
                  {"margin", jnum(r.margin)}, {"satisfied", r.satisfied}, {"context", r.context},
                  {"digest", digest(r.context)}};
        if (!r.note.empty()) j["note"] = r.note;
        os << j.dump() << '\n';
      }
      break;
    case Format::plotdata:
      throw ConfigError("plotdata applies to densities and sweeps");
  }
}

void write_dichotomy(std::ostream& os, const std::vector<DichotomyRow>& rows, Format format) {
  switch (format) {
    case Format::csv:
      os << "noise,zero_condition,worst_k,worst_value,terminal_kl,terminal_delta,regime,exempt,consistent,note\n";
      for (const auto& r : rows) {
        os << r.noise << ',' << (r.zero.pass ? "PASS" : "FAIL") << ',' << r.zero.worst_k << ','
           << num(r.zero.worst_value) << ',' << num(r.terminal_kl) << ',' << num(r.terminal_delta) << ','
           << to_string(r.regime) << ',' << (r.exempt ? "true" : "false") << ','
           << (r.consistent ? "true" : "false") << ',' << quoted(r.note) << '\n';
      }
      break;
    case Format::jsonl:
      for (const auto& r : rows) {
        json j = {{"noise", r.noise},
                  {"zero_condition", r.zero.pass ? "PASS" : "FAIL"},
                  {"worst_k", r.zero.worst_k},
                  {"worst_value", jnum(r.zero.worst_value)},
                  {"terminal_kl", jnum(r.terminal_kl)},
                  {"terminal_delta", jnum(r.terminal_delta)},
                  {"regime", std::string(to_string(r.regime))},
                  {"exempt", r.exempt},
                  {"consistent", r.consistent},
                  {"note", r.note}};
        os << j.dump() << '\n';
      }
      break;
    case Format::plotdata:
      throw ConfigError("plotdata applies to densities and sweeps");
  }
}

void write_plotdata(const std::filesystem::path& dir, const Scenario<double>& scenario, const GridSpec<double>& grid,
                    const SweepResult& result) {
  require(scenario.dimension == 1, "plot data is written for one-dimensional scenarios");
  std::filesystem::create_directories(dir);
  for (const auto& r : result.rows) {
    auto os = open_out(dir / ("density_n" + std::to_string(r.n) + ".txt"));
    write_grid_density(os, scenario_density(scenario, r.n, grid));
  }
  auto trace = open_out(dir / "kl_trace.txt");
  write_sweep(trace, result, Format::plotdata);
}

}  // namespace smoothclt::lab
