#include "smoothclt/lab.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace smoothclt::lab {

namespace {

using nlohmann::json;

constexpr int kMaxDefaultN = 1024;

NoiseModel<double> parse_noise(const json& j) {
  if (!j.is_object() || !j.contains("family")) throw ConfigError("noise needs a 'family' entry");
  const std::string family = j.at("family").get<std::string>();
  NoiseParams<double> params;
  if (j.contains("params")) {
    for (const auto& [key, value] : j.at("params").items()) {
      if (key == "cf_table") {
        for (const auto& row : value) {
          if (!row.is_array() || row.size() != 3) throw ConfigError("cf_table rows are [t, re, im]");
          params.cf_table.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
        }
      } else {
        params.values[key] = value.get<double>();
      }
    }
  }
  return make_noise(family, params);
}

LatticeLaw<double> parse_step(const json& j) {
  if (!j.contains("pmf")) return LatticeLaw<double>::bernoulli();
  std::map<long, double> pmf;
  for (const auto& [key, value] : j.at("pmf").items()) {
    std::size_t used = 0;
    long k = 0;
    try {
      k = std::stol(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size()) throw ConfigError("pmf keys must be integers, got '" + key + "'");
    pmf[k] = value.get<double>();
  }
  return LatticeLaw<double>(std::move(pmf));
}

}  // namespace

Config parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  Config c;
  try {
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      c.grid.window = g.value("window", c.grid.window);
      c.grid.nodes = g.value("nodes", c.grid.nodes);
      c.grid.validate();
    }
    if (j.contains("noise")) {
      std::vector<int> n_values = j.value("n_values", std::vector<int>{4, 16, 64, 256});
      const bool large = j.value("allow_large_n", false);
      for (int n : n_values) {
        if (n > kMaxDefaultN && !large) {
          throw ConfigError("n=" + std::to_string(n) + " exceeds 1024; set allow_large_n to override");
        }
      }
      const LatticeLaw<double> step = parse_step(j.value("step", json::object()));
      auto first = make_scenario(parse_noise(j.at("noise")), step, n_values);
      const int dimension = j.value("dimension", 1);
      if (dimension == 2) {
        auto second = first;
        if (j.contains("second")) {
          const auto& s = j.at("second");
          second = make_scenario(s.contains("noise") ? parse_noise(s.at("noise")) : first.noise,
                                 s.contains("step") ? parse_step(s.at("step")) : step, n_values);
        }
        c.scenario = make_product_scenario(first, second);
      } else if (dimension == 1) {
        c.scenario = std::move(first);
      } else {
        throw ConfigError("dimension must be 1 or 2");
      }
    }
    if (j.contains("dichotomy")) {
      for (const auto& n : j.at("dichotomy")) c.dichotomy_noises.push_back(parse_noise(n));
    } else {
      c.dichotomy_noises = {uniform_noise(2.0), uniform_noise(1.0), gaussian_noise(1.0)};
    }
    if (j.contains("zero_condition")) c.zero_k = j.at("zero_condition").value("K", c.zero_k);
    if (j.contains("corpus")) c.corpus_cases = j.at("corpus").value("cases", c.corpus_cases);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a malformed entry: ") + e.what());
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("config is invalid: ") + e.what());
  }
  c.canonical = j.dump();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::vector<BoundReport> load_claims(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read claims " + path.string());
  std::vector<BoundReport> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      out.push_back(make_report(j.at("anchor").get<std::string>(), j.at("lhs").get<double>(),
                                j.at("rhs").get<double>(), j.value("context", std::string{})));
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace smoothclt::lab
