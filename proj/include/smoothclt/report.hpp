#pragma once

#include <string>

namespace smoothclt {

/// Outcome of one inequality check lhs <= rhs.
struct BoundReport {
  std::string anchor;
  double lhs = 0;
  double rhs = 0;
  bool satisfied = false;
  double margin = 0;  // rhs - lhs
  std::string context;
  std::string note;  // "vacuous", "hypothesis violated", ...
};

inline constexpr double kBoundSlack = 1e-9;

inline BoundReport make_report(std::string anchor, double lhs, double rhs, std::string context = {}) {
  BoundReport r;
  r.anchor = std::move(anchor);
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs - lhs;
  r.satisfied = lhs <= rhs + kBoundSlack;
  r.context = std::move(context);
  return r;
}

}  // namespace smoothclt
