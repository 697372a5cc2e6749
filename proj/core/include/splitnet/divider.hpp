#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "splitnet/archspec.hpp"

namespace splitnet {

enum class WdKind { none, exponential, linear };

struct WdPolicy {
  WdKind kind = WdKind::none;
  double base_wd = 1e-4;
};

WdKind wd_kind_from_name(const std::string& name);
std::string wd_kind_name(WdKind kind);

struct RoundingEntry {
  std::string field;
  double exact = 0.0;
  double rounded = 0.0;
};

struct DivisionPlan {
  int s = 1;
  std::vector<ArchSpec> members;
  double adjusted_wd = 0.0;
  std::vector<RoundingEntry> rounding_log;
};

// Nearest even integer; an odd integer (equidistant) rounds up; never below 2.
int round_even(double x);

std::vector<int> divide_channels(const std::vector<int>& channels, int s,
                                 std::vector<RoundingEntry>* log = nullptr);

// w* = max(floor(w / sqrt(S) + 0.4), 1)
int divide_widen(double widen_factor, int s);

// d* = max(floor(d / S), 1)
int divide_cardinality(int cardinality, int s);

enum class RateKind { densenet_growth, pyramid_additional, drop_ratio };

double divide_rate(double rate, RateKind kind, int s);

double divide_wd(const WdPolicy& policy, int s);

DivisionPlan divide_arch(const ArchSpec& spec, int s, const WdPolicy& policy);

nlohmann::json to_json(const DivisionPlan& plan);

}  // namespace splitnet
