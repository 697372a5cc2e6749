#include "splitnet/divider.hpp"

#include <cmath>
#include <numeric>

#include "splitnet/errors.hpp"

namespace splitnet {

WdKind wd_kind_from_name(const std::string& name) {
  if (name == "none") return WdKind::none;
  if (name == "exp" || name == "exponential") return WdKind::exponential;
  if (name == "linear") return WdKind::linear;
  throw ValidationError("unknown weight-decay policy: " + name);
}

std::string wd_kind_name(WdKind kind) {
  switch (kind) {
    case WdKind::none: return "none";
    case WdKind::exponential: return "exponential";
    case WdKind::linear: return "linear";
  }
  throw InternalError("wd_kind_name: unknown kind");
}

int round_even(double x) {
  if (x <= 0.0) throw ValidationError("round_even: x must be positive");
  const double lo = 2.0 * std::floor(x / 2.0);
  const double hi = lo + 2.0;
  // Equidistant (x is an odd integer) rounds up.
  double picked = (x - lo) < (hi - x) ? lo : hi;
  if (picked < 2.0) picked = 2.0;
  return static_cast<int>(picked);
}

std::vector<int> divide_channels(const std::vector<int>& channels, int s,
                                 std::vector<RoundingEntry>* log) {
  if (channels.empty()) throw ValidationError("divide_channels: empty channel list");
  if (s < 1) throw ValidationError("divide_channels: S must be >= 1");
  int gcd = 0;
  for (int c : channels) {
    if (c <= 0) throw ValidationError("divide_channels: channels must be positive");
    gcd = std::gcd(gcd, c);
  }
  const double exact_gcd = static_cast<double>(gcd) / std::sqrt(static_cast<double>(s));
  const int new_gcd = round_even(exact_gcd);
  if (log) log->push_back({"gcd", exact_gcd, static_cast<double>(new_gcd)});
  std::vector<int> out;
  out.reserve(channels.size());
  for (int c : channels) {
    const double scaled = static_cast<double>(c) * new_gcd / gcd;
    const double integral = std::round(scaled);
    if (std::abs(scaled - integral) < 1e-9) {
      out.push_back(static_cast<int>(integral));
    } else {
      const int rounded = round_even(scaled);
      if (log) log->push_back({"channel", scaled, static_cast<double>(rounded)});
      out.push_back(rounded);
    }
  }
  return out;
}

int divide_widen(double widen_factor, int s) {
  if (widen_factor <= 0.0) throw ValidationError("divide_widen: widen factor must be positive");
  if (s < 1) throw ValidationError("divide_widen: S must be >= 1");
  const double v = std::floor(widen_factor / std::sqrt(static_cast<double>(s)) + 0.4);
  return static_cast<int>(std::max(v, 1.0));
}

int divide_cardinality(int cardinality, int s) {
  if (cardinality < 1) throw ValidationError("divide_cardinality: cardinality must be positive");
  if (s < 1) throw ValidationError("divide_cardinality: S must be >= 1");
  return std::max(cardinality / s, 1);
}

double divide_rate(double rate, RateKind kind, int s) {
  if (s < 1) throw ValidationError("divide_rate: S must be >= 1");
  const double root = std::sqrt(static_cast<double>(s));
  switch (kind) {
    case RateKind::densenet_growth:
      return 0.5 * std::floor(2.0 * rate / root);
    case RateKind::pyramid_additional:
    case RateKind::drop_ratio:
      return rate / root;
  }
  throw ValidationError("divide_rate: unknown rate kind");
}

double divide_wd(const WdPolicy& policy, int s) {
  if (policy.base_wd <= 0.0) throw ValidationError("divide_wd: base_wd must be positive");
  if (s < 1) throw ValidationError("divide_wd: S must be >= 1");
  switch (policy.kind) {
    case WdKind::none:
      return policy.base_wd;
    case WdKind::exponential:
      return policy.base_wd * std::exp(1.0 / s - 1.0);
    case WdKind::linear:
      return policy.base_wd / s;
  }
  throw InternalError("divide_wd: unknown policy");
}

namespace {

// Appendix channel presets for the efficientnet family.
const std::vector<int> kEffNetS1 = {32, 16, 24, 40, 80, 112, 192, 320, 1280};
const std::vector<int> kEffNetS2 = {24, 12, 16, 24, 56, 80, 136, 224, 920};
const std::vector<int> kEffNetS4 = {16, 12, 16, 20, 40, 56, 96, 160, 640};

ArchSpec divide_member(const ArchSpec& spec, int s, std::vector<RoundingEntry>& log) {
  ArchSpec member = spec;
  switch (spec.family) {
    case Family::resnet_cifar_bottleneck:
    case Family::se_resnet_cifar: {
      // SE reduction ratio, when present, keeps unchanged.
      auto base = spec.base_channels.empty() ? std::vector<int>{16, 32, 64} : spec.base_channels;
      member.base_channels = divide_channels(base, s, &log);
      break;
    }
    case Family::wrn:
    case Family::shake_shake: {
      const int w_star = divide_widen(spec.widen_factor, s);
      log.push_back({"widen_factor", spec.widen_factor / std::sqrt(static_cast<double>(s)),
                     static_cast<double>(w_star)});
      member.widen_factor = w_star;
      if (spec.family == Family::shake_shake) {
        // First conv width (16) is fixed; block widths are 16w*, 32w*, 64w*.
        member.base_channels = {16, 16 * w_star, 32 * w_star, 64 * w_star};
      }
      break;
    }
    case Family::resnext: {
      member.cardinality = divide_cardinality(spec.cardinality, s);
      log.push_back({"cardinality", static_cast<double>(spec.cardinality) / s,
                     static_cast<double>(member.cardinality)});
      break;
    }
    case Family::densenet: {
      member.growth_rate = divide_rate(spec.growth_rate, RateKind::densenet_growth, s);
      log.push_back({"growth_rate", spec.growth_rate / std::sqrt(static_cast<double>(s)),
                     member.growth_rate});
      break;
    }
    case Family::pyramidnet_shakedrop: {
      member.additional_rate = divide_rate(spec.additional_rate, RateKind::pyramid_additional, s);
      break;
    }
    case Family::efficientnet: {
      if (s == 1) member.base_channels = kEffNetS1;
      else if (s == 2) member.base_channels = kEffNetS2;
      else if (s == 4) member.base_channels = kEffNetS4;
      else
        throw ValidationError("efficientnet division preset only exists for S in {1, 2, 4}");
      break;
    }
    case Family::generic: {
      // Per-layer channel division; first input and classifier output stay fixed.
      if (spec.explicit_layers.empty())
        throw ValidationError("generic family requires explicit_layers");
      std::vector<LayerSpec> layers = spec.explicit_layers;
      for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& l = layers[i];
        if (l.kind == LayerKind::avg_pool || l.kind == LayerKind::global_pool) continue;
        if (i > 0) l.in_channels = divide_channels({l.in_channels}, s, &log)[0];
        if (i + 1 < layers.size()) l.out_channels = divide_channels({l.out_channels}, s, &log)[0];
        if (l.kind == LayerKind::depthwise_conv) l.groups = l.in_channels;
        else if (l.groups > 1) l.groups = std::gcd(l.groups, std::gcd(l.in_channels, l.out_channels));
      }
      // Keep pool widths consistent with their neighbours.
      for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
        auto& l = layers[i + 1];
        if (l.kind == LayerKind::avg_pool || l.kind == LayerKind::global_pool) {
          l.in_channels = layers[i].out_channels;
          l.out_channels = l.in_channels;
          if (i + 2 < layers.size()) layers[i + 2].in_channels = l.out_channels;
        }
      }
      member.explicit_layers = layers;
      break;
    }
  }
  if (spec.drop_ratio > 0.0) {
    member.drop_ratio = divide_rate(spec.drop_ratio, RateKind::drop_ratio, s);
    log.push_back({"drop_ratio", member.drop_ratio, member.drop_ratio});
  }
  return member;
}

}  // namespace

DivisionPlan divide_arch(const ArchSpec& spec, int s, const WdPolicy& policy) {
  if (s < 1) throw ValidationError("divide_arch: S must be >= 1");
  DivisionPlan plan;
  plan.s = s;
  plan.adjusted_wd = divide_wd(policy, s);
  if (s == 1) {
    plan.members.push_back(spec);
    return plan;
  }
  ArchSpec member = divide_member(spec, s, plan.rounding_log);
  member.name = spec.name + "-s" + std::to_string(s);
  for (int i = 0; i < s; ++i) plan.members.push_back(member);
  return plan;
}

nlohmann::json to_json(const DivisionPlan& plan) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["s"] = plan.s;
  j["adjusted_wd"] = plan.adjusted_wd;
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : plan.members) members.push_back(to_json(m));
  j["members"] = members;
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : plan.rounding_log)
    log.push_back({{"field", e.field}, {"exact", e.exact}, {"rounded", e.rounded}});
  j["rounding_log"] = log;
  return j;
}

}  // namespace splitnet
