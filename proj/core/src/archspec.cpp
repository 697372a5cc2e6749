#include "splitnet/archspec.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "splitnet/errors.hpp"

namespace splitnet {

void validate(const LayerSpec& layer) {
  if (layer.kernel < 1) throw ValidationError("layer: kernel must be positive");
  if (layer.in_channels < 1) throw ValidationError("layer: in_channels must be positive");
  if (layer.out_channels < 1) throw ValidationError("layer: out_channels must be positive");
  if (layer.groups < 1) throw ValidationError("layer: groups must be positive");
  if (layer.stride < 1) throw ValidationError("layer: stride must be positive");
  if (layer.out_h < 1 || layer.out_w < 1) throw ValidationError("layer: output size must be positive");
  if (layer.in_channels % layer.groups != 0)
    throw ValidationError("layer: in_channels must be divisible by groups");
  if (layer.out_channels % layer.groups != 0)
    throw ValidationError("layer: out_channels must be divisible by groups");
  if (layer.kind == LayerKind::depthwise_conv && layer.groups != layer.in_channels)
    throw ValidationError("layer: depthwise convolution requires groups == in_channels");
  if (layer.kind == LayerKind::fully_connected) {
    if (layer.kernel != 1) throw ValidationError("layer: fully-connected requires kernel == 1");
    if (layer.out_h != 1 || layer.out_w != 1)
      throw ValidationError("layer: fully-connected requires 1x1 output");
    if (layer.groups != 1) throw ValidationError("layer: fully-connected requires groups == 1");
  }
}

std::uint64_t conv_params(const LayerSpec& layer) {
  validate(layer);
  switch (layer.kind) {
    case LayerKind::fully_connected:
      return static_cast<std::uint64_t>(layer.in_channels) * layer.out_channels;
    case LayerKind::avg_pool:
    case LayerKind::global_pool:
      return 0;
    default: {
      const std::uint64_t k2 = static_cast<std::uint64_t>(layer.kernel) * layer.kernel;
      return k2 * (layer.in_channels / layer.groups) * layer.out_channels;
    }
  }
}

std::uint64_t conv_flops(const LayerSpec& layer, FlopConvention convention) {
  validate(layer);
  const std::uint64_t k2 = static_cast<std::uint64_t>(layer.kernel) * layer.kernel;
  const std::uint64_t hw = static_cast<std::uint64_t>(layer.out_h) * layer.out_w;
  const std::uint64_t cout = layer.out_channels;
  switch (layer.kind) {
    case LayerKind::avg_pool:
    case LayerKind::global_pool:
      // Pool cost is counted identically under both conventions.
      return k2 * hw * cout;
    default: {
      const std::uint64_t cin_g =
          layer.kind == LayerKind::fully_connected
              ? static_cast<std::uint64_t>(layer.in_channels)
              : static_cast<std::uint64_t>(layer.in_channels / layer.groups);
      if (convention == FlopConvention::eq3) return (2 * k2 * cin_g - 1) * hw * cout;
      return k2 * cin_g * hw * cout;
    }
  }
}

std::string family_name(Family f) {
  switch (f) {
    case Family::resnet_cifar_bottleneck: return "resnet-cifar-bottleneck";
    case Family::se_resnet_cifar: return "se-resnet-cifar";
    case Family::wrn: return "wrn";
    case Family::resnext: return "resnext";
    case Family::shake_shake: return "shake-shake";
    case Family::densenet: return "densenet";
    case Family::pyramidnet_shakedrop: return "pyramidnet-shakedrop";
    case Family::efficientnet: return "efficientnet";
    case Family::generic: return "generic";
  }
  throw InternalError("family_name: unknown family");
}

Family family_from_name(const std::string& name) {
  static const std::map<std::string, Family> table = {
      {"resnet-cifar-bottleneck", Family::resnet_cifar_bottleneck},
      {"se-resnet-cifar", Family::se_resnet_cifar},
      {"wrn", Family::wrn},
      {"resnext", Family::resnext},
      {"shake-shake", Family::shake_shake},
      {"densenet", Family::densenet},
      {"pyramidnet-shakedrop", Family::pyramidnet_shakedrop},
      {"efficientnet", Family::efficientnet},
      {"generic", Family::generic},
  };
  auto it = table.find(name);
  if (it == table.end()) throw ValidationError("unknown family: " + name);
  return it->second;
}

namespace {

LayerSpec conv(int kernel, int cin, int cout, int groups, int out_hw) {
  LayerSpec l;
  l.kind = groups == cin && groups > 1 ? LayerKind::depthwise_conv : LayerKind::conv;
  l.kernel = kernel;
  l.in_channels = cin;
  l.out_channels = cout;
  l.groups = groups;
  l.out_h = l.out_w = out_hw;
  return l;
}

LayerSpec fc(int cin, int cout) {
  LayerSpec l;
  l.kind = LayerKind::fully_connected;
  l.in_channels = cin;
  l.out_channels = cout;
  return l;
}

LayerSpec global_pool(int channels, int in_hw) {
  LayerSpec l;
  l.kind = LayerKind::global_pool;
  l.kernel = in_hw;
  l.in_channels = channels;
  l.out_channels = channels;
  l.out_h = l.out_w = 1;
  return l;
}

std::vector<LayerSpec> expand_wrn(const ArchSpec& spec) {
  if (spec.depth < 10 || (spec.depth - 4) % 6 != 0)
    throw ValidationError("wrn: depth must satisfy depth = 6n+4, got " + std::to_string(spec.depth));
  const int n = (spec.depth - 4) / 6;
  const int w = static_cast<int>(std::lround(spec.widen_factor));
  if (w < 1) throw ValidationError("wrn: widen factor must be >= 1");
  std::vector<LayerSpec> layers;
  int res = spec.input_resolution;
  layers.push_back(conv(3, 3, 16, 1, res));
  int cin = 16;
  const int widths[3] = {16 * w, 32 * w, 64 * w};
  for (int stage = 0; stage < 3; ++stage) {
    const int width = widths[stage];
    for (int block = 0; block < n; ++block) {
      const int stride = (stage > 0 && block == 0) ? 2 : 1;
      const int out_res = res / stride;
      layers.push_back(conv(3, cin, width, 1, out_res));
      layers.push_back(conv(3, width, width, 1, out_res));
      if (cin != width || stride != 1) layers.push_back(conv(1, cin, width, 1, out_res));
      cin = width;
      res = out_res;
    }
  }
  layers.push_back(global_pool(cin, res));
  layers.push_back(fc(cin, spec.num_classes));
  return layers;
}

std::vector<LayerSpec> expand_resnet(const ArchSpec& spec) {
  if (spec.depth < 11 || (spec.depth - 2) % 9 != 0)
    throw ValidationError("resnet-cifar-bottleneck: depth must satisfy depth = 9n+2, got " +
                          std::to_string(spec.depth));
  const int n = (spec.depth - 2) / 9;
  std::vector<int> base = spec.base_channels.empty() ? std::vector<int>{16, 32, 64} : spec.base_channels;
  if (base.size() != 3) throw ValidationError("resnet-cifar-bottleneck: expected 3 stage widths");
  constexpr int kExpansion = 4;
  std::vector<LayerSpec> layers;
  int res = spec.input_resolution;
  layers.push_back(conv(3, 3, base[0], 1, res));
  int cin = base[0];
  for (int stage = 0; stage < 3; ++stage) {
    const int width = base[stage];
    const int out = width * kExpansion;
    for (int block = 0; block < n; ++block) {
      const int stride = (stage > 0 && block == 0) ? 2 : 1;
      const int out_res = res / stride;
      layers.push_back(conv(1, cin, width, 1, out_res));
      layers.push_back(conv(3, width, width, 1, out_res));
      layers.push_back(conv(1, width, out, 1, out_res));
      if (cin != out || stride != 1) layers.push_back(conv(1, cin, out, 1, out_res));
      cin = out;
      res = out_res;
    }
  }
  layers.push_back(global_pool(cin, res));
  layers.push_back(fc(cin, spec.num_classes));
  return layers;
}

std::vector<LayerSpec> expand_resnext(const ArchSpec& spec) {
  if (spec.depth < 11 || (spec.depth - 2) % 9 != 0)
    throw ValidationError("resnext: depth must satisfy depth = 9n+2, got " + std::to_string(spec.depth));
  const int n = (spec.depth - 2) / 9;
  constexpr int kBaseWidth = 64;
  const int card = spec.cardinality;
  if (card < 1) throw ValidationError("resnext: cardinality must be >= 1");
  std::vector<LayerSpec> layers;
  int res = spec.input_resolution;
  layers.push_back(conv(3, 3, 64, 1, res));
  int cin = 64;
  for (int stage = 0; stage < 3; ++stage) {
    const int out = 256 << stage;
    const int group_width = card * kBaseWidth << stage;
    for (int block = 0; block < n; ++block) {
      const int stride = (stage > 0 && block == 0) ? 2 : 1;
      const int out_res = res / stride;
      layers.push_back(conv(1, cin, group_width, 1, out_res));
      layers.push_back(conv(3, group_width, group_width, card, out_res));
      layers.push_back(conv(1, group_width, out, 1, out_res));
      if (cin != out || stride != 1) layers.push_back(conv(1, cin, out, 1, out_res));
      cin = out;
      res = out_res;
    }
  }
  layers.push_back(global_pool(cin, res));
  layers.push_back(fc(cin, spec.num_classes));
  return layers;
}

}  // namespace

std::vector<LayerSpec> expand(const ArchSpec& spec) {
  switch (spec.family) {
    case Family::wrn:
      return expand_wrn(spec);
    case Family::resnet_cifar_bottleneck:
      return expand_resnet(spec);
    case Family::resnext:
      return expand_resnext(spec);
    case Family::generic:
      if (spec.explicit_layers.empty())
        throw ValidationError("generic family requires explicit_layers");
      for (const auto& l : spec.explicit_layers) validate(l);
      return spec.explicit_layers;
    default:
      throw ValidationError("unsupported family for cost expansion: " + family_name(spec.family));
  }
}

CostReport cost_report(const ArchSpec& spec, FlopConvention convention) {
  const auto layers = expand(spec);
  CostReport report;
  report.convention = convention;
  int index = 0;
  for (const auto& layer : layers) {
    LayerCost cost;
    cost.index = index++;
    cost.params = conv_params(layer);
    cost.flops = conv_flops(layer, convention);
    report.total_params += cost.params;
    report.total_flops += cost.flops;
    report.per_layer.push_back(cost);
  }
  return report;
}

namespace {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::depthwise_conv: return "depthwise-conv";
    case LayerKind::fully_connected: return "fully-connected";
    case LayerKind::avg_pool: return "avg-pool";
    case LayerKind::global_pool: return "global-pool";
  }
  throw InternalError("layer_kind_name: unknown kind");
}

LayerKind layer_kind_from_name(const std::string& s) {
  if (s == "conv") return LayerKind::conv;
  if (s == "depthwise-conv") return LayerKind::depthwise_conv;
  if (s == "fully-connected") return LayerKind::fully_connected;
  if (s == "avg-pool") return LayerKind::avg_pool;
  if (s == "global-pool") return LayerKind::global_pool;
  throw ValidationError("unknown layer kind: " + s);
}

}  // namespace

nlohmann::json to_json(const ArchSpec& spec) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["name"] = spec.name;
  j["family"] = family_name(spec.family);
  j["depth"] = spec.depth;
  j["base_channels"] = spec.base_channels;
  j["widen_factor"] = spec.widen_factor;
  j["cardinality"] = spec.cardinality;
  j["growth_rate"] = spec.growth_rate;
  j["additional_rate"] = spec.additional_rate;
  j["drop_ratio"] = spec.drop_ratio;
  j["input_resolution"] = spec.input_resolution;
  j["num_classes"] = spec.num_classes;
  if (!spec.explicit_layers.empty()) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : spec.explicit_layers) {
      layers.push_back({{"kind", layer_kind_name(l.kind)},
                        {"kernel", l.kernel},
                        {"in_channels", l.in_channels},
                        {"out_channels", l.out_channels},
                        {"groups", l.groups},
                        {"stride", l.stride},
                        {"out_h", l.out_h},
                        {"out_w", l.out_w}});
    }
    j["explicit_layers"] = layers;
  }
  return j;
}

ArchSpec archspec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("archspec: expected a JSON object");
  if (j.value("schema_version", 0) != 1)
    throw ValidationError("archspec: unsupported schema_version");
  ArchSpec spec;
  spec.name = j.value("name", "");
  spec.family = family_from_name(j.at("family").get<std::string>());
  spec.depth = j.value("depth", 0);
  spec.base_channels = j.value("base_channels", std::vector<int>{});
  spec.widen_factor = j.value("widen_factor", 1.0);
  spec.cardinality = j.value("cardinality", 1);
  spec.growth_rate = j.value("growth_rate", 0.0);
  spec.additional_rate = j.value("additional_rate", 0.0);
  spec.drop_ratio = j.value("drop_ratio", 0.0);
  spec.input_resolution = j.value("input_resolution", 32);
  spec.num_classes = j.value("num_classes", 10);
  if (spec.drop_ratio < 0.0 || spec.drop_ratio > 1.0)
    throw ValidationError("archspec: drop_ratio must lie in [0,1]");
  if (j.contains("explicit_layers")) {
    for (const auto& lj : j.at("explicit_layers")) {
      LayerSpec l;
      l.kind = layer_kind_from_name(lj.at("kind").get<std::string>());
      l.kernel = lj.value("kernel", 1);
      l.in_channels = lj.at("in_channels").get<int>();
      l.out_channels = lj.at("out_channels").get<int>();
      l.groups = lj.value("groups", 1);
      l.stride = lj.value("stride", 1);
      l.out_h = lj.value("out_h", 1);
      l.out_w = lj.value("out_w", 1);
      validate(l);
      spec.explicit_layers.push_back(l);
    }
  }
  if (spec.family == Family::generic && spec.explicit_layers.empty())
    throw ValidationError("archspec: generic family requires explicit_layers");
  return spec;
}

nlohmann::json to_json(const CostReport& report) {
  nlohmann::json j;
  j["schema_version"] = 1;
  // Counting convention: conv/fc weights only, biases and normalization
  // parameters excluded.
  j["convention"] = report.convention == FlopConvention::mac ? "mac" : "eq3";
  j["total_params"] = report.total_params;
  j["total_flops"] = report.total_flops;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& c : report.per_layer)
    per.push_back({{"layer", c.index}, {"params", c.params}, {"flops", c.flops}});
  j["per_layer"] = per;
  return j;
}

std::string cost_table(const CostReport& report) {
  std::ostringstream os;
  // Biases and normalization parameters are excluded from all counts.
  os << "layer      params        flops\n";
  char line[64];
  for (const auto& c : report.per_layer) {
    std::snprintf(line, sizeof(line), "%5d %11llu %12llu\n", c.index,
                  static_cast<unsigned long long>(c.params),
                  static_cast<unsigned long long>(c.flops));
    os << line;
  }
  std::snprintf(line, sizeof(line), "total %11llu %12llu\n",
                static_cast<unsigned long long>(report.total_params),
                static_cast<unsigned long long>(report.total_flops));
  os << line;
  os << "convention: " << (report.convention == FlopConvention::mac ? "mac" : "eq3") << "\n";
  return os.str();
}

}  // namespace splitnet
