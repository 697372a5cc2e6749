#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace splitnet {

enum class LayerKind { conv, depthwise_conv, fully_connected, avg_pool, global_pool };

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  int kernel = 1;
  int in_channels = 1;
  int out_channels = 1;
  int groups = 1;
  int stride = 1;
  int out_h = 1;
  int out_w = 1;
};

// Throws ValidationError naming the violated invariant.
void validate(const LayerSpec& layer);

enum class FlopConvention {
  eq3,  // (2 K^2 C_in/d - 1) H W C_out
  mac,  // one multiply-accumulate counted as one FLOP
};

std::uint64_t conv_params(const LayerSpec& layer);
std::uint64_t conv_flops(const LayerSpec& layer, FlopConvention convention);

enum class Family {
  resnet_cifar_bottleneck,
  se_resnet_cifar,
  wrn,
  resnext,
  shake_shake,
  densenet,
  pyramidnet_shakedrop,
  efficientnet,
  generic,
};

std::string family_name(Family f);
Family family_from_name(const std::string& name);

struct ArchSpec {
  std::string name;
  Family family = Family::generic;
  int depth = 0;
  std::vector<int> base_channels;  // stage input widths (resnet) or preset list
  double widen_factor = 1.0;       // wrn / shake-shake
  int cardinality = 1;             // resnext groups
  double growth_rate = 0.0;        // densenet
  double additional_rate = 0.0;    // pyramidnet
  double drop_ratio = 0.0;
  int input_resolution = 32;
  int num_classes = 10;
  std::vector<LayerSpec> explicit_layers;  // generic family only
};

struct LayerCost {
  int index = 0;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
};

struct CostReport {
  std::uint64_t total_params = 0;
  std::uint64_t total_flops = 0;
  FlopConvention convention = FlopConvention::mac;
  std::vector<LayerCost> per_layer;
};

// Deterministic full layer list for the supported preset families
// (resnet-cifar-bottleneck, wrn, resnext, generic).
std::vector<LayerSpec> expand(const ArchSpec& spec);

CostReport cost_report(const ArchSpec& spec, FlopConvention convention);

// JSON schema_version 1.
nlohmann::json to_json(const ArchSpec& spec);
ArchSpec archspec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CostReport& report);
std::string cost_table(const CostReport& report);

}  // namespace splitnet
