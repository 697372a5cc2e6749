#include <doctest.h>

#include <json.hpp>

#include "splitnet/archspec.hpp"
#include "splitnet/errors.hpp"
#include "splitnet/rng.hpp"

using namespace splitnet;

namespace {

LayerSpec make_conv(int k, int cin, int cout, int groups, int hw) {
  LayerSpec l;
  l.kind = groups == cin && groups > 1 ? LayerKind::depthwise_conv : LayerKind::conv;
  l.kernel = k;
  l.in_channels = cin;
  l.out_channels = cout;
  l.groups = groups;
  l.out_h = l.out_w = hw;
  return l;
}

ArchSpec wrn(int depth, double w) {
  ArchSpec s;
  s.family = Family::wrn;
  s.depth = depth;
  s.widen_factor = w;
  return s;
}

}  // namespace

TEST_CASE("conv_params matches the closed form") {
  CHECK(conv_params(make_conv(3, 64, 64, 1, 8)) == 36864);
  CHECK(conv_params(make_conv(3, 64, 64, 64, 8)) == 576);  // depthwise
  CHECK(conv_params(make_conv(1, 1, 1, 1, 1)) == 1);
}

TEST_CASE("conv_flops under both conventions") {
  CHECK(conv_flops(make_conv(1, 64, 256, 1, 8), FlopConvention::eq3) == 2080768);
  CHECK(conv_flops(make_conv(1, 1, 1, 1, 1), FlopConvention::eq3) == 1);
  CHECK(conv_flops(make_conv(1, 64, 256, 1, 8), FlopConvention::mac) == 1048576);
}

TEST_CASE("fully-connected layers count C_in * C_out") {
  LayerSpec fc;
  fc.kind = LayerKind::fully_connected;
  fc.in_channels = 640;
  fc.out_channels = 10;
  CHECK(conv_params(fc) == 6400);
}

TEST_CASE("invalid layers are rejected with the violated invariant") {
  LayerSpec l = make_conv(3, 63, 64, 2, 8);
  CHECK_THROWS_AS(conv_params(l), ValidationError);
  LayerSpec dw = make_conv(3, 64, 64, 1, 8);
  dw.kind = LayerKind::depthwise_conv;
  CHECK_THROWS_AS(conv_params(dw), ValidationError);  // groups != C_in
  LayerSpec bad_fc;
  bad_fc.kind = LayerKind::fully_connected;
  bad_fc.kernel = 3;
  bad_fc.in_channels = 4;
  bad_fc.out_channels = 4;
  CHECK_THROWS_AS(conv_params(bad_fc), ValidationError);
}

TEST_CASE("eq3 and mac conventions differ by exactly 2x - HWC") {
  Rng rng(42);
  for (int i = 0; i < 200; ++i) {
    const int k = 1 + 2 * static_cast<int>(rng.below(2));
    const int cin = 1 + static_cast<int>(rng.below(64));
    const int cout = 1 + static_cast<int>(rng.below(64));
    const int hw = 1 + static_cast<int>(rng.below(16));
    const auto l = make_conv(k, cin, cout, 1, hw);
    const auto eq3 = conv_flops(l, FlopConvention::eq3);
    const auto mac = conv_flops(l, FlopConvention::mac);
    CHECK(eq3 == 2 * mac - static_cast<std::uint64_t>(hw) * hw * cout);
  }
}

TEST_CASE("counts are homogeneous of degree two in the channel widths") {
  const auto base = make_conv(3, 24, 48, 1, 8);
  const auto doubled = make_conv(3, 48, 96, 1, 8);
  CHECK(conv_params(doubled) == 4 * conv_params(base));
  CHECK(conv_flops(doubled, FlopConvention::mac) == 4 * conv_flops(base, FlopConvention::mac));
}

TEST_CASE("cost_report totals equal a brute-force sum over layers") {
  const auto report = cost_report(wrn(16, 4), FlopConvention::mac);
  std::uint64_t params = 0, flops = 0;
  for (const auto& layer : report.per_layer) {
    params += layer.params;
    flops += layer.flops;
  }
  CHECK(report.total_params == params);
  CHECK(report.total_flops == flops);
}

TEST_CASE("expand is deterministic") {
  const ArchSpec spec = wrn(28, 10);
  const auto a = expand(spec);
  const auto b = expand(spec);
  REQUIRE(a.size() == b.size());
  nlohmann::json ja, jb;
  for (const auto& l : a) ja.push_back({l.kernel, l.in_channels, l.out_channels, l.groups, l.out_h});
  for (const auto& l : b) jb.push_back({l.kernel, l.in_channels, l.out_channels, l.groups, l.out_h});
  CHECK(ja.dump() == jb.dump());
}

TEST_CASE("generic family passes explicit layers through unchanged") {
  ArchSpec spec;
  spec.family = Family::generic;
  spec.explicit_layers = {make_conv(3, 3, 16, 1, 32), make_conv(1, 16, 10, 1, 1)};
  const auto layers = expand(spec);
  REQUIRE(layers.size() == 2);
  CHECK(layers[0].out_channels == 16);
  CHECK(layers[1].in_channels == 16);
}

TEST_CASE("table cost targets hold under the mac convention") {
  const auto wrn168 = cost_report(wrn(16, 8), FlopConvention::mac);
  CHECK(wrn168.total_params == doctest::Approx(11.0e6).epsilon(0.02));
  CHECK(wrn168.total_flops == doctest::Approx(1.55e9).epsilon(0.08));

  ArchSpec resnet;
  resnet.family = Family::resnet_cifar_bottleneck;
  resnet.depth = 164;
  CHECK(cost_report(resnet, FlopConvention::mac).total_params ==
        doctest::Approx(1.73e6).epsilon(0.05));
}

TEST_CASE("unsupported families and bad depths are rejected") {
  ArchSpec dense;
  dense.family = Family::densenet;
  dense.depth = 190;
  CHECK_THROWS_AS(expand(dense), ValidationError);
  CHECK_THROWS_AS(expand(wrn(27, 10)), ValidationError);
}

TEST_CASE("archspec JSON round-trips") {
  ArchSpec spec = wrn(28, 10);
  spec.name = "wrn-28-10";
  const auto j = to_json(spec);
  CHECK(j.at("schema_version") == 1);
  const ArchSpec back = archspec_from_json(j);
  CHECK(back.name == spec.name);
  CHECK(back.family == spec.family);
  CHECK(back.depth == spec.depth);
  CHECK(back.widen_factor == spec.widen_factor);
  CHECK(to_json(back).dump() == j.dump());
}
