#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "commands.hpp"
#include "splitnet/archspec.hpp"
#include "splitnet/divider.hpp"

namespace splitnet::cli {

namespace {

int failures = 0;

void check(const std::string& name, bool ok) {
  std::printf("%-58s %s\n", name.c_str(), ok ? "PASS" : "FAIL");
  if (!ok) ++failures;
}

bool near(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::abs(b);
}

ArchSpec wrn_spec(int depth, double w) {
  ArchSpec s;
  s.family = Family::wrn;
  s.depth = depth;
  s.widen_factor = w;
  return s;
}

}  // namespace

int run_goldens() {
  failures = 0;

  // Channel division presets.
  check("resnet [16,32,64] / S=2 -> [12,24,48]",
        divide_channels({16, 32, 64}, 2) == std::vector<int>({12, 24, 48}));
  check("resnet [16,32,64] / S=4 -> [8,16,32]",
        divide_channels({16, 32, 64}, 4) == std::vector<int>({8, 16, 32}));

  {
    ArchSpec eff;
    eff.family = Family::efficientnet;
    const auto plan2 = divide_arch(eff, 2, WdPolicy{});
    check("efficientnet S=2 channel preset",
          plan2.members[0].base_channels ==
              std::vector<int>({24, 12, 16, 24, 56, 80, 136, 224, 920}));
    const auto plan4 = divide_arch(eff, 4, WdPolicy{});
    check("efficientnet S=4 channel preset",
          plan4.members[0].base_channels ==
              std::vector<int>({16, 12, 16, 20, 40, 56, 96, 160, 640}));
  }

  check("wrn widen 10 / S=2 -> 7", divide_widen(10, 2) == 7);
  check("wrn widen 10 / S=4 -> 5", divide_widen(10, 4) == 5);
  check("resnext cardinality 8 / S=2 -> 4", divide_cardinality(8, 2) == 4);
  check("resnext cardinality 8 / S=4 -> 2", divide_cardinality(8, 4) == 2);

  {
    ArchSpec ss;
    ss.family = Family::shake_shake;
    ss.widen_factor = 6;  // 2x96d: 16 * 6
    const auto p2 = divide_arch(ss, 2, WdPolicy{});
    const auto p4 = divide_arch(ss, 4, WdPolicy{});
    check("shake-shake 96 / S=2 -> 64", p2.members[0].base_channels[1] == 64);
    check("shake-shake 96 / S=4 -> 48", p4.members[0].base_channels[1] == 48);
  }

  check("densenet growth 40 / S=2 -> 28",
        divide_rate(40, RateKind::densenet_growth, 2) == 28.0);

  check("wd 5e-4 exponential S=2 -> 3.0327e-4",
        near(divide_wd({WdKind::exponential, 5e-4}, 2), 3.0327e-4, 1e-4));
  check("wd 1e-4 linear S=4 -> 2.5e-5",
        divide_wd({WdKind::linear, 1e-4}, 4) == 2.5e-5);

  // Cost-model targets (multiply-accumulate convention).
  {
    const auto r = cost_report(wrn_spec(16, 8), FlopConvention::mac);
    check("WRN-16-8 params ~ 11.0M", near(static_cast<double>(r.total_params), 11.0e6, 0.02));
    check("WRN-16-8 flops ~ 1.55G", near(static_cast<double>(r.total_flops), 1.55e9, 0.08));
  }
  {
    const auto r = cost_report(wrn_spec(28, 10), FlopConvention::mac);
    check("WRN-28-10 params ~ 36.5M", near(static_cast<double>(r.total_params), 36.5e6, 0.02));
    check("WRN-28-10 flops ~ 5.25G", near(static_cast<double>(r.total_flops), 5.25e9, 0.08));
  }
  {
    const auto r = cost_report(wrn_spec(40, 10), FlopConvention::mac);
    check("WRN-40-10 params ~ 55.9M", near(static_cast<double>(r.total_params), 55.9e6, 0.02));
    check("WRN-40-10 flops ~ 8.08G", near(static_cast<double>(r.total_flops), 8.08e9, 0.08));
  }
  {
    ArchSpec s;
    s.family = Family::resnet_cifar_bottleneck;
    s.depth = 164;
    const auto r = cost_report(s, FlopConvention::mac);
    check("ResNet-164 params ~ 1.73M", near(static_cast<double>(r.total_params), 1.73e6, 0.05));
  }
  {
    ArchSpec s;
    s.family = Family::resnext;
    s.depth = 29;
    s.cardinality = 8;
    const auto r = cost_report(s, FlopConvention::mac);
    check("ResNeXt-29 8x64d params ~ 34.5M", near(static_cast<double>(r.total_params), 34.5e6, 0.03));
    check("ResNeXt-29 8x64d flops ~ 5.41G", near(static_cast<double>(r.total_flops), 5.41e9, 0.08));
  }

  // Division cost parity for the WRN presets.
  for (int s = 2; s <= 4; s += 2) {
    const auto original = cost_report(wrn_spec(28, 10), FlopConvention::mac);
    const auto member = cost_report(wrn_spec(28, divide_widen(10, s)), FlopConvention::mac);
    const double ratio = static_cast<double>(s) * static_cast<double>(member.total_params) /
                         static_cast<double>(original.total_params);
    check("WRN-28-10 S=" + std::to_string(s) + " cost parity in [0.9, 1.1]",
          ratio >= 0.90 && ratio <= 1.10);
  }

  std::printf("%d golden check(s) failed\n", failures);
  return failures;
}

}  // namespace splitnet::cli
