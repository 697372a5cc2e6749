#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "splitnet/archspec.hpp"
#include "splitnet/datagen.hpp"
#include "splitnet/divider.hpp"
#include "splitnet/ensemble.hpp"
#include "splitnet/errors.hpp"
#include "splitnet/manifest.hpp"
#include "splitnet/model.hpp"
#include "splitnet/parallel.hpp"
#include "splitnet/rng.hpp"
#include "splitnet/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace splitnet;

namespace {

std::uint64_t env_base_seed(std::uint64_t fallback) {
  if (const char* s = std::getenv("SPLITNET_SEED")) return std::strtoull(s, nullptr, 10);
  return fallback;
}

json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open: " + path);
  return json::parse(is);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << text;
}

RunManifest start_manifest(const std::string& command, json config, std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config = std::move(config);
  m.tool_version = tool_version();
  m.base_seed = seed;
  m.started_at = timestamp_now();
  return m;
}

void finish_manifest(RunManifest& m, const std::string& out_dir) {
  m.finished_at = timestamp_now();
  write_manifest(m, (fs::path(out_dir) / "manifest.json").string());
}

Dataset load_dataset(const std::string& dir, const std::string& split) {
  const fs::path base(dir);
  if (fs::exists(base / (split + ".csv"))) return load_csv((base / (split + ".csv")).string());
  if (fs::exists(base / (split + ".bin"))) return load_raw((base / (split + ".bin")).string());
  throw ValidationError("no " + split + " dataset found in " + dir);
}

struct LoadedMembers {
  std::vector<MemberModel> models;
  std::vector<int> epochs;
};

LoadedMembers load_members(const std::string& ckpt_dir) {
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(ckpt_dir))
    if (e.path().extension() == ".splt") paths.push_back(e.path());
  if (paths.empty()) throw ValidationError("no .splt checkpoints in " + ckpt_dir);
  std::sort(paths.begin(), paths.end());
  LoadedMembers out;
  for (const auto& p : paths) {
    auto loaded = MemberModel::load_checkpoint(p.string());
    out.models.push_back(std::move(loaded.model));
    out.epochs.push_back(loaded.epoch);
  }
  return out;
}

int cmd_cost(const std::string& spec_path, const std::string& convention,
             const std::string& out_dir) {
  const ArchSpec spec = archspec_from_json(load_json_file(spec_path));
  const FlopConvention conv = convention == "eq3" ? FlopConvention::eq3 : FlopConvention::mac;
  const CostReport report = cost_report(spec, conv);
  std::cout << cost_table(report);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    auto m = start_manifest("cost", {{"spec", spec_path}, {"convention", convention}}, 0);
    m.input_hashes.emplace_back(spec_path, hash_file(spec_path));
    const std::string out = (fs::path(out_dir) / "cost_report.json").string();
    write_text(out, to_json(report).dump(2) + "\n");
    m.output_paths.push_back(out);
    finish_manifest(m, out_dir);
  }
  return 0;
}

int cmd_divide(const std::string& spec_path, int s, const std::string& policy_name, double wd,
               const std::string& out_dir) {
  const ArchSpec spec = archspec_from_json(load_json_file(spec_path));
  WdPolicy policy{wd_kind_from_name(policy_name), wd};
  const DivisionPlan plan = divide_arch(spec, s, policy);
  fs::create_directories(out_dir);
  auto m = start_manifest(
      "divide", {{"spec", spec_path}, {"s", s}, {"wd_policy", policy_name}, {"wd", wd}}, 0);
  m.input_hashes.emplace_back(spec_path, hash_file(spec_path));
  for (int i = 0; i < s; ++i) {
    const std::string path =
        (fs::path(out_dir) / ("member_" + std::to_string(i) + ".json")).string();
    write_text(path, to_json(plan.members[i]).dump(2) + "\n");
    m.output_paths.push_back(path);
  }
  const std::string plan_path = (fs::path(out_dir) / "plan.json").string();
  write_text(plan_path, to_json(plan).dump(2) + "\n");
  m.output_paths.push_back(plan_path);
  finish_manifest(m, out_dir);
  std::cout << "wrote " << s << " member spec(s) and plan.json to " << out_dir << "\n";
  return 0;
}

int cmd_datagen(const std::string& kind, const std::string& out_dir, std::uint64_t seed,
                int n_per_class, int classes, double sigma, const std::string& split) {
  Dataset ds = kind == "blobs" ? make_blobs(n_per_class, classes, sigma, seed)
                               : make_spirals(n_per_class, classes, sigma, seed);
  ds.split = split;
  fs::create_directories(out_dir);
  auto m = start_manifest("datagen",
                          {{"kind", kind},
                           {"seed", seed},
                           {"n_per_class", n_per_class},
                           {"classes", classes},
                           {"sigma", sigma},
                           {"split", split}},
                          seed);
  const std::string csv_path = (fs::path(out_dir) / (split + ".csv")).string();
  const std::string raw_path = (fs::path(out_dir) / (split + ".bin")).string();
  save_csv(ds, csv_path);
  save_raw(ds, raw_path);
  m.output_paths = {csv_path, raw_path, raw_path + ".json"};
  finish_manifest(m, out_dir);
  std::cout << "wrote " << ds.size() << " samples to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir) {
  json config_json = config_path.empty() ? json::object() : load_json_file(config_path);
  TrainConfig cfg = train_config_from_json(config_json);
  cfg.base_seed = env_base_seed(cfg.base_seed);

  Dataset train_set, test_set;
  if (!data_dir.empty()) {
    train_set = load_dataset(data_dir, "train");
    test_set = load_dataset(data_dir, "test");
  } else {
    train_set = make_spirals(1334, 3, 0.15, cfg.base_seed + 1000);
    test_set = make_spirals(334, 3, 0.15, cfg.base_seed + 2000);
  }

  fs::create_directories(out_dir);
  json resolved = to_json(cfg);
  auto manifest = start_manifest("train", resolved, cfg.base_seed);
  if (!config_path.empty())
    manifest.input_hashes.emplace_back(config_path, hash_file(config_path));
  const std::string spec_hash = hash_bytes(resolved.dump());

  TrainResult result = train(cfg, train_set, test_set);

  const std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();
  write_metrics_csv(result.record, cfg.s, metrics_path);
  manifest.output_paths.push_back(metrics_path);
  for (std::size_t m = 0; m < result.models.size(); ++m) {
    const std::string ckpt =
        (fs::path(out_dir) / ("member_" + std::to_string(m) + ".splt")).string();
    result.models[m].save_checkpoint(ckpt, cfg.max_epoch, spec_hash);
    manifest.output_paths.push_back(ckpt);
  }
  finish_manifest(manifest, out_dir);

  const auto& last = result.record.epochs.back();
  std::cout << "final:";
  for (std::size_t m = 0; m < last.acc_member.size(); ++m)
    std::cout << " member" << m << "=" << last.acc_member[m];
  std::cout << " ensemble=" << last.acc_ensemble << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_dir, const std::string& ensemble_name,
             const std::string& softmax_name, const std::string& data_dir,
             const std::string& out_dir) {
  auto members = load_members(ckpt_dir);
  Dataset test_set = data_dir.empty()
                         ? make_spirals(334, 3, 0.15, env_base_seed(0) + 2000)
                         : load_dataset(data_dir, "test");
  EnsembleRule rule;
  rule.combine = ensemble_name == "max" ? CombineMode::max_confidence : CombineMode::average;
  rule.apply_softmax_first = softmax_name == "pre";

  std::vector<Tensor> logits;
  for (auto& model : members.models) logits.push_back(model.forward(test_set.features));
  json result;
  result["schema_version"] = 1;
  std::printf("%-12s %s\n", "model", "accuracy");
  json per_member = json::array();
  for (std::size_t m = 0; m < logits.size(); ++m) {
    const double acc = accuracy(logits[m], test_set.labels);
    std::printf("member_%-5zu %.4f\n", m, acc);
    per_member.push_back(acc);
  }
  const double ens = accuracy(combine(rule, logits), test_set.labels);
  std::printf("%-12s %.4f\n", "ensemble", ens);
  result["member_accuracy"] = per_member;
  result["ensemble_accuracy"] = ens;
  result["ensemble"] = ensemble_name;
  result["softmax"] = softmax_name;
  std::cout << result.dump(2) << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    auto m = start_manifest("eval", {{"ckpt_dir", ckpt_dir},
                                     {"ensemble", ensemble_name},
                                     {"softmax", softmax_name}},
                            0);
    const std::string path = (fs::path(out_dir) / "eval.json").string();
    write_text(path, result.dump(2) + "\n");
    m.output_paths.push_back(path);
    finish_manifest(m, out_dir);
  }
  return 0;
}

int cmd_bench(const std::string& ckpt_dir, const std::string& mode_name, int batch, int workers,
              int reps, const std::string& out_dir) {
  auto members = load_members(ckpt_dir);
  const auto& shape = members.models[0].config().input_shape;
  std::vector<std::size_t> batch_shape = {static_cast<std::size_t>(batch)};
  batch_shape.insert(batch_shape.end(), shape.begin(), shape.end());
  Tensor input(batch_shape);
  Rng rng(mix_keys({env_base_seed(0), 0x62656e6368ULL}));
  for (double& v : input.data) v = rng.normal();

  json out;
  if (mode_name == "both") {
    auto [seq, par] = bench_pair(members.models, input, workers, reps);
    out["sequential"] = to_json(seq.report);
    out["concurrent"] = to_json(par.report);
    out["outputs_identical"] =
        seq.ensemble_scores.data == par.ensemble_scores.data;
  } else {
    const BenchMode mode = mode_name == "par" ? BenchMode::concurrent : BenchMode::sequential;
    auto result = bench(members.models, input, mode, workers, reps);
    out = to_json(result.report);
  }
  std::cout << out.dump(2) << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    auto m = start_manifest("bench", {{"ckpt_dir", ckpt_dir},
                                      {"mode", mode_name},
                                      {"batch", batch},
                                      {"workers", workers},
                                      {"reps", reps}},
                            0);
    const std::string path = (fs::path(out_dir) / "latency.json").string();
    write_text(path, out.dump(2) + "\n");
    m.output_paths.push_back(path);
    finish_manifest(m, out_dir);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SplitNet divide-and-co-train toolkit"};
  app.require_subcommand(1);

  // cost
  auto* cost = app.add_subcommand("cost", "Parameter/FLOP cost model for an architecture spec");
  std::string cost_spec, cost_conv = "mac", cost_out;
  cost->add_option("--spec", cost_spec, "architecture spec JSON")->required();
  cost->add_option("--convention", cost_conv, "mac or eq3")
      ->check(CLI::IsMember({"mac", "eq3"}));
  cost->add_option("--out", cost_out, "output directory");

  // divide
  auto* divide = app.add_subcommand("divide", "Divide one spec into S member specs");
  std::string div_spec, div_policy = "none", div_out = "division";
  int div_s = 2;
  double div_wd = 1e-4;
  divide->add_option("--spec", div_spec, "architecture spec JSON")->required();
  divide->add_option("--s", div_s, "number of members")->required();
  divide->add_option("--wd-policy", div_policy, "none, exp or linear")
      ->check(CLI::IsMember({"none", "exp", "linear"}));
  divide->add_option("--wd", div_wd, "base weight decay");
  divide->add_option("--out", div_out, "output directory");

  // datagen
  auto* datagen = app.add_subcommand("datagen", "Generate a desk-scale dataset");
  std::string dg_kind = "spirals", dg_out = "data", dg_split = "train";
  std::uint64_t dg_seed = 0;
  int dg_npc = 1334, dg_classes = 3;
  double dg_sigma = 0.15;
  datagen->add_option("--kind", dg_kind, "spirals or blobs")
      ->check(CLI::IsMember({"spirals", "blobs"}));
  datagen->add_option("--out", dg_out, "output directory");
  datagen->add_option("--seed", dg_seed, "generator seed");
  datagen->add_option("--n-per-class", dg_npc, "samples per class");
  datagen->add_option("--classes", dg_classes, "number of classes");
  datagen->add_option("--sigma", dg_sigma, "noise level");
  datagen->add_option("--split", dg_split, "train or test");

  // train
  auto* train_cmd = app.add_subcommand("train", "Co-train S members");
  std::string tr_config, tr_data, tr_out = "run";
  train_cmd->add_option("--config", tr_config, "train config JSON");
  train_cmd->add_option("--data", tr_data, "dataset directory (train/test files)");
  train_cmd->add_option("--out", tr_out, "output directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints and their ensemble");
  std::string ev_ckpt, ev_ens = "avg", ev_softmax = "none", ev_data, ev_out;
  eval_cmd->add_option("--ckpt-dir", ev_ckpt, "checkpoint directory")->required();
  eval_cmd->add_option("--ensemble", ev_ens, "avg or max")->check(CLI::IsMember({"avg", "max"}));
  eval_cmd->add_option("--softmax", ev_softmax, "pre or none")
      ->check(CLI::IsMember({"pre", "none"}));
  eval_cmd->add_option("--data", ev_data, "dataset directory");
  eval_cmd->add_option("--out", ev_out, "output directory");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Sequential vs concurrent inference latency");
  std::string bn_ckpt, bn_mode = "both", bn_out;
  int bn_batch = 100, bn_workers = 2, bn_reps = 13;
  bench_cmd->add_option("--ckpt-dir", bn_ckpt, "checkpoint directory")->required();
  bench_cmd->add_option("--mode", bn_mode, "seq, par or both")
      ->check(CLI::IsMember({"seq", "par", "both"}));
  bench_cmd->add_option("--batch", bn_batch, "batch size");
  bench_cmd->add_option("--workers", bn_workers, "worker lanes");
  bench_cmd->add_option("--reps", bn_reps, "repetitions (>= 10)");
  bench_cmd->add_option("--out", bn_out, "output directory");

  // gradcheck
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  std::uint64_t gc_seed = 7;
  bool gc_verbose = false;
  gradcheck_cmd->add_option("--seed", gc_seed, "random seed");
  gradcheck_cmd->add_flag("--verbose", gc_verbose, "progress to stderr");

  // goldens
  app.add_subcommand("goldens", "Verify every published division preset and cost target");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cost->parsed()) return cmd_cost(cost_spec, cost_conv, cost_out);
    if (divide->parsed()) return cmd_divide(div_spec, div_s, div_policy, div_wd, div_out);
    if (datagen->parsed())
      return cmd_datagen(dg_kind, dg_out, dg_seed, dg_npc, dg_classes, dg_sigma, dg_split);
    if (train_cmd->parsed()) return cmd_train(tr_config, tr_data, tr_out);
    if (eval_cmd->parsed()) return cmd_eval(ev_ckpt, ev_ens, ev_softmax, ev_data, ev_out);
    if (bench_cmd->parsed()) return cmd_bench(bn_ckpt, bn_mode, bn_batch, bn_workers, bn_reps, bn_out);
    if (gradcheck_cmd->parsed()) {
      const double worst = cli::run_gradcheck(gc_seed, 3, 40, gc_verbose);
      std::printf("max relative gradient error: %.3e\n", worst);
      return worst < 1e-5 ? 0 : 1;
    }
    const int failures = cli::run_goldens();
    return failures == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
