#include "splitnet/datagen.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "splitnet/errors.hpp"
#include "splitnet/rng.hpp"

namespace splitnet {

Dataset make_spirals(int n_per_class, int classes, double sigma, std::uint64_t seed,
                     double turns, double r_min, double r_max) {
  if (classes < 2) throw ValidationError("make_spirals: classes must be >= 2");
  if (n_per_class < 1) throw ValidationError("make_spirals: n_per_class must be positive");
  Rng rng(mix_keys({seed, 0x73706972616cULL}));
  Dataset ds;
  ds.num_classes = classes;
  const std::size_t n = static_cast<std::size_t>(n_per_class) * classes;
  ds.features = Tensor({n, 2});
  ds.labels.resize(n);
  std::size_t row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int j = 0; j < n_per_class; ++j, ++row) {
      const double t = n_per_class == 1 ? 0.0 : static_cast<double>(j) / (n_per_class - 1);
      const double theta = c * 2.0 * std::numbers::pi / classes + turns * t;
      const double r = r_min + (r_max - r_min) * t;
      ds.features.at2(row, 0) = r * std::cos(theta) + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
      ds.features.at2(row, 1) = r * std::sin(theta) + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
      ds.labels[row] = c;
    }
  }
  return ds;
}

Dataset make_blobs(int n_per_class, int classes, double sigma, std::uint64_t seed, double radius) {
  if (classes < 2) throw ValidationError("make_blobs: classes must be >= 2");
  if (n_per_class < 1) throw ValidationError("make_blobs: n_per_class must be positive");
  Rng rng(mix_keys({seed, 0x626c6f6273ULL}));
  Dataset ds;
  ds.num_classes = classes;
  const std::size_t n = static_cast<std::size_t>(n_per_class) * classes;
  ds.features = Tensor({n, 2});
  ds.labels.resize(n);
  std::size_t row = 0;
  for (int c = 0; c < classes; ++c) {
    const double theta = c * 2.0 * std::numbers::pi / classes;
    const double cx = radius * std::cos(theta), cy = radius * std::sin(theta);
    for (int j = 0; j < n_per_class; ++j, ++row) {
      ds.features.at2(row, 0) = cx + rng.normal(0.0, sigma);
      ds.features.at2(row, 1) = cy + rng.normal(0.0, sigma);
      ds.labels[row] = c;
    }
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  if (ds.features.shape.size() != 2)
    throw ValidationError("save_csv: only flat feature tensors are supported");
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  const std::size_t f = ds.features.shape[1];
  for (std::size_t i = 0; i < f; ++i) os << "f" << i << ",";
  os << "label\n";
  os.precision(17);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (std::size_t i = 0; i < f; ++i) os << ds.features.at2(r, i) << ",";
    os << ds.labels[r] << "\n";
  }
}

Dataset load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("empty csv: " + path);
  std::size_t f = 0;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) ++f;
    if (f < 2) throw ValidationError("csv must have at least one feature column");
    --f;  // drop label column
  }
  std::vector<double> values;
  std::vector<int> labels;
  int max_label = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string col;
    for (std::size_t i = 0; i < f; ++i) {
      if (!std::getline(ss, col, ',')) throw ValidationError("short csv row");
      values.push_back(std::stod(col));
    }
    if (!std::getline(ss, col, ',')) throw ValidationError("missing label");
    labels.push_back(std::stoi(col));
    max_label = std::max(max_label, labels.back());
  }
  Dataset ds;
  ds.features = Tensor({labels.size(), f});
  ds.features.data = std::move(values);
  ds.labels = std::move(labels);
  ds.num_classes = max_label + 1;
  return ds;
}

void save_raw(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os.write(reinterpret_cast<const char*>(ds.features.data.data()),
           static_cast<std::streamsize>(ds.features.data.size() * sizeof(double)));
  nlohmann::json meta;
  meta["schema_version"] = 1;
  meta["shape"] = ds.features.shape;
  meta["labels"] = ds.labels;
  meta["split"] = ds.split;
  meta["num_classes"] = ds.num_classes;
  std::ofstream ms(path + ".json");
  ms << meta.dump(2) << "\n";
}

Dataset load_raw(const std::string& path) {
  std::ifstream ms(path + ".json");
  if (!ms) throw ValidationError("cannot open sidecar: " + path + ".json");
  nlohmann::json meta = nlohmann::json::parse(ms);
  Dataset ds;
  ds.features = Tensor(meta.at("shape").get<std::vector<std::size_t>>());
  ds.labels = meta.at("labels").get<std::vector<int>>();
  ds.split = meta.value("split", "train");
  ds.num_classes = meta.value("num_classes", 0);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open: " + path);
  is.read(reinterpret_cast<char*>(ds.features.data.data()),
          static_cast<std::streamsize>(ds.features.data.size() * sizeof(double)));
  if (!is) throw ValidationError("truncated tensor file: " + path);
  return ds;
}

}  // namespace splitnet
