#include "ordl/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "ordl/rng.hpp"

namespace ordl {

void SyntheticSpec::validate() const {
  if (num_classes < 2) throw DomainError("dataset: classes must be >= 2");
  if (n < 1) throw DomainError("dataset: n must be >= 1");
  if (feature_dim < 2) throw DomainError("dataset: feature_dim must be >= 2");
  if (!(noise_low >= 0.0)) throw DomainError("dataset: noise_low must be >= 0");
  if (!(noise_high >= noise_low)) throw DomainError("dataset: noise_high must be >= noise_low");
  if (!(high_noise_fraction >= 0.0 && high_noise_fraction <= 1.0))
    throw DomainError("dataset: high_noise_fraction must be in [0, 1]");
}

std::vector<double> base_features(int label, int num_classes, int feature_dim) {
  const double t = static_cast<double>(label) / num_classes;
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(feature_dim));
  f.push_back(t);
  for (int k = 1; static_cast<int>(f.size()) < feature_dim; ++k) {
    const double w = k * std::numbers::pi * t;
    for (double v : {std::pow(t, k + 1), std::sin(w), std::cos(w)}) {
      if (static_cast<int>(f.size()) < feature_dim) f.push_back(v);
    }
  }
  return f;
}

Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Dataset data;
  data.num_classes = spec.num_classes;
  data.samples.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    const int label = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_classes)));
    const double eta = rng.bernoulli(spec.high_noise_fraction) ? spec.noise_high : spec.noise_low;
    SyntheticSample s;
    s.features = base_features(label, spec.num_classes, spec.feature_dim);
    for (double& x : s.features) x += eta * rng.normal();
    s.label = ClassIndex(label);
    s.ambiguity = eta;
    data.samples.push_back(std::move(s));
  }
  return data;
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  out << "id,label,ambiguity";
  for (int j = 0; j < data.feature_dim(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& s = data.samples[i];
    out << i << ',' << s.label.value() << ',' << fmt17(s.ambiguity);
    for (double x : s.features) out << ',' << fmt17(x);
    out << '\n';
  }
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset to " + path.string());
  write_dataset_csv(data, out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Dataset read_dataset_csv(std::istream& in, int num_classes) {
  if (num_classes < 2) throw DomainError("dataset: classes must be >= 2");
  std::string line;
  if (!std::getline(in, line) || line.rfind("id,label,ambiguity", 0) != 0) {
    throw DomainError("dataset: missing header id,label,ambiguity,f0,...");
  }
  std::size_t dim = 0;
  for (char ch : line) dim += (ch == ',');
  dim -= 2;
  if (dim < 2) throw DomainError("dataset: need at least 2 feature columns");

  Dataset data;
  data.num_classes = num_classes;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != dim + 3) {
      throw DomainError("dataset: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                        " columns, expected " + std::to_string(dim + 3));
    }
    SyntheticSample s;
    s.label = ClassIndex(std::stoi(cells[1]));
    s.label.check_against(num_classes);
    s.ambiguity = std::stod(cells[2]);
    s.features.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) s.features.push_back(std::stod(cells[3 + j]));
    data.samples.push_back(std::move(s));
  }
  if (data.samples.empty()) throw DomainError("dataset: no rows");
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path, int num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open dataset " + path.string());
  return read_dataset_csv(in, num_classes);
}

}  // namespace ordl
