#pragma once

// Synthetic ordinal-regression data with a two-level per-sample noise
// scale ("ambiguity"). The ambiguity is evaluator-only metadata.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ordl/dist_core.hpp"

namespace ordl {

struct SyntheticSpec {
  int num_classes = 20;
  int n = 5000;
  int feature_dim = 16;
  double noise_low = 0.02;
  double noise_high = 0.2;
  double high_noise_fraction = 0.3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticSample {
  std::vector<double> features;
  ClassIndex label{1};
  double ambiguity = 0.0;
};

struct Dataset {
  int num_classes = 0;
  std::vector<SyntheticSample> samples;

  std::size_t size() const { return samples.size(); }
  int feature_dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().features.size()); }
};

/// Noise-free feature vector for label y: with t = y / C the entries are
/// t, then repeating triples (t^(k+1), sin(k pi t), cos(k pi t)) for
/// k = 1, 2, ..., truncated to feature_dim.
std::vector<double> base_features(int label, int num_classes, int feature_dim);

/// Per sample, in order: label = 1 + below(C); high-noise flag =
/// bernoulli(high_noise_fraction); feature_dim standard normals scaled by the
/// chosen noise level and added to base_features.
Dataset generate(const SyntheticSpec& spec);

/// CSV with header id,label,ambiguity,f0,...; 17 significant digits.
void write_dataset_csv(const Dataset& data, std::ostream& out);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(std::istream& in, int num_classes);
Dataset read_dataset_csv(const std::filesystem::path& path, int num_classes);

}  // namespace ordl
