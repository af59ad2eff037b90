#pragma once

// Experiment configuration: an INI file with the sections
//
//   [dataset]     classes, n, feature_dim, noise_low, noise_high,
//                 high_noise_fraction, seed, path (CSV instead of synthetic)
//   [loss]        lambda, lambda1, lambda2, sigma, variance_floor
//   [train]       loss, hidden_sizes, activation, optimizer, lr, momentum,
//                 lr_decay_factor, lr_decay_every, batch_size, max_steps,
//                 seed, grad_clip, trace_every, trace_subsample
//   [experiment]  eval_split_fraction, output_dir, repeats, min_label_count,
//                 degraded_fraction
//   [compare]     combinations
//   [sweep]       lambdas
//
// Every key is optional; unknown sections or keys are rejected.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ordl/synth.hpp"
#include "ordl/trainer.hpp"

namespace ordl {

struct ExperimentConfig {
  SyntheticSpec synthetic{};
  std::optional<std::filesystem::path> dataset_path;
  TrainConfig train{};
  double eval_split_fraction = 0.2;
  std::filesystem::path output_dir = "out";
  int repeats = 5;
  int min_label_count = 10;
  /// A finished run is `degraded` when its held-out MAE is at least this
  /// fraction of the MAE of always predicting the mean training label.
  double degraded_fraction = 0.5;
  std::vector<std::string> combinations = default_combinations();
  std::vector<double> lambdas = default_lambdas();

  static std::vector<std::string> default_combinations();
  static std::vector<double> default_lambdas();

  void validate() const;
};

ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Resolved configuration as INI text with every key present, in a fixed
/// order. parse_config(canonical_text(c)) reproduces c.
std::string canonical_text(const ExperimentConfig& config);

/// 64-bit FNV-1a of canonical_text, as 16 lowercase hex digits.
std::string config_hash(const ExperimentConfig& config);
std::string fnv1a_hex(std::string_view bytes);

std::vector<double> parse_number_list(std::string_view text);
std::string format_number(double x);

}  // namespace ordl
