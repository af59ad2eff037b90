#pragma once

// Experiment commands behind the ordl executable. Each returns a process exit
// code and writes its artifacts under a directory together with the resolved
// config (config.ini) and a manifest.json carrying the config hash.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ordl/config.hpp"
#include "ordl/gradcheck.hpp"
#include "ordl/metrics.hpp"
#include "ordl/synth.hpp"
#include "ordl/trainer.hpp"

namespace ordl {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitDiverged = 2 };

enum class RunStatus { ok, degraded, diverged };
std::string to_string(RunStatus s);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};

/// Seeded permutation; the first round(n * eval_fraction) indices (at least
/// one) form the eval part.
Split split_indices(std::size_t n, double eval_fraction, std::uint64_t seed);
Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows);

/// Synthetic data from config.synthetic, or the CSV at config.dataset_path.
Dataset load_dataset(const ExperimentConfig& config);

struct RunOutcome {
  std::uint64_t seed = 0;
  TrainResult result;
  EvalReport report;
  RunStatus status = RunStatus::ok;
  /// MAE of always predicting the mean training label on the eval split.
  double constant_mae = 0.0;
};

/// Split by `seed`, train with train.seed = seed, evaluate on the held-out
/// part. A diverged run has NaN metrics.
RunOutcome run_once(const Dataset& data, const ExperimentConfig& config, const TrainConfig& train,
                    std::uint64_t seed);

/// Seeds of the configured repeats: train.seed, train.seed + 1, ...
std::vector<std::uint64_t> repeat_seeds(const ExperimentConfig& config);

void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& config, std::string_view command,
                    const std::vector<std::string>& files);

int cmd_gen_data(const ExperimentConfig& config, const std::filesystem::path& out_path, std::ostream& log);
int cmd_train(const ExperimentConfig& config, std::ostream& log);
int cmd_compare(const ExperimentConfig& config, std::ostream& log);
int cmd_sweep_lambda(const ExperimentConfig& config, std::ostream& log);

using GradientRegistry = std::function<GradientUnderTest(std::string_view)>;
GradientRegistry default_gradient_registry();

struct GradcheckArgs {
  std::vector<std::string> losses = registered_loss_names();
  std::vector<int> classes{3, 5, 10, 101};
  int samples = 100;
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
  GradCheckOptions options{};
  std::optional<std::filesystem::path> out_dir;
};

/// CSV on `log` (and gradcheck.csv under out_dir when set).
int cmd_gradcheck(const GradcheckArgs& args, std::ostream& log,
                  const GradientRegistry& registry = default_gradient_registry());

struct InspectArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
  /// 0-based, as in the dataset id column.
  std::vector<long long> ids;
  std::filesystem::path out_dir = "inspect";
};

/// sample_<id>.csv with class_index,probability per requested id, and
/// summary.csv with id,label,mean,variance,ambiguity.
int cmd_inspect(const InspectArgs& args, std::ostream& log);

}  // namespace ordl
