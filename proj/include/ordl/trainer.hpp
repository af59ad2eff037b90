#pragma once

// Small fully connected network mapping features to C logits, trained under
// any registered loss.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ordl/losses.hpp"
#include "ordl/rng.hpp"
#include "ordl/synth.hpp"

namespace ordl {

enum class Activation { relu, tanh };
enum class OptimizerKind { sgd_momentum, adam };

std::string to_string(Activation a);
std::string to_string(OptimizerKind o);
Activation parse_activation(std::string_view s);
OptimizerKind parse_optimizer(std::string_view s);

/// Layer l maps fan_in -> fan_out with weights[l] of shape fan_out x fan_in.
/// The last layer is linear; hidden layers apply `activation`.
struct ModelParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Activation activation = Activation::relu;

  /// layer_sizes = {input_dim, hidden..., num_classes}
  static ModelParams zeros(std::span<const int> layer_sizes, Activation activation);
  /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static ModelParams glorot_uniform(std::span<const int> layer_sizes, Activation activation, Rng& rng);

  std::vector<int> layer_sizes() const;
  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int num_classes() const { return static_cast<int>(weights.back().rows()); }
  bool all_finite() const;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static Gradients zeros_like(const ModelParams& params);
  double squared_norm() const;
  bool all_finite() const;
};

/// One sample per column.
Eigen::MatrixXd feature_matrix(const Dataset& data);
Eigen::MatrixXd feature_matrix(const Dataset& data, std::span<const std::size_t> rows);

/// Logits, one column per input column.
Eigen::MatrixXd forward(const ModelParams& params, const Eigen::MatrixXd& features);

struct BackwardResult {
  double loss = 0.0;
  Gradients grads;
  /// False when the loss, its logit gradient or any parameter gradient is
  /// not finite; grads are then unusable.
  bool finite = true;
};

/// Gradients of the batch-mean loss w.r.t. every parameter.
BackwardResult backward(const ModelParams& params, const Eigen::MatrixXd& features,
                        std::span<const ClassIndex> labels, const Loss& loss, const LossConfig& cfg);

struct TrainConfig {
  std::string loss = "unimodal_concentrated";
  LossConfig loss_config{};
  std::vector<int> hidden_sizes{64, 64};
  Activation activation = Activation::relu;
  OptimizerKind optimizer = OptimizerKind::adam;
  double lr = 1e-3;
  double momentum = 0.9;  // sgd_momentum only
  double lr_decay_factor = 0.5;
  long lr_decay_every = 1000;
  int batch_size = 128;
  long max_steps = 3000;
  std::uint64_t seed = 1;
  std::optional<double> grad_clip;  // global L2 norm
  long trace_every = 100;
  int trace_subsample = 1000;

  void validate() const;
  double learning_rate_at(long step) const;
};

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double momentum, const ModelParams& shape);
  void step(ModelParams& params, const Gradients& grads, double lr);

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  OptimizerKind kind_;
  double momentum_;
  long t_ = 0;
  Gradients first_;
  Gradients second_;
};

enum class TrainStatus { ok, diverged };
std::string to_string(TrainStatus s);

struct TraceRow {
  long step = 0;
  double loss = 0.0;
  double mae = 0.0;
  std::string status;
};

struct TrainingTrace {
  std::vector<TraceRow> rows;
  TrainStatus status = TrainStatus::ok;
  long steps_completed = 0;

  /// step,loss,mae,status
  void write_csv(std::ostream& out) const;
};

struct TrainResult {
  ModelParams params;
  TrainingTrace trace;
};

/// Seeded initialisation, then max_steps minibatch updates over reshuffled
/// epochs (a short tail batch is dropped). Stops early with status diverged
/// the first time the loss or any gradient or parameter becomes non-finite.
TrainResult train(const Dataset& data, const TrainConfig& cfg);

struct Prediction {
  std::vector<ProbDist> dists;
  std::vector<double> mean;
  std::vector<double> variance;
};

Prediction predict(const ModelParams& params, const Eigen::MatrixXd& features);

}  // namespace ordl
