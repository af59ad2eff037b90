#include "ordl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "ordl/metrics.hpp"

namespace ordl {

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

std::string to_string(OptimizerKind o) { return o == OptimizerKind::adam ? "adam" : "sgd_momentum"; }

std::string to_string(TrainStatus s) { return s == TrainStatus::ok ? "ok" : "diverged"; }

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw DomainError("unknown activation '" + std::string(s) + "'");
}

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd_momentum") return OptimizerKind::sgd_momentum;
  throw DomainError("unknown optimizer '" + std::string(s) + "'");
}

namespace {

void check_sizes(std::span<const int> layer_sizes) {
  if (layer_sizes.size() < 2) throw DomainError("network needs input and output sizes");
  for (int s : layer_sizes) {
    if (s < 1) throw DomainError("layer sizes must be positive");
  }
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation a) {
  if (a == Activation::relu) return pre.cwiseMax(0.0);
  return pre.array().tanh().matrix();
}

Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post, Activation a) {
  if (a == Activation::relu) return (pre.array() > 0.0).cast<double>().matrix();
  return (1.0 - post.array().square()).matrix();
}

// Pre-activations and activations of every layer; acts[0] is the input.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> acts;
};

ForwardCache forward_cached(const ModelParams& params, const Eigen::MatrixXd& x) {
  if (x.rows() != params.input_dim()) {
    throw DomainError("forward: feature dimension " + std::to_string(x.rows()) + " != network input " +
                      std::to_string(params.input_dim()));
  }
  ForwardCache cache;
  cache.acts.push_back(x);
  const std::size_t layers = params.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = params.weights[l] * cache.acts.back();
    z.colwise() += params.biases[l];
    if (l + 1 < layers) {
      cache.acts.push_back(activate(z, params.activation));
    } else {
      cache.acts.push_back(z);
    }
    cache.pre.push_back(std::move(z));
  }
  return cache;
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  return std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows());
}

}  // namespace

ModelParams ModelParams::zeros(std::span<const int> layer_sizes, Activation activation) {
  check_sizes(layer_sizes);
  ModelParams p;
  p.activation = activation;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(layer_sizes[l + 1], layer_sizes[l]));
    p.biases.push_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
  }
  return p;
}

ModelParams ModelParams::glorot_uniform(std::span<const int> layer_sizes, Activation activation, Rng& rng) {
  ModelParams p = zeros(layer_sizes, activation);
  for (auto& w : p.weights) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    // Row-major fill order so the draw sequence does not depend on storage.
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-limit, limit);
    }
  }
  return p;
}

std::vector<int> ModelParams::layer_sizes() const {
  std::vector<int> sizes;
  sizes.push_back(input_dim());
  for (const auto& w : weights) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

bool ModelParams::all_finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  for (const auto& w : params.weights) g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : params.biases) g.biases.push_back(Eigen::VectorXd::Zero(b.size()));
  return g;
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

bool Gradients::all_finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

Eigen::MatrixXd feature_matrix(const Dataset& data) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return feature_matrix(data, rows);
}

Eigen::MatrixXd feature_matrix(const Dataset& data, std::span<const std::size_t> rows) {
  Eigen::MatrixXd x(data.feature_dim(), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& f = data.samples.at(rows[i]).features;
    for (std::size_t j = 0; j < f.size(); ++j) x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = f[j];
  }
  return x;
}

Eigen::MatrixXd forward(const ModelParams& params, const Eigen::MatrixXd& features) {
  return forward_cached(params, features).acts.back();
}

BackwardResult backward(const ModelParams& params, const Eigen::MatrixXd& features,
                        std::span<const ClassIndex> labels, const Loss& loss, const LossConfig& cfg) {
  if (static_cast<std::size_t>(features.cols()) != labels.size() || labels.empty()) {
    throw DomainError("backward: feature columns and labels differ in count or are empty");
  }
  const ForwardCache cache = forward_cached(params, features);
  const Eigen::MatrixXd& logits = cache.acts.back();
  BackwardResult out;
  out.grads = Gradients::zeros_like(params);
  if (!logits.allFinite()) {
    out.finite = false;
    out.loss = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  std::vector<Logits> z;
  z.reserve(labels.size());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) z.emplace_back(column(logits, c));
  BatchLossEval batch = evaluate_batch(loss, z, labels, cfg);
  out.loss = batch.value;

  Eigen::MatrixXd delta(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const auto& g = batch.grad_z[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < logits.rows(); ++r) delta(r, c) = g[static_cast<std::size_t>(r)];
  }
  if (!std::isfinite(out.loss) || !delta.allFinite()) {
    out.finite = false;
    return out;
  }

  for (std::size_t l = params.weights.size(); l-- > 0;) {
    out.grads.weights[l] = delta * cache.acts[l].transpose();
    out.grads.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = params.weights[l].transpose() * delta;
      delta = back.cwiseProduct(activation_derivative(cache.pre[l - 1], cache.acts[l], params.activation));
    }
  }
  out.finite = out.grads.all_finite();
  return out;
}

void TrainConfig::validate() const {
  Loss::parse(loss);
  loss_config.validate();
  for (int h : hidden_sizes) {
    if (h < 1) throw DomainError("train: hidden sizes must be positive");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError("train: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("train: momentum must be in [0, 1)");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0))
    throw DomainError("train: lr_decay_factor must be in (0, 1]");
  if (lr_decay_every < 1) throw DomainError("train: lr_decay_every must be >= 1");
  if (batch_size < 1) throw DomainError("train: batch_size must be >= 1");
  if (max_steps < 0) throw DomainError("train: max_steps must be >= 0");
  if (grad_clip && !(*grad_clip > 0.0)) throw DomainError("train: grad_clip must be > 0");
  if (trace_every < 1) throw DomainError("train: trace_every must be >= 1");
  if (trace_subsample < 1) throw DomainError("train: trace_subsample must be >= 1");
}

double TrainConfig::learning_rate_at(long step) const {
  return lr * std::pow(lr_decay_factor, static_cast<double>(step / lr_decay_every));
}

Optimizer::Optimizer(OptimizerKind kind, double momentum, const ModelParams& shape)
    : kind_(kind),
      momentum_(momentum),
      first_(Gradients::zeros_like(shape)),
      second_(Gradients::zeros_like(shape)) {}

void Optimizer::step(ModelParams& params, const Gradients& grads, double lr) {
  ++t_;
  if (kind_ == OptimizerKind::sgd_momentum) {
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      first_.weights[l] = momentum_ * first_.weights[l] + grads.weights[l];
      first_.biases[l] = momentum_ * first_.biases[l] + grads.biases[l];
      params.weights[l] -= lr * first_.weights[l];
      params.biases[l] -= lr * first_.biases[l];
    }
    return;
  }
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseAbs2();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], first_.weights[l], second_.weights[l], grads.weights[l]);
    update(params.biases[l], first_.biases[l], second_.biases[l], grads.biases[l]);
  }
}

void TrainingTrace::write_csv(std::ostream& out) const {
  out << "step,loss,mae,status\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,", r.step, r.loss, r.mae);
    out << buf << r.status << '\n';
  }
}

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.samples.empty()) throw DomainError("train: empty dataset");
  const Loss loss = Loss::parse(cfg.loss);

  std::vector<int> sizes;
  sizes.push_back(data.feature_dim());
  sizes.insert(sizes.end(), cfg.hidden_sizes.begin(), cfg.hidden_sizes.end());
  sizes.push_back(data.num_classes);

  Rng rng(cfg.seed);
  TrainResult result{ModelParams::glorot_uniform(sizes, cfg.activation, rng), {}};
  Optimizer opt(cfg.optimizer, cfg.momentum, result.params);

  const std::size_t n = data.size();
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n;  // forces a shuffle before the first batch

  std::vector<std::size_t> monitor(std::min<std::size_t>(n, static_cast<std::size_t>(cfg.trace_subsample)));
  std::iota(monitor.begin(), monitor.end(), std::size_t{0});
  const Eigen::MatrixXd monitor_x = feature_matrix(data, monitor);
  std::vector<double> monitor_y;
  for (std::size_t i : monitor) monitor_y.push_back(data.samples[i].label.value());

  auto monitor_mae = [&]() { return mae(predict(result.params, monitor_x).mean, monitor_y); };

  std::vector<std::size_t> rows(batch);
  std::vector<ClassIndex> labels;
  for (long step = 0; step < cfg.max_steps; ++step) {
    if (cursor + batch > n) {
      rng.shuffle(order);
      cursor = 0;
    }
    std::copy_n(order.begin() + static_cast<std::ptrdiff_t>(cursor), batch, rows.begin());
    cursor += batch;
    labels.clear();
    for (std::size_t i : rows) labels.push_back(data.samples[i].label);

    BackwardResult br = backward(result.params, feature_matrix(data, rows), labels, loss, cfg.loss_config);
    if (br.finite && cfg.grad_clip) {
      const double norm = std::sqrt(br.grads.squared_norm());
      if (norm > *cfg.grad_clip) {
        const double s = *cfg.grad_clip / norm;
        for (auto& w : br.grads.weights) w *= s;
        for (auto& b : br.grads.biases) b *= s;
      }
    }
    if (br.finite) {
      opt.step(result.params, br.grads, cfg.learning_rate_at(step));
      br.finite = result.params.all_finite();
    }
    if (!br.finite) {
      result.trace.status = TrainStatus::diverged;
      result.trace.rows.push_back({step + 1, br.loss, std::numeric_limits<double>::quiet_NaN(), "diverged"});
      result.trace.steps_completed = step;
      return result;
    }
    result.trace.steps_completed = step + 1;
    if ((step + 1) % cfg.trace_every == 0 || step + 1 == cfg.max_steps) {
      result.trace.rows.push_back({step + 1, br.loss, monitor_mae(), "ok"});
    }
  }
  return result;
}

Prediction predict(const ModelParams& params, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd logits = forward(params, features);
  Prediction out;
  out.dists.reserve(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    ProbDist p = softmax(Logits(column(logits, c)));
    out.mean.push_back(expectation(p));
    out.variance.push_back(variance(p));
    out.dists.push_back(std::move(p));
  }
  return out;
}

}  // namespace ordl
