#pragma once

// Ordinal label-distribution losses with exact gradients w.r.t. logits.
//
// Every loss is evaluated per sample; batch evaluation averages. Gradients
// are the full chain rule through softmax. Hinge and absolute-value kinks
// use a zero subgradient.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ordl/dist_core.hpp"

namespace ordl {

struct LossConfig {
  double lambda = 1000.0;  // weight of the unimodal term next to concentrated
  double lambda1 = 0.2;    // mean-loss weight in mean-variance
  double lambda2 = 0.05;   // variance-loss weight in mean-variance
  double sigma = 2.0;      // Gaussian target width for kl / dldl_v2
  double variance_floor = 1e-4;

  void validate() const;
};

/// Diagnostics carried next to a loss value. The two partials are the
/// closed-form derivatives w.r.t. variance v and squared error eps that hold
/// when v and eps are treated as independent variables; they are never used
/// for optimisation.
struct LossAux {
  std::optional<double> mean;      // expectation of p
  std::optional<double> variance;  // v (floored where the loss floors it)
  std::optional<double> error;     // eps = (mean - y)^2
  std::optional<double> dloss_dvariance;
  std::optional<double> dloss_derror;
};

struct LossEval {
  double value = 0.0;
  std::vector<double> grad_z;
  LossAux aux;
};

LossEval unimodal_loss(const Logits& z, ClassIndex y);
LossEval concentrated_loss(const Logits& z, ClassIndex y, const LossConfig& cfg);
LossEval unimodal_concentrated_loss(const Logits& z, ClassIndex y, const LossConfig& cfg);
LossEval softmax_ce_loss(const Logits& z, ClassIndex y);
LossEval mean_loss(const Logits& z, ClassIndex y);
LossEval variance_loss(const Logits& z, ClassIndex y);
LossEval mean_variance_loss(const Logits& z, ClassIndex y, const LossConfig& cfg);
LossEval kl_loss(const Logits& z, ClassIndex y, const LossConfig& cfg);
LossEval dldlv2_loss(const Logits& z, ClassIndex y, const LossConfig& cfg);

/// Unimodal gradient keeping only the diagonal of the softmax Jacobian,
/// i.e. dL/dp_j * p_j * (1 - p_j). Kept for comparison with the exact
/// gradient; it is not the derivative of unimodal_loss.
std::vector<double> unimodal_grad_diagonal(const Logits& z, ClassIndex y);

/// Branch pattern of every nondifferentiable point a loss passes through.
/// `distance` is the smallest absolute margin to a kink (infinity if the
/// loss has none).
struct KinkProbe {
  std::vector<int> signs;
  double distance = 0.0;
};

enum class LossTerm { unimodal, concentrated, softmax, mean, variance, kl, dldl_v2 };
enum class TermWeight { one, lambda, lambda1, lambda2 };

/// A loss identified by name: one registered name or a '+'-joined
/// composition such as "softmax+concentrated".
///
/// Standalone names carry their own weights (`unimodal`, `mean` and
/// `variance` are unweighted; `mean_variance` is softmax + lambda1*mean +
/// lambda2*variance). Inside a composition, `unimodal` is weighted by lambda,
/// `mean` by lambda1, `variance` by lambda2, and `mean_variance` expands to
/// lambda1*mean + lambda2*variance so that the other part supplies the
/// auxiliary term.
class Loss {
 public:
  struct Component {
    LossTerm term;
    TermWeight weight;
  };

  static Loss parse(std::string_view id);

  const std::string& name() const { return name_; }
  std::span<const Component> components() const { return components_; }

  LossEval evaluate(const Logits& z, ClassIndex y, const LossConfig& cfg) const;
  KinkProbe kinks(const Logits& z, ClassIndex y, const LossConfig& cfg) const;

 private:
  Loss(std::string name, std::vector<Component> components)
      : name_(std::move(name)), components_(std::move(components)) {}

  std::string name_;
  std::vector<Component> components_;
};

/// The nine standalone loss identifiers.
const std::vector<std::string>& registered_loss_names();

double term_weight(TermWeight w, const LossConfig& cfg);

struct BatchLossEval {
  double value = 0.0;                       // arithmetic mean over samples
  std::vector<std::vector<double>> grad_z;  // per sample, already divided by N
};

/// Mean loss over a batch; per-sample values are summed left to right.
BatchLossEval evaluate_batch(const Loss& loss, std::span<const Logits> z,
                             std::span<const ClassIndex> y, const LossConfig& cfg);

}  // namespace ordl
