#pragma once

// Finite-difference oracle for the analytic loss gradients.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ordl/losses.hpp"

namespace ordl {

/// Thrown when a function evaluation inside finite differencing is not finite.
class FiniteDiffError : public std::runtime_error {
 public:
  FiniteDiffError(std::size_t coordinate, double value);
  std::size_t coordinate() const { return coordinate_; }

 private:
  std::size_t coordinate_;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (f(z + h e_j) - f(z - h e_j)) / 2h for every j.
std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> z, double step);

/// ||analytic - numeric||_inf / max(1, ||numeric||_inf)
double gradient_rel_error(std::span<const double> analytic, std::span<const double> numeric);

struct GradCheckReport {
  std::string loss_name;
  int num_classes = 0;
  int samples = 0;
  double max_rel_err = 0.0;
  double mean_rel_err = 0.0;
  std::vector<double> worst_z;
  int worst_y = 0;
  int skipped_kinks = 0;

  bool passed(double tolerance) const { return max_rel_err <= tolerance; }

  static std::string csv_header();
  std::string csv_row() const;
  std::string text() const;
};

struct GradCheckOptions {
  double step = 1e-5;
  double kink_margin = 1e-6;
  double logit_scale = 3.0;
  LossConfig loss_config{};
};

/// Analytic side of a check. Tests substitute deliberately broken versions.
struct GradientUnderTest {
  std::string name;
  std::function<LossEval(const Logits&, ClassIndex, const LossConfig&)> evaluate;
  std::function<KinkProbe(const Logits&, ClassIndex, const LossConfig&)> kinks;
};

GradientUnderTest gradient_under_test(const Loss& loss);

/// Draws z ~ logit_scale * N(0, I) and y ~ U{1..C} until `n_samples` draws
/// clear every kink by kink_margin and keep the same branch pattern at all
/// finite-difference probe points; skipped draws are counted. Deterministic
/// in (loss, C, n_samples, seed, options).
GradCheckReport check_gradient(const GradientUnderTest& subject, int num_classes, int n_samples,
                               std::uint64_t seed, const GradCheckOptions& options = {});

GradCheckReport check_loss(std::string_view loss_name, int num_classes, int n_samples, std::uint64_t seed,
                           const GradCheckOptions& options = {});

}  // namespace ordl
