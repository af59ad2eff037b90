#pragma once

// Probability-vector primitives over ordinal classes 1..C.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ordl {

/// Raised when an argument violates a documented parameter domain.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 1-based ordinal class label.
class ClassIndex {
 public:
  explicit ClassIndex(int value);

  int value() const { return value_; }
  /// 0-based offset into a length-C vector.
  std::size_t offset() const { return static_cast<std::size_t>(value_ - 1); }

  /// Throws DomainError unless value() <= num_classes.
  void check_against(int num_classes) const;

  friend bool operator==(ClassIndex, ClassIndex) = default;

 private:
  int value_;
};

/// Pre-softmax network output. At least two entries, all finite.
class Logits {
 public:
  explicit Logits(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Probability vector over classes 1..C.
///
/// Construction accepts nonnegative entries whose sum is within
/// kRenormalizeTolerance of one and rescales them so the stored sum is one
/// up to rounding; anything else is rejected with DomainError.
class ProbDist {
 public:
  static constexpr double kSumTolerance = 1e-9;
  static constexpr double kRenormalizeTolerance = 1e-6;

  explicit ProbDist(std::vector<double> probs);

  std::size_t size() const { return probs_.size(); }
  int num_classes() const { return static_cast<int>(probs_.size()); }
  double operator[](std::size_t j) const { return probs_[j]; }
  std::span<const double> values() const { return probs_; }

 private:
  std::vector<double> probs_;
};

ProbDist softmax(const Logits& z);

/// ln(sum_j exp(z_j)), evaluated with max subtraction.
double log_sum_exp(std::span<const double> z);

/// Predicted label sum_j j * p_j.
double expectation(const ProbDist& p);

/// sum_j p_j * (j - expectation(p))^2.
double variance(const ProbDist& p);

/// Discretised Gaussian centred on y, normalised over the support 1..C.
ProbDist gaussian_target(ClassIndex y, double sigma, int num_classes);

/// True iff p is nondecreasing on [1, y] and nonincreasing on [y, C].
/// Plateaus are allowed.
bool is_unimodal(const ProbDist& p, ClassIndex y);

/// Vector-Jacobian product through softmax: returns dL/dz given p and dL/dp.
std::vector<double> softmax_backward(std::span<const double> p, std::span<const double> grad_p);

}  // namespace ordl
