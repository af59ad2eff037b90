#include "ordl/dist_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ordl {

ClassIndex::ClassIndex(int value) : value_(value) {
  if (value < 1) {
    throw DomainError("class index must be >= 1, got " + std::to_string(value));
  }
}

void ClassIndex::check_against(int num_classes) const {
  if (value_ > num_classes) {
    throw DomainError("class index " + std::to_string(value_) + " outside 1.." +
                      std::to_string(num_classes));
  }
}

Logits::Logits(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) {
    throw DomainError("logits need at least 2 classes");
  }
  for (std::size_t j = 0; j < values_.size(); ++j) {
    if (!std::isfinite(values_[j])) {
      throw DomainError("non-finite logit at class " + std::to_string(j + 1));
    }
  }
}

ProbDist::ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) {
    throw DomainError("distribution needs at least 2 classes");
  }
  double sum = 0.0;
  for (double v : probs_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("probabilities must be finite and nonnegative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kRenormalizeTolerance) {
    throw DomainError("probabilities sum to " + std::to_string(sum) + ", expected 1");
  }
  if (sum != 1.0) {
    for (double& v : probs_) v /= sum;
  }
}

double log_sum_exp(std::span<const double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double acc = 0.0;
  for (double v : z) acc += std::exp(v - zmax);
  return zmax + std::log(acc);
}

ProbDist softmax(const Logits& z) {
  const auto v = z.values();
  const double zmax = *std::max_element(v.begin(), v.end());
  std::vector<double> p(v.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    p[j] = std::exp(v[j] - zmax);
    sum += p[j];
  }
  for (double& x : p) x /= sum;
  return ProbDist(std::move(p));
}

double expectation(const ProbDist& p) {
  double m = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) m += static_cast<double>(j + 1) * p[j];
  return m;
}

double variance(const ProbDist& p) {
  const double m = expectation(p);
  double v = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double d = static_cast<double>(j + 1) - m;
    v += p[j] * d * d;
  }
  return v;
}

ProbDist gaussian_target(ClassIndex y, double sigma, int num_classes) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("gaussian_target: sigma must be positive and finite");
  }
  if (num_classes < 2) {
    throw DomainError("gaussian_target: need at least 2 classes");
  }
  y.check_against(num_classes);
  std::vector<double> d(static_cast<std::size_t>(num_classes));
  const double denom = 2.0 * sigma * sigma;
  double sum = 0.0;
  for (int j = 1; j <= num_classes; ++j) {
    const double off = static_cast<double>(j - y.value());
    d[static_cast<std::size_t>(j - 1)] = std::exp(-off * off / denom);
    sum += d[static_cast<std::size_t>(j - 1)];
  }
  for (double& x : d) x /= sum;
  return ProbDist(std::move(d));
}

bool is_unimodal(const ProbDist& p, ClassIndex y) {
  y.check_against(p.num_classes());
  const std::size_t peak = y.offset();
  for (std::size_t j = 0; j < peak; ++j) {
    if (p[j] > p[j + 1]) return false;
  }
  for (std::size_t j = peak; j + 1 < p.size(); ++j) {
    if (p[j] < p[j + 1]) return false;
  }
  return true;
}

std::vector<double> softmax_backward(std::span<const double> p, std::span<const double> grad_p) {
  double dot = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) dot += p[k] * grad_p[k];
  std::vector<double> grad_z(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) grad_z[j] = p[j] * (grad_p[j] - dot);
  return grad_z;
}

}  // namespace ordl
