#include "ordl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ordl {

namespace {

struct Moments {
  std::vector<double> p;
  double lse = 0.0;
  double mean = 0.0;
  double var = 0.0;
  int label = 1;
};

Moments moments_of(const Logits& z, ClassIndex y) {
  y.check_against(static_cast<int>(z.size()));
  ProbDist dist = softmax(z);
  Moments m;
  m.p.assign(dist.values().begin(), dist.values().end());
  m.lse = log_sum_exp(z.values());
  m.mean = expectation(dist);
  m.var = variance(dist);
  m.label = y.value();
  return m;
}

double cls(std::size_t j) { return static_cast<double>(j + 1); }

// sign[j - y] with sign[0] = +1; j is 1-based.
double pair_sign(std::size_t j0, int label) { return (static_cast<int>(j0) + 1 < label) ? -1.0 : 1.0; }

struct TermEval {
  double value = 0.0;
  std::vector<double> grad_z;
  std::optional<double> dloss_dvariance;
  std::optional<double> dloss_derror;
};

TermEval unimodal_term(const Moments& m) {
  const std::size_t c = m.p.size();
  std::vector<double> grad_p(c, 0.0);
  TermEval t;
  for (std::size_t j = 0; j + 1 < c; ++j) {
    const double s = pair_sign(j, m.label);
    const double q = -(m.p[j] - m.p[j + 1]) * s;
    if (q > 0.0) {
      t.value += q;
      grad_p[j] += -s;
      grad_p[j + 1] += s;
    }
  }
  t.grad_z = softmax_backward(m.p, grad_p);
  return t;
}

TermEval concentrated_term(const Moments& m, const LossConfig& cfg) {
  const double v = std::max(m.var, cfg.variance_floor);
  const double diff = m.mean - m.label;
  const double eps = diff * diff;
  TermEval t;
  t.value = 0.5 * std::log(v) + eps / (2.0 * v);
  t.dloss_dvariance = 1.0 / (2.0 * v) - eps / (2.0 * v * v);
  t.dloss_derror = 1.0 / (2.0 * v);

  // dL/dp through mean (d eps/dp_j = 2 diff j) and, above the floor, through
  // v (dv/dp_j = (j - mean)^2 up to a constant the softmax Jacobian drops).
  const double through_var = m.var > cfg.variance_floor ? *t.dloss_dvariance : 0.0;
  std::vector<double> grad_p(m.p.size());
  for (std::size_t j = 0; j < m.p.size(); ++j) {
    const double d = cls(j) - m.mean;
    grad_p[j] = diff * cls(j) / v + through_var * d * d;
  }
  t.grad_z = softmax_backward(m.p, grad_p);
  return t;
}

TermEval softmax_term(const Moments& m, const Logits& z) {
  TermEval t;
  const std::size_t y0 = static_cast<std::size_t>(m.label - 1);
  t.value = m.lse - z[y0];
  t.grad_z = m.p;
  t.grad_z[y0] -= 1.0;
  return t;
}

TermEval mean_term(const Moments& m) {
  const double diff = m.mean - m.label;
  TermEval t;
  t.value = 0.5 * diff * diff;
  t.grad_z.resize(m.p.size());
  for (std::size_t j = 0; j < m.p.size(); ++j) t.grad_z[j] = diff * m.p[j] * (cls(j) - m.mean);
  t.dloss_derror = 0.5;
  t.dloss_dvariance = 0.0;
  return t;
}

TermEval variance_term(const Moments& m) {
  TermEval t;
  t.value = m.var;
  t.grad_z.resize(m.p.size());
  for (std::size_t j = 0; j < m.p.size(); ++j) {
    const double d = cls(j) - m.mean;
    t.grad_z[j] = m.p[j] * (d * d - m.var);
  }
  t.dloss_dvariance = 1.0;
  t.dloss_derror = 0.0;
  return t;
}

TermEval kl_term(const Moments& m, const Logits& z, const LossConfig& cfg) {
  const ProbDist d = gaussian_target(ClassIndex(m.label), cfg.sigma, static_cast<int>(m.p.size()));
  TermEval t;
  t.grad_z.resize(m.p.size());
  for (std::size_t j = 0; j < m.p.size(); ++j) {
    if (d[j] > 0.0) t.value += d[j] * (std::log(d[j]) - (z[j] - m.lse));
    t.grad_z[j] = m.p[j] - d[j];
  }
  return t;
}

TermEval dldlv2_term(const Moments& m, const Logits& z, const LossConfig& cfg) {
  TermEval t = kl_term(m, z, cfg);
  const double diff = m.mean - m.label;
  t.value += std::abs(diff);
  const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  if (s != 0.0) {
    for (std::size_t j = 0; j < m.p.size(); ++j) t.grad_z[j] += s * m.p[j] * (cls(j) - m.mean);
  }
  return t;
}

TermEval eval_term(LossTerm term, const Moments& m, const Logits& z, const LossConfig& cfg) {
  switch (term) {
    case LossTerm::unimodal: return unimodal_term(m);
    case LossTerm::concentrated: return concentrated_term(m, cfg);
    case LossTerm::softmax: return softmax_term(m, z);
    case LossTerm::mean: return mean_term(m);
    case LossTerm::variance: return variance_term(m);
    case LossTerm::kl: return kl_term(m, z, cfg);
    case LossTerm::dldl_v2: return dldlv2_term(m, z, cfg);
  }
  throw DomainError("unhandled loss term");
}

void accumulate(std::optional<double>& into, const std::optional<double>& x, double w) {
  if (!x) return;
  into = into.value_or(0.0) + w * *x;
}

LossEval evaluate_components(std::span<const Loss::Component> parts, const Logits& z, ClassIndex y,
                             const LossConfig& cfg) {
  const Moments m = moments_of(z, y);
  LossEval out;
  out.grad_z.assign(m.p.size(), 0.0);
  bool floored = false;
  for (const auto& part : parts) {
    const double w = term_weight(part.weight, cfg);
    const TermEval t = eval_term(part.term, m, z, cfg);
    out.value += w * t.value;
    for (std::size_t j = 0; j < out.grad_z.size(); ++j) out.grad_z[j] += w * t.grad_z[j];
    accumulate(out.aux.dloss_dvariance, t.dloss_dvariance, w);
    accumulate(out.aux.dloss_derror, t.dloss_derror, w);
    floored = floored || part.term == LossTerm::concentrated;
  }
  const double diff = m.mean - m.label;
  out.aux.mean = m.mean;
  out.aux.variance = floored ? std::max(m.var, cfg.variance_floor) : m.var;
  out.aux.error = diff * diff;
  return out;
}

using C = Loss::Component;

std::vector<C> standalone_components(std::string_view name) {
  if (name == "unimodal") return {{LossTerm::unimodal, TermWeight::one}};
  if (name == "concentrated") return {{LossTerm::concentrated, TermWeight::one}};
  if (name == "unimodal_concentrated")
    return {{LossTerm::concentrated, TermWeight::one}, {LossTerm::unimodal, TermWeight::lambda}};
  if (name == "softmax") return {{LossTerm::softmax, TermWeight::one}};
  if (name == "mean") return {{LossTerm::mean, TermWeight::one}};
  if (name == "variance") return {{LossTerm::variance, TermWeight::one}};
  if (name == "mean_variance")
    return {{LossTerm::softmax, TermWeight::one},
            {LossTerm::mean, TermWeight::lambda1},
            {LossTerm::variance, TermWeight::lambda2}};
  if (name == "kl") return {{LossTerm::kl, TermWeight::one}};
  if (name == "dldl_v2") return {{LossTerm::dldl_v2, TermWeight::one}};
  return {};
}

std::vector<C> composed_components(std::string_view name) {
  if (name == "unimodal") return {{LossTerm::unimodal, TermWeight::lambda}};
  if (name == "mean") return {{LossTerm::mean, TermWeight::lambda1}};
  if (name == "variance") return {{LossTerm::variance, TermWeight::lambda2}};
  if (name == "mean_variance")
    return {{LossTerm::mean, TermWeight::lambda1}, {LossTerm::variance, TermWeight::lambda2}};
  return standalone_components(name);
}

}  // namespace

void LossConfig::validate() const {
  auto nonneg = [](double x, const char* what) {
    if (!std::isfinite(x) || x < 0.0) throw DomainError(std::string(what) + " must be finite and >= 0");
  };
  nonneg(lambda, "lambda");
  nonneg(lambda1, "lambda1");
  nonneg(lambda2, "lambda2");
  if (!std::isfinite(sigma) || !(sigma > 0.0)) throw DomainError("sigma must be > 0");
  if (!std::isfinite(variance_floor) || !(variance_floor > 0.0))
    throw DomainError("variance_floor must be > 0");
}

double term_weight(TermWeight w, const LossConfig& cfg) {
  switch (w) {
    case TermWeight::one: return 1.0;
    case TermWeight::lambda: return cfg.lambda;
    case TermWeight::lambda1: return cfg.lambda1;
    case TermWeight::lambda2: return cfg.lambda2;
  }
  return 1.0;
}

LossEval unimodal_loss(const Logits& z, ClassIndex y) {
  static const std::vector<C> parts = standalone_components("unimodal");
  return evaluate_components(parts, z, y, LossConfig{});
}

LossEval concentrated_loss(const Logits& z, ClassIndex y, const LossConfig& cfg) {
  static const std::vector<C> parts = standalone_components("concentrated");
  return evaluate_components(parts, z, y, cfg);
}

LossEval unimodal_concentrated_loss(const Logits& z, ClassIndex y, const LossConfig& cfg) {
  static const std::vector<C> parts = standalone_components("unimodal_concentrated");
  return evaluate_components(parts, z, y, cfg);
}

LossEval softmax_ce_loss(const Logits& z, ClassIndex y) {
  static const std::vector<C> parts = standalone_components("softmax");
  return evaluate_components(parts, z, y, LossConfig{});
}

LossEval mean_loss(const Logits& z, ClassIndex y) {
  static const std::vector<C> parts = standalone_components("mean");
  return evaluate_components(parts, z, y, LossConfig{});
}

LossEval variance_loss(const Logits& z, ClassIndex y) {
  static const std::vector<C> parts = standalone_components("variance");
  return evaluate_components(parts, z, y, LossConfig{});
}

LossEval mean_variance_loss(const Logits& z, ClassIndex y, const LossConfig& cfg) {
  static const std::vector<C> parts = standalone_components("mean_variance");
  return evaluate_components(parts, z, y, cfg);
}

LossEval kl_loss(const Logits& z, ClassIndex y, const LossConfig& cfg) {
  static const std::vector<C> parts = standalone_components("kl");
  return evaluate_components(parts, z, y, cfg);
}

LossEval dldlv2_loss(const Logits& z, ClassIndex y, const LossConfig& cfg) {
  static const std::vector<C> parts = standalone_components("dldl_v2");
  return evaluate_components(parts, z, y, cfg);
}

std::vector<double> unimodal_grad_diagonal(const Logits& z, ClassIndex y) {
  const Moments m = moments_of(z, y);
  std::vector<double> grad(m.p.size(), 0.0);
  for (std::size_t j = 0; j + 1 < m.p.size(); ++j) {
    const double s = pair_sign(j, m.label);
    if (-(m.p[j] - m.p[j + 1]) * s > 0.0) {
      grad[j] += -s * m.p[j] * (1.0 - m.p[j]);
      grad[j + 1] += s * m.p[j + 1] * (1.0 - m.p[j + 1]);
    }
  }
  return grad;
}

Loss Loss::parse(std::string_view id) {
  if (id.empty()) throw DomainError("empty loss identifier");
  if (id.find('+') == std::string_view::npos) {
    auto parts = standalone_components(id);
    if (parts.empty()) throw DomainError("unknown loss '" + std::string(id) + "'");
    return Loss(std::string(id), std::move(parts));
  }
  std::vector<Component> parts;
  std::size_t start = 0;
  while (start <= id.size()) {
    const std::size_t end = std::min(id.find('+', start), id.size());
    const std::string_view token = id.substr(start, end - start);
    auto expanded = composed_components(token);
    if (expanded.empty()) {
      throw DomainError("unknown loss '" + std::string(token) + "' in '" + std::string(id) + "'");
    }
    for (const auto& c : expanded) {
      const bool dup = std::any_of(parts.begin(), parts.end(), [&](const Component& e) { return e.term == c.term; });
      if (dup) throw DomainError("loss term repeated in '" + std::string(id) + "'");
      parts.push_back(c);
    }
    start = end + 1;
  }
  return Loss(std::string(id), std::move(parts));
}

LossEval Loss::evaluate(const Logits& z, ClassIndex y, const LossConfig& cfg) const {
  return evaluate_components(components_, z, y, cfg);
}

KinkProbe Loss::kinks(const Logits& z, ClassIndex y, const LossConfig& cfg) const {
  const Moments m = moments_of(z, y);
  KinkProbe probe;
  probe.distance = std::numeric_limits<double>::infinity();
  auto record = [&](double margin) {
    probe.signs.push_back(margin > 0.0 ? 1 : (margin < 0.0 ? -1 : 0));
    probe.distance = std::min(probe.distance, std::abs(margin));
  };
  for (const auto& part : components_) {
    switch (part.term) {
      case LossTerm::unimodal:
        for (std::size_t j = 0; j + 1 < m.p.size(); ++j) record(-(m.p[j] - m.p[j + 1]) * pair_sign(j, m.label));
        break;
      case LossTerm::concentrated:
        record(m.var - cfg.variance_floor);
        break;
      case LossTerm::dldl_v2:
        record(m.mean - m.label);
        break;
      default:
        break;
    }
  }
  return probe;
}

const std::vector<std::string>& registered_loss_names() {
  static const std::vector<std::string> names = {
      "unimodal", "concentrated", "unimodal_concentrated", "softmax", "mean",
      "variance", "mean_variance", "kl",                    "dldl_v2"};
  return names;
}

BatchLossEval evaluate_batch(const Loss& loss, std::span<const Logits> z, std::span<const ClassIndex> y,
                             const LossConfig& cfg) {
  if (z.size() != y.size() || z.empty()) throw DomainError("batch: logits/labels size mismatch or empty");
  BatchLossEval out;
  const double inv_n = 1.0 / static_cast<double>(z.size());
  out.grad_z.reserve(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    LossEval e = loss.evaluate(z[i], y[i], cfg);
    sum += e.value;
    for (double& g : e.grad_z) g *= inv_n;
    out.grad_z.push_back(std::move(e.grad_z));
  }
  out.value = sum * inv_n;
  return out;
}

}  // namespace ordl
