#include "ordl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

namespace ordl {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                      std::to_string(b) + ")");
  }
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

double mae(std::span<const double> predictions, std::span<const double> labels) {
  require_same_length(predictions.size(), labels.size(), "mae");
  if (predictions.empty()) throw DomainError("mae: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) sum += std::abs(predictions[i] - labels[i]);
  return sum / static_cast<double>(predictions.size());
}

double unimodality_rate(std::span<const ProbDist> dists, std::span<const ClassIndex> labels) {
  require_same_length(dists.size(), labels.size(), "unimodality_rate");
  if (dists.empty()) throw DomainError("unimodality_rate: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < dists.size(); ++i) hits += is_unimodal(dists[i], labels[i]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(dists.size());
}

std::map<int, LabelStd> per_label_std_profile(std::span<const ProbDist> dists, std::span<const ClassIndex> labels,
                                              int min_count) {
  require_same_length(dists.size(), labels.size(), "per_label_std_profile");
  if (dists.empty()) throw DomainError("per_label_std_profile: empty input");
  std::map<int, LabelStd> sums;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    auto& e = sums[labels[i].value()];
    e.mean_std += std::sqrt(variance(dists[i]));
    ++e.count;
  }
  std::map<int, LabelStd> out;
  for (auto& [label, e] : sums) {
    if (e.count < min_count) continue;
    out[label] = {e.mean_std / e.count, e.count};
  }
  return out;
}

double profile_spread(const std::map<int, LabelStd>& profile) {
  if (profile.empty()) return 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& [label, e] : profile) {
    lo = std::min(lo, e.mean_std);
    hi = std::max(hi, e.mean_std);
  }
  return hi - lo;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double ambiguity_spearman(std::span<const double> pred_stds, std::span<const double> ambiguities) {
  require_same_length(pred_stds.size(), ambiguities.size(), "ambiguity_spearman");
  if (pred_stds.size() < 3) throw DomainError("ambiguity_spearman: need at least 3 samples");
  const auto ra = average_ranks(pred_stds);
  const auto rb = average_ranks(ambiguities);
  const double n = static_cast<double>(ra.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) throw DomainError("ambiguity_spearman: all values tied");
  return cov / std::sqrt(va * vb);
}

std::string EvalReport::csv_header() { return "n,mae,unimodality_rate,ambiguity_spearman,per_label_std_spread"; }

std::string EvalReport::csv_row() const {
  return std::to_string(n) + ',' + fmt17(mae) + ',' + fmt17(unimodality_rate) + ',' + fmt17(ambiguity_spearman) +
         ',' + fmt17(profile_spread(per_label_std));
}

void EvalReport::write_per_label_csv(std::ostream& out) const {
  out << "label,mean_std,count\n";
  for (const auto& [label, e] : per_label_std) out << label << ',' << fmt17(e.mean_std) << ',' << e.count << '\n';
}

EvalReport evaluate(std::span<const ProbDist> dists, std::span<const ClassIndex> labels,
                    std::span<const double> ambiguities, int min_count) {
  require_same_length(dists.size(), labels.size(), "evaluate");
  require_same_length(dists.size(), ambiguities.size(), "evaluate");
  EvalReport r;
  r.n = static_cast<int>(dists.size());
  std::vector<double> means, ys, stds;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    means.push_back(expectation(dists[i]));
    ys.push_back(labels[i].value());
    stds.push_back(std::sqrt(variance(dists[i])));
  }
  r.mae = mae(means, ys);
  r.unimodality_rate = unimodality_rate(dists, labels);
  r.per_label_std = per_label_std_profile(dists, labels, min_count);
  try {
    r.ambiguity_spearman = ambiguity_spearman(stds, ambiguities);
  } catch (const DomainError&) {
    r.ambiguity_spearman = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace ordl
