#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ordl/dist_core.hpp"

namespace ordl {

/// Mean absolute error between predicted expectations and labels.
double mae(std::span<const double> predictions, std::span<const double> labels);

/// Fraction of distributions that are unimodal about their label.
double unimodality_rate(std::span<const ProbDist> dists, std::span<const ClassIndex> labels);

struct LabelStd {
  double mean_std = 0.0;
  int count = 0;
};

/// Mean predicted standard deviation per label; labels with fewer than
/// min_count samples are left out.
std::map<int, LabelStd> per_label_std_profile(std::span<const ProbDist> dists, std::span<const ClassIndex> labels,
                                              int min_count = 10);

/// max - min of the profile's mean_std values (0 for an empty profile).
double profile_spread(const std::map<int, LabelStd>& profile);

/// Spearman rank correlation with average ranks for ties.
double ambiguity_spearman(std::span<const double> pred_stds, std::span<const double> ambiguities);

/// 1-based average ranks.
std::vector<double> average_ranks(std::span<const double> values);

struct EvalReport {
  double mae = 0.0;
  double unimodality_rate = 0.0;
  std::map<int, LabelStd> per_label_std;
  double ambiguity_spearman = 0.0;  // NaN when either input is all ties
  int n = 0;

  static std::string csv_header();
  std::string csv_row() const;
  void write_per_label_csv(std::ostream& out) const;
};

EvalReport evaluate(std::span<const ProbDist> dists, std::span<const ClassIndex> labels,
                    std::span<const double> ambiguities, int min_count = 10);

}  // namespace ordl
