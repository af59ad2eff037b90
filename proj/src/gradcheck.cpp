#include "ordl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ordl/rng.hpp"

namespace ordl {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

FiniteDiffError::FiniteDiffError(std::size_t coordinate, double value)
    : std::runtime_error("non-finite function value " + fmt17(value) + " while perturbing coordinate " +
                         std::to_string(coordinate)),
      coordinate_(coordinate) {}

std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> z, double step) {
  if (!(step > 0.0)) throw DomainError("finite_diff_grad: step must be > 0");
  std::vector<double> x(z.begin(), z.end());
  std::vector<double> g(z.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double orig = x[j];
    x[j] = orig + step;
    const double up = f(x);
    x[j] = orig - step;
    const double down = f(x);
    x[j] = orig;
    if (!std::isfinite(up)) throw FiniteDiffError(j, up);
    if (!std::isfinite(down)) throw FiniteDiffError(j, down);
    g[j] = (up - down) / (2.0 * step);
  }
  return g;
}

double gradient_rel_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0;
  double scale = 1.0;
  for (std::size_t j = 0; j < numeric.size(); ++j) {
    diff = std::max(diff, std::abs(analytic[j] - numeric[j]));
    scale = std::max(scale, std::abs(numeric[j]));
  }
  return diff / scale;
}

std::string GradCheckReport::csv_header() {
  return "loss,C,samples,max_rel_err,mean_rel_err,worst_y,skipped_kinks,status";
}

std::string GradCheckReport::csv_row() const {
  std::ostringstream os;
  os << loss_name << ',' << num_classes << ',' << samples << ',' << fmt17(max_rel_err) << ','
     << fmt17(mean_rel_err) << ',' << worst_y << ',' << skipped_kinks << ','
     << (passed(1e-4) ? "pass" : "fail");
  return os.str();
}

std::string GradCheckReport::text() const {
  std::ostringstream os;
  os << "loss " << loss_name << " (C=" << num_classes << ")\n"
     << "  samples        " << samples << "\n"
     << "  skipped kinks  " << skipped_kinks << "\n"
     << "  max rel err    " << fmt17(max_rel_err) << "\n"
     << "  mean rel err   " << fmt17(mean_rel_err) << "\n"
     << "  worst case     y=" << worst_y << " z=[";
  for (std::size_t j = 0; j < worst_z.size(); ++j) os << (j ? "," : "") << fmt17(worst_z[j]);
  os << "]\n";
  return os.str();
}

GradientUnderTest gradient_under_test(const Loss& loss) {
  return {loss.name(),
          [loss](const Logits& z, ClassIndex y, const LossConfig& cfg) { return loss.evaluate(z, y, cfg); },
          [loss](const Logits& z, ClassIndex y, const LossConfig& cfg) { return loss.kinks(z, y, cfg); }};
}

GradCheckReport check_gradient(const GradientUnderTest& subject, int num_classes, int n_samples,
                               std::uint64_t seed, const GradCheckOptions& options) {
  if (num_classes < 2) throw DomainError("gradcheck: C must be >= 2");
  if (n_samples < 1) throw DomainError("gradcheck: need at least one sample");
  const LossConfig& cfg = options.loss_config;
  cfg.validate();

  Rng rng(seed);
  GradCheckReport report;
  report.loss_name = subject.name;
  report.num_classes = num_classes;
  const std::size_t c = static_cast<std::size_t>(num_classes);
  const long max_draws = 1000L * n_samples;
  double err_sum = 0.0;

  for (long draw = 0; report.samples < n_samples; ++draw) {
    if (draw >= max_draws) {
      throw std::runtime_error("gradcheck: too many kink draws for " + subject.name);
    }
    std::vector<double> zv(c);
    for (double& v : zv) v = options.logit_scale * rng.normal();
    const ClassIndex y(static_cast<int>(rng.below(c)) + 1);
    const Logits z(zv);

    // Skip unless every probe point sits on the same smooth branch.
    const KinkProbe centre = subject.kinks(z, y, cfg);
    bool kinked = centre.distance < options.kink_margin;
    for (std::size_t j = 0; j < c && !kinked; ++j) {
      for (double dir : {1.0, -1.0}) {
        std::vector<double> probe = zv;
        probe[j] += dir * options.step;
        if (subject.kinks(Logits(probe), y, cfg).signs != centre.signs) kinked = true;
      }
    }
    if (kinked) {
      ++report.skipped_kinks;
      continue;
    }

    const LossEval analytic = subject.evaluate(z, y, cfg);
    const auto numeric = finite_diff_grad(
        [&](std::span<const double> x) {
          return subject.evaluate(Logits(std::vector<double>(x.begin(), x.end())), y, cfg).value;
        },
        zv, options.step);
    const double err = gradient_rel_error(analytic.grad_z, numeric);
    err_sum += err;
    ++report.samples;
    if (report.samples == 1 || err > report.max_rel_err) {
      report.max_rel_err = err;
      report.worst_z = zv;
      report.worst_y = y.value();
    }
  }
  report.mean_rel_err = err_sum / report.samples;
  return report;
}

GradCheckReport check_loss(std::string_view loss_name, int num_classes, int n_samples, std::uint64_t seed,
                           const GradCheckOptions& options) {
  return check_gradient(gradient_under_test(Loss::parse(loss_name)), num_classes, n_samples, seed, options);
}

}  // namespace ordl
