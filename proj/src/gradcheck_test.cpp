#include <doctest.h>

#include <cmath>

#include "ordl/gradcheck.hpp"
#include "ordl/rng.hpp"

using namespace ordl;

TEST_CASE("finite differences of simple functions") {
  const std::vector<double> z{0.3, -1.2, 2.0};
  const auto g = finite_diff_grad([](std::span<const double> x) { return x[0]; }, z, 1e-5);
  CHECK(std::abs(g[0] - 1.0) < 1e-10);
  CHECK(std::abs(g[1]) < 1e-10);
  CHECK(std::abs(g[2]) < 1e-10);

  const std::vector<double> zero(4, 0.0);
  const auto s = finite_diff_grad(
      [](std::span<const double> x) {
        double t = 0;
        for (double v : x) t += v * v;
        return t;
      },
      zero, 1e-5);
  for (double v : s) CHECK(v == 0.0);
}

TEST_CASE("finite differences match the softmax cross-entropy gradient") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> z(6);
    for (auto& v : z) v = 3.0 * rng.normal();
    const ClassIndex y(1 + static_cast<int>(rng.below(6)));
    const auto numeric = finite_diff_grad(
        [&](std::span<const double> x) { return softmax_ce_loss(Logits({x.begin(), x.end()}), y).value; }, z, 1e-5);
    const auto p = softmax(Logits(z));
    for (int j = 0; j < 6; ++j) {
      CHECK(std::abs(numeric[j] - (p[j] - (j + 1 == y.value() ? 1.0 : 0.0))) < 1e-6);
    }
  }
}

TEST_CASE("non-finite evaluations name the coordinate") {
  const std::vector<double> z{0.0, 1.0};
  try {
    finite_diff_grad([](std::span<const double> x) { return x[1] > 1.0 ? NAN : 0.0; }, z, 1e-5);
    FAIL("expected FiniteDiffError");
  } catch (const FiniteDiffError& e) {
    CHECK(e.coordinate() == 1);
  }
  CHECK_THROWS_AS(finite_diff_grad([](std::span<const double>) { return 0.0; }, z, 0.0), DomainError);
}

TEST_CASE("relative error uses max(1, |numeric|)") {
  CHECK(gradient_rel_error(std::vector<double>{1.5, 0.0}, std::vector<double>{1.0, 0.0}) == 0.5);
  CHECK(gradient_rel_error(std::vector<double>{10.0}, std::vector<double>{20.0}) == 0.5);
}

TEST_CASE("registered losses pass at the reference class counts") {
  for (const auto& name : registered_loss_names()) {
    for (int c : {3, 5, 10, 101}) {
      const GradCheckReport r = check_loss(name, c, 100, 1);
      INFO(name << " C=" << c);
      CHECK(r.samples == 100);
      CHECK(r.max_rel_err >= r.mean_rel_err);
      CHECK(r.mean_rel_err >= 0.0);
      CHECK(r.passed(1e-4));
    }
  }
  CHECK(check_loss("softmax", 10, 200, 4).max_rel_err <= 1e-6);
}

TEST_CASE("reports are deterministic") {
  const auto a = check_loss("unimodal_concentrated", 10, 50, 9);
  const auto b = check_loss("unimodal_concentrated", 10, 50, 9);
  CHECK(a.csv_row() == b.csv_row());
  CHECK(a.text() == b.text());
  CHECK(GradCheckReport::csv_header() == "loss,C,samples,max_rel_err,mean_rel_err,worst_y,skipped_kinks,status");
}

TEST_CASE("kinks are skipped and counted") {
  GradCheckOptions opts;
  opts.kink_margin = 0.05;
  const GradCheckReport r = check_gradient(gradient_under_test(Loss::parse("unimodal")), 6, 20, 2, opts);
  CHECK(r.samples == 20);
  CHECK(r.skipped_kinks > 0);

  // Near-uniform logits sit on a tie for every draw.
  opts.logit_scale = 1e-12;
  opts.kink_margin = 1e-6;
  CHECK_THROWS(check_gradient(gradient_under_test(Loss::parse("unimodal")), 4, 3, 2, opts));
}

TEST_CASE("mean loss at the uniform stationary point") {
  const Logits z({0, 0, 0, 0, 0});
  const LossEval e = mean_loss(z, ClassIndex(3));
  const std::vector<double> zv(5, 0.0);
  const auto numeric = finite_diff_grad(
      [](std::span<const double> x) { return mean_loss(Logits({x.begin(), x.end()}), ClassIndex(3)).value; }, zv,
      1e-5);
  for (int j = 0; j < 5; ++j) {
    CHECK(std::abs(e.grad_z[j]) < 1e-15);
    CHECK(std::abs(numeric[j]) < 1e-10);
  }
}

TEST_CASE("a corrupted gradient is caught") {
  GradientUnderTest broken = gradient_under_test(Loss::parse("concentrated"));
  const auto exact = broken.evaluate;
  broken.evaluate = [exact](const Logits& z, ClassIndex y, const LossConfig& cfg) {
    LossEval e = exact(z, y, cfg);
    e.grad_z[0] *= 1.01;
    e.grad_z[0] += 1e-3;
    return e;
  };
  CHECK_FALSE(check_gradient(broken, 5, 20, 1).passed(1e-4));
}
