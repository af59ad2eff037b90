#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ordl/dist_core.hpp"
#include "ordl/rng.hpp"

using namespace ordl;

namespace {

ProbDist dist(std::vector<double> p) { return ProbDist(std::move(p)); }

double sum_of(const ProbDist& p) {
  return std::accumulate(p.values().begin(), p.values().end(), 0.0);
}

}  // namespace

TEST_CASE("class index and logits reject invalid values") {
  CHECK_THROWS_AS(ClassIndex(0), DomainError);
  CHECK_NOTHROW(ClassIndex(3).check_against(3));
  CHECK_THROWS_AS(ClassIndex(4).check_against(3), DomainError);
  CHECK(ClassIndex(4).offset() == 3);
  CHECK_THROWS_AS(Logits({1.0}), DomainError);
  CHECK_THROWS_AS(Logits({0.0, NAN}), DomainError);
  CHECK_THROWS_AS(Logits({0.0, INFINITY}), DomainError);
}

TEST_CASE("prob dist renormalises small drift and rejects the rest") {
  const ProbDist p = dist({0.25, 0.25, 0.25, 0.25 + 5e-7});
  CHECK(std::abs(sum_of(p) - 1.0) <= ProbDist::kSumTolerance);
  CHECK_THROWS_AS(dist({0.5, 0.5 + 1e-5}), DomainError);
  CHECK_THROWS_AS(dist({1.1, -0.1}), DomainError);
  CHECK_THROWS_AS(dist({NAN, 1.0}), DomainError);
}

TEST_CASE("softmax examples") {
  const ProbDist u = softmax(Logits({0, 0, 0, 0}));
  for (double x : u.values()) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));

  const ProbDist p = softmax(Logits({std::log(1.0), std::log(2.0), std::log(3.0), std::log(4.0)}));
  const double want[] = {0.1, 0.2, 0.3, 0.4};
  for (int j = 0; j < 4; ++j) CHECK(std::abs(p[j] - want[j]) < 1e-15);

  const ProbDist q = softmax(Logits({0.3 + 17.0, -1.2 + 17.0, 2.5 + 17.0}));
  const ProbDist r = softmax(Logits({0.3, -1.2, 2.5}));
  for (int j = 0; j < 3; ++j) CHECK(std::abs(q[j] - r[j]) < 1e-15);
}

TEST_CASE("softmax output is a valid distribution for large logits") {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const int c = 2 + static_cast<int>(rng.below(100));
    std::vector<double> z(c);
    for (auto& v : z) v = rng.uniform(-700.0, 700.0);
    const ProbDist p = softmax(Logits(z));
    CHECK(std::abs(sum_of(p) - 1.0) <= ProbDist::kSumTolerance);
    for (double x : p.values()) CHECK(x >= 0.0);
    const double m = expectation(p);
    CHECK(m >= 1.0 - 1e-12);
    CHECK(m <= c + 1e-12);
    const double v = variance(p);
    CHECK(v >= 0.0);
    CHECK(v <= (c - 1.0) * (c - 1.0) / 4.0 + 1e-9);
  }
}

TEST_CASE("log_sum_exp matches the direct formula") {
  const std::vector<double> z{0.1, -0.4, 1.3};
  double direct = 0.0;
  for (double x : z) direct += std::exp(x);
  CHECK(log_sum_exp(z) == doctest::Approx(std::log(direct)).epsilon(1e-14));
  CHECK(std::isfinite(log_sum_exp(std::vector<double>{1000.0, 999.0})));
}

TEST_CASE("expectation and variance examples") {
  std::vector<double> one_hot(10, 0.0);
  one_hot[6] = 1.0;
  CHECK(expectation(dist(one_hot)) == 7.0);
  CHECK(variance(dist(one_hot)) == 0.0);
  CHECK(expectation(dist({0.2, 0.2, 0.2, 0.2, 0.2})) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(expectation(dist({0.5, 0.0, 0.5})) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(variance(dist({0.5, 0.0, 0.5})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(variance(dist({1.0 / 3, 1.0 / 3, 1.0 / 3})) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("gaussian target") {
  SUBCASE("hand-evaluated weights") {
    const double w[] = {std::exp(-2.0), std::exp(-0.5), 1.0, std::exp(-0.5), std::exp(-2.0)};
    const double s = w[0] + w[1] + w[2] + w[3] + w[4];
    const ProbDist d = gaussian_target(ClassIndex(3), 1.0, 5);
    for (int j = 0; j < 5; ++j) CHECK(d[j] == doctest::Approx(w[j] / s).epsilon(1e-14));
  }
  SUBCASE("narrow width concentrates at the label") {
    CHECK(gaussian_target(ClassIndex(3), 0.05, 5)[2] > 0.999);
  }
  SUBCASE("label at the edge gives a nonincreasing target") {
    const ProbDist d = gaussian_target(ClassIndex(1), 1.5, 5);
    for (int j = 0; j + 1 < 5; ++j) CHECK(d[j] >= d[j + 1]);
  }
  SUBCASE("argmax is the label") {
    for (int c : {2, 3, 7, 20, 101}) {
      for (double sigma : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        for (int y = 1; y <= c; ++y) {
          const ProbDist d = gaussian_target(ClassIndex(y), sigma, c);
          const auto v = d.values();
          const auto arg = std::max_element(v.begin(), v.end()) - v.begin();
          CHECK(arg == y - 1);
        }
      }
    }
  }
  SUBCASE("symmetric where the support allows") {
    const ProbDist d = gaussian_target(ClassIndex(5), 1.3, 9);
    for (int k = 1; k <= 4; ++k) CHECK(d[4 - k] == doctest::Approx(d[4 + k]).epsilon(1e-15));
  }
  CHECK_THROWS_AS(gaussian_target(ClassIndex(2), 0.0, 5), DomainError);
  CHECK_THROWS_AS(gaussian_target(ClassIndex(2), -1.0, 5), DomainError);
  CHECK_THROWS_AS(gaussian_target(ClassIndex(6), 1.0, 5), DomainError);
}

TEST_CASE("is_unimodal examples") {
  CHECK(is_unimodal(dist({0.1, 0.4, 0.3, 0.2}), ClassIndex(2)));
  CHECK_FALSE(is_unimodal(dist({0.4, 0.1, 0.3, 0.2}), ClassIndex(2)));
  for (int y = 1; y <= 4; ++y) CHECK(is_unimodal(dist({0.25, 0.25, 0.25, 0.25}), ClassIndex(y)));
  CHECK(is_unimodal(dist({0.0, 0.0, 1.0, 0.0}), ClassIndex(3)));
  CHECK_FALSE(is_unimodal(dist({0.0, 0.0, 1.0, 0.0}), ClassIndex(2)));
}

TEST_CASE("softmax_backward is the Jacobian-vector product") {
  const std::vector<double> z{0.2, -0.7, 1.1, 0.05};
  const ProbDist p = softmax(Logits(z));
  const std::vector<double> g{0.3, -1.0, 2.0, 0.5};
  const auto got = softmax_backward(p.values(), g);
  for (std::size_t k = 0; k < z.size(); ++k) {
    double want = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) want += g[j] * p[j] * ((j == k ? 1.0 : 0.0) - p[k]);
    CHECK(got[k] == doctest::Approx(want).epsilon(1e-14));
  }
}
