#include <doctest.h>

#include <sstream>

#include "ordl/checkpoint.hpp"

using namespace ordl;

TEST_CASE("checkpoint round-trip is exact") {
  Rng rng(21);
  const std::vector<int> sizes{5, 7, 3, 4};
  ModelParams p = ModelParams::glorot_uniform(sizes, Activation::tanh, rng);
  p.biases[1](2) = 1.0 / 3.0;
  p.biases[2](0) = -2.5e-300;
  std::stringstream buf;
  write_checkpoint(buf, p, {{"seed", 9}});
  const Checkpoint ck = read_checkpoint(buf);
  CHECK(ck.header["seed"] == 9);
  CHECK(ck.header["format"] == "ordl-checkpoint");
  CHECK(ck.params.activation == Activation::tanh);
  CHECK(ck.params.layer_sizes() == sizes);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    CHECK(ck.params.weights[l] == p.weights[l]);
    CHECK(ck.params.biases[l] == p.biases[l]);
  }
}

TEST_CASE("corrupt checkpoints are rejected") {
  Rng rng(22);
  const std::vector<int> sizes{2, 3};
  const ModelParams p = ModelParams::glorot_uniform(sizes, Activation::relu, rng);
  std::stringstream buf;
  write_checkpoint(buf, p);
  const std::string good = buf.str();

  std::istringstream empty("");
  CHECK_THROWS_AS(read_checkpoint(empty), DomainError);
  std::istringstream not_json("hello\n");
  CHECK_THROWS_AS(read_checkpoint(not_json), DomainError);
  std::istringstream truncated(good.substr(0, good.rfind("b0")));
  CHECK_THROWS_AS(read_checkpoint(truncated), DomainError);
  std::string short_row = good;
  short_row.insert(short_row.find('\n', short_row.find("W0")), ",0.5");
  std::istringstream extra(short_row);
  CHECK_THROWS_AS(read_checkpoint(extra), DomainError);
  CHECK_THROWS_AS(read_checkpoint(std::filesystem::path("/no/such/checkpoint")), DomainError);
}
