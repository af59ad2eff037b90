#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ordl/experiments.hpp"

namespace fs = std::filesystem;
using namespace ordl;

namespace {

const fs::path kWork = fs::path(ORDL_TEST_WORKDIR) / "cli";

int run(const std::string& args) {
  const std::string cmd = std::string(ORDL_BINARY) + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> rows_of(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

fs::path write_config(const std::string& name, const std::string& body) {
  fs::create_directories(kWork);
  const fs::path p = kWork / (name + ".ini");
  std::ofstream(p) << body;
  return p;
}

std::string small_config(const fs::path& out, const std::string& loss = "softmax+concentrated",
                         const std::string& experiment_extra = "") {
  return "[dataset]\nn = 400\n[train]\nloss = " + loss + "\nmax_steps = 600\nlr = 0.003\ntrace_every = 100\n" +
         "[experiment]\noutput_dir = " + out.string() + "\n" + experiment_extra;
}

}  // namespace

TEST_CASE("gen-data writes a reproducible dataset") {
  const fs::path cfg = write_config("gen", "[dataset]\nn = 300\nclasses = 6\n");
  REQUIRE(run("gen-data --config " + cfg.string() + " --out " + (kWork / "a.csv").string()) == 0);
  REQUIRE(run("gen-data --config " + cfg.string() + " --out " + (kWork / "b.csv").string()) == 0);
  CHECK(slurp(kWork / "a.csv") == slurp(kWork / "b.csv"));
  CHECK(rows_of(kWork / "a.csv").size() == 300);
  CHECK(fs::exists(kWork / "a.csv.manifest.json"));
  REQUIRE(run("gen-data --config " + cfg.string() + " --seed 9 --out " + (kWork / "c.csv").string()) == 0);
  CHECK(slurp(kWork / "a.csv") != slurp(kWork / "c.csv"));

  const fs::path bad = write_config("gen_bad", "[dataset]\nnoise_low = 0.3\nnoise_high = 0.1\n");
  CHECK(run("gen-data --config " + bad.string() + " --out " + (kWork / "d.csv").string()) == 1);
  CHECK_FALSE(fs::exists(kWork / "d.csv"));
}

TEST_CASE("train with repeats is reproducible") {
  const fs::path out1 = kWork / "train1", out2 = kWork / "train2";
  const fs::path c1 = write_config("train1", small_config(out1, "softmax+concentrated", "repeats = 3\n"));
  const fs::path c2 = write_config("train2", small_config(out2, "softmax+concentrated", "repeats = 3\n"));
  REQUIRE(run("train --config " + c1.string()) == 0);
  REQUIRE(run("train --config " + c2.string()) == 0);
  for (int s : {1, 2, 3}) {
    const fs::path d = "seed_" + std::to_string(s);
    for (const char* f : {"checkpoint.txt", "trace.csv", "eval.csv", "per_label_std.csv", "manifest.json"}) {
      INFO((d / f).string());
      CHECK(fs::exists(out1 / d / f));
    }
    CHECK(slurp(out1 / d / "trace.csv") == slurp(out2 / d / "trace.csv"));
    CHECK(slurp(out1 / d / "eval.csv") == slurp(out2 / d / "eval.csv"));
  }
  CHECK(slurp(out1 / "aggregate.csv") == slurp(out2 / "aggregate.csv"));
  const auto agg = rows_of(out1 / "aggregate.csv");
  REQUIRE(agg.size() == 3);
  for (const auto& r : agg) CHECK(r[2] == "ok");
  CHECK(slurp(out1 / "manifest.json").find(config_hash(load_config(c1))) != std::string::npos);

  const fs::path again = kWork / "train_cli_override";
  REQUIRE(run("train --config " + c1.string() + " --repeats 1 --seed 7 --out " + again.string()) == 0);
  CHECK(fs::exists(again / "seed_7" / "trace.csv"));
}

TEST_CASE("unimodal-only training is reported degraded") {
  const fs::path out = kWork / "uni";
  const fs::path cfg =
      write_config("uni", small_config(out, "unimodal"));
  REQUIRE(run("train --config " + cfg.string()) == 0);
  CHECK(rows_of(out / "aggregate.csv")[0][2] == "degraded");
}

TEST_CASE("divergence sets the train exit code") {
  const fs::path out = kWork / "div";
  const fs::path cfg = write_config(
      "div", "[dataset]\nn = 400\n[train]\nloss = mean+variance\noptimizer = sgd_momentum\nlr = 1e300\n"
             "[experiment]\noutput_dir = " + out.string() + "\n");
  CHECK(run("train --config " + cfg.string()) == 2);
  CHECK(rows_of(out / "aggregate.csv")[0][2] == "diverged");
  CHECK(rows_of(out / "aggregate.csv")[0][1] == "nan");
}

TEST_CASE("invalid invocations exit with 1") {
  CHECK(run("train --config /no/such.ini") == 1);
  CHECK(run("train --config " + write_config("unknown", "[train]\nspeed = 3\n").string()) == 1);
  CHECK(run("nonsense") == 1);
  CHECK(run("gen-data") == 1);
  CHECK(run("--help") == 0);
}

TEST_CASE("inspect reports predicted distributions") {
  const fs::path out = kWork / "insp_train";
  const fs::path cfg = write_config("insp", small_config(out));
  REQUIRE(run("train --config " + cfg.string()) == 0);
  REQUIRE(run("gen-data --config " + cfg.string() + " --out " + (kWork / "insp.csv").string()) == 0);
  const fs::path dir = kWork / "insp_out";
  REQUIRE(run("inspect --checkpoint " + (out / "seed_1" / "checkpoint.txt").string() + " --dataset " +
              (kWork / "insp.csv").string() + " --ids 0,5,399 --out " + dir.string()) == 0);
  const auto summary = rows_of(dir / "summary.csv");
  REQUIRE(summary.size() == 3);
  for (const auto& row : summary) {
    const auto dist = rows_of(dir / ("sample_" + row[0] + ".csv"));
    REQUIRE(dist.size() == 20);
    double total = 0.0, mean = 0.0;
    for (const auto& d : dist) {
      total += std::stod(d[1]);
      mean += std::stod(d[0]) * std::stod(d[1]);
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);
    CHECK(std::abs(mean - std::stod(row[2])) <= 1e-9);
  }
  CHECK(run("inspect --checkpoint " + (out / "seed_1" / "checkpoint.txt").string() + " --dataset " +
            (kWork / "insp.csv").string() + " --ids 400 --out " + dir.string()) == 1);
}

TEST_CASE("compare and sweep produce one row per run") {
  const fs::path out = kWork / "grid";
  const fs::path cfg = write_config(
      "grid", "[dataset]\nn = 300\n[train]\nmax_steps = 40\n[experiment]\nrepeats = 2\noutput_dir = " +
                  out.string() + "\n[compare]\ncombinations = kl, unimodal+concentrated, concentrated\n");
  REQUIRE(run("compare --config " + cfg.string()) == 0);
  CHECK(rows_of(out / "compare.csv").size() == 6);
  CHECK(rows_of(out / "compare_summary.csv").size() == 3);
  REQUIRE(run("sweep-lambda --config " + cfg.string()) == 0);
  CHECK(rows_of(out / "sweep.csv").size() == 12);
  REQUIRE(run("sweep-lambda --config " + cfg.string() + " --lambdas 1,2 --out " + (kWork / "grid2").string()) == 0);
  CHECK(rows_of(kWork / "grid2" / "sweep.csv").size() == 4);
}

TEST_CASE("gradcheck passes for the shipped losses and catches a corrupted one") {
  CHECK(run("gradcheck --classes 3,10 --samples 20 --out " + (kWork / "gc").string()) == 0);
  CHECK(rows_of(kWork / "gc" / "gradcheck.csv").size() == 2 * registered_loss_names().size());

  GradcheckArgs args;
  args.losses = {"concentrated"};
  args.classes = {5};
  args.samples = 20;
  GradientRegistry corrupted = [](std::string_view name) {
    GradientUnderTest g = default_gradient_registry()(name);
    const auto exact = g.evaluate;
    g.evaluate = [exact](const Logits& z, ClassIndex y, const LossConfig& cfg) {
      LossEval e = exact(z, y, cfg);
      e.grad_z[0] *= 1.01;
      e.grad_z[0] += 1e-3;
      return e;
    };
    return g;
  };
  std::ostringstream log;
  CHECK(cmd_gradcheck(args, log, corrupted) == kExitValidation);
  std::ostringstream ok_log;
  CHECK(cmd_gradcheck(args, ok_log) == kExitOk);
}
