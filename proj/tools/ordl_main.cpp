#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "ordl/experiments.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Overrides {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int repeats = 0;
  std::string lambdas;
};

ordl::ExperimentConfig resolve(const Overrides& o, const CLI::App& cmd) {
  ordl::ExperimentConfig c = o.config.empty() ? ordl::ExperimentConfig{} : ordl::load_config(o.config);
  if (cmd.count("--out")) c.output_dir = o.out;
  if (cmd.count("--seed")) c.train.seed = o.seed;
  if (cmd.count("--repeats")) c.repeats = o.repeats;
  if (cmd.get_option_no_throw("--lambdas") && cmd.count("--lambdas")) c.lambdas = ordl::parse_number_list(o.lambdas);
  return c;
}

void add_run_options(CLI::App* cmd, Overrides& o, bool with_lambdas) {
  cmd->add_option("--config", o.config, "INI experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output directory (overrides experiment.output_dir)");
  cmd->add_option("--seed", o.seed, "first training seed (overrides train.seed)");
  cmd->add_option("--repeats", o.repeats, "number of seeds (overrides experiment.repeats)");
  if (with_lambdas) cmd->add_option("--lambdas", o.lambdas, "comma-separated lambda values");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ordinal label-distribution learning experiments"};
  app.require_subcommand(1);

  Overrides gen_o, train_o, compare_o, sweep_o;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset CSV");
  gen->add_option("--config", gen_o.config, "INI config; only [dataset] is used")->check(CLI::ExistingFile);
  gen->add_option("--out", gen_o.out, "dataset CSV path")->required();
  gen->add_option("--seed", gen_o.seed, "dataset seed (overrides dataset.seed)");

  auto* train = app.add_subcommand("train", "train and evaluate one model per seed");
  add_run_options(train, train_o, false);
  auto* compare = app.add_subcommand("compare", "run the loss-combination grid");
  add_run_options(compare, compare_o, false);
  auto* sweep = app.add_subcommand("sweep-lambda", "train unimodal_concentrated over a lambda grid");
  add_run_options(sweep, sweep_o, true);

  ordl::GradcheckArgs gc;
  std::string gc_losses, gc_classes, gc_out;
  auto* gradcheck = app.add_subcommand("gradcheck", "compare analytic loss gradients with finite differences");
  gradcheck->add_option("--losses", gc_losses, "comma-separated loss ids (default: all registered)");
  gradcheck->add_option("--classes", gc_classes, "comma-separated class counts (default: 3,5,10,101)");
  gradcheck->add_option("--samples", gc.samples, "kink-free samples per (loss, C)");
  gradcheck->add_option("--seed", gc.seed, "sampling seed");
  gradcheck->add_option("--tolerance", gc.tolerance, "maximum accepted relative error");
  gradcheck->add_option("--out", gc_out, "directory for gradcheck.csv");

  ordl::InspectArgs ins;
  std::string ins_ids, ins_checkpoint, ins_dataset, ins_out = "inspect";
  auto* inspect = app.add_subcommand("inspect", "dump predicted distributions for chosen samples");
  inspect->add_option("--checkpoint", ins_checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  inspect->add_option("--dataset", ins_dataset, "dataset CSV")->required()->check(CLI::ExistingFile);
  inspect->add_option("--ids", ins_ids, "comma-separated 0-based sample ids")->required();
  inspect->add_option("--out", ins_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ordl::kExitOk : ordl::kExitValidation;
  }

  try {
    if (gen->parsed()) {
      ordl::ExperimentConfig c = gen_o.config.empty() ? ordl::ExperimentConfig{} : ordl::load_config(gen_o.config);
      if (gen->count("--seed")) c.synthetic.seed = gen_o.seed;
      return ordl::cmd_gen_data(c, gen_o.out, std::cout);
    }
    if (train->parsed()) return ordl::cmd_train(resolve(train_o, *train), std::cout);
    if (compare->parsed()) return ordl::cmd_compare(resolve(compare_o, *compare), std::cout);
    if (sweep->parsed()) return ordl::cmd_sweep_lambda(resolve(sweep_o, *sweep), std::cout);
    if (gradcheck->parsed()) {
      if (!gc_losses.empty()) gc.losses = split_commas(gc_losses);
      if (!gc_classes.empty()) {
        gc.classes.clear();
        for (const auto& c : split_commas(gc_classes)) gc.classes.push_back(std::stoi(c));
      }
      if (!gc_out.empty()) gc.out_dir = gc_out;
      return ordl::cmd_gradcheck(gc, std::cout);
    }
    if (inspect->parsed()) {
      ins.checkpoint = ins_checkpoint;
      ins.dataset = ins_dataset;
      ins.out_dir = ins_out;
      for (const auto& id : split_commas(ins_ids)) ins.ids.push_back(std::stoll(id));
      return ordl::cmd_inspect(ins, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ordl::kExitValidation;
  }
  return ordl::kExitValidation;
}
