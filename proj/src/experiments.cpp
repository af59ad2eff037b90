#include "ordl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ordl/checkpoint.hpp"

namespace ordl {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kSplitSalt = 0x9e3779b97f4a7c15ULL;

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  return format_number(x);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

void write_manifest_with_hash(const fs::path& dir, const std::string& hash, std::string_view command,
                              const std::vector<std::string>& files) {
  nlohmann::json m;
  m["command"] = command;
  m["config_hash"] = hash;
  m["files"] = files;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void echo_config(const fs::path& dir, const ExperimentConfig& config) {
  write_text(dir / "config.ini", canonical_text(config));
}

}  // namespace

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok:
      return "ok";
    case RunStatus::degraded:
      return "degraded";
    case RunStatus::diverged:
      return "diverged";
  }
  return "unknown";
}

Split split_indices(std::size_t n, double eval_fraction, std::uint64_t seed) {
  if (n < 2) throw DomainError("split: need at least 2 samples");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) throw DomainError("split: eval fraction must be in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  auto n_eval = static_cast<std::size_t>(std::llround(static_cast<double>(n) * eval_fraction));
  n_eval = std::clamp<std::size_t>(n_eval, 1, n - 1);
  Split s;
  s.eval.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_eval));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_eval), order.end());
  return s;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.num_classes = data.num_classes;
  out.samples.reserve(rows.size());
  for (std::size_t r : rows) out.samples.push_back(data.samples.at(r));
  return out;
}

Dataset load_dataset(const ExperimentConfig& config) {
  if (config.dataset_path) return read_dataset_csv(*config.dataset_path, config.synthetic.num_classes);
  return generate(config.synthetic);
}

RunOutcome run_once(const Dataset& data, const ExperimentConfig& config, const TrainConfig& train_cfg,
                    std::uint64_t seed) {
  const Split split = split_indices(data.size(), config.eval_split_fraction, seed ^ kSplitSalt);
  const Dataset train_set = subset(data, split.train);
  const Dataset eval_set = subset(data, split.eval);

  TrainConfig tc = train_cfg;
  tc.seed = seed;
  RunOutcome out;
  out.seed = seed;
  out.result = train(train_set, tc);

  double label_sum = 0.0;
  for (const auto& s : train_set.samples) label_sum += s.label.value();
  const double constant = label_sum / static_cast<double>(train_set.size());
  std::vector<double> ys, constant_pred(eval_set.size(), constant);
  std::vector<ClassIndex> labels;
  std::vector<double> ambiguities;
  for (const auto& s : eval_set.samples) {
    ys.push_back(s.label.value());
    labels.push_back(s.label);
    ambiguities.push_back(s.ambiguity);
  }
  out.constant_mae = mae(constant_pred, ys);

  auto mark_diverged = [&] {
    out.status = RunStatus::diverged;
    out.report = EvalReport{};
    out.report.n = static_cast<int>(eval_set.size());
    out.report.mae = kNaN;
    out.report.unimodality_rate = kNaN;
    out.report.ambiguity_spearman = kNaN;
  };
  if (out.result.trace.status == TrainStatus::diverged) {
    mark_diverged();
    return out;
  }
  try {
    const Prediction pred = predict(out.result.params, feature_matrix(eval_set));
    out.report = evaluate(pred.dists, labels, ambiguities, config.min_label_count);
  } catch (const DomainError&) {
    mark_diverged();
    return out;
  }
  out.status = out.report.mae >= config.degraded_fraction * out.constant_mae ? RunStatus::degraded : RunStatus::ok;
  return out;
}

std::vector<std::uint64_t> repeat_seeds(const ExperimentConfig& config) {
  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < config.repeats; ++r) seeds.push_back(config.train.seed + static_cast<std::uint64_t>(r));
  return seeds;
}

void write_manifest(const fs::path& dir, const ExperimentConfig& config, std::string_view command,
                    const std::vector<std::string>& files) {
  write_manifest_with_hash(dir, config_hash(config), command, files);
}

int cmd_gen_data(const ExperimentConfig& config, const fs::path& out_path, std::ostream& log) {
  config.synthetic.validate();
  const Dataset data = generate(config.synthetic);
  {
    auto out = open_out(out_path);
    write_dataset_csv(data, out);
  }
  nlohmann::json m;
  m["command"] = "gen-data";
  m["config_hash"] = config_hash(config);
  m["files"] = {out_path.filename().string()};
  write_text(fs::path(out_path.string() + ".manifest.json"), m.dump(2) + "\n");

  int high = 0;
  for (const auto& s : data.samples) high += s.ambiguity == config.synthetic.noise_high ? 1 : 0;
  log << "wrote " << out_path.string() << ": n=" << data.size() << " C=" << data.num_classes
      << " feature_dim=" << data.feature_dim() << " low_noise=" << data.size() - static_cast<std::size_t>(high)
      << " high_noise=" << high << '\n';
  return kExitOk;
}

int cmd_train(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const Dataset data = load_dataset(config);
  const fs::path root = config.output_dir;
  const std::string hash = config_hash(config);
  std::ostringstream aggregate;
  aggregate << "seed,mae,status\n";
  bool any_diverged = false;
  std::vector<std::string> files{"config.ini", "aggregate.csv"};

  for (std::uint64_t seed : repeat_seeds(config)) {
    const RunOutcome run = run_once(data, config, config.train, seed);
    const fs::path dir = root / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);

    nlohmann::json extra;
    extra["config_hash"] = hash;
    extra["seed"] = seed;
    extra["loss"] = config.train.loss;
    extra["status"] = to_string(run.status);
    write_checkpoint(dir / "checkpoint.txt", run.result.params, extra);
    {
      auto out = open_out(dir / "trace.csv");
      run.result.trace.write_csv(out);
    }
    {
      auto out = open_out(dir / "eval.csv");
      out << EvalReport::csv_header() << ",status\n" << run.report.csv_row() << ',' << to_string(run.status) << '\n';
    }
    {
      auto out = open_out(dir / "per_label_std.csv");
      run.report.write_per_label_csv(out);
    }
    ExperimentConfig echoed = config;
    echoed.train.seed = seed;
    echoed.repeats = 1;
    echo_config(dir, echoed);
    write_manifest_with_hash(dir, hash, "train",
                             {"checkpoint.txt", "trace.csv", "eval.csv", "per_label_std.csv", "config.ini"});

    aggregate << seed << ',' << num(run.report.mae) << ',' << to_string(run.status) << '\n';
    any_diverged = any_diverged || run.status == RunStatus::diverged;
    log << "train " << config.train.loss << " seed=" << seed << " mae=" << num(run.report.mae)
        << " unimodality=" << num(run.report.unimodality_rate) << " status=" << to_string(run.status) << '\n';
    files.push_back("seed_" + std::to_string(seed));
  }
  write_text(root / "aggregate.csv", aggregate.str());
  echo_config(root, config);
  write_manifest_with_hash(root, hash, "train", files);
  return any_diverged ? kExitDiverged : kExitOk;
}

int cmd_compare(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const Dataset data = load_dataset(config);
  const fs::path root = config.output_dir;

  std::ostringstream grid, per_label, summary;
  grid << "combination,seed,mae,unimodality_rate,ambiguity_spearman,status\n";
  per_label << "combination,seed,label,mean_std,count\n";
  summary << "combination,runs,diverged,degraded,mean_mae,mean_unimodality_rate,mean_ambiguity_spearman,"
             "mean_std_spread\n";

  for (const auto& combination : config.combinations) {
    TrainConfig tc = config.train;
    tc.loss = combination;
    std::vector<double> maes, rates, spearmans, spreads;
    int diverged = 0, degraded = 0;
    for (std::uint64_t seed : repeat_seeds(config)) {
      const RunOutcome run = run_once(data, config, tc, seed);
      const EvalReport& r = run.report;
      grid << combination << ',' << seed << ',' << num(r.mae) << ',' << num(r.unimodality_rate) << ','
           << num(r.ambiguity_spearman) << ',' << to_string(run.status) << '\n';
      for (const auto& [label, e] : r.per_label_std) {
        per_label << combination << ',' << seed << ',' << label << ',' << num(e.mean_std) << ',' << e.count << '\n';
      }
      if (run.status == RunStatus::diverged) {
        ++diverged;
      } else {
        degraded += run.status == RunStatus::degraded ? 1 : 0;
        maes.push_back(r.mae);
        rates.push_back(r.unimodality_rate);
        if (!std::isnan(r.ambiguity_spearman)) spearmans.push_back(r.ambiguity_spearman);
        spreads.push_back(profile_spread(r.per_label_std));
      }
      log << "compare " << combination << " seed=" << seed << " mae=" << num(r.mae)
          << " unimodality=" << num(r.unimodality_rate) << " spearman=" << num(r.ambiguity_spearman)
          << " status=" << to_string(run.status) << '\n';
    }
    summary << combination << ',' << config.repeats << ',' << diverged << ',' << degraded << ',' << num(mean_of(maes))
            << ',' << num(mean_of(rates)) << ',' << num(mean_of(spearmans)) << ',' << num(mean_of(spreads)) << '\n';
  }
  write_text(root / "compare.csv", grid.str());
  write_text(root / "compare_per_label.csv", per_label.str());
  write_text(root / "compare_summary.csv", summary.str());
  echo_config(root, config);
  write_manifest(root, config, "compare",
                 {"compare.csv", "compare_per_label.csv", "compare_summary.csv", "config.ini"});
  return kExitOk;
}

int cmd_sweep_lambda(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const Dataset data = load_dataset(config);
  const fs::path root = config.output_dir;
  std::ostringstream sweep;
  sweep << "lambda,seed,mae,status\n";
  for (double lambda : config.lambdas) {
    TrainConfig tc = config.train;
    tc.loss = "unimodal_concentrated";
    tc.loss_config.lambda = lambda;
    for (std::uint64_t seed : repeat_seeds(config)) {
      const RunOutcome run = run_once(data, config, tc, seed);
      sweep << num(lambda) << ',' << seed << ',' << num(run.report.mae) << ',' << to_string(run.status) << '\n';
      log << "sweep lambda=" << num(lambda) << " seed=" << seed << " mae=" << num(run.report.mae)
          << " status=" << to_string(run.status) << '\n';
    }
  }
  write_text(root / "sweep.csv", sweep.str());
  echo_config(root, config);
  write_manifest(root, config, "sweep-lambda", {"sweep.csv", "config.ini"});
  return kExitOk;
}

GradientRegistry default_gradient_registry() {
  return [](std::string_view name) { return gradient_under_test(Loss::parse(name)); };
}

int cmd_gradcheck(const GradcheckArgs& args, std::ostream& log, const GradientRegistry& registry) {
  if (args.losses.empty()) throw DomainError("gradcheck: no losses given");
  if (args.classes.empty()) throw DomainError("gradcheck: no class counts given");
  if (args.samples < 1) throw DomainError("gradcheck: samples must be >= 1");
  std::vector<GradientUnderTest> subjects;
  for (const auto& name : args.losses) subjects.push_back(registry(name));

  std::ostringstream csv;
  csv << GradCheckReport::csv_header() << '\n';
  bool all_pass = true;
  for (const auto& subject : subjects) {
    for (int c : args.classes) {
      const GradCheckReport r = check_gradient(subject, c, args.samples, args.seed, args.options);
      csv << r.csv_row() << '\n';
      all_pass = all_pass && r.passed(args.tolerance);
    }
  }
  log << csv.str();
  if (args.out_dir) {
    write_text(*args.out_dir / "gradcheck.csv", csv.str());
    std::ostringstream key;
    key << "gradcheck";
    for (const auto& l : args.losses) key << ' ' << l;
    key << " |";
    for (int c : args.classes) key << ' ' << c;
    key << " | " << args.samples << ' ' << args.seed << ' ' << num(args.options.step) << ' '
        << num(args.options.kink_margin) << ' ' << num(args.options.logit_scale);
    write_manifest_with_hash(*args.out_dir, fnv1a_hex(key.str()), "gradcheck", {"gradcheck.csv"});
  }
  return all_pass ? kExitOk : kExitValidation;
}

int cmd_inspect(const InspectArgs& args, std::ostream& log) {
  if (args.ids.empty()) throw DomainError("inspect: no sample ids given");
  const Checkpoint ck = read_checkpoint(args.checkpoint);
  const Dataset data = read_dataset_csv(args.dataset, ck.params.num_classes());
  if (data.feature_dim() != ck.params.input_dim()) {
    throw DomainError("inspect: dataset has " + std::to_string(data.feature_dim()) +
                      " features, checkpoint expects " + std::to_string(ck.params.input_dim()));
  }
  std::vector<std::size_t> rows;
  for (long long id : args.ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= data.size()) {
      throw DomainError("inspect: unknown sample id " + std::to_string(id) + "; valid ids are 0.." +
                        std::to_string(data.size() - 1));
    }
    rows.push_back(static_cast<std::size_t>(id));
  }
  const Prediction pred = predict(ck.params, feature_matrix(data, rows));

  std::ostringstream summary;
  summary << "id,label,mean,variance,ambiguity\n";
  std::vector<std::string> files{"summary.csv"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& s = data.samples[rows[i]];
    const ProbDist& p = pred.dists[i];
    const std::string name = "sample_" + std::to_string(rows[i]) + ".csv";
    auto out = open_out(args.out_dir / name);
    out << "class_index,probability\n";
    for (std::size_t j = 0; j < p.size(); ++j) out << j + 1 << ',' << num(p[j]) << '\n';
    summary << rows[i] << ',' << s.label.value() << ',' << num(pred.mean[i]) << ',' << num(pred.variance[i]) << ','
            << num(s.ambiguity) << '\n';
    files.push_back(name);
    log << "sample " << rows[i] << ": label=" << s.label.value() << " mean=" << num(pred.mean[i])
        << " variance=" << num(pred.variance[i]) << '\n';
  }
  write_text(args.out_dir / "summary.csv", summary.str());
  write_manifest_with_hash(args.out_dir, ck.header.value("config_hash", std::string{}), "inspect", files);
  return kExitOk;
}

}  // namespace ordl
