#include "ordl/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ordl {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"dataset", {"classes", "n", "feature_dim", "noise_low", "noise_high", "high_noise_fraction", "seed", "path"}},
      {"loss", {"lambda", "lambda1", "lambda2", "sigma", "variance_floor"}},
      {"train",
       {"loss", "hidden_sizes", "activation", "optimizer", "lr", "momentum", "lr_decay_factor", "lr_decay_every",
        "batch_size", "max_steps", "seed", "grad_clip", "trace_every", "trace_subsample"}},
      {"experiment", {"eval_split_fraction", "output_dir", "repeats", "min_label_count", "degraded_fraction"}},
      {"compare", {"combinations"}},
      {"sweep", {"lambdas"}},
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    std::string item = trim(text.substr(start, end - start));
    if (item.empty()) {
      if (end == text.size() && out.empty()) break;
      throw DomainError("config: empty item in list '" + std::string(text) + "'");
    }
    out.push_back(std::move(item));
    start = end + 1;
  }
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || trim(value.substr(used)).size() != 0) {
    throw DomainError("config: " + key + " expects a number, got '" + value + "'");
  }
  return x;
}

long long to_integer(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || trim(value.substr(used)).size() != 0) {
    throw DomainError("config: " + key + " expects an integer, got '" + value + "'");
  }
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    if (!value.empty() && value.front() == '-') throw std::invalid_argument("negative");
    x = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw DomainError("config: " + key + " expects an unsigned integer, got '" + value + "'");
  }
  return x;
}

pt::ptree read_ini(std::string_view text) {
  std::istringstream in{std::string(text)};
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw DomainError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end() || body.empty()) {
      throw DomainError("config: unknown section or top-level key '" + section + "'");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw DomainError("config: unknown key '" + section + "." + key + "'");
    }
  }
  return tree;
}

// Applies the value of section.key, if present, through `set`.
template <typename F>
void with(const pt::ptree& tree, const std::string& section, const std::string& key, F&& set) {
  if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(section + "/" + key, '/'))) {
    set(section + "." + key, trim(*v));
  }
}

void apply_dataset(const pt::ptree& tree, SyntheticSpec& s, std::optional<std::filesystem::path>& path) {
  with(tree, "dataset", "classes", [&](const auto& k, const auto& v) { s.num_classes = static_cast<int>(to_integer(k, v)); });
  with(tree, "dataset", "n", [&](const auto& k, const auto& v) { s.n = static_cast<int>(to_integer(k, v)); });
  with(tree, "dataset", "feature_dim", [&](const auto& k, const auto& v) { s.feature_dim = static_cast<int>(to_integer(k, v)); });
  with(tree, "dataset", "noise_low", [&](const auto& k, const auto& v) { s.noise_low = to_double(k, v); });
  with(tree, "dataset", "noise_high", [&](const auto& k, const auto& v) { s.noise_high = to_double(k, v); });
  with(tree, "dataset", "high_noise_fraction", [&](const auto& k, const auto& v) { s.high_noise_fraction = to_double(k, v); });
  with(tree, "dataset", "seed", [&](const auto& k, const auto& v) { s.seed = to_u64(k, v); });
  with(tree, "dataset", "path", [&](const auto& k, const auto& v) {
    (void)k;
    if (!v.empty()) path = v;
  });
}

}  // namespace

std::vector<std::string> ExperimentConfig::default_combinations() {
  return {"softmax+concentrated",   "unimodal+concentrated", "softmax+mean_variance",
          "unimodal+mean_variance", "unimodal",              "concentrated",
          "kl",                     "dldl_v2"};
}

std::vector<double> ExperimentConfig::default_lambdas() { return {1e-1, 1e1, 1e2, 1e3, 2e3, 1e4}; }

void ExperimentConfig::validate() const {
  if (!dataset_path) synthetic.validate();
  if (dataset_path && !std::filesystem::exists(*dataset_path)) {
    throw DomainError("config: dataset.path does not exist: " + dataset_path->string());
  }
  if (dataset_path && synthetic.num_classes < 2) throw DomainError("config: dataset.classes must be >= 2");
  train.validate();
  if (!(eval_split_fraction > 0.0 && eval_split_fraction < 1.0)) {
    throw DomainError("config: experiment.eval_split_fraction must be in (0, 1)");
  }
  if (repeats < 1) throw DomainError("config: experiment.repeats must be >= 1");
  if (min_label_count < 1) throw DomainError("config: experiment.min_label_count must be >= 1");
  if (!(degraded_fraction > 0.0)) throw DomainError("config: experiment.degraded_fraction must be > 0");
  if (combinations.empty()) throw DomainError("config: compare.combinations is empty");
  for (const auto& c : combinations) Loss::parse(c);
  if (lambdas.empty()) throw DomainError("config: sweep.lambdas is empty");
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw DomainError("config: sweep.lambdas must be finite and >= 0");
  }
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_double("list", item));
  return out;
}

std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ExperimentConfig parse_config(std::string_view text) {
  const pt::ptree tree = read_ini(text);
  ExperimentConfig c;
  apply_dataset(tree, c.synthetic, c.dataset_path);

  LossConfig& l = c.train.loss_config;
  with(tree, "loss", "lambda", [&](const auto& k, const auto& v) { l.lambda = to_double(k, v); });
  with(tree, "loss", "lambda1", [&](const auto& k, const auto& v) { l.lambda1 = to_double(k, v); });
  with(tree, "loss", "lambda2", [&](const auto& k, const auto& v) { l.lambda2 = to_double(k, v); });
  with(tree, "loss", "sigma", [&](const auto& k, const auto& v) { l.sigma = to_double(k, v); });
  with(tree, "loss", "variance_floor", [&](const auto& k, const auto& v) { l.variance_floor = to_double(k, v); });

  TrainConfig& t = c.train;
  with(tree, "train", "loss", [&](const auto&, const auto& v) { t.loss = v; });
  with(tree, "train", "hidden_sizes", [&](const auto& k, const auto& v) {
    t.hidden_sizes.clear();
    for (const auto& item : split_list(v)) t.hidden_sizes.push_back(static_cast<int>(to_integer(k, item)));
  });
  with(tree, "train", "activation", [&](const auto&, const auto& v) { t.activation = parse_activation(v); });
  with(tree, "train", "optimizer", [&](const auto&, const auto& v) { t.optimizer = parse_optimizer(v); });
  with(tree, "train", "lr", [&](const auto& k, const auto& v) { t.lr = to_double(k, v); });
  with(tree, "train", "momentum", [&](const auto& k, const auto& v) { t.momentum = to_double(k, v); });
  with(tree, "train", "lr_decay_factor", [&](const auto& k, const auto& v) { t.lr_decay_factor = to_double(k, v); });
  with(tree, "train", "lr_decay_every", [&](const auto& k, const auto& v) { t.lr_decay_every = to_integer(k, v); });
  with(tree, "train", "batch_size", [&](const auto& k, const auto& v) { t.batch_size = static_cast<int>(to_integer(k, v)); });
  with(tree, "train", "max_steps", [&](const auto& k, const auto& v) { t.max_steps = to_integer(k, v); });
  with(tree, "train", "seed", [&](const auto& k, const auto& v) { t.seed = to_u64(k, v); });
  with(tree, "train", "grad_clip", [&](const auto& k, const auto& v) {
    if (v == "none" || v.empty()) {
      t.grad_clip.reset();
    } else {
      t.grad_clip = to_double(k, v);
    }
  });
  with(tree, "train", "trace_every", [&](const auto& k, const auto& v) { t.trace_every = to_integer(k, v); });
  with(tree, "train", "trace_subsample", [&](const auto& k, const auto& v) {
    t.trace_subsample = static_cast<int>(to_integer(k, v));
  });

  with(tree, "experiment", "eval_split_fraction", [&](const auto& k, const auto& v) { c.eval_split_fraction = to_double(k, v); });
  with(tree, "experiment", "output_dir", [&](const auto&, const auto& v) { c.output_dir = v; });
  with(tree, "experiment", "repeats", [&](const auto& k, const auto& v) { c.repeats = static_cast<int>(to_integer(k, v)); });
  with(tree, "experiment", "min_label_count", [&](const auto& k, const auto& v) {
    c.min_label_count = static_cast<int>(to_integer(k, v));
  });
  with(tree, "experiment", "degraded_fraction", [&](const auto& k, const auto& v) { c.degraded_fraction = to_double(k, v); });
  with(tree, "compare", "combinations", [&](const auto&, const auto& v) { c.combinations = split_list(v); });
  with(tree, "sweep", "lambdas", [&](const auto&, const auto& v) { c.lambdas = parse_number_list(v); });
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_text(const ExperimentConfig& c) {
  auto join_d = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
    return s;
  };
  std::ostringstream os;
  const auto& s = c.synthetic;
  os << "[dataset]\n"
     << "classes = " << s.num_classes << "\n"
     << "n = " << s.n << "\n"
     << "feature_dim = " << s.feature_dim << "\n"
     << "noise_low = " << format_number(s.noise_low) << "\n"
     << "noise_high = " << format_number(s.noise_high) << "\n"
     << "high_noise_fraction = " << format_number(s.high_noise_fraction) << "\n"
     << "seed = " << s.seed << "\n"
     << "path = " << (c.dataset_path ? c.dataset_path->generic_string() : "") << "\n\n";
  const auto& l = c.train.loss_config;
  os << "[loss]\n"
     << "lambda = " << format_number(l.lambda) << "\n"
     << "lambda1 = " << format_number(l.lambda1) << "\n"
     << "lambda2 = " << format_number(l.lambda2) << "\n"
     << "sigma = " << format_number(l.sigma) << "\n"
     << "variance_floor = " << format_number(l.variance_floor) << "\n\n";
  const auto& t = c.train;
  os << "[train]\n"
     << "loss = " << t.loss << "\n"
     << "hidden_sizes = ";
  for (std::size_t i = 0; i < t.hidden_sizes.size(); ++i) os << (i ? "," : "") << t.hidden_sizes[i];
  os << "\n"
     << "activation = " << to_string(t.activation) << "\n"
     << "optimizer = " << to_string(t.optimizer) << "\n"
     << "lr = " << format_number(t.lr) << "\n"
     << "momentum = " << format_number(t.momentum) << "\n"
     << "lr_decay_factor = " << format_number(t.lr_decay_factor) << "\n"
     << "lr_decay_every = " << t.lr_decay_every << "\n"
     << "batch_size = " << t.batch_size << "\n"
     << "max_steps = " << t.max_steps << "\n"
     << "seed = " << t.seed << "\n"
     << "grad_clip = " << (t.grad_clip ? format_number(*t.grad_clip) : "none") << "\n"
     << "trace_every = " << t.trace_every << "\n"
     << "trace_subsample = " << t.trace_subsample << "\n\n";
  os << "[experiment]\n"
     << "eval_split_fraction = " << format_number(c.eval_split_fraction) << "\n"
     << "output_dir = " << c.output_dir.generic_string() << "\n"
     << "repeats = " << c.repeats << "\n"
     << "min_label_count = " << c.min_label_count << "\n"
     << "degraded_fraction = " << format_number(c.degraded_fraction) << "\n\n";
  os << "[compare]\ncombinations = ";
  for (std::size_t i = 0; i < c.combinations.size(); ++i) os << (i ? "," : "") << c.combinations[i];
  os << "\n\n[sweep]\nlambdas = " << join_d(c.lambdas) << "\n";
  return os.str();
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ExperimentConfig& config) { return fnv1a_hex(canonical_text(config)); }

}  // namespace ordl
