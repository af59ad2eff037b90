#include "ordl/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ordl {

namespace {

void write_values(std::ostream& out, const std::string& tag, const Eigen::MatrixXd& m) {
  out << tag;
  char buf[40];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", m(r, c));
      out << buf;
    }
  }
  out << '\n';
}

std::vector<double> read_values(std::istream& in, const std::string& tag, std::size_t expected) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("checkpoint: missing tensor " + tag);
  std::istringstream ls(line);
  std::string cell;
  std::getline(ls, cell, ',');
  if (cell != tag) throw DomainError("checkpoint: expected tensor " + tag + ", found " + cell);
  std::vector<double> v;
  v.reserve(expected);
  while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
  if (v.size() != expected) {
    throw DomainError("checkpoint: tensor " + tag + " has " + std::to_string(v.size()) + " values, expected " +
                      std::to_string(expected));
  }
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& params, const nlohmann::json& extra) {
  nlohmann::json header = extra.is_object() ? extra : nlohmann::json::object();
  header["format"] = "ordl-checkpoint";
  header["version"] = kCheckpointVersion;
  header["activation"] = to_string(params.activation);
  header["layer_sizes"] = params.layer_sizes();
  out << header.dump() << '\n';
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    write_values(out, "W" + std::to_string(l), params.weights[l]);
    write_values(out, "b" + std::to_string(l), params.biases[l]);
  }
}

void write_checkpoint(const std::filesystem::path& path, const ModelParams& params, const nlohmann::json& extra) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  write_checkpoint(out, params, extra);
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("checkpoint: empty file");
  Checkpoint ck;
  try {
    ck.header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (ck.header.value("format", "") != "ordl-checkpoint") throw DomainError("checkpoint: not an ordl checkpoint");
  if (ck.header.value("version", 0) != kCheckpointVersion) throw DomainError("checkpoint: unsupported version");
  const auto sizes = ck.header.at("layer_sizes").get<std::vector<int>>();
  ck.params = ModelParams::zeros(sizes, parse_activation(ck.header.at("activation").get<std::string>()));
  for (std::size_t l = 0; l < ck.params.weights.size(); ++l) {
    auto& w = ck.params.weights[l];
    auto& b = ck.params.biases[l];
    const auto wv = read_values(in, "W" + std::to_string(l), static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0, k = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = wv[static_cast<std::size_t>(k++)];
    }
    const auto bv = read_values(in, "b" + std::to_string(l), static_cast<std::size_t>(b.size()));
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = bv[static_cast<std::size_t>(r)];
  }
  return ck;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace ordl
