#pragma once

// Model checkpoint file: one JSON header line, then one CSV line per tensor.
//
//   {"format":"ordl-checkpoint","version":1,"activation":"relu",
//    "layer_sizes":[16,64,64,20],"config_hash":"...", ...}
//   W0,<fan_out*fan_in values, row-major>
//   b0,<fan_out values>
//   W1,...
//
// Values are written with 17 significant digits so loading is exact.

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "ordl/trainer.hpp"

namespace ordl {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  nlohmann::json header;
};

void write_checkpoint(std::ostream& out, const ModelParams& params, const nlohmann::json& extra = {});
void write_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                      const nlohmann::json& extra = {});
Checkpoint read_checkpoint(std::istream& in);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace ordl
