#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vip/nn/network.hpp"

namespace vip::nn {

/// A trained network plus what is needed to run it on raw features.
struct Checkpoint {
    std::string model_name;  ///< "lstm-60", "lstm-30", "ffnn"
    std::unique_ptr<Classifier> net;
    std::vector<double> feature_mean;
    std::vector<double> feature_std;
    std::uint64_t seed = 0;
    std::string train_config_hash;
    nlohmann::json extra = nlohmann::json::object();  ///< free-form metadata (epoch, val accuracy, ...)
};

/// Writes `<dir>/header.json` and `<dir>/params.bin` (little-endian f64 in
/// the network's documented flat order). The header carries the dimensions
/// and an FNV-1a checksum of the blob.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);

/// Throws CorruptCheckpoint on checksum/size problems and DimensionMismatch
/// when `expected_input_dim` is non-zero and differs from the header.
Checkpoint load_checkpoint(const std::filesystem::path& dir, std::size_t expected_input_dim = 0);

NetSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const NetSpec& spec);

}  // namespace vip::nn
