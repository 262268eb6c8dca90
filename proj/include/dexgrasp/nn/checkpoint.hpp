#pragma once

#include "dexgrasp/nn/adam.hpp"
#include "dexgrasp/nn/mlp.hpp"
#include "dexgrasp/nn/tensor.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dexgrasp::nn {

/// Named tensors plus free-form JSON metadata.
///
/// On disk: one line of JSON (format tag, version, metadata, tensor names and
/// shapes), a '\n', then each tensor's values as raw little-endian float64 in
/// header order.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor>> tensors;

  void add(std::string name, Tensor t);
  bool contains(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
  std::vector<std::string> names() const;

  /// Stores the network under `name`; topology goes to meta["networks"][name].
  void add_network(const std::string& name, const Mlp& net, bool discardable = false);
  bool has_network(const std::string& name) const;
  Mlp network(const std::string& name) const;
  /// Copies stored values into an existing network of the same topology.
  void restore_network(const std::string& name, Mlp& net) const;

  void add_adam(const std::string& name, const AdamState& state);
  bool has_adam(const std::string& name) const;
  AdamState adam(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dexgrasp::nn
