#include "dexgrasp/nn/checkpoint.hpp"

#include "dexgrasp/errors.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace dexgrasp::nn {

namespace {

constexpr const char* kFormatTag = "dexgrasp-checkpoint";
constexpr int kVersion = 1;

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xFFu) << (8 * (7 - i));
    return out;
  }
}

}  // namespace

void Checkpoint::add(std::string name, Tensor t) {
  if (contains(name)) throw ConfigError(fmt::format("duplicate checkpoint tensor '{}'", name));
  t.drop_grad();
  tensors.emplace_back(std::move(name), std::move(t));
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return true;
  }
  return false;
}

const Tensor& Checkpoint::at(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw FormatError(fmt::format("checkpoint has no tensor '{}'", name));
}

std::vector<std::string> Checkpoint::names() const {
  std::vector<std::string> out;
  for (const auto& [n, t] : tensors) out.push_back(n);
  return out;
}

void Checkpoint::add_network(const std::string& name, const Mlp& net, bool discardable) {
  meta["networks"][name] = {{"sizes", net.sizes()},
                            {"hidden_activation", to_string(net.hidden_activation())},
                            {"output_activation", to_string(net.output_activation())},
                            {"discardable", discardable}};
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    add(fmt::format("{}.{}.weight", name, i), net.layers()[i].weight);
    add(fmt::format("{}.{}.bias", name, i), net.layers()[i].bias);
  }
}

bool Checkpoint::has_network(const std::string& name) const {
  return meta.contains("networks") && meta["networks"].contains(name);
}

Mlp Checkpoint::network(const std::string& name) const {
  if (!has_network(name)) throw FormatError(fmt::format("checkpoint has no network '{}'", name));
  const auto& info = meta["networks"][name];
  std::mt19937_64 unused(0);
  Mlp net(info["sizes"].get<std::vector<std::size_t>>(),
          activation_from_string(info["hidden_activation"].get<std::string>()),
          activation_from_string(info["output_activation"].get<std::string>()), unused);
  restore_network(name, net);
  return net;
}

void Checkpoint::restore_network(const std::string& name, Mlp& net) const {
  for (const auto& p : net.parameters(name)) {
    const Tensor& stored = at(p.name);
    if (stored.shape() != p.tensor->shape()) {
      throw DimensionError(fmt::format("checkpoint tensor {} has shape {}, network expects {}",
                                       p.name, shape_string(stored.shape()),
                                       shape_string(p.tensor->shape())));
    }
    std::copy(stored.data().begin(), stored.data().end(), p.tensor->data().begin());
  }
}

void Checkpoint::add_adam(const std::string& name, const AdamState& state) {
  meta["optimizers"][name] = {{"step_count", state.step_count},
                              {"learning_rate", state.config.learning_rate},
                              {"beta1", state.config.beta1},
                              {"beta2", state.config.beta2},
                              {"epsilon", state.config.epsilon},
                              {"slots", state.first_moment.size()}};
  for (std::size_t i = 0; i < state.first_moment.size(); ++i) {
    const auto n = state.first_moment[i].size();
    add(fmt::format("adam.{}.{}.m", name, i), Tensor({n}, state.first_moment[i]));
    add(fmt::format("adam.{}.{}.v", name, i), Tensor({n}, state.second_moment[i]));
  }
}

bool Checkpoint::has_adam(const std::string& name) const {
  return meta.contains("optimizers") && meta["optimizers"].contains(name);
}

AdamState Checkpoint::adam(const std::string& name) const {
  if (!has_adam(name)) throw FormatError(fmt::format("checkpoint has no optimizer '{}'", name));
  const auto& info = meta["optimizers"][name];
  AdamState s;
  s.config.learning_rate = info["learning_rate"].get<double>();
  s.config.beta1 = info["beta1"].get<double>();
  s.config.beta2 = info["beta2"].get<double>();
  s.config.epsilon = info["epsilon"].get<double>();
  s.step_count = info["step_count"].get<std::int64_t>();
  const auto slots = info["slots"].get<std::size_t>();
  for (std::size_t i = 0; i < slots; ++i) {
    auto m = at(fmt::format("adam.{}.{}.m", name, i)).data();
    auto v = at(fmt::format("adam.{}.{}.v", name, i)).data();
    s.first_moment.emplace_back(m.begin(), m.end());
    s.second_moment.emplace_back(v.begin(), v.end());
  }
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format"] = kFormatTag;
  header["version"] = kVersion;
  header["meta"] = ckpt.meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, t] : ckpt.tensors) {
    header["tensors"].push_back({{"name", name}, {"shape", t.shape()}});
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(fmt::format("cannot write checkpoint {}", path.string()));
  out << header.dump() << '\n';
  for (const auto& [name, t] : ckpt.tensors) {
    for (double v : t.data()) {
      const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
  if (!out) throw FormatError(fmt::format("failed writing checkpoint {}", path.string()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(fmt::format("cannot open checkpoint {}", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(fmt::format("{}: missing header", path.string()));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("{}: bad header: {}", path.string(), e.what()));
  }
  if (header.value("format", "") != kFormatTag) {
    throw FormatError(fmt::format("{}: not a checkpoint file", path.string()));
  }
  if (header.value("version", 0) != kVersion) {
    throw FormatError(fmt::format("{}: unsupported checkpoint version {}", path.string(),
                                  header.value("version", 0)));
  }
  Checkpoint ckpt;
  ckpt.meta = header["meta"];
  for (const auto& entry : header["tensors"]) {
    Shape shape = entry["shape"].get<Shape>();
    Tensor t(shape);
    for (double& v : t.data()) {
      std::uint64_t bits = 0;
      if (!in.read(reinterpret_cast<char*>(&bits), sizeof(bits))) {
        throw FormatError(fmt::format("{}: truncated in tensor '{}'", path.string(),
                                      entry["name"].get<std::string>()));
      }
      v = std::bit_cast<double>(to_little_endian(bits));
    }
    ckpt.tensors.emplace_back(entry["name"].get<std::string>(), std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(fmt::format("{}: trailing bytes after last tensor", path.string()));
  }
  return ckpt;
}

}  // namespace dexgrasp::nn
