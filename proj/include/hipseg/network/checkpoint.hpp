#pragma once

// Checkpoint file: "HSEGCKPT", u32 format version, u64 header length, a JSON
// header (network config, tensor names/sizes, free-form metadata), then every
// parameter and buffer as little-endian float32 in header order.

#include <cstdint>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "hipseg/network/unet.hpp"

namespace hipseg::nn {

inline constexpr char kCheckpointMagic[8] = {'H', 'S', 'E', 'G', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline nlohmann::json to_json(const NetworkConfig& c) {
  return {{"depth", c.depth}, {"base_width", c.base_width}, {"head", std::string(name_of(c.head))},
          {"input_channels", c.input_channels}};
}

inline NetworkConfig network_config_from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.depth = j.value("depth", c.depth);
  c.base_width = j.value("base_width", c.base_width);
  c.head = parse_head(j.value("head", std::string(name_of(c.head))));
  c.input_channels = j.value("input_channels", c.input_channels);
  require_valid(c);
  return c;
}

struct Checkpoint {
  NetworkConfig config;
  NetworkState<float> state;
  nlohmann::json metadata = nlohmann::json::object();  // epoch, best validation Dice, ...
};

template <typename T>
Checkpoint make_checkpoint(Network<T>& net, nlohmann::json metadata = nlohmann::json::object()) {
  Checkpoint ck;
  ck.config = net.config();
  const NetworkState<T> s = net.state();
  for (const auto& p : s.params) ck.state.params.emplace_back(p.begin(), p.end());
  for (const auto& b : s.buffers) ck.state.buffers.emplace_back(b.begin(), b.end());
  ck.metadata = std::move(metadata);
  return ck;
}

inline Network<float> load_network(const Checkpoint& ck) {
  Network<float> net(ck.config, 0);
  net.load_state(ck.state);
  return net;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");
  nlohmann::json header;
  header["config"] = to_json(ck.config);
  header["metadata"] = ck.metadata;
  header["params"] = nlohmann::json::array();
  for (const auto& p : ck.state.params) header["params"].push_back(p.size());
  header["buffers"] = nlohmann::json::array();
  for (const auto& b : ck.state.buffers) header["buffers"].push_back(b.size());
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, 8);
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t length = text.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&length), sizeof length);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  auto dump = [&](const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  };
  for (const auto& p : ck.state.params) dump(p);
  for (const auto& b : ck.state.buffers) dump(b);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t length = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw std::runtime_error(path.string() + " is not a checkpoint");
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  const auto header = nlohmann::json::parse(text);
  Checkpoint ck;
  ck.config = network_config_from_json(header.at("config"));
  ck.metadata = header.value("metadata", nlohmann::json::object());
  auto slurp = [&](std::size_t n) {
    std::vector<float> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(float)));
    return v;
  };
  for (const auto& n : header.at("params")) ck.state.params.push_back(slurp(n.get<std::size_t>()));
  for (const auto& n : header.at("buffers")) ck.state.buffers.push_back(slurp(n.get<std::size_t>()));
  if (!in) throw std::runtime_error(path.string() + ": truncated checkpoint");
  return ck;
}

}  // namespace hipseg::nn
