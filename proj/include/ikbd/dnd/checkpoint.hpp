#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ikbd/dnd/model.hpp"

namespace ikbd::dnd {

inline constexpr int kCheckpointFormatVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'I', 'K', 'B', 'D', 'C', 'K', 'P', 'T'};

struct CheckpointHeader {
  DndConfig config;
  std::uint64_t rng_seed = 0;
  int epoch = 0;
  nlohmann::json metrics = nlohmann::json::object();
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = char((v >> (8 * i)) & 0xFF);
  os.write(b, 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = char((v >> (8 * i)) & 0xFF);
  os.write(b, 8);
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ParseError("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ParseError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}
inline std::string get_bytes(std::istream& is, std::size_t n) {
  std::string s(n, '\0');
  if (n && !is.read(s.data(), std::streamsize(n))) throw ParseError("checkpoint truncated");
  return s;
}

}  // namespace detail

/// Binary checkpoint: magic, a JSON header {format_version, config,
/// rng_seed, epoch, metrics}, then named tensors as (name, shape, float32
/// little-endian row-major values).
template <typename T>
void write_checkpoint(std::ostream& os, const DndModel<T>& model, const CheckpointHeader& h) {
  nlohmann::json header = {{"format_version", kCheckpointFormatVersion},
                           {"config", model.config()},
                           {"rng_seed", h.rng_seed},
                           {"epoch", h.epoch},
                           {"metrics", h.metrics}};
  const std::string hs = header.dump();
  os.write(kCheckpointMagic, 8);
  detail::put_u32(os, std::uint32_t(hs.size()));
  os.write(hs.data(), std::streamsize(hs.size()));
  const auto params = model.parameters();
  detail::put_u32(os, std::uint32_t(params.size()));
  for (const auto* p : params) {
    detail::put_u32(os, std::uint32_t(p->name.size()));
    os.write(p->name.data(), std::streamsize(p->name.size()));
    const auto& shape = p->value.shape();
    detail::put_u32(os, std::uint32_t(shape.size()));
    for (auto e : shape) detail::put_u64(os, e);
    for (T v : p->value.values()) detail::put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
}

template <typename T>
struct LoadedCheckpoint {
  DndModel<T> model;
  CheckpointHeader header;
};

/// Reads a checkpoint and validates every tensor against the shapes the
/// stored config implies. Errors name the offending tensor.
template <typename T>
LoadedCheckpoint<T> read_checkpoint(std::istream& is, const DndConfig* expected = nullptr) {
  if (detail::get_bytes(is, 8) != std::string(kCheckpointMagic, 8)) throw ParseError("not a checkpoint file");
  const auto header_len = detail::get_u32(is);
  nlohmann::json hj;
  CheckpointHeader h;
  try {
    hj = nlohmann::json::parse(detail::get_bytes(is, header_len));
    if (hj.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw ParseError("unsupported checkpoint format_version");
    }
    h.config = hj.at("config").get<DndConfig>();
    h.rng_seed = hj.at("rng_seed").get<std::uint64_t>();
    h.epoch = hj.at("epoch").get<int>();
    h.metrics = hj.value("metrics", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what());
  }
  // Shapes are validated against the requested config when one is given,
  // so a mismatch is reported per tensor.
  if (expected) h.config = *expected;
  DndModel<T> model(h.config, 0);
  std::map<std::string, compute::Parameter<T>*> by_name;
  for (auto* p : model.parameters()) by_name[p->name] = p;

  const auto count = detail::get_u32(is);
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name = detail::get_bytes(is, detail::get_u32(is));
    const auto rank = detail::get_u32(is);
    if (rank < 1 || rank > 2) throw ValidationError("tensor '" + name + "' has unsupported rank");
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) e = std::size_t(detail::get_u64(is));
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError("unexpected tensor '" + name + "' for this config");
    if (it->second->value.shape() != shape) {
      auto fmt = [](const std::vector<std::size_t>& v) {
        std::string o;
        for (auto e : v) o += (o.empty() ? "" : "x") + std::to_string(e);
        return o;
      };
      throw ValidationError("tensor '" + name + "' has shape " + fmt(shape) + " but the config expects " +
                            fmt(it->second->value.shape()));
    }
    for (auto& v : it->second->value.values()) v = static_cast<T>(std::bit_cast<float>(detail::get_u32(is)));
    by_name.erase(it);
  }
  if (!by_name.empty()) throw ValidationError("checkpoint is missing tensor '" + by_name.begin()->first + "'");
  return {std::move(model), std::move(h)};
}

template <typename T>
void save_checkpoint(const std::string& path, const DndModel<T>& model, const CheckpointHeader& h) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  write_checkpoint(os, model, h);
  if (!os) throw Error("write failed: " + path);
}

template <typename T = float>
LoadedCheckpoint<T> load_checkpoint(const std::string& path, const DndConfig* expected = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path);
  return read_checkpoint<T>(is, expected);
}

}  // namespace ikbd::dnd
