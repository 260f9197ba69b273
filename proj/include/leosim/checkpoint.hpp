#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "leosim/errors.hpp"
#include "leosim/net.hpp"
#include "leosim/textio.hpp"

namespace leosim {

// Checkpoint layout (little-endian):
//   "LSQN" | u32 version=1 | u32 layer_count | {u32 in, u32 out} per layer
//   then per layer: weights (out*in f64, row-major) followed by bias (out f64)

namespace detail {
inline void put_u32(std::string& s, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  s.append(b, 4);
}
inline void put_f64(std::string& s, double v) {
  char b[8];
  std::memcpy(b, &v, 8);
  s.append(b, 8);
}
inline std::uint32_t get_u32(const std::string& s, std::size_t& off) {
  if (off + 4 > s.size()) throw ConfigError("checkpoint: truncated");
  std::uint32_t v;
  std::memcpy(&v, s.data() + off, 4);
  off += 4;
  return v;
}
inline double get_f64(const std::string& s, std::size_t& off) {
  if (off + 8 > s.size()) throw ConfigError("checkpoint: truncated");
  double v;
  std::memcpy(&v, s.data() + off, 8);
  off += 8;
  return v;
}
}  // namespace detail

inline std::string serialize_checkpoint(const Mlp& net) {
  std::string out;
  out += "LSQN";
  detail::put_u32(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    detail::put_u32(out, static_cast<std::uint32_t>(l.in));
    detail::put_u32(out, static_cast<std::uint32_t>(l.out));
  }
  for (const auto& l : net.layers()) {
    for (double w : l.w) detail::put_f64(out, w);
    for (double b : l.b) detail::put_f64(out, b);
  }
  return out;
}

inline Mlp parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, "LSQN") != 0)
    throw ConfigError("checkpoint: bad magic");
  std::size_t off = 4;
  const std::uint32_t version = detail::get_u32(bytes, off);
  if (version != 1) throw ConfigError("checkpoint: unsupported version");
  const std::uint32_t n_layers = detail::get_u32(bytes, off);
  if (n_layers == 0 || n_layers > 64) throw ConfigError("checkpoint: bad layer count");
  std::vector<Mlp::Layer> layers(n_layers);
  for (auto& l : layers) {
    l.in = static_cast<int>(detail::get_u32(bytes, off));
    l.out = static_cast<int>(detail::get_u32(bytes, off));
    if (l.in <= 0 || l.out <= 0 || l.in > 65536 || l.out > 65536)
      throw ConfigError("checkpoint: bad layer dims");
  }
  for (std::size_t i = 1; i < layers.size(); ++i)
    if (layers[i].in != layers[i - 1].out) throw ConfigError("checkpoint: layer dims disagree");
  for (auto& l : layers) {
    l.w.resize(static_cast<std::size_t>(l.in) * l.out);
    l.b.resize(static_cast<std::size_t>(l.out));
    for (auto& w : l.w) w = detail::get_f64(bytes, off);
    for (auto& b : l.b) b = detail::get_f64(bytes, off);
  }
  if (off != bytes.size()) throw ConfigError("checkpoint: trailing bytes");
  Mlp net;
  net.set_layers(std::move(layers));
  return net;
}

inline void save_checkpoint_file(const std::string& path, const Mlp& net) {
  write_file(path, serialize_checkpoint(net));
}

inline Mlp load_checkpoint_file(const std::string& path) {
  try {
    return parse_checkpoint(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace leosim
