#pragma once

// Flat binary parameter snapshot, all integers and floats little-endian:
//
//   bytes 0..7   magic "ARCMLP01"
//   u32          number of layer sizes N
//   N x u32      layer sizes
//   u8           hidden activation   (0 relu, 1 tanh, 2 leaky_relu)
//   u8           output activation   (0 identity, 1 tanh, 2 clip)
//   [2 x f64]    clip lower, upper   (present only when output activation is clip)
//   per layer l: weights (rows = size[l+1], cols = size[l]) row-major as f64,
//                then bias (size[l+1]) as f64

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "arc/core/errors.hpp"
#include "arc/core/mlp.hpp"

namespace arc {

namespace snapshot_detail {

inline constexpr std::array<char, 8> kMagic{'A', 'R', 'C', 'M', 'L', 'P', '0', '1'};

inline void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_bytes(std::istream& is, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw ContractViolation("snapshot: truncated stream");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_bytes(is, 8)); }

}  // namespace snapshot_detail

inline void write_snapshot(std::ostream& os, const Mlp& net) {
  using namespace snapshot_detail;
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (int s : net.layer_sizes()) put_u32(os, static_cast<std::uint32_t>(s));
  os.put(static_cast<char>(net.hidden_activation()));
  os.put(static_cast<char>(net.output_activation()));
  if (net.clip_bounds()) {
    put_f64(os, net.clip_bounds()->lower);
    put_f64(os, net.clip_bounds()->upper);
  }
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto& w = net.weights()[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) put_f64(os, w(i, j));
    const auto& b = net.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) put_f64(os, b(i));
  }
}

inline Mlp read_snapshot(std::istream& is) {
  using namespace snapshot_detail;
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw ContractViolation("snapshot: bad magic");
  const auto n = static_cast<std::uint32_t>(get_bytes(is, 4));
  require(n >= 2 && n < 1024, "snapshot: implausible layer count");
  std::vector<int> sizes(n);
  for (auto& s : sizes) s = static_cast<int>(get_bytes(is, 4));
  const auto hidden = static_cast<std::uint8_t>(get_bytes(is, 1));
  const auto output = static_cast<std::uint8_t>(get_bytes(is, 1));
  require(hidden <= 2 && output <= 2, "snapshot: unknown activation code");
  std::optional<ClipBounds> clip;
  if (output == static_cast<std::uint8_t>(OutputActivation::clip)) {
    const double lo = get_f64(is);
    const double hi = get_f64(is);
    clip = ClipBounds{lo, hi};
  }
  Mlp net(sizes, static_cast<HiddenActivation>(hidden), static_cast<OutputActivation>(output), clip);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    auto& w = net.weights()[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = get_f64(is);
    auto& b = net.biases()[l];
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = get_f64(is);
  }
  return net;
}

inline void save_snapshot(const std::string& path, const Mlp& net) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_snapshot(os, net);
}

inline Mlp load_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_snapshot(is);
}

}  // namespace arc
