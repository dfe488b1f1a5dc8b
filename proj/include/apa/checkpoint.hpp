#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "apa/errors.hpp"
#include "apa/lft_io.hpp"
#include "apa/nn.hpp"

// .apaw checkpoint, little-endian throughout:
//   magic "APAW" | u32 version | u32 layer_count |
//   per layer: u32 k, u32 in_ch, u32 out_ch, u32 relu_flag,
//              f32 weights[out][in][k][k], f32 bias[out]
// optionally followed by an appended metadata block:
//   "META" | u32 byte_count | key=value lines (UTF-8)
// Several networks (the per-SAI view-Net variant) are stored by concatenating
// their layer blocks; meta key nets records how to split layer_count.

namespace apa {

inline constexpr std::array<char, 4> kApawMagic = {'A', 'P', 'A', 'W'};
inline constexpr std::array<char, 4> kMetaMagic = {'M', 'E', 'T', 'A'};
inline constexpr std::uint32_t kApawVersion = 1;

using CheckpointMeta = std::map<std::string, std::string>;

template <class Scalar>
struct Checkpoint {
  std::vector<NetworkDef<Scalar>> nets;
  CheckpointMeta meta;

  const NetworkDef<Scalar>& single() const {
    if (nets.size() != 1)
      throw FormatError("checkpoint holds " + std::to_string(nets.size()) +
                        " networks where one was expected");
    return nets.front();
  }
};

namespace detail {

inline std::string encode_meta(const CheckpointMeta& meta) {
  std::string out;
  for (const auto& [k, v] : meta) out += k + "=" + v + "\n";
  return out;
}

inline CheckpointMeta decode_meta(const std::string& text) {
  CheckpointMeta meta;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint meta: malformed line '" + line + "'");
    meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return meta;
}

template <class Scalar>
void append_layer(std::string& buf, const ConvLayerParams<Scalar>& l) {
  put_u32_le(buf, static_cast<std::uint32_t>(l.k));
  put_u32_le(buf, static_cast<std::uint32_t>(l.in_ch));
  put_u32_le(buf, static_cast<std::uint32_t>(l.out_ch));
  put_u32_le(buf, l.apply_relu ? 1u : 0u);
  for (Eigen::Index i = 0; i < l.weights.size(); ++i)
    put_u32_le(buf, f32_bits(static_cast<float>(l.weights.data()[i])));
  for (Eigen::Index i = 0; i < l.bias.size(); ++i)
    put_u32_le(buf, f32_bits(static_cast<float>(l.bias.data()[i])));
}

}  // namespace detail

template <class Scalar>
void save_checkpoint(const std::vector<NetworkDef<Scalar>>& nets, const std::filesystem::path& path,
                     const CheckpointMeta& meta = {}) {
  if (nets.empty()) throw std::invalid_argument("save_checkpoint: no networks");
  std::uint32_t total_layers = 0;
  for (const auto& net : nets) {
    net.validate();
    if (net.layers.size() != nets.front().layers.size())
      throw std::invalid_argument("save_checkpoint: networks must share a layer count");
    total_layers += static_cast<std::uint32_t>(net.layers.size());
  }

  CheckpointMeta full = meta;
  if (nets.size() > 1) full["nets"] = std::to_string(nets.size());

  std::string buf;
  buf.append(kApawMagic.data(), 4);
  detail::put_u32_le(buf, kApawVersion);
  detail::put_u32_le(buf, total_layers);
  for (const auto& net : nets)
    for (const auto& l : net.layers) detail::append_layer(buf, l);
  if (!full.empty()) {
    const std::string text = detail::encode_meta(full);
    buf.append(kMetaMagic.data(), 4);
    detail::put_u32_le(buf, static_cast<std::uint32_t>(text.size()));
    buf += text;
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_checkpoint: cannot open for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("save_checkpoint: write failed: " + path.string());
}

template <class Scalar>
void save_checkpoint(const NetworkDef<Scalar>& net, const std::filesystem::path& path,
                     const CheckpointMeta& meta = {}) {
  save_checkpoint(std::vector<NetworkDef<Scalar>>{net}, path, meta);
}

template <class Scalar = float>
Checkpoint<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_checkpoint: cannot open: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  const auto need = [&](std::size_t n, const char* what) {
    if (pos + n > bytes.size())
      throw FormatError("load_checkpoint: truncated file (" + std::string(what) + ") in " +
                        path.string());
  };
  const auto read_u32 = [&](const char* what) {
    need(4, what);
    const std::uint32_t v = detail::get_u32_le(bytes.data() + pos);
    pos += 4;
    return v;
  };

  need(4, "magic");
  if (std::memcmp(bytes.data(), kApawMagic.data(), 4) != 0)
    throw FormatError("load_checkpoint: bad magic in " + path.string());
  pos = 4;
  const std::uint32_t version = read_u32("version");
  if (version != kApawVersion)
    throw FormatError("load_checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t total_layers = read_u32("layer count");
  if (total_layers == 0) throw FormatError("load_checkpoint: zero layers in " + path.string());

  std::vector<ConvLayerParams<Scalar>> layers;
  layers.reserve(total_layers);
  for (std::uint32_t i = 0; i < total_layers; ++i) {
    ConvLayerParams<Scalar> l;
    l.k = static_cast<int>(read_u32("kernel"));
    l.in_ch = static_cast<int>(read_u32("in_ch"));
    l.out_ch = static_cast<int>(read_u32("out_ch"));
    l.apply_relu = read_u32("relu flag") != 0;
    if (l.k < 1 || l.k % 2 == 0 || l.in_ch < 1 || l.out_ch < 1)
      throw FormatError("load_checkpoint: bad layer header in " + path.string());
    const Eigen::Index n_w = static_cast<Eigen::Index>(l.out_ch) * l.in_ch * l.k * l.k;
    need(static_cast<std::size_t>(n_w + l.out_ch) * 4, "layer payload");
    l.weights.resize(l.out_ch, static_cast<Eigen::Index>(l.in_ch) * l.k * l.k);
    for (Eigen::Index j = 0; j < n_w; ++j, pos += 4)
      l.weights.data()[j] = static_cast<Scalar>(detail::bits_f32(detail::get_u32_le(bytes.data() + pos)));
    l.bias.resize(l.out_ch);
    for (int j = 0; j < l.out_ch; ++j, pos += 4)
      l.bias.data()[j] = static_cast<Scalar>(detail::bits_f32(detail::get_u32_le(bytes.data() + pos)));
    layers.push_back(std::move(l));
  }

  Checkpoint<Scalar> ckpt;
  if (pos < bytes.size()) {
    need(4, "meta magic");
    if (std::memcmp(bytes.data() + pos, kMetaMagic.data(), 4) != 0)
      throw FormatError("load_checkpoint: trailing bytes are not a META block in " + path.string());
    pos += 4;
    const std::uint32_t meta_len = read_u32("meta length");
    need(meta_len, "meta payload");
    ckpt.meta = detail::decode_meta(
        std::string(reinterpret_cast<const char*>(bytes.data() + pos), meta_len));
    pos += meta_len;
    if (pos != bytes.size())
      throw FormatError("load_checkpoint: trailing garbage after META block in " + path.string());
  }

  std::size_t n_nets = 1;
  if (auto it = ckpt.meta.find("nets"); it != ckpt.meta.end()) n_nets = std::stoul(it->second);
  if (n_nets == 0 || total_layers % n_nets != 0)
    throw FormatError("load_checkpoint: layer count not divisible across networks");
  const std::size_t per_net = total_layers / n_nets;
  for (std::size_t n = 0; n < n_nets; ++n) {
    NetworkDef<Scalar> net;
    net.layers.assign(layers.begin() + static_cast<std::ptrdiff_t>(n * per_net),
                      layers.begin() + static_cast<std::ptrdiff_t>((n + 1) * per_net));
    net.validate();
    ckpt.nets.push_back(std::move(net));
  }
  return ckpt;
}

}  // namespace apa
