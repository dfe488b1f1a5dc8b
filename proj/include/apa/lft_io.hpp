#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "apa/errors.hpp"
#include "apa/light_field.hpp"

// .lft: little-endian binary light-field container.
//   bytes 0..3   magic "LFT1"
//   u32          version (1)
//   u32 x 4      w, h, n_h, n_v
//   u32          dtype code (0 = 32-bit float, little-endian)
//   payload      w*h*n_h*n_v floats in [v][s][y][x] order
// 28 header bytes total. Round-trips float light fields bit-exactly.

namespace apa {

inline constexpr std::array<char, 4> kLftMagic = {'L', 'F', 'T', '1'};
inline constexpr std::uint32_t kLftVersion = 1;
inline constexpr std::uint32_t kLftDtypeF32 = 0;

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint32_t f32_bits(float f) {
  std::uint32_t b;
  std::memcpy(&b, &f, 4);
  return b;
}

inline float bits_f32(std::uint32_t b) {
  float f;
  std::memcpy(&f, &b, 4);
  return f;
}

}  // namespace detail

template <class Scalar>
void save_lft(const LightField<Scalar>& lf, const std::filesystem::path& path) {
  std::string buf;
  buf.reserve(28 + static_cast<std::size_t>(lf.count()) * 4);
  buf.append(kLftMagic.data(), 4);
  detail::put_u32_le(buf, kLftVersion);
  detail::put_u32_le(buf, static_cast<std::uint32_t>(lf.w()));
  detail::put_u32_le(buf, static_cast<std::uint32_t>(lf.h()));
  detail::put_u32_le(buf, static_cast<std::uint32_t>(lf.n_h()));
  detail::put_u32_le(buf, static_cast<std::uint32_t>(lf.n_v()));
  detail::put_u32_le(buf, kLftDtypeF32);
  for (Eigen::Index i = 0; i < lf.count(); ++i)
    detail::put_u32_le(buf, detail::f32_bits(static_cast<float>(lf.data()[i])));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_lft: cannot open for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("save_lft: write failed: " + path.string());
}

template <class Scalar = float>
LightField<Scalar> load_lft(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_lft: cannot open: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < 28) throw FormatError("load_lft: file shorter than 28-byte header: " + path.string());
  if (std::memcmp(bytes.data(), kLftMagic.data(), 4) != 0)
    throw FormatError("load_lft: bad magic in " + path.string());
  const std::uint32_t version = detail::get_u32_le(bytes.data() + 4);
  if (version != kLftVersion)
    throw FormatError("load_lft: unsupported version " + std::to_string(version));
  const std::uint32_t w = detail::get_u32_le(bytes.data() + 8);
  const std::uint32_t h = detail::get_u32_le(bytes.data() + 12);
  const std::uint32_t n_h = detail::get_u32_le(bytes.data() + 16);
  const std::uint32_t n_v = detail::get_u32_le(bytes.data() + 20);
  const std::uint32_t dtype = detail::get_u32_le(bytes.data() + 24);
  if (dtype != kLftDtypeF32)
    throw FormatError("load_lft: unsupported dtype code " + std::to_string(dtype));
  if (w < 1 || h < 1 || n_h < 1 || n_v < 1)
    throw FormatError("load_lft: zero dimension in header of " + path.string());

  const std::uint64_t count = std::uint64_t(w) * h * n_h * n_v;
  const std::uint64_t expected = 28 + count * 4;
  if (bytes.size() != expected)
    throw FormatError("load_lft: payload size mismatch in " + path.string() + ": expected " +
                      std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()));

  LightField<Scalar> lf(static_cast<int>(w), static_cast<int>(h), static_cast<int>(n_h),
                        static_cast<int>(n_v));
  const unsigned char* p = bytes.data() + 28;
  for (std::uint64_t i = 0; i < count; ++i, p += 4)
    lf.data()[i] = static_cast<Scalar>(detail::bits_f32(detail::get_u32_le(p)));
  return lf;
}

}  // namespace apa
