#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "apa/errors.hpp"
#include "apa/light_field.hpp"

// Binary netpbm import/export. Import: P5 (8- or 16-bit) and P6 (routed
// through rgb_to_gray). Export: 8-bit P5, clamp to [0,1] then round half up.
// Grids use the 1-based naming view_VV_SS.pgm.

namespace apa {

namespace detail {

// Reads one whitespace-delimited header token, skipping '#' comments.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw FormatError("pnm: truncated header");
  return tok;
}

struct PnmHeader {
  std::string magic;
  int width = 0, height = 0, maxval = 0;
};

inline PnmHeader read_pnm_header(std::istream& in, const std::string& name) {
  PnmHeader h;
  h.magic = pnm_token(in);
  if (h.magic != "P5" && h.magic != "P6")
    throw FormatError("pnm: unsupported magic '" + h.magic + "' in " + name);
  h.width = std::stoi(pnm_token(in));
  h.height = std::stoi(pnm_token(in));
  h.maxval = std::stoi(pnm_token(in));
  if (h.width < 1 || h.height < 1) throw FormatError("pnm: bad dimensions in " + name);
  if (h.maxval < 1 || h.maxval > 65535) throw FormatError("pnm: bad maxval in " + name);
  return h;
}

inline std::vector<double> read_pnm_samples(std::istream& in, const PnmHeader& h,
                                            int samples_per_pixel, const std::string& name) {
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height * samples_per_pixel;
  std::vector<double> out(n);
  if (h.maxval < 256) {
    std::vector<unsigned char> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
      throw FormatError("pnm: truncated pixel data in " + name);
    for (std::size_t i = 0; i < n; ++i) out[i] = raw[i] / double(h.maxval);
  } else {
    std::vector<unsigned char> raw(2 * n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(2 * n));
    if (static_cast<std::size_t>(in.gcount()) != 2 * n)
      throw FormatError("pnm: truncated pixel data in " + name);
    for (std::size_t i = 0; i < n; ++i) {
      const int v = (raw[2 * i] << 8) | raw[2 * i + 1];  // 16-bit samples are big-endian
      out[i] = v / double(h.maxval);
    }
  }
  return out;
}

}  // namespace detail

// Loads a P5 grayscale image, or a P6 color image collapsed via BT.601 luma.
// Pixel value p maps to p / maxval.
template <class Scalar = float>
Image<Scalar> load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_pgm: cannot open: " + path.string());
  const auto h = detail::read_pnm_header(in, path.string());
  if (h.magic == "P5") {
    const auto v = detail::read_pnm_samples(in, h, 1, path.string());
    Image<Scalar> img(h.height, h.width);
    for (int y = 0; y < h.height; ++y)
      for (int x = 0; x < h.width; ++x)
        img(y, x) = static_cast<Scalar>(v[static_cast<std::size_t>(y) * h.width + x]);
    return img;
  }
  const auto v = detail::read_pnm_samples(in, h, 3, path.string());
  Image<Scalar> r(h.height, h.width), g(h.height, h.width), b(h.height, h.width);
  for (int y = 0; y < h.height; ++y)
    for (int x = 0; x < h.width; ++x) {
      const std::size_t i = 3 * (static_cast<std::size_t>(y) * h.width + x);
      r(y, x) = static_cast<Scalar>(v[i]);
      g(y, x) = static_cast<Scalar>(v[i + 1]);
      b(y, x) = static_cast<Scalar>(v[i + 2]);
    }
  return rgb_to_gray(r, g, b);
}

// Quantizes intensity to 0..255: clamp to [0,1], then round half up.
inline int quantize_u8(double x) {
  const double c = x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
  return static_cast<int>(std::floor(c * 255.0 + 0.5));
}

template <class Scalar>
void save_pgm(const Image<Scalar>& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("save_pgm: cannot open for writing: " + path.string());
  out << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(img.rows()) * img.cols());
  std::size_t i = 0;
  for (Eigen::Index y = 0; y < img.rows(); ++y)
    for (Eigen::Index x = 0; x < img.cols(); ++x)
      raw[i++] = static_cast<unsigned char>(quantize_u8(static_cast<double>(img(y, x))));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("save_pgm: write failed: " + path.string());
}

inline std::string view_file_name(int s, int v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "view_%02d_%02d.pgm", v, s);
  return buf;
}

// Assembles a light field from dir/view_VV_SS.pgm (1-based indices).
template <class Scalar = float>
LightField<Scalar> load_pgm_grid(const std::filesystem::path& dir, int n_h, int n_v) {
  LightField<Scalar> lf;
  for (int v = 1; v <= n_v; ++v) {
    for (int s = 1; s <= n_h; ++s) {
      const auto path = dir / view_file_name(s, v);
      if (!std::filesystem::exists(path))
        throw IoError("load_pgm_grid: missing view (v=" + std::to_string(v) +
                      ", s=" + std::to_string(s) + "): " + path.string());
      Image<Scalar> img = load_pgm<Scalar>(path);
      if (lf.count() == 0) {
        lf = LightField<Scalar>(static_cast<int>(img.cols()), static_cast<int>(img.rows()), n_h, n_v);
      } else if (img.rows() != lf.h() || img.cols() != lf.w()) {
        throw FormatError("load_pgm_grid: view (v=" + std::to_string(v) + ", s=" + std::to_string(s) +
                          ") has dimensions " + std::to_string(img.cols()) + "x" +
                          std::to_string(img.rows()) + ", expected " + std::to_string(lf.w()) + "x" +
                          std::to_string(lf.h()));
      }
      lf.view(s - 1, v - 1) = img;
    }
  }
  return lf;
}

template <class Scalar>
void save_pgm_grid(const LightField<Scalar>& lf, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (int v = 1; v <= lf.n_v(); ++v)
    for (int s = 1; s <= lf.n_h(); ++s)
      save_pgm(Image<Scalar>(lf.view(s - 1, v - 1)), dir / view_file_name(s, v));
}

}  // namespace apa
