#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "apa/light_field.hpp"
#include "apa/rng.hpp"

// Procedural light-field scenes: band-limited sinusoidal textures on slanted
// planes, sampled analytically at disparity-shifted positions so the parallax
// is exact (no resampling error), plus a mild per-view gain field that gives
// the view-Net genuine non-Lambertian energy to restore.

namespace apa {

struct ToySceneParams {
  int w = 96, h = 96;
  int n_h = 8, n_v = 8;
  int waves = 6;
  double amplitude = 0.38;      // total sinusoid amplitude; texture stays in [0.12, 0.88]
  double freq_lo = 0.03;        // cycles / pixel
  double freq_hi = 0.13;
  double disparity_base = 0.7;  // pixels per angular step at the plane center
  double disparity_slope = 0.4; // disparity variation across x (slanted plane)
  double view_gain_amp = 0.03;  // relative per-view brightness variation
  std::uint64_t seed = 1;
};

template <class Scalar = float>
LightField<Scalar> make_toy_scene(const ToySceneParams& p) {
  struct Wave {
    double fx, fy, phase, amp;
  };
  rng::Stream tex_stream(rng::derive(p.seed, "texture"));
  std::vector<Wave> waves(static_cast<std::size_t>(p.waves));
  double amp_total = 0.0;
  for (int k = 0; k < p.waves; ++k) {
    const double f = tex_stream.uniform(p.freq_lo, p.freq_hi);
    const double theta = tex_stream.uniform(0.0, 2.0 * std::numbers::pi);
    const double phase = tex_stream.uniform(0.0, 2.0 * std::numbers::pi);
    const double amp = 1.0 / (1.0 + k);
    waves[static_cast<std::size_t>(k)] = {f * std::cos(theta), f * std::sin(theta), phase, amp};
    amp_total += amp;
  }
  for (auto& wv : waves) wv.amp *= p.amplitude / amp_total;

  const auto texture = [&](double x, double y) {
    double v = 0.5;
    for (const auto& wv : waves)
      v += wv.amp * std::sin(2.0 * std::numbers::pi * (wv.fx * x + wv.fy * y) + wv.phase);
    return v;
  };

  // Per-view gains, normalized to mean 1 so x_avg stays unbiased.
  rng::Stream gain_stream(rng::derive(p.seed, "gain"));
  std::vector<double> gain(static_cast<std::size_t>(p.n_h * p.n_v), 1.0);
  if (p.view_gain_amp > 0.0) {
    double mean = 0.0;
    for (auto& g : gain) {
      g = 1.0 + p.view_gain_amp * gain_stream.uniform(-1.0, 1.0);
      mean += g;
    }
    mean /= static_cast<double>(gain.size());
    for (auto& g : gain) g /= mean;
  }

  const double cs = (p.n_h - 1) / 2.0;
  const double cv = (p.n_v - 1) / 2.0;
  LightField<Scalar> lf(p.w, p.h, p.n_h, p.n_v);
  for (int v = 0; v < p.n_v; ++v) {
    for (int s = 0; s < p.n_h; ++s) {
      const double g = gain[static_cast<std::size_t>(v * p.n_h + s)];
      auto sai = lf.view(s, v);
      for (int y = 0; y < p.h; ++y) {
        for (int x = 0; x < p.w; ++x) {
          const double d =
              p.disparity_base + p.disparity_slope * (x / double(p.w - 1) - 0.5);
          sai(y, x) = static_cast<Scalar>(
              g * texture(x + (s - cs) * d, y + (v - cv) * d));
        }
      }
    }
  }
  return lf;
}

// A deterministic family of scenes with slightly varied disparity planes.
template <class Scalar = float>
std::vector<LightField<Scalar>> make_toy_set(int count, std::uint64_t base_seed,
                                             ToySceneParams proto = {}) {
  std::vector<LightField<Scalar>> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ToySceneParams p = proto;
    p.seed = rng::derive(base_seed, "scene" + std::to_string(i));
    rng::Stream vary(rng::derive(p.seed, "vary"));
    p.disparity_base = proto.disparity_base * vary.uniform(0.8, 1.2);
    p.disparity_slope = proto.disparity_slope * vary.uniform(0.7, 1.3);
    scenes.push_back(make_toy_scene<Scalar>(p));
  }
  return scenes;
}

}  // namespace apa
