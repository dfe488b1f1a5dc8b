#pragma once

#include <cstdint>

#include "apa/light_field.hpp"
#include "apa/parallel.hpp"
#include "apa/rng.hpp"

namespace apa {

// Additive white Gaussian noise, sigma quoted on the [0,255] scale.
struct NoiseConfig {
  double sigma_255 = 0.0;
  std::uint64_t seed = 0;
};

// Adds an independent N(0, (sigma/255)^2) sample to every element. The
// stream position is the element's linear [v][s][y][x] index, so the result
// is identical no matter how the loop is ordered or parallelized, and
// distinct SAIs never share stream positions. Values are NOT clipped.
template <class Scalar>
LightField<Scalar> add_awgn(const LightField<Scalar>& lf, const NoiseConfig& cfg, int threads = 1) {
  if (cfg.sigma_255 < 0) throw std::invalid_argument("add_awgn: sigma_255 must be >= 0");
  LightField<Scalar> out = lf;
  if (cfg.sigma_255 == 0.0) return out;

  const double sigma = cfg.sigma_255 / 255.0;
  const Eigen::Index total = lf.count();
  const int blocks = threads > 1 ? threads * 8 : 1;
  const Eigen::Index chunk = (total + blocks - 1) / blocks;
  parallel_for(0, blocks, threads, [&](int b) {
    const Eigen::Index lo = static_cast<Eigen::Index>(b) * chunk;
    const Eigen::Index hi = std::min(total, lo + chunk);
    for (Eigen::Index i = lo; i < hi; ++i) {
      const double z = rng::gaussian_at(cfg.seed, static_cast<std::uint64_t>(i));
      out.data()[i] = static_cast<Scalar>(static_cast<double>(lf.data()[i]) + sigma * z);
    }
  });
  return out;
}

}  // namespace apa
