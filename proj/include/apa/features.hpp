#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "apa/image.hpp"
#include "apa/light_field.hpp"
#include "apa/parallel.hpp"

// Anisotropic parallax features and their noise-suppressed normalization.
// All window statistics run on double accumulators regardless of the scalar
// type, so a constant light field yields exactly-zero normalized features
// after the cast back.

namespace apa {

// Box-window guided filter settings. radius is the window half-width; epsilon
// regularizes the linear-model variance term (squared-intensity units).
struct GuidedFilterParams {
  int radius = 8;
  double epsilon = 1e-4;
};

// Separable Gaussian smoothing; kernel half-width = ceil(3 * sigma_g).
struct GaussianParams {
  double sigma_g = 1.5;
  int radius = 5;

  static GaussianParams from_sigma(double sigma_g) {
    return GaussianParams{sigma_g, static_cast<int>(std::ceil(3.0 * sigma_g))};
  }
};

// Default smoothing scale per trained noise level (sigma on the [0,255] scale).
inline double default_gaussian_sigma_g(double sigma_255) {
  if (sigma_255 < 15.0) return 1.0;
  if (sigma_255 < 35.0) return 1.5;
  return 2.5;
}

// The full feature bundle: anisotropic slices, the isotropic mean, and the
// guided-filtered, mean-subtracted residual stacks.
template <class Scalar>
struct ApaFeatures {
  std::vector<Image<Scalar>> x_h;       // n_h slices (mean over v)
  std::vector<Image<Scalar>> x_v;       // n_v slices (mean over s)
  Image<Scalar> x_avg;                  // mean over both angular axes
  std::vector<Image<Scalar>> x_h_norm;  // guided-filtered minus x_avg
  std::vector<Image<Scalar>> x_v_norm;
};

// Mean along angular dimension m of [w x h x n_h x n_v]: m=4 averages the
// vertical axis (n_h slices remain), m=3 averages the horizontal axis.
template <class Scalar>
std::vector<Image<Scalar>> angular_mean(const LightField<Scalar>& lf, int m) {
  if (m != 3 && m != 4)
    throw std::invalid_argument("angular_mean: m must be 3 or 4, got " + std::to_string(m));

  const int h = lf.h(), w = lf.w();
  std::vector<Image<Scalar>> out;
  if (m == 4) {
    out.assign(static_cast<std::size_t>(lf.n_h()), Image<Scalar>(h, w));
    for (int s = 0; s < lf.n_h(); ++s) {
      ImageD acc = ImageD::Zero(h, w);
      for (int v = 0; v < lf.n_v(); ++v) acc += lf.view(s, v).template cast<double>();
      out[static_cast<std::size_t>(s)] = (acc / lf.n_v()).template cast<Scalar>();
    }
  } else {
    out.assign(static_cast<std::size_t>(lf.n_v()), Image<Scalar>(h, w));
    for (int v = 0; v < lf.n_v(); ++v) {
      ImageD acc = ImageD::Zero(h, w);
      for (int s = 0; s < lf.n_h(); ++s) acc += lf.view(s, v).template cast<double>();
      out[static_cast<std::size_t>(v)] = (acc / lf.n_h()).template cast<Scalar>();
    }
  }
  return out;
}

// Horizontal and vertical anisotropic parallax features.
template <class Scalar>
std::pair<std::vector<Image<Scalar>>, std::vector<Image<Scalar>>> compute_apa(
    const LightField<Scalar>& lf) {
  return {angular_mean(lf, 4), angular_mean(lf, 3)};
}

// Isotropic parallax feature: mean over both angular axes.
template <class Scalar>
Image<Scalar> compute_isotropic(const LightField<Scalar>& lf) {
  const int h = lf.h(), w = lf.w();
  ImageD acc = ImageD::Zero(h, w);
  for (int v = 0; v < lf.n_v(); ++v)
    for (int s = 0; s < lf.n_h(); ++s) acc += lf.view(s, v).template cast<double>();
  return (acc / lf.n_sai()).template cast<Scalar>();
}

namespace detail {

// Summed-area table with a zero top row / left column, so
// box(y0..y1, x0..x1) = S(y1+1,x1+1) - S(y0,x1+1) - S(y1+1,x0) + S(y0,x0).
inline ImageD integral_image(const ImageD& img) {
  const Eigen::Index h = img.rows(), w = img.cols();
  ImageD s = ImageD::Zero(h + 1, w + 1);
  for (Eigen::Index y = 0; y < h; ++y) {
    double row = 0.0;
    for (Eigen::Index x = 0; x < w; ++x) {
      row += img(y, x);
      s(y + 1, x + 1) = s(y, x + 1) + row;
    }
  }
  return s;
}

// Edge-truncated box means over (2r+1)^2 windows via one integral image.
inline ImageD box_mean(const ImageD& img, int r) {
  const Eigen::Index h = img.rows(), w = img.cols();
  const ImageD s = integral_image(img);
  ImageD out(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    const Eigen::Index y0 = std::max<Eigen::Index>(0, y - r);
    const Eigen::Index y1 = std::min<Eigen::Index>(h - 1, y + r);
    for (Eigen::Index x = 0; x < w; ++x) {
      const Eigen::Index x0 = std::max<Eigen::Index>(0, x - r);
      const Eigen::Index x1 = std::min<Eigen::Index>(w - 1, x + r);
      const double sum = s(y1 + 1, x1 + 1) - s(y0, x1 + 1) - s(y1 + 1, x0) + s(y0, x0);
      out(y, x) = sum / static_cast<double>((y1 - y0 + 1) * (x1 - x0 + 1));
    }
  }
  return out;
}

}  // namespace detail

// He et al. guided filter: q = mean(a) * I + mean(b) with
// a = cov(I,J) / (var(I) + eps), b = mean(J) - a * mean(I), window statistics
// over edge-truncated (2r+1)^2 boxes. O(w*h) via integral images.
template <class Scalar>
Image<Scalar> guided_filter(const Image<Scalar>& guide, const Image<Scalar>& input,
                            const GuidedFilterParams& params) {
  if (guide.rows() != input.rows() || guide.cols() != input.cols())
    throw std::invalid_argument("guided_filter: guide/input dimensions differ");
  if (params.epsilon <= 0.0) throw std::invalid_argument("guided_filter: epsilon must be > 0");
  if (params.radius < 1) throw std::invalid_argument("guided_filter: radius must be >= 1");

  const ImageD I = guide.template cast<double>();
  const ImageD J = input.template cast<double>();
  const int r = params.radius;

  const ImageD mean_I = detail::box_mean(I, r);
  const ImageD mean_J = detail::box_mean(J, r);
  const ImageD corr_II = detail::box_mean(ImageD(I * I), r);
  const ImageD corr_IJ = detail::box_mean(ImageD(I * J), r);

  const ImageD var_I = corr_II - mean_I * mean_I;
  const ImageD cov_IJ = corr_IJ - mean_I * mean_J;

  const ImageD a = cov_IJ / (var_I + params.epsilon);
  const ImageD b = mean_J - a * mean_I;

  const ImageD q = detail::box_mean(a, r) * I + detail::box_mean(b, r);
  return q.cast<Scalar>();
}

// Normalized APA features: each anisotropic slice guides a filtering of
// x_avg, and x_avg is subtracted once from the result.
template <class Scalar>
std::pair<std::vector<Image<Scalar>>, std::vector<Image<Scalar>>> normalize_apa(
    const std::vector<Image<Scalar>>& x_h, const std::vector<Image<Scalar>>& x_v,
    const Image<Scalar>& x_avg, const GuidedFilterParams& params, int threads = 1) {
  std::vector<Image<Scalar>> h_norm(x_h.size()), v_norm(x_v.size());
  const int total = static_cast<int>(x_h.size() + x_v.size());
  parallel_for(0, total, threads, [&](int i) {
    if (i < static_cast<int>(x_h.size())) {
      h_norm[i] = guided_filter(x_h[static_cast<std::size_t>(i)], x_avg, params) - x_avg;
    } else {
      const std::size_t j = static_cast<std::size_t>(i) - x_h.size();
      v_norm[j] = guided_filter(x_v[j], x_avg, params) - x_avg;
    }
  });
  return {std::move(h_norm), std::move(v_norm)};
}

// Everything of Eqs. (1)-(3) in one call.
template <class Scalar>
ApaFeatures<Scalar> compute_apa_features(const LightField<Scalar>& lf,
                                         const GuidedFilterParams& params, int threads = 1) {
  ApaFeatures<Scalar> f;
  std::tie(f.x_h, f.x_v) = compute_apa(lf);
  f.x_avg = compute_isotropic(lf);
  std::tie(f.x_h_norm, f.x_v_norm) = normalize_apa(f.x_h, f.x_v, f.x_avg, params, threads);
  return f;
}

// Separable Gaussian smoothing with kernel renormalization at the borders,
// so a constant image stays constant.
template <class Scalar>
Image<Scalar> gaussian_smooth_sai(const Image<Scalar>& sai, const GaussianParams& params) {
  const int r = params.radius;
  std::vector<double> kernel(static_cast<std::size_t>(2 * r + 1));
  double ksum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (params.sigma_g * params.sigma_g));
    kernel[static_cast<std::size_t>(i + r)] = v;
    ksum += v;
  }
  for (auto& v : kernel) v /= ksum;

  const Eigen::Index h = sai.rows(), w = sai.cols();
  const ImageD in = sai.template cast<double>();

  ImageD tmp(h, w);  // horizontal pass
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0, wsum = 0.0;
      const Eigen::Index lo = std::max<Eigen::Index>(-x, -r);
      const Eigen::Index hi = std::min<Eigen::Index>(w - 1 - x, r);
      for (Eigen::Index i = lo; i <= hi; ++i) {
        const double k = kernel[static_cast<std::size_t>(i + r)];
        acc += k * in(y, x + i);
        wsum += k;
      }
      tmp(y, x) = acc / wsum;
    }
  }
  ImageD out(h, w);  // vertical pass
  for (Eigen::Index y = 0; y < h; ++y) {
    const Eigen::Index lo = std::max<Eigen::Index>(-y, -r);
    const Eigen::Index hi = std::min<Eigen::Index>(h - 1 - y, r);
    for (Eigen::Index x = 0; x < w; ++x) {
      double acc = 0.0, wsum = 0.0;
      for (Eigen::Index i = lo; i <= hi; ++i) {
        const double k = kernel[static_cast<std::size_t>(i + r)];
        acc += k * tmp(y + i, x);
        wsum += k;
      }
      out(y, x) = acc / wsum;
    }
  }
  return out.cast<Scalar>();
}

// syn-Net input: x_h_norm slices first (1..n_h), then x_v_norm (1..n_v).
template <class Scalar>
std::vector<Image<Scalar>> build_syn_input(const ApaFeatures<Scalar>& f) {
  std::vector<Image<Scalar>> channels;
  channels.reserve(f.x_h_norm.size() + f.x_v_norm.size());
  for (const auto& c : f.x_h_norm) channels.push_back(c);
  for (const auto& c : f.x_v_norm) channels.push_back(c);
  return channels;
}

// view-Net input: {z - x_avg, x_syn}.
template <class Scalar>
std::vector<Image<Scalar>> build_view_input(const Image<Scalar>& z, const Image<Scalar>& x_avg,
                                            const Image<Scalar>& x_syn) {
  if (z.rows() != x_avg.rows() || z.cols() != x_avg.cols() || z.rows() != x_syn.rows() ||
      z.cols() != x_syn.cols())
    throw std::invalid_argument("build_view_input: channel dimensions differ");
  return {Image<Scalar>(z - x_avg), x_syn};
}

}  // namespace apa
