#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "apa/features.hpp"
#include "apa/light_field.hpp"
#include "apa/nets.hpp"
#include "apa/nn.hpp"
#include "apa/parallel.hpp"

// Full-light-field inference and the two evaluation baselines. Inference is
// fully convolutional (same padding throughout), so it runs on whole SAIs,
// not patches.

namespace apa {

struct InferParams {
  GuidedFilterParams guided;
  GaussianParams gaussian = GaussianParams::from_sigma(1.5);
  bool syn_residual = false;
  int threads = 1;
};

template <class Scalar>
struct DenoiseResult {
  LightField<Scalar> lf_denoised;          // X_parallax + X_avg, clamped to [0,1]
  LightField<Scalar> lf_syn;               // syn stage output, clamped to [0,1]
  Image<Scalar> x_avg;
  std::vector<Image<Scalar>> x_parallax;   // raw view-Net outputs (pre-clamp diagnostics)
};

// Runs features + syn-Net on a whole light field. Returns the UNCLAMPED
// per-SAI syn stack (view-Net input) and x_avg. In residual mode the net
// output is composed with x_avg here.
template <class Scalar>
std::pair<std::vector<Image<Scalar>>, Image<Scalar>> syn_stage(const LightField<Scalar>& lf_noisy,
                                                               const NetworkDef<Scalar>& syn_net,
                                                               const InferParams& params) {
  if (syn_net.in_channels() != lf_noisy.n_h() + lf_noisy.n_v())
    throw std::invalid_argument("syn_stage: network expects " +
                                std::to_string(syn_net.in_channels()) +
                                " input channels, light field provides " +
                                std::to_string(lf_noisy.n_h() + lf_noisy.n_v()));
  if (syn_net.out_channels() != lf_noisy.n_sai())
    throw std::invalid_argument("syn_stage: network emits " +
                                std::to_string(syn_net.out_channels()) +
                                " channels, light field has " + std::to_string(lf_noisy.n_sai()) +
                                " SAIs");

  const ApaFeatures<Scalar> f = compute_apa_features(lf_noisy, params.guided, params.threads);
  const Tensor4<Scalar> input = Tensor4<Scalar>::from_channels(build_syn_input(f));
  const Tensor4<Scalar> y = forward(syn_net, input);

  std::vector<Image<Scalar>> x_syn(static_cast<std::size_t>(lf_noisy.n_sai()));
  for (int n = 0; n < lf_noisy.n_sai(); ++n) {
    if (params.syn_residual)
      x_syn[static_cast<std::size_t>(n)] = y.plane(0, n) + f.x_avg;
    else
      x_syn[static_cast<std::size_t>(n)] = y.plane(0, n);
  }
  return {std::move(x_syn), f.x_avg};
}

// Full APA pipeline: features -> syn-Net -> per-SAI view-Net ->
// X_parallax + X_avg, clamped at the very end.
template <class Scalar>
DenoiseResult<Scalar> denoise_lf(const LightField<Scalar>& lf_noisy,
                                 const NetworkDef<Scalar>& syn_net,
                                 const std::vector<NetworkDef<Scalar>>& view_nets,
                                 const InferParams& params) {
  const int n_sai = lf_noisy.n_sai();
  if (view_nets.empty() ||
      (view_nets.size() != 1 && view_nets.size() != static_cast<std::size_t>(n_sai)))
    throw std::invalid_argument("denoise_lf: need one shared view net or one per SAI");
  for (const auto& vn : view_nets)
    if (vn.in_channels() != 2 || vn.out_channels() != 1)
      throw std::invalid_argument("denoise_lf: view net must map 2 channels to 1");

  auto [x_syn, x_avg] = syn_stage(lf_noisy, syn_net, params);

  DenoiseResult<Scalar> result;
  result.x_avg = x_avg;
  result.lf_syn = LightField<Scalar>(lf_noisy.w(), lf_noisy.h(), lf_noisy.n_h(), lf_noisy.n_v());
  result.lf_denoised = LightField<Scalar>(lf_noisy.w(), lf_noisy.h(), lf_noisy.n_h(), lf_noisy.n_v());
  result.x_parallax.assign(static_cast<std::size_t>(n_sai), Image<Scalar>());

  auto& res = result;
  const auto& avg = x_avg;
  const auto& syn = x_syn;
  parallel_for(0, n_sai, params.threads, [&](int n) {
    const Image<Scalar> z =
        gaussian_smooth_sai(Image<Scalar>(lf_noisy.view_linear(n)), params.gaussian);
    const Tensor4<Scalar> input = Tensor4<Scalar>::from_channels(
        build_view_input(z, avg, syn[static_cast<std::size_t>(n)]));
    const auto& net = view_nets.size() == 1 ? view_nets[0] : view_nets[static_cast<std::size_t>(n)];
    const Tensor4<Scalar> y = forward(net, input);
    res.x_parallax[static_cast<std::size_t>(n)] = y.plane(0, 0);
    res.lf_syn.view_linear(n) = clamp01(syn[static_cast<std::size_t>(n)]);
    res.lf_denoised.view_linear(n) =
        clamp01(Image<Scalar>(res.x_parallax[static_cast<std::size_t>(n)] + avg));
  });
  return result;
}

// Avg-All baseline: every SAI replaced by x_avg.
template <class Scalar>
LightField<Scalar> baseline_avg_all(const LightField<Scalar>& lf_noisy) {
  const Image<Scalar> x_avg = clamp01(compute_isotropic(lf_noisy));
  LightField<Scalar> out(lf_noisy.w(), lf_noisy.h(), lf_noisy.n_h(), lf_noisy.n_v());
  for (int n = 0; n < lf_noisy.n_sai(); ++n) out.view_linear(n) = x_avg;
  return out;
}

// APA-syn baseline: the syn stage output used directly as the denoised LF.
// Shares syn_stage with denoise_lf, so it matches DenoiseResult::lf_syn
// bit for bit.
template <class Scalar>
LightField<Scalar> baseline_apa_syn(const LightField<Scalar>& lf_noisy,
                                    const NetworkDef<Scalar>& syn_net, const InferParams& params) {
  auto [x_syn, x_avg] = syn_stage(lf_noisy, syn_net, params);
  (void)x_avg;
  LightField<Scalar> out(lf_noisy.w(), lf_noisy.h(), lf_noisy.n_h(), lf_noisy.n_v());
  for (int n = 0; n < lf_noisy.n_sai(); ++n)
    out.view_linear(n) = clamp01(x_syn[static_cast<std::size_t>(n)]);
  return out;
}

// Robust noise estimate: median absolute value of the finest diagonal
// high-pass residual, scaled by 1/0.6745, averaged over SAIs, reported on
// the [0,255] scale. The 2x2 kernel [[1,-1],[-1,1]]/2 has unit noise gain
// and annihilates bilinear ramps.
template <class Scalar>
double estimate_sigma(const LightField<Scalar>& lf) {
  if (lf.w() < 2 || lf.h() < 2) return 0.0;
  double acc = 0.0;
  std::vector<double> r(static_cast<std::size_t>((lf.w() - 1) * (lf.h() - 1)));
  for (int n = 0; n < lf.n_sai(); ++n) {
    const auto sai = lf.view_linear(n);
    std::size_t i = 0;
    for (int y = 0; y + 1 < lf.h(); ++y)
      for (int x = 0; x + 1 < lf.w(); ++x)
        r[i++] = std::abs(0.5 * (static_cast<double>(sai(y, x)) - sai(y, x + 1) -
                                 sai(y + 1, x) + sai(y + 1, x + 1)));
    auto mid = r.begin() + static_cast<std::ptrdiff_t>(r.size() / 2);
    std::nth_element(r.begin(), mid, r.end());
    acc += *mid / 0.6745;
  }
  return acc / lf.n_sai() * 255.0;
}

// Nearest of the trained noise levels.
inline double nearest_trained_sigma(double sigma_255) {
  double best = 10.0;
  for (double level : {10.0, 20.0, 50.0})
    if (std::abs(sigma_255 - level) < std::abs(sigma_255 - best)) best = level;
  return best;
}

}  // namespace apa
