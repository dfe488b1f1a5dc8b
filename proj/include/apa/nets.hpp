#pragma once

#include <array>

#include "apa/nn.hpp"

namespace apa {

// Both nets use four conv layers with kernels 11, 5, 3, 1.
inline constexpr std::array<int, 4> kApaKernels = {11, 5, 3, 1};

// Structural parallax synthesis net: (n_h+n_v) feature channels in, one
// output channel per SAI. In residual mode the net predicts L_syn - X_avg
// and the trailing ReLU is dropped (residuals are signed); otherwise it
// predicts absolute intensities with ReLU after every layer.
struct SynNetConfig {
  std::array<int, 3> hidden = {64, 64, 64};
  bool residual = false;
};

// View-dependent detail compensation net: inputs {Z - X_avg, X_syn}, output
// X_parallax (signed, so no trailing ReLU). One net is shared across all
// SAIs by default; per_sai switches to independent weights per SAI.
struct ViewNetConfig {
  std::array<int, 3> hidden = {32, 32, 16};
  bool per_sai = false;
};

template <class Scalar>
NetworkDef<Scalar> build_syn_net(int n_h, int n_v, const SynNetConfig& cfg, rng::Stream& stream) {
  NetworkDef<Scalar> net;
  const int in = n_h + n_v;
  const int out = n_h * n_v;
  net.layers.push_back(make_conv_layer<Scalar>(in, cfg.hidden[0], kApaKernels[0], true, stream));
  net.layers.push_back(make_conv_layer<Scalar>(cfg.hidden[0], cfg.hidden[1], kApaKernels[1], true, stream));
  net.layers.push_back(make_conv_layer<Scalar>(cfg.hidden[1], cfg.hidden[2], kApaKernels[2], true, stream));
  net.layers.push_back(make_conv_layer<Scalar>(cfg.hidden[2], out, kApaKernels[3], !cfg.residual, stream));
  net.validate();
  return net;
}

template <class Scalar>
NetworkDef<Scalar> build_view_net(const ViewNetConfig& cfg, rng::Stream& stream) {
  NetworkDef<Scalar> net;
  net.layers.push_back(make_conv_layer<Scalar>(2, cfg.hidden[0], kApaKernels[0], true, stream));
  net.layers.push_back(make_conv_layer<Scalar>(cfg.hidden[0], cfg.hidden[1], kApaKernels[1], true, stream));
  net.layers.push_back(make_conv_layer<Scalar>(cfg.hidden[1], cfg.hidden[2], kApaKernels[2], true, stream));
  net.layers.push_back(make_conv_layer<Scalar>(cfg.hidden[2], 1, kApaKernels[3], false, stream));
  net.validate();
  return net;
}

}  // namespace apa
