#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "apa/rng.hpp"
#include "apa/tensor4.hpp"

// Minimal convolutional substrate: stride-1 same-padded conv layers with
// optional ReLU, exact backward pass, MSE loss, Xavier init and Adam.
// Everything is templated on the scalar so the float training path and the
// double verification path share one implementation.

namespace apa {

template <class Scalar>
using MatrixRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// One convolution layer. Weights are stored [out_ch x in_ch*k*k] row-major,
// which is both the GEMM operand for im2col and the [out][in][k][k] wire
// order of checkpoints.
template <class Scalar>
struct ConvLayerParams {
  MatrixRM<Scalar> weights;
  VectorX<Scalar> bias;
  int in_ch = 0;
  int out_ch = 0;
  int k = 0;
  bool apply_relu = true;

  void validate() const {
    if (k < 1 || k % 2 == 0)
      throw std::invalid_argument("ConvLayerParams: kernel must be odd, got " + std::to_string(k));
    if (weights.rows() != out_ch || weights.cols() != static_cast<Eigen::Index>(in_ch) * k * k)
      throw std::invalid_argument("ConvLayerParams: weight shape mismatch");
    if (bias.size() != out_ch) throw std::invalid_argument("ConvLayerParams: bias shape mismatch");
  }
};

template <class Scalar>
struct NetworkDef {
  std::vector<ConvLayerParams<Scalar>> layers;

  void validate() const {
    if (layers.empty()) throw std::invalid_argument("NetworkDef: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].validate();
      if (i > 0 && layers[i].in_ch != layers[i - 1].out_ch)
        throw std::invalid_argument("NetworkDef: channel chain broken at layer " + std::to_string(i));
    }
  }

  int in_channels() const { return layers.front().in_ch; }
  int out_channels() const { return layers.back().out_ch; }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }

  template <class Other>
  NetworkDef<Other> cast() const {
    NetworkDef<Other> out;
    out.layers.reserve(layers.size());
    for (const auto& l : layers) {
      ConvLayerParams<Other> o;
      o.weights = l.weights.template cast<Other>();
      o.bias = l.bias.template cast<Other>();
      o.in_ch = l.in_ch;
      o.out_ch = l.out_ch;
      o.k = l.k;
      o.apply_relu = l.apply_relu;
      out.layers.push_back(std::move(o));
    }
    return out;
  }
};

// Uniform Xavier/Glorot samples on [-sqrt(6/(fan_in+fan_out)), +...), filled
// in row-major order from the stream.
template <class Scalar>
MatrixRM<Scalar> xavier_init(int fan_in, int fan_out, Eigen::Index rows, Eigen::Index cols,
                             rng::Stream& stream) {
  if (fan_in < 1 || fan_out < 1) throw std::invalid_argument("xavier_init: fans must be >= 1");
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  MatrixRM<Scalar> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = static_cast<Scalar>(stream.uniform(-bound, bound));
  return m;
}

// Xavier weights (fans = channel count times kernel area), zero bias.
template <class Scalar>
ConvLayerParams<Scalar> make_conv_layer(int in_ch, int out_ch, int k, bool relu,
                                        rng::Stream& stream) {
  ConvLayerParams<Scalar> l;
  l.in_ch = in_ch;
  l.out_ch = out_ch;
  l.k = k;
  l.apply_relu = relu;
  l.weights = xavier_init<Scalar>(in_ch * k * k, out_ch * k * k, out_ch,
                                  static_cast<Eigen::Index>(in_ch) * k * k, stream);
  l.bias = VectorX<Scalar>::Zero(out_ch);
  l.validate();
  return l;
}

namespace detail {

// Unrolls one batch item into [in_ch*k*k x H*W]: column p = y*W+x holds the
// zero-padded receptive field of output pixel (y, x). Rows are contiguous
// over p, so each (c, ky, kx) row is filled with contiguous copies.
template <class Scalar>
void im2col(const Tensor4<Scalar>& x, int item, int k, MatrixRM<Scalar>& col) {
  const int h = x.h(), w = x.w(), c_in = x.c();
  const int pad = (k - 1) / 2;
  col.setZero(static_cast<Eigen::Index>(c_in) * k * k, static_cast<Eigen::Index>(h) * w);
  for (int c = 0; c < c_in; ++c) {
    const auto plane = x.plane(item, c);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
        const int x_lo = std::max(0, pad - kx);            // first output col with in-bounds source
        const int x_hi = w - 1 - std::max(0, kx - pad);    // last one
        if (x_lo > x_hi) continue;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          col.block(row, static_cast<Eigen::Index>(y) * w + x_lo, 1, x_hi - x_lo + 1) =
              plane.matrix().block(sy, x_lo + kx - pad, 1, x_hi - x_lo + 1);
        }
      }
    }
  }
}

// Scatter-add transpose of im2col.
template <class Scalar>
void col2im_add(const MatrixRM<Scalar>& dcol, int k, Tensor4<Scalar>& dx, int item) {
  const int h = dx.h(), w = dx.w(), c_in = dx.c();
  const int pad = (k - 1) / 2;
  for (int c = 0; c < c_in; ++c) {
    auto plane = dx.plane(item, c);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * k + ky) * k + kx;
        const int x_lo = std::max(0, pad - kx);
        const int x_hi = w - 1 - std::max(0, kx - pad);
        if (x_lo > x_hi) continue;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          plane.matrix().block(sy, x_lo + kx - pad, 1, x_hi - x_lo + 1) +=
              dcol.block(row, static_cast<Eigen::Index>(y) * w + x_lo, 1, x_hi - x_lo + 1);
        }
      }
    }
  }
}

}  // namespace detail

// Stride-1 cross-correlation with zero "same" padding; output spatial dims
// equal the input's. Bias per output channel, then ReLU if flagged.
template <class Scalar>
Tensor4<Scalar> conv2d_forward(const Tensor4<Scalar>& x, const ConvLayerParams<Scalar>& layer) {
  layer.validate();
  if (x.c() != layer.in_ch)
    throw std::invalid_argument("conv2d_forward: input has " + std::to_string(x.c()) +
                                " channels, layer expects " + std::to_string(layer.in_ch));
  Tensor4<Scalar> y(x.n(), layer.out_ch, x.h(), x.w());
  MatrixRM<Scalar> col;
  for (int n = 0; n < x.n(); ++n) {
    auto out = y.item(n);
    if (layer.k == 1) {
      out.noalias() = layer.weights * x.item(n);
    } else {
      detail::im2col(x, n, layer.k, col);
      out.noalias() = layer.weights * col;
    }
    out.colwise() += layer.bias;
    if (layer.apply_relu) out = out.cwiseMax(Scalar(0));
  }
  return y;
}

template <class Scalar>
struct LayerGrads {
  MatrixRM<Scalar> d_weights;
  VectorX<Scalar> d_bias;
};

// Exact gradients of conv2d_forward. `y_post` is the forward output of this
// layer (used as the ReLU mask: y > 0 iff the unit was active).
template <class Scalar>
LayerGrads<Scalar> conv2d_backward(const Tensor4<Scalar>& x, const ConvLayerParams<Scalar>& layer,
                                   const Tensor4<Scalar>& dy, const Tensor4<Scalar>& y_post,
                                   Tensor4<Scalar>& dx) {
  if (dy.n() != x.n() || dy.c() != layer.out_ch || dy.h() != x.h() || dy.w() != x.w())
    throw std::invalid_argument("conv2d_backward: dy shape mismatch");
  if (layer.apply_relu && !dy.same_dims(y_post))
    throw std::invalid_argument("conv2d_backward: y_post shape mismatch");

  LayerGrads<Scalar> g;
  g.d_weights.setZero(layer.weights.rows(), layer.weights.cols());
  g.d_bias.setZero(layer.bias.size());
  dx = Tensor4<Scalar>(x.n(), x.c(), x.h(), x.w());

  MatrixRM<Scalar> col, dpre, dcol;
  for (int n = 0; n < x.n(); ++n) {
    dpre = dy.item(n);
    if (layer.apply_relu) {
      auto post = y_post.item(n);
      dpre = dpre.cwiseProduct((post.array() > Scalar(0)).template cast<Scalar>().matrix());
    }
    g.d_bias += dpre.rowwise().sum();
    if (layer.k == 1) {
      g.d_weights.noalias() += dpre * x.item(n).transpose();
      dx.item(n).noalias() = layer.weights.transpose() * dpre;
    } else {
      detail::im2col(x, n, layer.k, col);
      g.d_weights.noalias() += dpre * col.transpose();
      dcol.noalias() = layer.weights.transpose() * dpre;
      detail::col2im_add(dcol, layer.k, dx, n);
    }
  }
  return g;
}

// Per-layer post-activation values kept for the backward pass;
// activations[0] is the network input, activations[i+1] the output of layer i.
template <class Scalar>
struct ForwardCache {
  std::vector<Tensor4<Scalar>> activations;
};

template <class Scalar>
Tensor4<Scalar> forward(const NetworkDef<Scalar>& net, const Tensor4<Scalar>& x,
                        ForwardCache<Scalar>* cache = nullptr) {
  net.validate();
  if (cache) {
    cache->activations.clear();
    cache->activations.reserve(net.layers.size() + 1);
    cache->activations.push_back(x);
  }
  Tensor4<Scalar> a = x;
  for (const auto& layer : net.layers) {
    a = conv2d_forward(a, layer);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

template <class Scalar>
struct NetGrads {
  std::vector<LayerGrads<Scalar>> layers;
  Tensor4<Scalar> d_input;

  NetGrads& operator+=(const NetGrads& o) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      layers[i].d_weights += o.layers[i].d_weights;
      layers[i].d_bias += o.layers[i].d_bias;
    }
    return *this;
  }
  NetGrads& operator*=(Scalar f) {
    for (auto& l : layers) {
      l.d_weights *= f;
      l.d_bias *= f;
    }
    return *this;
  }
};

template <class Scalar>
NetGrads<Scalar> zero_grads(const NetworkDef<Scalar>& net) {
  NetGrads<Scalar> g;
  g.layers.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    g.layers[i].d_weights.setZero(net.layers[i].weights.rows(), net.layers[i].weights.cols());
    g.layers[i].d_bias.setZero(net.layers[i].bias.size());
  }
  return g;
}

// Chain rule through all layers. The cache must come from a forward pass of
// this network on the same input.
template <class Scalar>
NetGrads<Scalar> backward(const NetworkDef<Scalar>& net, const ForwardCache<Scalar>& cache,
                          const Tensor4<Scalar>& dy) {
  if (cache.activations.size() != net.layers.size() + 1)
    throw std::invalid_argument("backward: cache does not match network (stale cache?)");
  const auto& out = cache.activations.back();
  if (!dy.same_dims(out)) throw std::invalid_argument("backward: dy shape mismatch");
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    if (cache.activations[i].c() != net.layers[i].in_ch)
      throw std::invalid_argument("backward: cache does not match network (stale cache?)");

  NetGrads<Scalar> g;
  g.layers.resize(net.layers.size());
  Tensor4<Scalar> grad = dy;
  Tensor4<Scalar> dx;
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const std::size_t ui = static_cast<std::size_t>(i);
    g.layers[ui] = conv2d_backward(cache.activations[ui], net.layers[ui], grad,
                                   cache.activations[ui + 1], dx);
    grad = std::move(dx);
  }
  g.d_input = std::move(grad);
  return g;
}

// Mean over all elements of the squared difference, and its gradient.
template <class Scalar>
std::pair<double, Tensor4<Scalar>> mse_loss(const Tensor4<Scalar>& pred,
                                            const Tensor4<Scalar>& target) {
  if (!pred.same_dims(target)) throw std::invalid_argument("mse_loss: shape mismatch");
  const double n = static_cast<double>(pred.count());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pred.count(); ++i) {
    const double d = static_cast<double>(pred.data()[i]) - static_cast<double>(target.data()[i]);
    acc += d * d;
  }
  Tensor4<Scalar> grad(pred.n(), pred.c(), pred.h(), pred.w());
  grad.array() = (pred.array() - target.array()) * static_cast<Scalar>(2.0 / n);
  return {acc / n, std::move(grad)};
}

// Optimizer hyper-parameters (Adam defaults per the training protocol).
struct TrainHyper {
  double alpha = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_adam = 1e-8;
  int batch_size = 50;
  int epochs = 1;
  std::uint64_t seed = 0;

  void validate() const {
    if (alpha <= 0) throw std::invalid_argument("TrainHyper: alpha must be > 0");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
      throw std::invalid_argument("TrainHyper: betas must lie in [0, 1)");
    if (batch_size < 1) throw std::invalid_argument("TrainHyper: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("TrainHyper: epochs must be >= 1");
  }
};

// First/second-moment accumulators shaped like each parameter tensor.
template <class Scalar>
struct AdamState {
  struct Moments {
    MatrixRM<Scalar> m_w, v_w;
    VectorX<Scalar> m_b, v_b;
  };
  std::vector<Moments> layers;
  std::int64_t t = 0;

  static AdamState init(const NetworkDef<Scalar>& net) {
    AdamState s;
    s.layers.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      const auto& l = net.layers[i];
      s.layers[i].m_w.setZero(l.weights.rows(), l.weights.cols());
      s.layers[i].v_w.setZero(l.weights.rows(), l.weights.cols());
      s.layers[i].m_b.setZero(l.bias.size());
      s.layers[i].v_b.setZero(l.bias.size());
    }
    return s;
  }
};

// Bias-corrected Adam step; increments the step counter first.
template <class Scalar>
void adam_step(NetworkDef<Scalar>& net, const NetGrads<Scalar>& grads, AdamState<Scalar>& state,
               const TrainHyper& hyper) {
  if (grads.layers.size() != net.layers.size() || state.layers.size() != net.layers.size())
    throw std::invalid_argument("adam_step: grads/state shape mismatch");
  state.t += 1;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto& l = net.layers[i];
    auto& s = state.layers[i];
    const auto& g = grads.layers[i];
    const auto step = [&](auto& theta, const auto& grad, auto& m, auto& v) {
      m = static_cast<Scalar>(hyper.beta1) * m + static_cast<Scalar>(1.0 - hyper.beta1) * grad;
      v.array() = static_cast<Scalar>(hyper.beta2) * v.array() +
                  static_cast<Scalar>(1.0 - hyper.beta2) * grad.array().square();
      theta.array() -= static_cast<Scalar>(hyper.alpha) * (m.array() / static_cast<Scalar>(c1)) /
                       ((v.array() / static_cast<Scalar>(c2)).sqrt() +
                        static_cast<Scalar>(hyper.eps_adam));
    };
    step(l.weights, g.d_weights, s.m_w, s.v_w);
    step(l.bias, g.d_bias, s.m_b, s.v_b);
  }
}

// Central finite-difference check of the analytic gradients on a random
// parameter subsample. Relative error uses max(|analytic|, |numeric|, 1e-3)
// as denominator so near-zero gradients are judged absolutely.
// `scale_dw` deliberately corrupts the analytic weight gradients; 1.0 checks
// the real thing, anything else verifies the harness notices.
template <class Scalar>
double grad_check(const NetworkDef<Scalar>& net, const Tensor4<Scalar>& x,
                  const Tensor4<Scalar>& target, double h, int samples_per_layer,
                  rng::Stream& stream, double scale_dw = 1.0) {
  ForwardCache<Scalar> cache;
  const Tensor4<Scalar> y = forward(net, x, &cache);
  const auto [loss0, dloss] = mse_loss(y, target);
  (void)loss0;
  NetGrads<Scalar> analytic = backward(net, cache, dloss);

  NetworkDef<Scalar> probe = net;
  const auto loss_at = [&]() {
    const auto [l, g] = mse_loss(forward(probe, x), target);
    (void)g;
    return l;
  };

  double max_rel = 0.0;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    auto& layer = probe.layers[li];
    const Eigen::Index n_w = layer.weights.size();
    const Eigen::Index n_b = layer.bias.size();
    for (int s = 0; s < samples_per_layer; ++s) {
      const Eigen::Index pick =
          static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(n_w + n_b)));
      Scalar* p;
      double a;
      if (pick < n_w) {
        p = layer.weights.data() + pick;
        a = static_cast<double>(analytic.layers[li].d_weights.data()[pick]) * scale_dw;
      } else {
        p = layer.bias.data() + (pick - n_w);
        a = static_cast<double>(analytic.layers[li].d_bias.data()[pick - n_w]);
      }
      const Scalar saved = *p;
      *p = saved + static_cast<Scalar>(h);
      const double lp = loss_at();
      *p = saved - static_cast<Scalar>(h);
      const double lm = loss_at();
      *p = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-3});
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace apa
