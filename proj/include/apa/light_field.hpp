#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "apa/image.hpp"

namespace apa {

// 4D light field, storage order [v][s][y][x]:
//   v -- vertical angular index, s -- horizontal angular index,
//   y -- spatial row, x -- spatial column.
// Angular means over s or v are then contiguous-stride reductions and each
// sub-aperture image (SAI) is a dense h-by-w block.
//
// Clean light fields hold intensities in [0, 1]; noisy ones may exceed that
// range -- nothing here clips. Treat instances as immutable once filled:
// concurrent readers are safe, construction is single-writer.
template <class Scalar>
class LightField {
public:
  LightField() = default;

  LightField(int w, int h, int n_h, int n_v) : w_(w), h_(h), n_h_(n_h), n_v_(n_v) {
    if (w < 1 || h < 1 || n_h < 1 || n_v < 1)
      throw std::invalid_argument("LightField: all dimensions must be >= 1, got w=" +
                                  std::to_string(w) + " h=" + std::to_string(h) +
                                  " n_h=" + std::to_string(n_h) + " n_v=" + std::to_string(n_v));
    data_.setZero(count());
  }

  int w() const { return w_; }
  int h() const { return h_; }
  int n_h() const { return n_h_; }
  int n_v() const { return n_v_; }
  int n_sai() const { return n_h_ * n_v_; }

  Eigen::Index count() const {
    return static_cast<Eigen::Index>(w_) * h_ * n_h_ * n_v_;
  }

  bool same_dims(const LightField& o) const {
    return w_ == o.w_ && h_ == o.h_ && n_h_ == o.n_h_ && n_v_ == o.n_v_;
  }

  // 0-based element access.
  Scalar& at(int v, int s, int y, int x) { return data_[index(v, s, y, x)]; }
  Scalar at(int v, int s, int y, int x) const { return data_[index(v, s, y, x)]; }

  // 0-based SAI view (no copy).
  ImageMap<Scalar> view(int s, int v) {
    return ImageMap<Scalar>(data_.data() + sai_offset(s, v), h_, w_);
  }
  ConstImageMap<Scalar> view(int s, int v) const {
    return ConstImageMap<Scalar>(data_.data() + sai_offset(s, v), h_, w_);
  }

  // SAI linear index n in [0, n_sai), v-major: n = v * n_h + s.
  ConstImageMap<Scalar> view_linear(int n) const { return view(n % n_h_, n / n_h_); }
  ImageMap<Scalar> view_linear(int n) { return view(n % n_h_, n / n_h_); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  template <class Other>
  LightField<Other> cast() const {
    LightField<Other> out(w_, h_, n_h_, n_v_);
    for (Eigen::Index i = 0; i < count(); ++i)
      out.data()[i] = static_cast<Other>(data_[i]);
    return out;
  }

private:
  Eigen::Index index(int v, int s, int y, int x) const {
    return ((static_cast<Eigen::Index>(v) * n_h_ + s) * h_ + y) * w_ + x;
  }
  Eigen::Index sai_offset(int s, int v) const {
    return (static_cast<Eigen::Index>(v) * n_h_ + s) * h_ * w_;
  }

  Eigen::Array<Scalar, Eigen::Dynamic, 1> data_;
  int w_ = 0, h_ = 0, n_h_ = 0, n_v_ = 0;
};

using LightFieldF = LightField<float>;
using LightFieldD = LightField<double>;

// One sub-aperture image together with its 1-based angular index.
template <class Scalar>
struct Sai {
  Image<Scalar> pixels;
  int s = 0;  // horizontal angular index, 1-based
  int v = 0;  // vertical angular index, 1-based
};

// 1-based SAI extraction (copies the slice).
template <class Scalar>
Sai<Scalar> get_sai(const LightField<Scalar>& lf, int s, int v) {
  if (s < 1 || s > lf.n_h() || v < 1 || v > lf.n_v())
    throw std::out_of_range("get_sai: index (s=" + std::to_string(s) + ", v=" + std::to_string(v) +
                            ") outside angular grid " + std::to_string(lf.n_h()) + "x" +
                            std::to_string(lf.n_v()));
  return Sai<Scalar>{Image<Scalar>(lf.view(s - 1, v - 1)), s, v};
}

// BT.601 luma. The standard gray conversion; the weights sum to 1.
template <class Scalar>
Image<Scalar> rgb_to_gray(const Image<Scalar>& r, const Image<Scalar>& g, const Image<Scalar>& b) {
  if (r.rows() != g.rows() || r.cols() != g.cols() || r.rows() != b.rows() || r.cols() != b.cols())
    throw std::invalid_argument("rgb_to_gray: channel dimensions differ");
  return Scalar(0.299) * r + Scalar(0.587) * g + Scalar(0.114) * b;
}

}  // namespace apa
