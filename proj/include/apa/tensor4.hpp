#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "apa/image.hpp"

namespace apa {

// Dense activation tensor [batch][channel][row][col], flat row-major storage.
template <class Scalar>
class Tensor4 {
public:
  Tensor4() = default;

  Tensor4(int n, int c, int h, int w) : n_(n), c_(c), h_(h), w_(w) {
    if (n < 1 || c < 1 || h < 1 || w < 1)
      throw std::invalid_argument("Tensor4: dims must be positive");
    data_.setZero(count());
  }

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  Eigen::Index count() const { return static_cast<Eigen::Index>(n_) * c_ * h_ * w_; }
  bool same_dims(const Tensor4& o) const {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  Scalar& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  Scalar at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  ImageMap<Scalar> plane(int n, int c) {
    return ImageMap<Scalar>(data_.data() + plane_offset(n, c), h_, w_);
  }
  ConstImageMap<Scalar> plane(int n, int c) const {
    return ConstImageMap<Scalar>(data_.data() + plane_offset(n, c), h_, w_);
  }

  // Batch item as a [channels x pixels] row-major matrix (GEMM operand).
  using ItemMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstItemMap =
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  ItemMap item(int n) {
    return ItemMap(data_.data() + static_cast<Eigen::Index>(n) * c_ * h_ * w_, c_,
                   static_cast<Eigen::Index>(h_) * w_);
  }
  ConstItemMap item(int n) const {
    return ConstItemMap(data_.data() + static_cast<Eigen::Index>(n) * c_ * h_ * w_, c_,
                        static_cast<Eigen::Index>(h_) * w_);
  }

  // Single-item tensor view of batch item n (copies).
  Tensor4 slice_item(int n) const {
    Tensor4 out(1, c_, h_, w_);
    out.item(0) = item(n);
    return out;
  }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  Eigen::Array<Scalar, Eigen::Dynamic, 1>& array() { return data_; }
  const Eigen::Array<Scalar, Eigen::Dynamic, 1>& array() const { return data_; }

  void set_zero() { data_.setZero(); }

  template <class Other>
  Tensor4<Other> cast() const {
    Tensor4<Other> out(n_, c_, h_, w_);
    out.array() = data_.template cast<Other>();
    return out;
  }

  // Channel stack (batch of one) from a list of equally sized images.
  static Tensor4 from_channels(const std::vector<Image<Scalar>>& channels) {
    if (channels.empty()) throw std::invalid_argument("Tensor4::from_channels: empty stack");
    const int h = static_cast<int>(channels[0].rows());
    const int w = static_cast<int>(channels[0].cols());
    Tensor4 out(1, static_cast<int>(channels.size()), h, w);
    for (std::size_t c = 0; c < channels.size(); ++c) {
      if (channels[c].rows() != h || channels[c].cols() != w)
        throw std::invalid_argument("Tensor4::from_channels: channel dimensions differ");
      out.plane(0, static_cast<int>(c)) = channels[c];
    }
    return out;
  }

private:
  Eigen::Index index(int n, int c, int y, int x) const {
    return ((static_cast<Eigen::Index>(n) * c_ + c) * h_ + y) * w_ + x;
  }
  Eigen::Index plane_offset(int n, int c) const {
    return (static_cast<Eigen::Index>(n) * c_ + c) * h_ * w_;
  }

  Eigen::Array<Scalar, Eigen::Dynamic, 1> data_;
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
};

using Tensor4F = Tensor4<float>;
using Tensor4D = Tensor4<double>;

}  // namespace apa
