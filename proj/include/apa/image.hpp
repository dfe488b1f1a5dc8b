#pragma once

#include <Eigen/Dense>

namespace apa {

// 2D intensity image, rows = y (height), cols = x (width). Row-major so a
// view into LightField storage maps directly.
template <class Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using ImageMap = Eigen::Map<Image<Scalar>>;
template <class Scalar>
using ConstImageMap = Eigen::Map<const Image<Scalar>>;

using ImageF = Image<float>;
using ImageD = Image<double>;

// Binary mask image (parallax edge maps).
using BinaryMap = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
Image<Scalar> clamp01(const Image<Scalar>& img) {
  return img.min(Scalar(1)).max(Scalar(0));
}

}  // namespace apa
