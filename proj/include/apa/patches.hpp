#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "apa/light_field.hpp"
#include "apa/tensor4.hpp"

namespace apa {

// Training patches cropped from per-scene feature/target stacks.
// Patches are copies: mutating one never touches another or the source.
template <class Scalar>
struct PatchSet {
  Tensor4<Scalar> inputs;   // [N][C_in][ps][ps]
  Tensor4<Scalar> targets;  // [N][C_tgt][ps][ps]
  std::vector<std::string> source_ids;
  int patch_size = 0;
  int stride = 0;

  int size() const { return inputs.count() > 0 ? inputs.n() : 0; }
};

// Feature builder: maps a light field to a (input channels, target channels)
// pair of full-resolution stacks. Cropping happens afterwards, so the angular
// dimensions are never cut.
template <class Scalar>
using FeatureBuilder = std::function<std::pair<std::vector<Image<Scalar>>, std::vector<Image<Scalar>>>(
    const LightField<Scalar>&)>;

// Top-left coordinates of the regular stride grid: {0, stride, 2*stride, ...}
// while position + size <= dim.
inline std::vector<int> grid_positions(int dim, int size, int stride) {
  std::vector<int> out;
  for (int p = 0; p + size <= dim; p += stride) out.push_back(p);
  return out;
}

inline int patch_grid_count(int dim, int size, int stride) {
  return (dim - size) / stride + 1;
}

template <class Scalar>
PatchSet<Scalar> extract_patches(const LightField<Scalar>& lf, const FeatureBuilder<Scalar>& builder,
                                 int patch_size, int stride, const std::string& source_id = "") {
  if (patch_size < 1 || stride < 1)
    throw std::invalid_argument("extract_patches: patch_size and stride must be positive");
  if (patch_size > lf.w() || patch_size > lf.h())
    throw std::invalid_argument("extract_patches: patch_size " + std::to_string(patch_size) +
                                " exceeds spatial dims " + std::to_string(lf.w()) + "x" +
                                std::to_string(lf.h()));

  auto [features, targets] = builder(lf);
  if (features.empty() || targets.empty())
    throw std::invalid_argument("extract_patches: builder returned an empty stack");
  for (const auto& ch : features)
    if (ch.rows() != lf.h() || ch.cols() != lf.w())
      throw std::invalid_argument("extract_patches: feature channel dims differ from the light field");
  for (const auto& ch : targets)
    if (ch.rows() != lf.h() || ch.cols() != lf.w())
      throw std::invalid_argument("extract_patches: target channel dims differ from the light field");

  const auto xs = grid_positions(lf.w(), patch_size, stride);
  const auto ys = grid_positions(lf.h(), patch_size, stride);
  const int n = static_cast<int>(xs.size() * ys.size());

  PatchSet<Scalar> set;
  set.patch_size = patch_size;
  set.stride = stride;
  set.inputs = Tensor4<Scalar>(n, static_cast<int>(features.size()), patch_size, patch_size);
  set.targets = Tensor4<Scalar>(n, static_cast<int>(targets.size()), patch_size, patch_size);
  set.source_ids.reserve(static_cast<std::size_t>(n));

  int idx = 0;
  for (int y0 : ys) {
    for (int x0 : xs) {
      for (std::size_t c = 0; c < features.size(); ++c)
        set.inputs.plane(idx, static_cast<int>(c)) =
            features[c].block(y0, x0, patch_size, patch_size);
      for (std::size_t c = 0; c < targets.size(); ++c)
        set.targets.plane(idx, static_cast<int>(c)) =
            targets[c].block(y0, x0, patch_size, patch_size);
      set.source_ids.push_back(source_id + "@" + std::to_string(x0) + "," + std::to_string(y0));
      ++idx;
    }
  }
  return set;
}

// Concatenates patch sets with identical channel/patch geometry.
template <class Scalar>
PatchSet<Scalar> concat_patches(const std::vector<PatchSet<Scalar>>& sets) {
  if (sets.empty()) throw std::invalid_argument("concat_patches: nothing to concatenate");
  int total = 0;
  for (const auto& s : sets) {
    if (s.inputs.c() != sets[0].inputs.c() || s.targets.c() != sets[0].targets.c() ||
        s.patch_size != sets[0].patch_size)
      throw std::invalid_argument("concat_patches: incompatible patch geometry");
    total += s.size();
  }
  PatchSet<Scalar> out;
  out.patch_size = sets[0].patch_size;
  out.stride = sets[0].stride;
  out.inputs = Tensor4<Scalar>(total, sets[0].inputs.c(), out.patch_size, out.patch_size);
  out.targets = Tensor4<Scalar>(total, sets[0].targets.c(), out.patch_size, out.patch_size);
  out.source_ids.reserve(static_cast<std::size_t>(total));
  int at = 0;
  for (const auto& s : sets) {
    for (int i = 0; i < s.size(); ++i, ++at) {
      out.inputs.item(at) = s.inputs.item(i);
      out.targets.item(at) = s.targets.item(i);
      out.source_ids.push_back(s.source_ids[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

}  // namespace apa
