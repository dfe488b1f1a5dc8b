#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "apa/checkpoint.hpp"
#include "apa/features.hpp"
#include "apa/infer.hpp"
#include "apa/nets.hpp"
#include "apa/nn.hpp"
#include "apa/noise.hpp"
#include "apa/parallel.hpp"
#include "apa/patches.hpp"
#include "apa/rng.hpp"
#include "apa/version.hpp"

// The two training procedures. Patch order is reshuffled once per epoch from
// the run seed; the last partial batch is kept. Per-item gradients are
// reduced in item order, so results are bit-identical for any thread count.

namespace apa {

struct TrainConfig {
  TrainHyper hyper;
  double sigma_255 = 20.0;
  int patch_size = 32;
  int stride = 16;
  GuidedFilterParams guided;
  GaussianParams gaussian = GaussianParams::from_sigma(1.5);
  SynNetConfig syn;
  ViewNetConfig view;
  int view_patches_per_sai = 0;  // 0 = the full stride grid of every SAI
  int threads = 1;

  void validate() const {
    hyper.validate();
    if (sigma_255 <= 0 || sigma_255 > 255)
      throw std::invalid_argument("TrainConfig: sigma_255 must lie in (0, 255]");
    if (patch_size < 1 || stride < 1)
      throw std::invalid_argument("TrainConfig: patch_size and stride must be positive");
  }
};

struct LossRecord {
  std::int64_t step = 0;
  int epoch = 0;
  double loss = 0.0;
};

template <class Scalar>
struct TrainedStage {
  std::vector<NetworkDef<Scalar>> nets;  // one, or n_sai in per-SAI view mode
  CheckpointMeta meta;
  std::vector<LossRecord> log;
  double first_epoch_mean = 0.0;
  double last_epoch_mean = 0.0;
};

// Minibatch Adam over a patch set. Per-item forward/backward may run on
// several threads; the gradient reduction order is fixed by item index.
template <class Scalar>
void train_network(NetworkDef<Scalar>& net, const PatchSet<Scalar>& data, const TrainHyper& hyper,
                   std::uint64_t shuffle_seed, int threads, std::vector<LossRecord>& log) {
  hyper.validate();
  if (data.size() == 0) throw std::invalid_argument("train_network: empty patch set");

  AdamState<Scalar> state = AdamState<Scalar>::init(net);
  std::vector<int> order(static_cast<std::size_t>(data.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  std::int64_t step = 0;
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    rng::Stream shuffle_stream(rng::derive(shuffle_seed, "epoch/" + std::to_string(epoch)));
    rng::shuffle(order, shuffle_stream);

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch_size)) {
      const int batch_n =
          static_cast<int>(std::min(order.size() - start, static_cast<std::size_t>(hyper.batch_size)));

      std::vector<NetGrads<Scalar>> item_grads(static_cast<std::size_t>(batch_n));
      std::vector<double> item_loss(static_cast<std::size_t>(batch_n), 0.0);
      parallel_for(0, batch_n, threads, [&](int i) {
        const int idx = order[start + static_cast<std::size_t>(i)];
        const Tensor4<Scalar> x = data.inputs.slice_item(idx);
        const Tensor4<Scalar> t = data.targets.slice_item(idx);
        ForwardCache<Scalar> cache;
        const Tensor4<Scalar> y = forward(net, x, &cache);
        auto [loss, dloss] = mse_loss(y, t);
        item_grads[static_cast<std::size_t>(i)] = backward(net, cache, dloss);
        item_loss[static_cast<std::size_t>(i)] = loss;
      });

      NetGrads<Scalar> total = zero_grads(net);
      double loss_sum = 0.0;
      for (int i = 0; i < batch_n; ++i) {
        total += item_grads[static_cast<std::size_t>(i)];
        loss_sum += item_loss[static_cast<std::size_t>(i)];
      }
      total *= static_cast<Scalar>(1.0 / batch_n);

      adam_step(net, total, state, hyper);
      ++step;
      log.push_back({step, epoch, loss_sum / batch_n});
    }
  }
}

namespace detail {

inline std::pair<double, double> epoch_means(const std::vector<LossRecord>& log) {
  if (log.empty()) return {0.0, 0.0};
  const int first = log.front().epoch, last = log.back().epoch;
  double facc = 0.0, lacc = 0.0;
  int fn = 0, ln = 0;
  for (const auto& r : log) {
    if (r.epoch == first) {
      facc += r.loss;
      ++fn;
    }
    if (r.epoch == last) {
      lacc += r.loss;
      ++ln;
    }
  }
  return {facc / fn, lacc / ln};
}

template <class Scalar>
void check_scenes(const std::vector<LightField<Scalar>>& scenes, const TrainConfig& cfg) {
  if (scenes.empty()) throw std::invalid_argument("training: need at least one scene");
  for (const auto& s : scenes) {
    if (s.n_h() != scenes.front().n_h() || s.n_v() != scenes.front().n_v())
      throw std::invalid_argument("training: scenes must share angular dimensions");
    if (cfg.patch_size > s.w() || cfg.patch_size > s.h())
      throw std::invalid_argument("training: patch_size exceeds scene spatial dims");
  }
}

inline std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

inline CheckpointMeta stage_meta(const char* kind, const TrainConfig& cfg, int n_h, int n_v) {
  CheckpointMeta meta;
  meta["kind"] = kind;
  meta["sigma_255"] = format_double(cfg.sigma_255);
  meta["n_h"] = std::to_string(n_h);
  meta["n_v"] = std::to_string(n_v);
  meta["guided.radius"] = std::to_string(cfg.guided.radius);
  meta["guided.epsilon"] = format_double(cfg.guided.epsilon);
  meta["gaussian.sigma_g"] = format_double(cfg.gaussian.sigma_g);
  meta["syn.residual"] = cfg.syn.residual ? "1" : "0";
  meta["seed"] = std::to_string(cfg.hyper.seed);
  meta["tool_version"] = kToolVersion;
  const auto widths = [](const std::array<int, 3>& ws) {
    return std::to_string(ws[0]) + "," + std::to_string(ws[1]) + "," + std::to_string(ws[2]);
  };
  meta["syn.widths"] = widths(cfg.syn.hidden);
  meta["view.widths"] = widths(cfg.view.hidden);
  meta["view.per_sai"] = cfg.view.per_sai ? "1" : "0";
  return meta;
}

}  // namespace detail

// Derived noise seed for scene i; both stages degrade a scene identically.
inline std::uint64_t scene_noise_seed(std::uint64_t run_seed, int scene_index) {
  return rng::derive(run_seed, "noise/scene" + std::to_string(scene_index));
}

// Trains syn-Net: 16-channel normalized APA input patches against all-SAI
// clean targets (minus x_avg in residual mode).
template <class Scalar>
TrainedStage<Scalar> train_syn(const std::vector<LightField<Scalar>>& scenes,
                               const TrainConfig& cfg) {
  cfg.validate();
  detail::check_scenes(scenes, cfg);
  const int n_h = scenes.front().n_h(), n_v = scenes.front().n_v();

  std::vector<PatchSet<Scalar>> per_scene;
  per_scene.reserve(scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& clean = scenes[i];
    const LightField<Scalar> noisy = add_awgn(
        clean, NoiseConfig{cfg.sigma_255, scene_noise_seed(cfg.hyper.seed, static_cast<int>(i))},
        cfg.threads);

    const FeatureBuilder<Scalar> builder = [&](const LightField<Scalar>& lf) {
      ApaFeatures<Scalar> f = compute_apa_features(lf, cfg.guided, cfg.threads);
      std::vector<Image<Scalar>> targets;
      targets.reserve(static_cast<std::size_t>(clean.n_sai()));
      for (int n = 0; n < clean.n_sai(); ++n) {
        if (cfg.syn.residual)
          targets.emplace_back(clean.view_linear(n) - f.x_avg);
        else
          targets.emplace_back(clean.view_linear(n));
      }
      return std::make_pair(build_syn_input(f), std::move(targets));
    };
    per_scene.push_back(extract_patches(noisy, builder, cfg.patch_size, cfg.stride,
                                        "scene" + std::to_string(i)));
  }
  const PatchSet<Scalar> data = concat_patches(per_scene);

  rng::Stream init_stream(rng::derive(cfg.hyper.seed, "init/syn"));
  TrainedStage<Scalar> out;
  out.nets.push_back(build_syn_net<Scalar>(n_h, n_v, cfg.syn, init_stream));
  train_network(out.nets[0], data, cfg.hyper, rng::derive(cfg.hyper.seed, "shuffle/syn"),
                cfg.threads, out.log);
  std::tie(out.first_epoch_mean, out.last_epoch_mean) = detail::epoch_means(out.log);
  out.meta = detail::stage_meta("syn", cfg, n_h, n_v);
  return out;
}

namespace detail {

// Spatial crop positions for one SAI: the full stride grid, or an
// equal-count random subsample of it.
inline std::vector<std::pair<int, int>> view_patch_positions(int w, int h, int size, int stride,
                                                             int wanted, std::uint64_t seed) {
  std::vector<std::pair<int, int>> all;
  for (int y : grid_positions(h, size, stride))
    for (int x : grid_positions(w, size, stride)) all.emplace_back(x, y);
  if (wanted <= 0 || wanted >= static_cast<int>(all.size())) return all;
  rng::Stream stream(seed);
  rng::shuffle(all, stream);
  all.resize(static_cast<std::size_t>(wanted));
  return all;
}

}  // namespace detail

// Trains view-Net against frozen syn-Net output. Inputs per SAI are
// {Z - X_avg, X_syn}; targets are clean SAI minus x_avg. Every SAI
// contributes the same number of samples.
template <class Scalar>
TrainedStage<Scalar> train_view(const std::vector<LightField<Scalar>>& scenes,
                                const NetworkDef<Scalar>& syn_net, const TrainConfig& cfg) {
  cfg.validate();
  detail::check_scenes(scenes, cfg);
  const int n_h = scenes.front().n_h(), n_v = scenes.front().n_v();
  const int n_sai = n_h * n_v;

  InferParams infer_params{cfg.guided, cfg.gaussian, cfg.syn.residual, cfg.threads};

  // Assemble one patch list per SAI so both view modes can reuse it.
  std::vector<std::vector<std::pair<Tensor4<Scalar>, Tensor4<Scalar>>>> per_sai(
      static_cast<std::size_t>(n_sai));

  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& clean = scenes[i];
    const LightField<Scalar> noisy = add_awgn(
        clean, NoiseConfig{cfg.sigma_255, scene_noise_seed(cfg.hyper.seed, static_cast<int>(i))},
        cfg.threads);
    auto [x_syn, x_avg] = syn_stage(noisy, syn_net, infer_params);

    for (int n = 0; n < n_sai; ++n) {
      const Image<Scalar> z =
          gaussian_smooth_sai(Image<Scalar>(noisy.view_linear(n)), cfg.gaussian);
      const auto input_channels = build_view_input(z, x_avg, x_syn[static_cast<std::size_t>(n)]);
      const Image<Scalar> target = clean.view_linear(n) - x_avg;

      const auto positions = detail::view_patch_positions(
          clean.w(), clean.h(), cfg.patch_size, cfg.stride, cfg.view_patches_per_sai,
          rng::derive(cfg.hyper.seed,
                      "viewpatch/scene" + std::to_string(i) + "/sai" + std::to_string(n)));
      for (const auto& [x0, y0] : positions) {
        Tensor4<Scalar> in(1, 2, cfg.patch_size, cfg.patch_size);
        in.plane(0, 0) = input_channels[0].block(y0, x0, cfg.patch_size, cfg.patch_size);
        in.plane(0, 1) = input_channels[1].block(y0, x0, cfg.patch_size, cfg.patch_size);
        Tensor4<Scalar> tg(1, 1, cfg.patch_size, cfg.patch_size);
        tg.plane(0, 0) = target.block(y0, x0, cfg.patch_size, cfg.patch_size);
        per_sai[static_cast<std::size_t>(n)].emplace_back(std::move(in), std::move(tg));
      }
    }
  }

  const auto to_patch_set = [&](const std::vector<int>& sai_indices) {
    int total = 0;
    for (int n : sai_indices) total += static_cast<int>(per_sai[static_cast<std::size_t>(n)].size());
    PatchSet<Scalar> set;
    set.patch_size = cfg.patch_size;
    set.stride = cfg.stride;
    set.inputs = Tensor4<Scalar>(total, 2, cfg.patch_size, cfg.patch_size);
    set.targets = Tensor4<Scalar>(total, 1, cfg.patch_size, cfg.patch_size);
    int at = 0;
    for (int n : sai_indices) {
      for (const auto& [in, tg] : per_sai[static_cast<std::size_t>(n)]) {
        set.inputs.item(at) = in.item(0);
        set.targets.item(at) = tg.item(0);
        set.source_ids.push_back("sai" + std::to_string(n));
        ++at;
      }
    }
    return set;
  };

  TrainedStage<Scalar> out;
  if (cfg.view.per_sai) {
    for (int n = 0; n < n_sai; ++n) {
      rng::Stream init_stream(rng::derive(cfg.hyper.seed, "init/view/sai" + std::to_string(n)));
      NetworkDef<Scalar> net = build_view_net<Scalar>(cfg.view, init_stream);
      train_network(net, to_patch_set({n}), cfg.hyper,
                    rng::derive(cfg.hyper.seed, "shuffle/view/sai" + std::to_string(n)),
                    cfg.threads, out.log);
      out.nets.push_back(std::move(net));
    }
  } else {
    std::vector<int> all(static_cast<std::size_t>(n_sai));
    for (int n = 0; n < n_sai; ++n) all[static_cast<std::size_t>(n)] = n;
    rng::Stream init_stream(rng::derive(cfg.hyper.seed, "init/view"));
    NetworkDef<Scalar> net = build_view_net<Scalar>(cfg.view, init_stream);
    train_network(net, to_patch_set(all), cfg.hyper, rng::derive(cfg.hyper.seed, "shuffle/view"),
                  cfg.threads, out.log);
    out.nets.push_back(std::move(net));
  }
  std::tie(out.first_epoch_mean, out.last_epoch_mean) = detail::epoch_means(out.log);
  out.meta = detail::stage_meta("view", cfg, n_h, n_v);
  return out;
}

// Loss log serialization: one "step epoch loss" record per line.
inline std::string loss_log_text(const std::vector<LossRecord>& log) {
  std::ostringstream out;
  out.precision(9);
  for (const auto& r : log) out << r.step << " " << r.epoch << " " << r.loss << "\n";
  return out.str();
}

}  // namespace apa
