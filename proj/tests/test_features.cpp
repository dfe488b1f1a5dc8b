#include <cmath>

#include "apa/features.hpp"
#include "apa/noise.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace apa;

TEST_CASE("angular_mean basics") {
  SUBCASE("constant field stays constant") {
    LightFieldF lf(6, 5, 3, 4);
    for (Eigen::Index i = 0; i < lf.count(); ++i) lf.data()[i] = 0.3f;
    for (const auto& slice : angular_mean(lf, 4)) CHECK((slice - 0.3f).abs().maxCoeff() < 1e-7f);
    for (const auto& slice : angular_mean(lf, 3)) CHECK((slice - 0.3f).abs().maxCoeff() < 1e-7f);
  }

  SUBCASE("SAI(s,v) = s/10 with n_h=4: mean over s is 0.25") {
    LightFieldF lf(4, 4, 4, 2);
    for (int v = 0; v < 2; ++v)
      for (int s = 0; s < 4; ++s) lf.view(s, v).setConstant((s + 1) / 10.0f);
    const auto x_v = angular_mean(lf, 3);
    REQUIRE(x_v.size() == 2);
    for (const auto& slice : x_v) CHECK((slice - 0.25f).abs().maxCoeff() < 1e-7f);
  }

  SUBCASE("matches a naive per-pixel loop on random input") {
    LightFieldF lf(7, 6, 3, 5);
    rng::Stream s(31);
    oracles::fill_uniform(lf, s);
    const auto x_h = angular_mean(lf, 4);
    REQUIRE(static_cast<int>(x_h.size()) == lf.n_h());
    for (int si = 0; si < lf.n_h(); ++si)
      for (int y = 0; y < lf.h(); ++y)
        for (int x = 0; x < lf.w(); ++x) {
          double acc = 0.0;
          for (int v = 0; v < lf.n_v(); ++v) acc += lf.at(v, si, y, x);
          CHECK(x_h[static_cast<std::size_t>(si)](y, x) ==
                doctest::Approx(acc / lf.n_v()).epsilon(1e-6));
        }
  }

  SUBCASE("axis selector is validated") {
    LightFieldF lf(2, 2, 2, 2);
    CHECK_THROWS_AS(angular_mean(lf, 2), std::invalid_argument);
    CHECK_THROWS_AS(angular_mean(lf, 5), std::invalid_argument);
  }

  SUBCASE("linearity") {
    LightFieldF a(5, 5, 2, 3), b(5, 5, 2, 3);
    rng::Stream s(37);
    oracles::fill_uniform(a, s);
    oracles::fill_uniform(b, s);
    LightFieldF combo(5, 5, 2, 3);
    for (Eigen::Index i = 0; i < a.count(); ++i)
      combo.data()[i] = 2.0f * a.data()[i] - 0.5f * b.data()[i];
    const auto ma = angular_mean(a, 3), mb = angular_mean(b, 3), mc = angular_mean(combo, 3);
    for (std::size_t i = 0; i < mc.size(); ++i)
      CHECK((mc[i] - (2.0f * ma[i] - 0.5f * mb[i])).abs().maxCoeff() < 1e-5f);
  }
}

TEST_CASE("compute_apa construction cases") {
  SUBCASE("SAI(s,v) = v/10 with n_v=4") {
    LightFieldF lf(4, 4, 3, 4);
    for (int v = 0; v < 4; ++v)
      for (int s = 0; s < 3; ++s) lf.view(s, v).setConstant((v + 1) / 10.0f);
    const auto [x_h, x_v] = compute_apa(lf);
    for (const auto& slice : x_h) CHECK((slice - 0.25f).abs().maxCoeff() < 1e-7f);
    for (std::size_t v = 0; v < x_v.size(); ++v)
      CHECK((x_v[v] - (v + 1) / 10.0f).abs().maxCoeff() < 1e-7f);
  }

  SUBCASE("slice means of x_h match source means over v") {
    LightFieldF lf(6, 6, 4, 3);
    rng::Stream s(41);
    oracles::fill_uniform(lf, s);
    const auto [x_h, x_v] = compute_apa(lf);
    (void)x_v;
    for (int si = 0; si < lf.n_h(); ++si) {
      double want = 0.0;
      for (int v = 0; v < lf.n_v(); ++v) want += lf.view(si, v).template cast<double>().mean();
      want /= lf.n_v();
      CHECK(x_h[static_cast<std::size_t>(si)].template cast<double>().mean() ==
            doctest::Approx(want).epsilon(1e-6));
    }
  }
}

TEST_CASE("compute_isotropic") {
  SUBCASE("means over either axis order agree") {
    LightFieldF lf(8, 7, 3, 5);
    rng::Stream s(43);
    oracles::fill_uniform(lf, s);

    // route 1: mean over s then v; route 2: mean over v then s
    const auto x_v = angular_mean(lf, 3);
    ImageD acc1 = ImageD::Zero(lf.h(), lf.w());
    for (const auto& slice : x_v) acc1 += slice.cast<double>();
    acc1 /= static_cast<double>(x_v.size());

    const auto x_h = angular_mean(lf, 4);
    ImageD acc2 = ImageD::Zero(lf.h(), lf.w());
    for (const auto& slice : x_h) acc2 += slice.cast<double>();
    acc2 /= static_cast<double>(x_h.size());

    CHECK((acc1 - acc2).abs().maxCoeff() < 1e-6);

    const ImageF x_avg = compute_isotropic(lf);
    CHECK((x_avg.cast<double>() - acc1).abs().maxCoeff() < 1e-6);
  }

  SUBCASE("mean-consistency invariant") {
    LightFieldF lf(9, 5, 4, 4);
    rng::Stream s(47);
    oracles::fill_uniform(lf, s);
    const ImageF x_avg = compute_isotropic(lf);
    const auto [x_h, x_v] = compute_apa(lf);
    ImageF mean_h = ImageF::Zero(lf.h(), lf.w());
    for (const auto& slice : x_h) mean_h += slice;
    mean_h /= static_cast<float>(x_h.size());
    ImageF mean_v = ImageF::Zero(lf.h(), lf.w());
    for (const auto& slice : x_v) mean_v += slice;
    mean_v /= static_cast<float>(x_v.size());
    CHECK((mean_h - x_avg).abs().maxCoeff() < 1e-5f);
    CHECK((mean_v - x_avg).abs().maxCoeff() < 1e-5f);
  }

  SUBCASE("noise attenuation: std of x_avg error ~ sigma/8 on an 8x8 field") {
    LightFieldF clean(128, 128, 8, 8);
    for (Eigen::Index i = 0; i < clean.count(); ++i) clean.data()[i] = 0.5f;
    const LightFieldF noisy = add_awgn(clean, NoiseConfig{50.0, 99});
    const ImageF x_avg = compute_isotropic(noisy);

    double acc = 0.0, acc2 = 0.0;
    const Eigen::Index n = x_avg.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = x_avg.data()[i] - 0.5;
      acc += d;
      acc2 += d * d;
    }
    const double std_dev = std::sqrt(acc2 / n - (acc / n) * (acc / n));
    const double want = (50.0 / 255.0) / 8.0;
    CHECK(std_dev == doctest::Approx(want).epsilon(0.10));
  }
}

TEST_CASE("guided filter") {
  SUBCASE("constant guide and input is the identity") {
    ImageF c(16, 16);
    c.setConstant(0.37f);
    const ImageF q = guided_filter(c, c, GuidedFilterParams{4, 1e-4});
    CHECK((q - c).abs().maxCoeff() == 0.0f);
  }

  SUBCASE("huge epsilon degrades to a box mean of the input") {
    ImageD guide(32, 32), input(32, 32);
    rng::Stream s(53);
    oracles::fill_uniform(guide, s);
    oracles::fill_uniform(input, s);
    const ImageD q = guided_filter(guide, input, GuidedFilterParams{4, 1e6});
    // with a -> 0 the output is box(b) = box(mean_J)
    const ImageD want = oracles::box_mean_naive(oracles::box_mean_naive(input, 4), 4);
    CHECK((q - want).abs().maxCoeff() < 1e-4);
  }

  SUBCASE("matches the brute-force windowed oracle") {
    rng::Stream s(59);
    for (const int r : {1, 4, 8}) {
      for (const double eps : {1e-4, 1e-2}) {
        ImageD guide(64, 64), input(64, 64);
        oracles::fill_uniform(guide, s);
        oracles::fill_uniform(input, s);
        const ImageD fast = guided_filter(guide, input, GuidedFilterParams{r, eps});
        const ImageD slow = oracles::guided_filter_bruteforce(guide, input, r, eps);
        CHECK((fast - slow).abs().maxCoeff() < 1e-6);
      }
    }
  }

  SUBCASE("validation") {
    ImageF a(8, 8), b(8, 9);
    a.setZero();
    b.setZero();
    CHECK_THROWS_AS(guided_filter(a, b, GuidedFilterParams{2, 1e-4}), std::invalid_argument);
    ImageF c(8, 8);
    c.setZero();
    CHECK_THROWS_AS(guided_filter(a, c, GuidedFilterParams{2, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(guided_filter(a, c, GuidedFilterParams{0, 1e-4}), std::invalid_argument);
  }
}

TEST_CASE("normalize_apa") {
  SUBCASE("constant field gives exactly-zero normalized features") {
    LightFieldF lf(24, 24, 3, 3);
    for (Eigen::Index i = 0; i < lf.count(); ++i) lf.data()[i] = 0.42f;
    const auto f = compute_apa_features(lf, GuidedFilterParams{8, 1e-4});
    for (const auto& slice : f.x_h_norm) CHECK(slice.abs().maxCoeff() == 0.0f);
    for (const auto& slice : f.x_v_norm) CHECK(slice.abs().maxCoeff() == 0.0f);
    CHECK(f.x_h_norm.size() == 3);
    CHECK(f.x_v_norm.size() == 3);
  }

  SUBCASE("zero-parallax noise-free field: residuals are small on smooth content") {
    // all SAIs identical smooth ramp
    LightFieldF lf(32, 32, 4, 4);
    for (int n = 0; n < lf.n_sai(); ++n) {
      auto sai = lf.view_linear(n);
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) sai(y, x) = 0.2f + 0.5f * (x + y) / 62.0f;
    }
    const auto f = compute_apa_features(lf, GuidedFilterParams{8, 1e-4});
    for (const auto& slice : f.x_h_norm) {
      // interior windows are symmetric, so the ramp passes through exactly;
      // edge-truncated windows leave a small residual
      CHECK(slice.block(8, 8, 16, 16).abs().maxCoeff() < 1e-3f);
      CHECK(slice.abs().maxCoeff() < 1e-2f);
    }
  }

  SUBCASE("slice counts follow the angular dims") {
    LightFieldF lf(16, 16, 5, 2);
    rng::Stream s(61);
    oracles::fill_uniform(lf, s);
    const auto f = compute_apa_features(lf, GuidedFilterParams{4, 1e-4});
    CHECK(f.x_h_norm.size() == 5);
    CHECK(f.x_v_norm.size() == 2);
  }
}

TEST_CASE("features are deterministic") {
  LightFieldF lf(20, 18, 3, 3);
  rng::Stream s(67);
  oracles::fill_uniform(lf, s);
  const auto f1 = compute_apa_features(lf, GuidedFilterParams{4, 1e-4}, 1);
  const auto f2 = compute_apa_features(lf, GuidedFilterParams{4, 1e-4}, 2);
  for (std::size_t i = 0; i < f1.x_h_norm.size(); ++i)
    CHECK((f1.x_h_norm[i] - f2.x_h_norm[i]).abs().maxCoeff() == 0.0f);
  CHECK((f1.x_avg - f2.x_avg).abs().maxCoeff() == 0.0f);
}

TEST_CASE("gaussian smoothing") {
  SUBCASE("constant image unchanged even at borders") {
    ImageF c(9, 9);
    c.setConstant(0.6f);
    const ImageF out = gaussian_smooth_sai(c, GaussianParams::from_sigma(1.5));
    CHECK((out - 0.6f).abs().maxCoeff() < 1e-6f);
  }

  SUBCASE("impulse response matches the dense 2D oracle") {
    ImageD img = ImageD::Zero(17, 17);
    img(8, 8) = 1.0;
    const auto p = GaussianParams::from_sigma(1.5);
    const ImageD fast = gaussian_smooth_sai(img, p);
    const ImageD slow = oracles::gaussian_smooth_dense(img, p.sigma_g, p.radius);
    CHECK((fast - slow).abs().maxCoeff() < 1e-6);
    // center weight proportional to 1/(2 pi sigma^2) before discretization
    CHECK(fast(8, 8) == doctest::Approx(slow(8, 8)));
  }

  SUBCASE("random image matches the dense oracle") {
    ImageD img(21, 19);
    rng::Stream s(71);
    oracles::fill_uniform(img, s);
    const auto p = GaussianParams::from_sigma(2.5);
    CHECK((gaussian_smooth_sai(img, p) - oracles::gaussian_smooth_dense(img, p.sigma_g, p.radius))
              .abs()
              .maxCoeff() < 1e-6);
  }

  SUBCASE("white-noise attenuation follows the kernel l2 norm") {
    const auto p = GaussianParams::from_sigma(1.5);
    // build the separable kernel's l2 norm
    double ksum = 0.0;
    std::vector<double> k(static_cast<std::size_t>(2 * p.radius + 1));
    for (int i = -p.radius; i <= p.radius; ++i) {
      k[static_cast<std::size_t>(i + p.radius)] = std::exp(-0.5 * i * i / (p.sigma_g * p.sigma_g));
      ksum += k[static_cast<std::size_t>(i + p.radius)];
    }
    double l2_1d = 0.0;
    for (double v : k) l2_1d += (v / ksum) * (v / ksum);
    const double kernel_l2 = l2_1d;  // 2D separable: ||k2d||^2 = (||k1d||^2)^2 -> std factor

    ImageF noise(256, 256);
    rng::Stream s(73);
    const double sigma_in = 20.0 / 255.0;
    for (Eigen::Index i = 0; i < noise.size(); ++i)
      noise.data()[i] = static_cast<float>(sigma_in * s.gaussian());
    const ImageF out = gaussian_smooth_sai(noise, p);

    // measure interior std (borders have different effective kernels)
    double acc = 0.0, acc2 = 0.0;
    int n = 0;
    for (int y = p.radius; y < 256 - p.radius; ++y)
      for (int x = p.radius; x < 256 - p.radius; ++x) {
        acc += out(y, x);
        acc2 += double(out(y, x)) * out(y, x);
        ++n;
      }
    const double std_out = std::sqrt(acc2 / n - (acc / n) * (acc / n));
    CHECK(std_out == doctest::Approx(sigma_in * kernel_l2).epsilon(0.10));
  }
}

TEST_CASE("network input builders") {
  LightFieldF lf(16, 16, 8, 8);
  rng::Stream s(79);
  oracles::fill_uniform(lf, s);
  const auto f = compute_apa_features(lf, GuidedFilterParams{4, 1e-4});

  SUBCASE("syn input has n_h + n_v channels, h-normals first") {
    const auto channels = build_syn_input(f);
    REQUIRE(channels.size() == 16);
    for (int k = 0; k < 8; ++k)
      CHECK((channels[static_cast<std::size_t>(k)] - f.x_h_norm[static_cast<std::size_t>(k)])
                .abs()
                .maxCoeff() == 0.0f);
    for (int k = 0; k < 8; ++k)
      CHECK((channels[static_cast<std::size_t>(8 + k)] - f.x_v_norm[static_cast<std::size_t>(k)])
                .abs()
                .maxCoeff() == 0.0f);
  }

  SUBCASE("constant field yields an all-zero syn input") {
    LightFieldF c(16, 16, 4, 4);
    for (Eigen::Index i = 0; i < c.count(); ++i) c.data()[i] = 0.5f;
    const auto fc = compute_apa_features(c, GuidedFilterParams{4, 1e-4});
    for (const auto& ch : build_syn_input(fc)) CHECK(ch.abs().maxCoeff() == 0.0f);
  }

  SUBCASE("view input is {z - x_avg, x_syn}") {
    ImageF z(8, 8), x_avg(8, 8), x_syn(8, 8);
    oracles::fill_uniform(z, s);
    oracles::fill_uniform(x_avg, s);
    oracles::fill_uniform(x_syn, s);
    const auto channels = build_view_input(z, x_avg, x_syn);
    REQUIRE(channels.size() == 2);
    CHECK((channels[0] - (z - x_avg)).abs().maxCoeff() < 1e-7f);
    CHECK((channels[1] - x_syn).abs().maxCoeff() == 0.0f);

    const auto same = build_view_input(x_avg, x_avg, x_syn);
    CHECK(same[0].abs().maxCoeff() == 0.0f);

    ImageF bad(9, 8);
    CHECK_THROWS_AS(build_view_input(z, x_avg, bad), std::invalid_argument);
  }
}
