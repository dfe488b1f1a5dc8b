#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "apa/image.hpp"
#include "apa/light_field.hpp"

// PSNR / SSIM quality metrics and the parallax-preservation precision-recall
// evaluation. All pure functions.

namespace apa {

inline constexpr double kPsnrCapDb = 100.0;  // stands in for infinite entries when averaging

// 10*log10(max^2 / MSE); identical images report +infinity.
template <class Scalar>
double psnr(const Image<Scalar>& a, const Image<Scalar>& b, double max_val = 1.0) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("psnr: image dimensions differ");
  double acc = 0.0;
  for (Eigen::Index y = 0; y < a.rows(); ++y)
    for (Eigen::Index x = 0; x < a.cols(); ++x) {
      const double d = static_cast<double>(a(y, x)) - static_cast<double>(b(y, x));
      acc += d * d;
    }
  const double mse = acc / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

// Gaussian-windowed SSIM, standard constants. The mean runs over full-window
// positions only (valid region).
struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

namespace detail {

inline std::vector<double> ssim_kernel(const SsimParams& p) {
  std::vector<double> k(static_cast<std::size_t>(p.window));
  const double c = (p.window - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < p.window; ++i) {
    k[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (p.sigma * p.sigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable valid-region filtering: rows then columns.
inline ImageD valid_filter(const ImageD& img, const std::vector<double>& k) {
  const Eigen::Index n = static_cast<Eigen::Index>(k.size());
  const Eigen::Index h = img.rows(), w = img.cols();
  ImageD tmp(h, w - n + 1);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x + n <= w; ++x) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) acc += k[static_cast<std::size_t>(i)] * img(y, x + i);
      tmp(y, x) = acc;
    }
  ImageD out(h - n + 1, w - n + 1);
  for (Eigen::Index y = 0; y + n <= h; ++y)
    for (Eigen::Index x = 0; x < tmp.cols(); ++x) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) acc += k[static_cast<std::size_t>(i)] * tmp(y + i, x);
      out(y, x) = acc;
    }
  return out;
}

}  // namespace detail

template <class Scalar>
double ssim(const Image<Scalar>& a, const Image<Scalar>& b, const SsimParams& p = {}) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("ssim: image dimensions differ");
  if (a.rows() < p.window || a.cols() < p.window)
    throw std::invalid_argument("ssim: image smaller than the window");

  const auto k = detail::ssim_kernel(p);
  const ImageD ad = a.template cast<double>();
  const ImageD bd = b.template cast<double>();

  const ImageD mu_a = detail::valid_filter(ad, k);
  const ImageD mu_b = detail::valid_filter(bd, k);
  const ImageD m_aa = detail::valid_filter(ImageD(ad * ad), k);
  const ImageD m_bb = detail::valid_filter(ImageD(bd * bd), k);
  const ImageD m_ab = detail::valid_filter(ImageD(ad * bd), k);

  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);

  double acc = 0.0;
  for (Eigen::Index y = 0; y < mu_a.rows(); ++y)
    for (Eigen::Index x = 0; x < mu_a.cols(); ++x) {
      const double ma = mu_a(y, x), mb = mu_b(y, x);
      const double va = m_aa(y, x) - ma * ma;
      const double vb = m_bb(y, x) - mb * mb;
      const double vab = m_ab(y, x) - ma * mb;
      // Symmetric forms: for a == b both numerator and denominator are the
      // same expression, so the ratio is exactly 1.
      const double num = (2.0 * ma * mb + c1) * (2.0 * vab + c2);
      const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
      acc += num / den;
    }
  return acc / static_cast<double>(mu_a.size());
}

// Per-light-field quality summary, averaged over SAIs. Infinite PSNR entries
// make the mean infinite only when every entry is infinite; otherwise they
// enter the average capped at kPsnrCapDb and the report is flagged.
struct QualityReport {
  double psnr_mean = 0.0;
  double ssim_mean = 0.0;
  bool psnr_capped = false;
  std::vector<std::pair<double, double>> per_sai;  // (psnr, ssim), SAI-linear order
  int n_h = 0, n_v = 0;
};

template <class Scalar>
QualityReport lf_quality(const LightField<Scalar>& gt, const LightField<Scalar>& test,
                         const SsimParams& p = {}) {
  if (!gt.same_dims(test)) throw std::invalid_argument("lf_quality: light field dimensions differ");
  QualityReport r;
  r.n_h = gt.n_h();
  r.n_v = gt.n_v();
  r.per_sai.reserve(static_cast<std::size_t>(gt.n_sai()));
  bool all_inf = true;
  double psnr_acc = 0.0, ssim_acc = 0.0;
  for (int n = 0; n < gt.n_sai(); ++n) {
    const Image<Scalar> a = gt.view_linear(n);
    const Image<Scalar> b = test.view_linear(n);
    const double ps = psnr(a, b);
    const double ss = ssim(a, b, p);
    r.per_sai.emplace_back(ps, ss);
    ssim_acc += ss;
    if (std::isinf(ps)) {
      r.psnr_capped = true;
      psnr_acc += kPsnrCapDb;
    } else {
      all_inf = false;
      psnr_acc += ps;
    }
  }
  r.ssim_mean = ssim_acc / gt.n_sai();
  if (all_inf) {
    r.psnr_mean = std::numeric_limits<double>::infinity();
    r.psnr_capped = false;
  } else {
    r.psnr_mean = psnr_acc / gt.n_sai();
  }
  return r;
}

// Central SAI uses ceil-half indexing (1-based), i.e. (4,4) on an 8x8 grid.
inline int central_index_0based(int n) { return (n + 1) / 2 - 1; }

// Binary parallax edge maps: |X^n - X_central| > threshold per SAI.
template <class Scalar>
std::vector<BinaryMap> parallax_edge_map(const LightField<Scalar>& lf, double threshold) {
  if (threshold < 0) throw std::invalid_argument("parallax_edge_map: threshold must be >= 0");
  const int sc = central_index_0based(lf.n_h());
  const int vc = central_index_0based(lf.n_v());
  const auto center = lf.view(sc, vc);
  std::vector<BinaryMap> maps;
  maps.reserve(static_cast<std::size_t>(lf.n_sai()));
  for (int n = 0; n < lf.n_sai(); ++n) {
    const auto sai = lf.view_linear(n);
    BinaryMap m(lf.h(), lf.w());
    for (int y = 0; y < lf.h(); ++y)
      for (int x = 0; x < lf.w(); ++x) {
        const double d = std::abs(static_cast<double>(sai(y, x)) - static_cast<double>(center(y, x)));
        m(y, x) = d > threshold ? 1 : 0;
      }
    maps.push_back(std::move(m));
  }
  return maps;
}

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::uint64_t tp = 0, fp = 0, fn = 0;
};

struct PrCurve {
  double tau_gt = 0.0;
  std::vector<PrPoint> points;  // ordered by threshold, ascending
};

inline std::vector<double> default_pr_thresholds(int count = 64, double lo = 1e-3, double hi = 0.2) {
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    t[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, i / double(count - 1));
  return t;
}

// Pooled precision-recall over all SAIs and pixels: ground-truth maps fixed
// at tau_gt, test maps swept over `thresholds`. An empty ground-truth edge
// set is an error; an empty test positive set scores precision 1.
template <class Scalar>
PrCurve parallax_pr(const LightField<Scalar>& gt, const LightField<Scalar>& test, double tau_gt,
                    const std::vector<double>& thresholds) {
  if (!gt.same_dims(test)) throw std::invalid_argument("parallax_pr: light field dimensions differ");
  if (tau_gt <= 0) throw std::invalid_argument("parallax_pr: tau_gt must be > 0");
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw std::invalid_argument("parallax_pr: thresholds must ascend");

  const auto gt_maps = parallax_edge_map(gt, tau_gt);
  std::uint64_t gt_positive = 0;
  for (const auto& m : gt_maps) gt_positive += static_cast<std::uint64_t>((m != 0).count());
  if (gt_positive == 0)
    throw std::invalid_argument("parallax_pr: tau_gt yields empty ground truth");

  // |X^n - X_center| fields, reused across thresholds.
  const int sc = central_index_0based(gt.n_h());
  const int vc = central_index_0based(gt.n_v());
  const auto center = test.view(sc, vc);
  std::vector<ImageD> diff;
  diff.reserve(static_cast<std::size_t>(test.n_sai()));
  for (int n = 0; n < test.n_sai(); ++n)
    diff.emplace_back((test.view_linear(n).template cast<double>() - center.template cast<double>()).abs());

  PrCurve curve;
  curve.tau_gt = tau_gt;
  for (double t : thresholds) {
    PrPoint pt;
    pt.threshold = t;
    for (int n = 0; n < test.n_sai(); ++n) {
      const auto& d = diff[static_cast<std::size_t>(n)];
      const auto& g = gt_maps[static_cast<std::size_t>(n)];
      for (int y = 0; y < gt.h(); ++y)
        for (int x = 0; x < gt.w(); ++x) {
          const bool tpos = d(y, x) > t;
          const bool gpos = g(y, x) != 0;
          if (tpos && gpos)
            ++pt.tp;
          else if (tpos && !gpos)
            ++pt.fp;
          else if (!tpos && gpos)
            ++pt.fn;
        }
    }
    pt.precision = (pt.tp + pt.fp) == 0 ? 1.0 : double(pt.tp) / double(pt.tp + pt.fp);
    pt.recall = double(pt.tp) / double(pt.tp + pt.fn);
    curve.points.push_back(pt);
  }
  return curve;
}

// CSV tables (header row, one row per SAI / per threshold).

inline std::string quality_csv(const QualityReport& r) {
  std::ostringstream out;
  out << "sai_index,s,v,psnr_db,ssim\n";
  out.precision(9);
  for (std::size_t n = 0; n < r.per_sai.size(); ++n) {
    const int s = static_cast<int>(n) % r.n_h + 1;
    const int v = static_cast<int>(n) / r.n_h + 1;
    out << (n + 1) << "," << s << "," << v << ",";
    if (std::isinf(r.per_sai[n].first))
      out << "inf";
    else
      out << r.per_sai[n].first;
    out << "," << r.per_sai[n].second << "\n";
  }
  return out.str();
}

inline std::string pr_csv(const PrCurve& c) {
  std::ostringstream out;
  out << "threshold,precision,recall,tp,fp,fn,tau_gt\n";
  out.precision(9);
  for (const auto& p : c.points)
    out << p.threshold << "," << p.precision << "," << p.recall << "," << p.tp << "," << p.fp << ","
        << p.fn << "," << c.tau_gt << "\n";
  return out.str();
}

}  // namespace apa
