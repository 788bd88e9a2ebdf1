#include "lf/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lf/error.hpp"
#include "lf/parallel.hpp"

namespace lf {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kZeroSlopeSnap = 1e-3;  // px/view treated as already centered
}  // namespace

Image denoise_gaussian(const Image& img) { return gaussian_blur(img, 0.6, 5); }

PhotometricMap fit_photometric_map(const Image& src, const Image& ref) {
  if (src.width() != ref.width() || src.height() != ref.height() ||
      src.channels() != ref.channels()) {
    throw LfError(ErrorCode::kInconsistent, "photometric",
                  "source and reference sizes differ");
  }
  PhotometricMap map;
  const int channels = src.channels();
  const long n = static_cast<long>(src.width()) * src.height();

  for (int c = 0; c < 3; ++c) {
    auto& lut = map.lut[c];
    for (int i = 0; i < 256; ++i) lut[i] = i / 255.0f;
    if (c >= channels) continue;

    std::array<long, 256> hist_src{}, hist_ref{};
    for (int y = 0; y < src.height(); ++y) {
      for (int x = 0; x < src.width(); ++x) {
        auto bin = [](float v) {
          return std::clamp(static_cast<int>(std::lround(v * 255.0f)), 0, 255);
        };
        hist_src[bin(src.at(y, x, c))]++;
        hist_ref[bin(ref.at(y, x, c))]++;
      }
    }
    auto is_constant = [n](const std::array<long, 256>& h) {
      for (long v : h)
        if (v == n) return true;
      return false;
    };
    if (is_constant(hist_src) || is_constant(hist_ref)) continue;  // identity

    std::array<double, 256> cdf_src{}, cdf_ref{};
    double acc_s = 0, acc_r = 0;
    for (int i = 0; i < 256; ++i) {
      acc_s += hist_src[i];
      acc_r += hist_ref[i];
      cdf_src[i] = acc_s / n;
      cdf_ref[i] = acc_r / n;
    }
    // Nearest reference quantile; ties resolved toward the source level so
    // matching an image against itself yields the identity table.
    std::array<int, 256> m{};
    for (int i = 0; i < 256; ++i) {
      double target = cdf_src[i];
      double best_diff = 1e9;
      int best_j = i;
      for (int j = 0; j < 256; ++j) {
        double diff = std::abs(cdf_ref[j] - target);
        if (diff < best_diff - 1e-15 ||
            (diff < best_diff + 1e-15 && std::abs(j - i) < std::abs(best_j - i))) {
          best_diff = diff;
          best_j = j;
        }
      }
      m[i] = best_j;
    }
    for (int i = 1; i < 256; ++i) m[i] = std::max(m[i], m[i - 1]);
    for (int i = 0; i < 256; ++i) lut[i] = m[i] / 255.0f;
  }
  return map;
}

Image apply_photometric_map(const PhotometricMap& map, const Image& img) {
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        int bin = std::clamp(
            static_cast<int>(std::lround(img.at(y, x, c) * 255.0f)), 0, 255);
        out.at(y, x, c) = map.lut[c][bin];
      }
    }
  }
  return out;
}

namespace {

struct EdgePixel {
  double x;  // subpixel spatial position
  int a;     // angular row
  double orientation;  // gradient angle, radians in (-pi, pi]
};

std::vector<EdgePixel> detect_edges(const Epi& epi) {
  Image img(epi.spatial_size, epi.angular_size, 1);
  for (int a = 0; a < epi.angular_size; ++a)
    for (int x = 0; x < epi.spatial_size; ++x) img.at(a, x) = epi.at(a, x);

  Image gx, gy;
  sobel_gradients(img, &gx, &gy);
  std::vector<float> mags(img.size());
  for (int a = 0; a < epi.angular_size; ++a)
    for (int x = 0; x < epi.spatial_size; ++x)
      mags[static_cast<size_t>(a) * epi.spatial_size + x] =
          std::hypot(gx.at(a, x), gy.at(a, x));

  // Threshold at the 90th percentile of the gradient magnitudes.
  std::vector<float> sorted = mags;
  size_t idx = sorted.size() * 9 / 10;
  std::nth_element(sorted.begin(), sorted.begin() + idx, sorted.end());
  float thr = std::max(sorted[idx], 1e-4f);

  std::vector<EdgePixel> edges;
  for (int a = 0; a < epi.angular_size; ++a) {
    for (int x = 1; x + 1 < epi.spatial_size; ++x) {
      float m = mags[static_cast<size_t>(a) * epi.spatial_size + x];
      if (m < thr) continue;
      float ml = mags[static_cast<size_t>(a) * epi.spatial_size + x - 1];
      float mr = mags[static_cast<size_t>(a) * epi.spatial_size + x + 1];
      if (m < ml || m < mr) continue;  // keep per-row magnitude maxima
      double denom = ml - 2.0 * m + mr;
      double dx = 0.0;
      if (denom < -1e-12) dx = std::clamp(0.5 * (ml - mr) / denom, -0.5, 0.5);
      edges.push_back({x + dx, a, std::atan2(gy.at(a, x), gx.at(a, x))});
    }
  }
  return edges;
}

double angle_diff(double a, double b) {
  // Distance between undirected orientations, radians in [0, pi/2].
  double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

}  // namespace

std::vector<EpiLineFit> fit_epi_lines(const Epi& epi, const SlopeOptions& opt) {
  const int A = epi.angular_size;
  const int W = epi.spatial_size;
  if (A < 3) {
    throw LfError(ErrorCode::kInvalidParam, "epi-slope",
                  "angular extent must be >= 3");
  }
  std::vector<EdgePixel> edges = detect_edges(epi);
  std::vector<EpiLineFit> fits;
  if (edges.empty()) return fits;

  // Accumulator over the line normal angle phi in [-45, 45] degrees
  // (theta = phi + 90) and rho = x cos(phi) + a sin(phi) in 1 px bins.
  const int phi_bins =
      static_cast<int>(std::round(90.0 / opt.hough_step_deg)) + 1;
  const double rho_min = -static_cast<double>(A);
  const int rho_bins = W + 2 * A + 1;
  const double orientation_gate = 20.0 * kPi / 180.0;

  std::vector<int> acc(static_cast<size_t>(phi_bins) * rho_bins, 0);
  for (const EdgePixel& e : edges) {
    for (int pb = 0; pb < phi_bins; ++pb) {
      double phi = (-45.0 + pb * opt.hough_step_deg) * kPi / 180.0;
      if (angle_diff(phi, e.orientation) > orientation_gate) continue;
      double rho = e.x * std::cos(phi) + e.a * std::sin(phi);
      int rb = static_cast<int>(std::lround(rho - rho_min));
      if (rb < 0 || rb >= rho_bins) continue;
      acc[static_cast<size_t>(pb) * rho_bins + rb]++;
    }
  }

  const double min_votes = opt.min_support_frac * A;
  for (int pb = 0; pb < phi_bins; ++pb) {
    double phi = (-45.0 + pb * opt.hough_step_deg) * kPi / 180.0;
    double c = std::cos(phi), s = std::sin(phi);
    for (int rb = 0; rb < rho_bins; ++rb) {
      if (acc[static_cast<size_t>(pb) * rho_bins + rb] + 1e-9 < min_votes)
        continue;
      double rho_center = rho_min + rb;
      // Supporting pixels: nearest edge per angular row within the bin.
      std::vector<double> best_dist(A, 0.8);
      std::vector<double> best_x(A, 0.0);
      std::vector<bool> has(A, false);
      for (const EdgePixel& e : edges) {
        if (angle_diff(phi, e.orientation) > orientation_gate) continue;
        double d = std::abs(e.x * c + e.a * s - rho_center);
        if (d < best_dist[e.a]) {
          best_dist[e.a] = d;
          best_x[e.a] = e.x;
          has[e.a] = true;
        }
      }
      int support = 0;
      double sum_a = 0, sum_x = 0, sum_aa = 0, sum_ax = 0;
      for (int a = 0; a < A; ++a) {
        if (!has[a]) continue;
        ++support;
        sum_a += a;
        sum_x += best_x[a];
        sum_aa += static_cast<double>(a) * a;
        sum_ax += a * best_x[a];
      }
      if (support + 1e-9 < min_votes || support < 2) continue;
      // Regress spatial position on the (exact) angular index.
      double var_a = sum_aa - sum_a * sum_a / support;
      if (var_a < 1e-9) continue;
      double slope = (sum_ax - sum_a * sum_x / support) / var_a;
      double intercept = (sum_x - slope * sum_a) / support;
      if (std::abs(slope) > 1.05) continue;  // outside [45, 135] degrees
      double ss = 0;
      for (int a = 0; a < A; ++a) {
        if (!has[a]) continue;
        double r = best_x[a] - (intercept + slope * a);
        ss += r * r;
      }
      double rms = std::sqrt(ss / support);
      if (rms > opt.max_line_rms) continue;

      EpiLineFit fit;
      fit.disparity_per_view = slope;
      fit.angle_deg = std::atan2(1.0, slope) * 180.0 / kPi;
      fit.intercept = intercept;
      fit.rms = rms;
      fit.support = support;
      fits.push_back(fit);
    }
  }

  // Adjacent accumulator bins refine to the same physical line; keep the
  // strongest representative of each.
  std::sort(fits.begin(), fits.end(), [](const EpiLineFit& a, const EpiLineFit& b) {
    if (a.support != b.support) return a.support > b.support;
    if (a.rms != b.rms) return a.rms < b.rms;
    return a.intercept < b.intercept;
  });
  std::vector<EpiLineFit> kept;
  double mid = (A - 1) / 2.0;
  for (const EpiLineFit& f : fits) {
    bool dup = false;
    for (const EpiLineFit& k : kept) {
      double x_f = f.intercept + f.disparity_per_view * mid;
      double x_k = k.intercept + k.disparity_per_view * mid;
      if (std::abs(x_f - x_k) < 1.0 &&
          std::abs(f.disparity_per_view - k.disparity_per_view) < 0.12) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(f);
  }
  return kept;
}

namespace {

Epi epi_from_gray_rows(const std::vector<Image>& grays, EpiOrientation orientation,
                       int fixed_spatial, int spatial_size) {
  Epi epi;
  epi.orientation = orientation;
  epi.fixed_spatial = fixed_spatial;
  epi.angular_size = static_cast<int>(grays.size());
  epi.spatial_size = spatial_size;
  epi.px.resize(static_cast<size_t>(epi.angular_size) * spatial_size);
  for (int a = 0; a < epi.angular_size; ++a) {
    for (int i = 0; i < spatial_size; ++i) {
      epi.at(a, i) = orientation == EpiOrientation::kHorizontal
                         ? grays[a].at(fixed_spatial, i)
                         : grays[a].at(i, fixed_spatial);
    }
  }
  return epi;
}

// Core scan shared by the public estimator and recentering: the gray views
// along the middle row/column of the other axis, optionally denoised.
SlopeEstimate max_slope_from_grays(const std::vector<Image>& grays,
                                   EpiOrientation orientation, int spatial_extent,
                                   int spatial_size, const SlopeOptions& opt,
                                   const char* stage) {
  std::vector<int> slices;
  if (opt.full_scan) {
    for (int i = 0; i < spatial_extent; ++i) slices.push_back(i);
  } else {
    for (int i = opt.epi_stride / 2; i < spatial_extent; i += opt.epi_stride)
      slices.push_back(i);
  }

  bool found = false;
  EpiLineFit best;
  for (int slice : slices) {
    Epi epi = epi_from_gray_rows(grays, orientation, slice, spatial_size);
    for (const EpiLineFit& f : fit_epi_lines(epi, opt)) {
      if (!found || f.angle_deg > best.angle_deg + 1e-12) {
        best = f;
        found = true;
      }
    }
  }
  if (!found) {
    throw LfError(ErrorCode::kNoStructure, stage,
                  "no EPI line above the vote threshold");
  }
  SlopeEstimate est;
  est.angle_deg = best.angle_deg;
  est.disparity_per_view = best.disparity_per_view;
  est.support = best.support;
  return est;
}

std::vector<Image> slope_scan_views(const LightField& lf,
                                    EpiOrientation orientation, bool denoise) {
  std::vector<Image> grays;
  if (orientation == EpiOrientation::kHorizontal) {
    int t = lf.t_mid_index();
    for (int s = 0; s < lf.s_size(); ++s) {
      Image g = lf.view(s, t).to_gray();
      grays.push_back(denoise ? denoise_gaussian(g) : std::move(g));
    }
  } else {
    int s = lf.s_mid_index();
    for (int t = 0; t < lf.t_size(); ++t) {
      Image g = lf.view(s, t).to_gray();
      grays.push_back(denoise ? denoise_gaussian(g) : std::move(g));
    }
  }
  return grays;
}

}  // namespace

SlopeEstimate estimate_max_epi_slope(const LightField& lf,
                                     EpiOrientation orientation,
                                     const SlopeOptions& opt) {
  const bool horizontal = orientation == EpiOrientation::kHorizontal;
  int extent = horizontal ? lf.s_size() : lf.t_size();
  if (extent < 3) {
    throw LfError(ErrorCode::kInvalidParam, "epi-slope",
                  "angular extent must be >= 3 in the chosen orientation");
  }
  std::vector<Image> grays = slope_scan_views(lf, orientation, false);
  return max_slope_from_grays(grays, orientation,
                              horizontal ? lf.height() : lf.width(),
                              horizontal ? lf.width() : lf.height(), opt,
                              "epi-slope");
}

LightField recenter_to_farthest_depth(const LightField& lf,
                                      const SlopeOptions& opt,
                                      RecenterInfo* info) {
  double d_s = 0.0, d_t = 0.0;
  if (lf.s_size() >= 3) {
    std::vector<Image> grays =
        slope_scan_views(lf, EpiOrientation::kHorizontal, true);
    d_s = max_slope_from_grays(grays, EpiOrientation::kHorizontal, lf.height(),
                               lf.width(), opt, "recenter")
              .disparity_per_view;
  }
  if (lf.t_size() >= 3) {
    std::vector<Image> grays =
        slope_scan_views(lf, EpiOrientation::kVertical, true);
    d_t = max_slope_from_grays(grays, EpiOrientation::kVertical, lf.width(),
                               lf.height(), opt, "recenter")
              .disparity_per_view;
  }
  if (std::abs(d_s) < kZeroSlopeSnap) d_s = 0.0;
  if (std::abs(d_t) < kZeroSlopeSnap) d_t = 0.0;
  if (info) {
    info->disparity_s = d_s;
    info->disparity_t = d_t;
  }

  LightField out(lf.s_size(), lf.t_size(), lf.intrinsics(),
                 lf.angular_spacing());
  parallel_for(lf.s_size() * lf.t_size(), [&](int i) {
    int s = i / lf.t_size();
    int t = i % lf.t_size();
    double dx = -d_s * (s - lf.s_mid());
    double dy = -d_t * (t - lf.t_mid());
    out.view(s, t) = shift_image(lf.view(s, t), dx, dy);
  });
  return out;
}

LightField preprocess_light_field(const LightField& lf,
                                  const PreprocessOptions& opt,
                                  RecenterInfo* info) {
  lf.validate("preprocess");
  LightField result = lf;
  if (opt.photometric) {
    Image ref = denoise_gaussian(lf.middle_view());
    int s_mid = lf.s_mid_index(), t_mid = lf.t_mid_index();
    parallel_for(lf.s_size() * lf.t_size(), [&](int i) {
      int s = i / lf.t_size();
      int t = i % lf.t_size();
      if (s == s_mid && t == t_mid) return;
      PhotometricMap map =
          fit_photometric_map(denoise_gaussian(lf.view(s, t)), ref);
      result.view(s, t) = apply_photometric_map(map, lf.view(s, t));
    });
  }
  if (opt.recenter) {
    result = recenter_to_farthest_depth(result, opt.slope, info);
  } else if (info) {
    *info = RecenterInfo{};
  }
  return result;
}

}  // namespace lf
