#include "lf/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lf/error.hpp"
#include "lf/parallel.hpp"

namespace lf {

std::vector<Eigen::Vector2d> harris_corners(const Image& gray_in, int max_count,
                                            const HarrisParams& params) {
  Image gray = gray_in.to_gray();
  const int w = gray.width(), h = gray.height();
  if (w < 16 || h < 16) {
    throw LfError(ErrorCode::kInvalidParam, "harris", "image smaller than 16x16");
  }
  if (max_count <= 0) return {};

  Image ix, iy;
  sobel_gradients(gray, &ix, &iy);
  Image ixx(w, h, 1), ixy(w, h, 1), iyy(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float gx = ix.at(y, x), gy = iy.at(y, x);
      ixx.at(y, x) = gx * gx;
      ixy.at(y, x) = gx * gy;
      iyy.at(y, x) = gy * gy;
    }
  }
  int ksize = 2 * static_cast<int>(std::ceil(3.0 * params.window_sigma)) + 1;
  ixx = gaussian_blur(ixx, params.window_sigma, ksize);
  ixy = gaussian_blur(ixy, params.window_sigma, ksize);
  iyy = gaussian_blur(iyy, params.window_sigma, ksize);

  // R = det(M) - k trace(M)^2
  std::vector<double> response(static_cast<size_t>(w) * h);
  double max_r = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double a = ixx.at(y, x), b = ixy.at(y, x), c = iyy.at(y, x);
      double r = (a * c - b * b) - params.k * (a + c) * (a + c);
      response[static_cast<size_t>(y) * w + x] = r;
      max_r = std::max(max_r, r);
    }
  }
  if (max_r <= 0.0) return {};
  const double thr = params.rel_threshold * max_r;

  struct Candidate {
    double x, y, r;
  };
  std::vector<Candidate> candidates;
  auto R = [&](int y, int x) { return response[static_cast<size_t>(y) * w + x]; };
  const int m = std::max(params.margin, 1);
  for (int y = m; y < h - m; ++y) {
    for (int x = m; x < w - m; ++x) {
      double r = R(y, x);
      if (r <= thr) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          if (R(y + dy, x + dx) >= r) {
            is_max = false;
            break;
          }
        }
      if (!is_max) continue;
      // Quadratic subpixel refinement, one axis at a time.
      auto refine = [](double rm, double r0, double rp) {
        double denom = rm - 2.0 * r0 + rp;
        if (denom >= -1e-18) return 0.0;
        return std::clamp(0.5 * (rm - rp) / denom, -0.5, 0.5);
      };
      double sx = x + refine(R(y, x - 1), r, R(y, x + 1));
      double sy = y + refine(R(y - 1, x), r, R(y + 1, x));
      candidates.push_back({sx, sy, r});
    }
  }

  // Bucketed selection: strongest of every bucket first, then second
  // strongest, and so on, so corners cover the frame.
  const int g = params.bucket_grid;
  std::vector<std::vector<Candidate>> buckets(static_cast<size_t>(g) * g);
  for (const Candidate& c : candidates) {
    int bx = std::min(g - 1, static_cast<int>(c.x * g / w));
    int by = std::min(g - 1, static_cast<int>(c.y * g / h));
    buckets[static_cast<size_t>(by) * g + bx].push_back(c);
  }
  for (auto& b : buckets) {
    std::sort(b.begin(), b.end(), [](const Candidate& a, const Candidate& c) {
      if (a.r != c.r) return a.r > c.r;
      return a.y != c.y ? a.y < c.y : a.x < c.x;
    });
  }
  std::vector<Eigen::Vector2d> out;
  for (size_t rank = 0; out.size() < static_cast<size_t>(max_count); ++rank) {
    std::vector<Candidate> layer;
    for (const auto& b : buckets)
      if (rank < b.size()) layer.push_back(b[rank]);
    if (layer.empty()) break;
    std::sort(layer.begin(), layer.end(), [](const Candidate& a, const Candidate& c) {
      if (a.r != c.r) return a.r > c.r;
      return a.y != c.y ? a.y < c.y : a.x < c.x;
    });
    for (const Candidate& c : layer) {
      if (out.size() >= static_cast<size_t>(max_count)) break;
      out.emplace_back(c.x, c.y);
    }
  }
  return out;
}

namespace {

struct PyramidLevel {
  Image img;
  Image gx, gy;
};

std::vector<PyramidLevel> build_pyramid(const Image& gray, int levels,
                                        int window_radius, bool with_gradients) {
  std::vector<PyramidLevel> pyr;
  Image cur = gray;
  for (int l = 0; l < levels; ++l) {
    if (std::min(cur.width(), cur.height()) < 2 * window_radius + 3) break;
    PyramidLevel lvl;
    lvl.img = cur;
    if (with_gradients) {
      int w = cur.width(), h = cur.height();
      lvl.gx = Image(w, h, 1);
      lvl.gy = Image(w, h, 1);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          lvl.gx.at(y, x) =
              0.5f * (cur.at_clamped(y, x + 1) - cur.at_clamped(y, x - 1));
          lvl.gy.at(y, x) =
              0.5f * (cur.at_clamped(y + 1, x) - cur.at_clamped(y - 1, x));
        }
      }
    }
    Image next = downsample_half(cur);
    pyr.push_back(std::move(lvl));
    cur = std::move(next);
  }
  return pyr;
}

}  // namespace

CorrespondenceSet klt_track(const Image& img1, const Image& img2,
                            const std::vector<Eigen::Vector2d>& points,
                            const KltParams& params,
                            const Eigen::Vector2d* init_flow) {
  Image g1 = img1.to_gray();
  Image g2 = img2.to_gray();
  if (!g1.same_shape(g2)) {
    throw LfError(ErrorCode::kInconsistent, "klt", "image sizes differ");
  }
  const int r = params.window_radius;
  auto pyr1 = build_pyramid(g1, params.pyramid_levels, r, true);
  auto pyr2 = build_pyramid(g2, params.pyramid_levels, r, false);
  const int levels = static_cast<int>(std::min(pyr1.size(), pyr2.size()));
  if (levels == 0) {
    throw LfError(ErrorCode::kInvalidParam, "klt", "image too small for window");
  }

  struct Result {
    Eigen::Vector2d q;
    double residual;
    bool ok;
  };
  std::vector<Result> results(points.size());

  parallel_for(static_cast<int>(points.size()), [&](int pi) {
    const Eigen::Vector2d& p = points[pi];
    results[pi].ok = false;
    if (p.x() < r + 1 || p.y() < r + 1 || p.x() > g1.width() - r - 2 ||
        p.y() > g1.height() - r - 2) {
      return;  // violates the margin precondition; drop quietly
    }
    double scale_top = static_cast<double>(1 << (levels - 1));
    Eigen::Vector2d flow =
        init_flow ? Eigen::Vector2d(*init_flow / scale_top) : Eigen::Vector2d(0, 0);
    bool lost = false;

    for (int l = levels - 1; l >= 0; --l) {
      const PyramidLevel& lv1 = pyr1[l];
      const Image& i2 = pyr2[l].img;
      double inv = 1.0 / (1 << l);
      Eigen::Vector2d pl = p * inv;

      // Template values and gradients, fixed per level.
      const int n = 2 * r + 1;
      std::vector<float> tmpl(n * n), gx(n * n), gy(n * n);
      double a11 = 0, a12 = 0, a22 = 0;
      for (int wy = -r; wy <= r; ++wy) {
        for (int wx = -r; wx <= r; ++wx) {
          float fx = static_cast<float>(pl.x() + wx);
          float fy = static_cast<float>(pl.y() + wy);
          int idx = (wy + r) * n + (wx + r);
          tmpl[idx] = lv1.img.sample(fx, fy);
          gx[idx] = lv1.gx.sample(fx, fy);
          gy[idx] = lv1.gy.sample(fx, fy);
          a11 += gx[idx] * gx[idx];
          a12 += gx[idx] * gy[idx];
          a22 += gy[idx] * gy[idx];
        }
      }
      double det = a11 * a22 - a12 * a12;
      if (det < 1e-12 || a11 + a22 < 1e-9) {
        lost = true;
        break;
      }

      Eigen::Vector2d v(0, 0);
      for (int it = 0; it < params.max_iterations; ++it) {
        double b1 = 0, b2 = 0;
        for (int wy = -r; wy <= r; ++wy) {
          for (int wx = -r; wx <= r; ++wx) {
            int idx = (wy + r) * n + (wx + r);
            float cur = i2.sample(
                static_cast<float>(pl.x() + flow.x() + v.x() + wx),
                static_cast<float>(pl.y() + flow.y() + v.y() + wy));
            float diff = tmpl[idx] - cur;
            b1 += diff * gx[idx];
            b2 += diff * gy[idx];
          }
        }
        double dx = (a22 * b1 - a12 * b2) / det;
        double dy = (a11 * b2 - a12 * b1) / det;
        v.x() += dx;
        v.y() += dy;
        if (std::hypot(dx, dy) < params.epsilon) break;
      }
      flow += v;
      if (!std::isfinite(flow.x()) || !std::isfinite(flow.y()) ||
          flow.norm() > std::max(i2.width(), i2.height())) {
        lost = true;
        break;
      }
      if (l > 0) flow *= 2.0;
    }
    if (lost) return;

    Eigen::Vector2d q = p + flow;
    if (q.x() < r || q.y() < r || q.x() > g2.width() - r - 1 ||
        q.y() > g2.height() - r - 1) {
      return;  // track left the image
    }
    // Mean per-pixel SSD at full resolution.
    double ssd = 0;
    const int n = 2 * r + 1;
    for (int wy = -r; wy <= r; ++wy) {
      for (int wx = -r; wx <= r; ++wx) {
        float d = g1.sample(static_cast<float>(p.x() + wx),
                            static_cast<float>(p.y() + wy)) -
                  g2.sample(static_cast<float>(q.x() + wx),
                            static_cast<float>(q.y() + wy));
        ssd += static_cast<double>(d) * d;
      }
    }
    ssd /= n * n;
    if (ssd > params.max_residual) return;
    results[pi] = {q, ssd, true};
  });

  CorrespondenceSet set;
  for (size_t i = 0; i < points.size(); ++i) {
    if (!results[i].ok) continue;
    Correspondence c;
    c.p = points[i];
    c.q = results[i].q;
    c.track_error = results[i].residual;
    c.inlier = true;
    set.matches.push_back(c);
  }
  return set;
}

CorrespondenceSet match_pair(const Image& img1, const Image& img2, int max_count,
                             const HarrisParams& hp, const KltParams& kp) {
  Image g1 = img1.to_gray();
  Image g2 = img2.to_gray();
  HarrisParams hp2 = hp;
  hp2.margin = std::max(hp.margin, kp.window_radius + 2);
  std::vector<Eigen::Vector2d> corners = harris_corners(g1, max_count, hp2);
  CorrespondenceSet set = klt_track(g1, g2, corners, kp);
  if (set.size() < 8) {
    throw LfError(ErrorCode::kInsufficientFeatures, "match-pair",
                  "only " + std::to_string(set.size()) +
                      " correspondences survived (need 8)");
  }
  return set;
}

}  // namespace lf
