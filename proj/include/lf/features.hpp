#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "lf/image.hpp"

namespace lf {

struct Correspondence {
  Eigen::Vector2d p;        // (u, v) in image 1
  Eigen::Vector2d q;        // (u', v') in image 2
  bool inlier = true;
  double track_error = 0.0;  // mean per-pixel SSD of the track window
};

struct CorrespondenceSet {
  std::vector<Correspondence> matches;
  std::string source_a;
  std::string source_b;

  size_t size() const { return matches.size(); }
  int inlier_count() const {
    int n = 0;
    for (const auto& m : matches) n += m.inlier ? 1 : 0;
    return n;
  }
  std::vector<Correspondence> inliers() const {
    std::vector<Correspondence> out;
    for (const auto& m : matches)
      if (m.inlier) out.push_back(m);
    return out;
  }
};

struct HarrisParams {
  double k = 0.04;
  double window_sigma = 1.5;
  double rel_threshold = 1e-6;  // of the maximum response
  int margin = 9;               // px kept clear of the border
  int bucket_grid = 8;          // spatial buckets per axis
};

/// Harris corners ranked by response, 3x3 non-maximum suppression, subpixel
/// refinement by quadratic fit, spatially bucketed so no region dominates.
std::vector<Eigen::Vector2d> harris_corners(const Image& gray, int max_count,
                                            const HarrisParams& params = {});

struct KltParams {
  int window_radius = 7;    // 15x15 window
  int pyramid_levels = 3;
  int max_iterations = 30;
  double epsilon = 0.01;        // px, convergence threshold per level
  double max_residual = 0.01;   // mean per-pixel SSD cutoff
};

/// Pyramidal Lucas-Kanade. Tracks that exit the image, lose conditioning, or
/// exceed the residual cutoff are dropped. `init_flow`, when given, seeds the
/// coarsest level (one displacement shared by all points).
CorrespondenceSet klt_track(const Image& img1, const Image& img2,
                            const std::vector<Eigen::Vector2d>& points,
                            const KltParams& params = {},
                            const Eigen::Vector2d* init_flow = nullptr);

/// harris_corners then klt_track on luma images. Throws insufficient-features
/// when fewer than 8 correspondences survive.
CorrespondenceSet match_pair(const Image& img1, const Image& img2,
                             int max_count = 500,
                             const HarrisParams& hp = {},
                             const KltParams& kp = {});

}  // namespace lf
