#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "lf/features.hpp"
#include "lf/light_field.hpp"

namespace lf {

/// Fundamental matrix in the row-vector convention
/// [u, v, 1] F [u', v', 1]^T = 0 with (u,v) in image 1 and (u',v') in
/// image 2. Rank 2, Frobenius norm 1.
struct FundamentalMatrix {
  Eigen::Matrix3d F = Eigen::Matrix3d::Zero();
};

/// Essential matrix after projection onto the essential manifold; the stored
/// singular values satisfy s1 == s2, s3 == 0.
struct EssentialMatrix {
  Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
  Eigen::Vector3d singular_values = Eigen::Vector3d::Zero();
};

/// Rotation taking camera-2 directions into camera-1 directions (the R of
/// the correction homography K R K^-1) plus the scale-free translation
/// direction, disambiguated by cheirality.
struct RotationEstimate {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t_dir = Eigen::Vector3d::UnitX();
  int cheirality_count = 0;
};

struct SimilarityTransform {
  double scale = 1.0;
  double rotation_rad = 0.0;
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();
  double rms = 0.0;
};

struct DepthClustering {
  std::vector<double> centroids;  // displacement magnitudes, px
  std::vector<int> labels;        // nearest centroid per feature
  int chosen_k = 1;
  double silhouette = 0.0;  // of the chosen k (0 when k == 1)

  int smallest_centroid_cluster() const;
  int largest_centroid_cluster() const;
};

struct RansacOptions {
  double threshold_px = 1.0;  // Sampson distance
  double confidence = 0.999;
  int max_iterations = 2000;
  int min_iterations = 50;
  uint64_t seed = 1;
};

/// Normalized 8-point solver inside RANSAC; marks inlier flags in `matches`
/// and returns F re-estimated from all inliers (rank-2 enforced, unit norm).
FundamentalMatrix ransac_fundamental(CorrespondenceSet& matches,
                                     const RansacOptions& opt = {});

/// Direct least-squares 8-point estimate from the given correspondences.
FundamentalMatrix eight_point(const std::vector<Correspondence>& matches);

/// Squared Sampson distance (px^2) of one correspondence.
double sampson_distance_sq(const Eigen::Matrix3d& F, const Eigen::Vector2d& p,
                           const Eigen::Vector2d& q);

struct GoldStandardResult {
  FundamentalMatrix F;
  double rms_initial = 0.0;  // px, after triangulation, before refinement
  double rms_final = 0.0;
  bool converged = true;
  int iterations = 0;
};

/// Two-view bundle adjustment: builds a canonical camera pair from F0,
/// triangulates the inliers, then jointly refines the second camera and the
/// points with damped Gauss-Newton. Cost never increases across iterations.
GoldStandardResult refine_fundamental_gold_standard(
    const FundamentalMatrix& F0, const std::vector<Correspondence>& inliers);

/// Nearest essential matrix in Frobenius norm: singular values replaced by
/// their average pair and zero.
EssentialMatrix project_essential(const Eigen::Matrix3d& E_raw);

/// E = K^T F K followed by the singular-value projection.
EssentialMatrix essential_from_fundamental(const FundamentalMatrix& F,
                                           const Eigen::Matrix3d& K);

/// Four-candidate decomposition with cheirality selection over the inlier
/// correspondences (coordinates are premultiplied by K^-1 internally).
RotationEstimate decompose_essential(const EssentialMatrix& E,
                                     const std::vector<Correspondence>& inliers,
                                     const Eigen::Matrix3d& K);

/// H = K R K^-1.
Eigen::Matrix3d orientation_homography(const Eigen::Matrix3d& K,
                                       const Eigen::Matrix3d& R);

/// Warps every view by H (bilinear, replicate border, size unchanged).
LightField apply_orientation_correction(const LightField& lf,
                                        const Eigen::Matrix3d& H);

/// 1-D Gaussian-mixture clustering of displacement magnitudes ||q - p|| with
/// the cluster count picked by the silhouette criterion (k = 1 when the best
/// silhouette over k = 2..5 stays below 0.5).
DepthClustering cluster_depths(const CorrespondenceSet& matches,
                               uint64_t seed = 7);

/// Closed-form least-squares similarity q = s R(theta) p + T (no reflection).
SimilarityTransform estimate_similarity(
    const std::vector<Correspondence>& matches);

struct ScaleOptions {
  uint64_t seed = 7;
  int max_corners = 500;
  HarrisParams harris;
  KltParams klt;
  double min_pair_success = 0.25;
};

/// Geometric mean of the per-consecutive-pair similarity scales measured on
/// the smallest-displacement depth cluster.
double estimate_scale_within(const LightField& lf, const ScaleOptions& opt = {});

/// Same procedure on the two middle sub-aperture images.
double estimate_scale_between(const LightField& lf_ref, const LightField& lf2,
                              const ScaleOptions& opt = {});

struct OrientationOptions {
  RansacOptions ransac;
  HarrisParams harris;
  KltParams klt{.pyramid_levels = 4};  // wider basin for large rotations
  int max_corners = 500;
  int rounds = 2;  // re-match after applying the round-1 correction
};

/// Full orientation estimate between two middle views: features, RANSAC F,
/// gold-standard refinement, E, decomposition; a second pass on the
/// rotation-compensated image absorbs large rotations beyond the tracker's
/// basin. Returned R composes both rounds.
RotationEstimate estimate_orientation(const Image& mid1, const Image& mid2,
                                      const Eigen::Matrix3d& K,
                                      const OrientationOptions& opt = {});

/// Angle (radians) of the relative rotation between two rotation matrices.
double rotation_angle(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb);

}  // namespace lf
