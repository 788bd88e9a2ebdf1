#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "lf/disparity.hpp"
#include "lf/light_field.hpp"

namespace lf {

/// Fronto-parallel textured rectangle at z = depth (world units).
struct ScenePlane {
  double depth = 1.0;
  Image texture;                                     // RGB
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // world units
  Eigen::Vector2d size = Eigen::Vector2d::Ones();    // world extent (w, h)
};

/// Scene = ordered list of planes; occlusion resolves nearest-first.
struct PlanarScene {
  std::vector<ScenePlane> planes;
};

/// Pose of the virtual camera array. Camera (s,t) sits at
///   center_translation + rotation * (baseline*(s - (S-1)/2),
///                                    baseline*(t - (T-1)/2),
///                                    z_step*((s-(S-1)/2) + (t-(T-1)/2)))
/// and shares the array orientation. z_step models per-view drift toward the
/// scene (0 for a rigid planar array).
struct ArrayPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d center_translation = Eigen::Vector3d::Zero();
  double baseline = 1.0;
  double z_step = 0.0;
};

/// Validates orthonormality/determinant of the rotation and baseline >= 0.
void validate_pose(const ArrayPose& pose);

Eigen::Vector3d camera_center(const ArrayPose& pose, int s_size, int t_size,
                              int s, int t);

/// Pinhole projection of a world point into camera (s,t) of the array.
Eigen::Vector2d project_point(const ArrayPose& pose, const Intrinsics& intr,
                              int s_size, int t_size, int s, int t,
                              const Eigen::Vector3d& world);

/// Procedural RGB test texture: seeded multi-octave value noise with
/// scattered high-contrast patches, values kept inside [0.05, 0.95].
Image make_texture(int width, int height, uint64_t seed);

/// Renders the S x T sub-aperture grid at the given view resolution. Rays
/// missing every plane render mid-gray 0.5. Optional additive Gaussian pixel
/// noise (seeded).
LightField render_light_field(const PlanarScene& scene, const ArrayPose& pose,
                              const Intrinsics& intrinsics, int width,
                              int height, int s_size, int t_size,
                              double noise_sigma = 0.0,
                              uint64_t noise_seed = 0);

/// Exact signed horizontal disparity (u_a - u_b) of the visible plane, per
/// pixel of view a.
DisparityMap ground_truth_disparity(const PlanarScene& scene,
                                    const ArrayPose& pose,
                                    const Intrinsics& intrinsics, int width,
                                    int height, int s_size, int t_size,
                                    std::pair<int, int> view_a,
                                    std::pair<int, int> view_b);

}  // namespace lf
