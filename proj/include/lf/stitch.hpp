#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lf/geometry.hpp"
#include "lf/light_field.hpp"

namespace lf {

/// Rectified views at continuous angular positions (reference-baseline
/// units), before resampling onto a regular grid.
struct IrregularSample {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();  // (s, t)
  Image image;
  int source_id = 0;
};

struct IrregularLightField {
  std::vector<IrregularSample> samples;
  Intrinsics intrinsics;
};

struct Triangulation {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> hull_edges;
};

/// Bowyer-Watson Delaunay triangulation. Throws degenerate-geometry when all
/// points are collinear (or closer than 1e-9 to one another).
Triangulation delaunay(const std::vector<Eigen::Vector2d>& positions);

/// Rectification parameters applied to one light field.
struct RigidRegistration {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double scale_between = 1.0;
  double scale_within_step = 1.0;
  Eigen::Vector2d offset_baselines = Eigen::Vector2d::Zero();
  std::vector<double> view_scales;             // indexed s * T + t
  std::vector<Eigen::Vector2d> view_positions;  // (s, t), baseline units
};

struct TranslationOptions {
  uint64_t seed = 7;
  int max_corners = 500;
  HarrisParams harris;
  KltParams klt{.pyramid_levels = 4};
  double min_pair_success = 0.25;
};

/// Mean per-step displacement (px) between consecutive views along one axis,
/// measured on the largest-displacement depth cluster (the common reference
/// plane is parallax-free after recentering, so the opposite extreme is the
/// reliable ruler). One baseline unit equals this many pixels.
Eigen::Vector2d estimate_translation_within(const LightField& lf,
                                            EpiOrientation orientation,
                                            const TranslationOptions& opt = {});

/// Displacement (px) between the middle views of two rectified light fields,
/// same cluster rule as estimate_translation_within.
Eigen::Vector2d estimate_translation_between(const LightField& lf_ref,
                                             const LightField& lf2,
                                             const TranslationOptions& opt = {});

/// Places view (s,t) of field j at offset_j + (s - s_mid, t - t_mid).
/// Duplicate positions are retained here and collapsed at resampling.
IrregularLightField place_samples(
    const std::vector<RigidRegistration>& registrations,
    const std::vector<LightField>& lfs);

/// Collapses samples closer than `tol` (keeps the lowest source_id).
IrregularLightField dedupe_samples(const IrregularLightField& ilf,
                                   double tol = 0.05);

struct ResampleResult {
  LightField lf;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();  // position of view (0,0)
  int bbox_cols = 0;  // integer lattice size before cropping
  int bbox_rows = 0;
  int interpolated_views = 0;
  int copied_views = 0;
};

/// Regular-grid resampling: coincident grid points copy the recorded view;
/// points inside a triangle blend its three vertex images with weights
/// proportional to inverse distance; points outside the hull invalidate
/// their view and the grid is cropped to the largest fully-valid rectangle.
ResampleResult resample_regular_grid(const IrregularLightField& ilf,
                                     const Triangulation& tri,
                                     double grid_step = 1.0);

/// Inverse-distance weights of Eq-style blending; d must be positive.
std::array<double, 3> inverse_distance_weights(const std::array<double, 3>& d);

struct StitchOptions {
  uint64_t seed = 42;
  bool photometric = true;
  bool recenter = true;
  SlopeOptions slope;
  OrientationOptions orientation;
  ScaleOptions scale;
  TranslationOptions translation;
  double grid_step = 1.0;
  double dedupe_tol = 0.05;
  bool rotation_diagnostic = false;  // re-estimate R on corner view pairs
};

struct StitchReport {
  struct PerField {
    int index = 0;
    Eigen::Vector3d rotation_axis_angle_deg = Eigen::Vector3d::Zero();
    double scale_between = 1.0;
    double scale_within_step = 1.0;
    Eigen::Vector2d offset_baselines = Eigen::Vector2d::Zero();
    double recenter_disparity_s = 0.0;
    double recenter_disparity_t = 0.0;
    double rotation_spread_deg = -1.0;  // diagnostic; -1 when skipped
  };
  std::vector<PerField> fields;
  Eigen::Vector2d per_step_horizontal_px = Eigen::Vector2d::Zero();
  Eigen::Vector2d per_step_vertical_px = Eigen::Vector2d::Zero();
  int grid_rows = 0;  // vertical extent (T)
  int grid_cols = 0;  // horizontal extent (S)
  Eigen::Vector2d grid_origin = Eigen::Vector2d::Zero();
  int sample_count = 0;
  int interpolated_views = 0;
  int copied_views = 0;

  std::string to_json() const;
};

struct StitchResult {
  LightField lf;
  StitchReport report;
};

/// Full pipeline: preprocess each field, correct orientation and scale
/// against the first (reference) field, place all views, triangulate, and
/// resample onto the regular grid. Deterministic for a fixed seed.
StitchResult stitch(const std::vector<LightField>& lfs,
                    const StitchOptions& opt = {});

}  // namespace lf
