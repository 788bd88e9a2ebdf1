#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lf/image.hpp"

namespace lf {

/// Pinhole intrinsics with zero skew and square pixels.
struct Intrinsics {
  double focal_length_px = 1.0;
  Eigen::Vector2d principal_point = Eigen::Vector2d::Zero();

  Eigen::Matrix3d K() const {
    Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
    k(0, 0) = focal_length_px;
    k(1, 1) = focal_length_px;
    k(0, 2) = principal_point.x();
    k(1, 2) = principal_point.y();
    return k;
  }
};

/// 4D light field I(u,v,s,t): an S x T grid of sub-aperture images on a
/// regular angular lattice. s is the horizontal view axis (grows rightward),
/// t the vertical one (grows upward). Immutable once built; treat views as
/// read-only after construction so the object can be shared across threads.
class LightField {
 public:
  LightField() = default;
  LightField(int s_size, int t_size, Intrinsics intrinsics,
             double angular_spacing = 1.0);

  int s_size() const { return s_size_; }
  int t_size() const { return t_size_; }
  int view_count() const { return s_size_ * t_size_; }
  int width() const { return views_.empty() ? 0 : views_[0].width(); }
  int height() const { return views_.empty() ? 0 : views_[0].height(); }
  int channels() const { return views_.empty() ? 0 : views_[0].channels(); }

  const Intrinsics& intrinsics() const { return intrinsics_; }
  double angular_spacing() const { return angular_spacing_; }

  double s_mid() const { return (s_size_ - 1) / 2.0; }
  double t_mid() const { return (t_size_ - 1) / 2.0; }
  // Integer indices of the middle view (lower median for even extents).
  int s_mid_index() const { return (s_size_ - 1) / 2; }
  int t_mid_index() const { return (t_size_ - 1) / 2; }

  const Image& view(int s, int t) const { return views_[index(s, t)]; }
  Image& view(int s, int t) { return views_[index(s, t)]; }
  const Image& middle_view() const {
    return view(s_mid_index(), t_mid_index());
  }

  // Checks the populated grid: consistent dimensions, minimum sizes.
  void validate(const char* stage) const;

 private:
  int index(int s, int t) const;

  int s_size_ = 0;
  int t_size_ = 0;
  Intrinsics intrinsics_;
  double angular_spacing_ = 1.0;
  std::vector<Image> views_;
};

enum class EpiOrientation { kHorizontal, kVertical };

/// 2D spatial-angular slice. Row a (angular index, increasing "up") holds a
/// grayscale scan line of view a along the sliced spatial line.
struct Epi {
  EpiOrientation orientation = EpiOrientation::kHorizontal;
  int angular_size = 0;  // rows: S (horizontal) or T (vertical)
  int spatial_size = 0;  // cols: W (horizontal) or H (vertical)
  int fixed_angular = 0;  // t (horizontal) or s (vertical)
  int fixed_spatial = 0;  // v (horizontal) or u (vertical)
  std::vector<float> px;  // angular-major

  float& at(int a, int x) { return px[static_cast<size_t>(a) * spatial_size + x]; }
  float at(int a, int x) const {
    return px[static_cast<size_t>(a) * spatial_size + x];
  }

  Image to_image() const;  // row 0 = largest angular index (axis points up)
};

/// Horizontal: row a = luma of image row v=fixed_spatial of view (s=a,
/// t=fixed_angular). Vertical: row a = luma of image column u=fixed_spatial
/// of view (s=fixed_angular, t=a).
Epi extract_epi(const LightField& lf, EpiOrientation orientation,
                int fixed_angular_index, int fixed_spatial_index);

}  // namespace lf
