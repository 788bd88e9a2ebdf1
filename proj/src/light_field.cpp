#include "lf/light_field.hpp"

#include <string>

#include "lf/error.hpp"

namespace lf {

LightField::LightField(int s_size, int t_size, Intrinsics intrinsics,
                       double angular_spacing)
    : s_size_(s_size),
      t_size_(t_size),
      intrinsics_(intrinsics),
      angular_spacing_(angular_spacing),
      views_(static_cast<size_t>(s_size) * t_size) {
  if (s_size < 1 || t_size < 1) {
    throw LfError(ErrorCode::kInvalidParam, "light-field",
                  "grid extents must be at least 1x1");
  }
  if (intrinsics.focal_length_px <= 0.0) {
    throw LfError(ErrorCode::kInvalidParam, "light-field",
                  "focal length must be positive");
  }
}

int LightField::index(int s, int t) const {
  if (s < 0 || s >= s_size_ || t < 0 || t >= t_size_) {
    throw LfError(ErrorCode::kOutOfRange, "light-field",
                  "view index (" + std::to_string(s) + "," + std::to_string(t) +
                      ") outside " + std::to_string(s_size_) + "x" +
                      std::to_string(t_size_) + " grid");
  }
  return s * t_size_ + t;
}

void LightField::validate(const char* stage) const {
  if (views_.empty()) throw LfError(ErrorCode::kInconsistent, stage, "no views");
  int w = views_[0].width(), h = views_[0].height();
  for (const Image& v : views_) {
    if (v.empty()) throw LfError(ErrorCode::kInconsistent, stage, "unpopulated view");
    if (v.width() != w || v.height() != h) {
      throw LfError(ErrorCode::kInconsistent, stage,
                    "views differ in dimensions");
    }
  }
  if (w < 16 || h < 16) {
    throw LfError(ErrorCode::kInconsistent, stage, "views smaller than 16x16");
  }
}

Image Epi::to_image() const {
  Image out(spatial_size, angular_size, 1);
  for (int a = 0; a < angular_size; ++a) {
    for (int x = 0; x < spatial_size; ++x) {
      out.at(angular_size - 1 - a, x) = at(a, x);
    }
  }
  return out;
}

Epi extract_epi(const LightField& lf, EpiOrientation orientation,
                int fixed_angular_index, int fixed_spatial_index) {
  Epi epi;
  epi.orientation = orientation;
  epi.fixed_angular = fixed_angular_index;
  epi.fixed_spatial = fixed_spatial_index;
  const bool horizontal = orientation == EpiOrientation::kHorizontal;
  if (horizontal) {
    if (fixed_angular_index < 0 || fixed_angular_index >= lf.t_size() ||
        fixed_spatial_index < 0 || fixed_spatial_index >= lf.height()) {
      throw LfError(ErrorCode::kOutOfRange, "extract-epi",
                    "slice indices outside bounds");
    }
    epi.angular_size = lf.s_size();
    epi.spatial_size = lf.width();
    epi.px.resize(static_cast<size_t>(epi.angular_size) * epi.spatial_size);
    for (int a = 0; a < epi.angular_size; ++a) {
      Image gray = lf.view(a, fixed_angular_index).to_gray();
      for (int x = 0; x < epi.spatial_size; ++x) {
        epi.at(a, x) = gray.at(fixed_spatial_index, x);
      }
    }
  } else {
    if (fixed_angular_index < 0 || fixed_angular_index >= lf.s_size() ||
        fixed_spatial_index < 0 || fixed_spatial_index >= lf.width()) {
      throw LfError(ErrorCode::kOutOfRange, "extract-epi",
                    "slice indices outside bounds");
    }
    epi.angular_size = lf.t_size();
    epi.spatial_size = lf.height();
    epi.px.resize(static_cast<size_t>(epi.angular_size) * epi.spatial_size);
    for (int a = 0; a < epi.angular_size; ++a) {
      Image gray = lf.view(fixed_angular_index, a).to_gray();
      for (int y = 0; y < epi.spatial_size; ++y) {
        epi.at(a, y) = gray.at(y, fixed_spatial_index);
      }
    }
  }
  return epi;
}

}  // namespace lf
