#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "lf/disparity.hpp"
#include "lf/light_field.hpp"

namespace lf {

/// Shift-and-sum parameters. `slope` is px per angular step, the stereo-sign
/// disparity of the depth brought into focus (u_left - u_right per step).
struct RefocusParams {
  double slope = 0.0;
  // Views participating in the synthetic aperture; empty = all views.
  std::vector<std::pair<int, int>> aperture_mask;
};

/// View (s,t) is shifted by (slope*(s - s_mid), slope*(t - t_mid)) with
/// subpixel bilinear sampling, then the masked views are averaged.
Image refocus(const LightField& lf, const RefocusParams& params);

/// Views at the extremes of the requested axis, at the middle of the other.
std::pair<Image, Image> extreme_views(const LightField& lf,
                                      EpiOrientation axis);
std::pair<std::pair<int, int>, std::pair<int, int>> extreme_view_indices(
    const LightField& lf, EpiOrientation axis);

struct BlockMatchParams {
  int window_radius = 4;        // 9x9 SSD window
  int max_disparity = 16;       // search in [-max, +max]
  double consistency_px = 1.0;  // left-right check tolerance
};

/// Horizontal block matching with parabolic subpixel refinement and a
/// left-right consistency check filling the valid mask.
DisparityMap disparity_map(const Image& img_left, const Image& img_right,
                           const BlockMatchParams& params = {});

/// Range (max - min, optionally trimmed to percentiles) over valid pixels.
double disparity_range(const DisparityMap& map, double trim_percent = 1.0);

struct EpiSliceSpec {
  EpiOrientation orientation = EpiOrientation::kHorizontal;
  int fixed_angular = 0;
  int fixed_spatial = 0;
};

/// EPIs of the same slice through both fields for side-by-side inspection.
std::pair<Epi, Epi> render_epi_comparison(const LightField& lf_single,
                                          const LightField& lf_extended,
                                          const EpiSliceSpec& spec);

}  // namespace lf
