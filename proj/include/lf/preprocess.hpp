#pragma once

#include <array>
#include <optional>
#include <vector>

#include "lf/light_field.hpp"

namespace lf {

/// 5x5 Gaussian with sigma 0.6, kernel normalized to sum 1, replicate border.
/// Used ahead of estimation stages; never baked into stitched output pixels.
Image denoise_gaussian(const Image& img);

/// Per-channel monotone lookup (256 entries) mapping source intensities to
/// reference intensities.
struct PhotometricMap {
  std::array<std::array<float, 256>, 3> lut;
};

/// Histogram matching per channel: the map sends the source CDF onto the
/// reference CDF. Identical images produce the identity table; a constant
/// channel on either side leaves that channel's table as identity.
PhotometricMap fit_photometric_map(const Image& src, const Image& ref);
Image apply_photometric_map(const PhotometricMap& map, const Image& img);

/// Dominant EPI line, angle measured counter-clockwise from the +x axis with
/// the angular axis pointing up. disparity_per_view = cot(angle) in px/view.
struct SlopeEstimate {
  double angle_deg = 90.0;
  double disparity_per_view = 0.0;
  double support = 0.0;  // rows of the winning line's accumulator bin
};

struct SlopeOptions {
  double hough_step_deg = 0.25;
  double min_support_frac = 0.6;  // of the angular extent
  int epi_stride = 8;             // sample every Nth spatial slice
  bool full_scan = false;         // all slices of all rows/columns
  double max_line_rms = 0.35;     // px, quality gate on refined fits
};

/// One refined EPI line: Hough peak followed by a least-squares fit through
/// the supporting subpixel edge positions.
struct EpiLineFit {
  double angle_deg = 90.0;
  double disparity_per_view = 0.0;
  double intercept = 0.0;  // spatial position at angular index 0
  double rms = 0.0;        // px, residual of the refined fit
  int support = 0;         // distinct angular rows
};

/// All quality-gated line fits in one EPI (edge detect -> Hough -> refine).
std::vector<EpiLineFit> fit_epi_lines(const Epi& epi, const SlopeOptions& opt = {});

/// Largest-angle line across the sampled EPIs of the given orientation.
/// Throws no-structure when nothing clears the vote threshold.
SlopeEstimate estimate_max_epi_slope(const LightField& lf,
                                     EpiOrientation orientation,
                                     const SlopeOptions& opt = {});

struct RecenterInfo {
  double disparity_s = 0.0;  // px/view applied along s (horizontal EPIs)
  double disparity_t = 0.0;  // px/view applied along t (vertical EPIs)
};

/// Shifts view (s,t) by (-d_s*(s-s_mid), -d_t*(t-t_mid)) so the largest-slope
/// EPI lines become vertical (the array focuses at the reference depth).
/// Slopes below 1e-3 px/view are treated as zero and views pass unchanged.
LightField recenter_to_farthest_depth(const LightField& lf,
                                      const SlopeOptions& opt = {},
                                      RecenterInfo* info = nullptr);

struct PreprocessOptions {
  bool photometric = true;
  bool recenter = true;
  SlopeOptions slope;
};

/// Photometric matching of every view to the middle view (maps fitted on
/// denoised copies, applied to the original pixels), then recentering.
LightField preprocess_light_field(const LightField& lf,
                                  const PreprocessOptions& opt = {},
                                  RecenterInfo* info = nullptr);

}  // namespace lf
