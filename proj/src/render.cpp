#include "lf/render.hpp"

#include <algorithm>
#include <cmath>

#include "lf/error.hpp"
#include "lf/parallel.hpp"

namespace lf {

Image refocus(const LightField& lf, const RefocusParams& params) {
  lf.validate("refocus");
  if (!std::isfinite(params.slope)) {
    throw LfError(ErrorCode::kInvalidParam, "refocus", "slope must be finite");
  }
  std::vector<std::pair<int, int>> mask = params.aperture_mask;
  if (mask.empty()) {
    for (int s = 0; s < lf.s_size(); ++s)
      for (int t = 0; t < lf.t_size(); ++t) mask.emplace_back(s, t);
  }
  if (mask.empty()) {
    throw LfError(ErrorCode::kInvalidParam, "refocus", "empty aperture mask");
  }

  const int w = lf.width(), h = lf.height(), c = lf.channels_of_views();
  std::vector<double> acc(static_cast<size_t>(w) * h * c, 0.0);
  for (const auto& [s, t] : mask) {
    if (s < 0 || s >= lf.s_size() || t < 0 || t >= lf.t_size()) {
      throw LfError(ErrorCode::kOutOfRange, "refocus",
                    "aperture view outside the grid");
    }
    double dx = params.slope * (s - lf.s_mid());
    double dy = params.slope * (t - lf.t_mid());
    const Image& v = lf.view(s, t);
    // Accumulate the shifted view; views are traversed in mask order so the
    // float sum is independent of the thread count.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int ch = 0; ch < c; ++ch) {
          acc[(static_cast<size_t>(y) * w + x) * c + ch] +=
              v.sample(static_cast<float>(x - dx), static_cast<float>(y - dy),
                       ch);
        }
      }
    }
  }
  Image out(w, h, c);
  double inv = 1.0 / static_cast<double>(mask.size());
  for (size_t i = 0; i < acc.size(); ++i) {
    out.data()[i] = static_cast<float>(acc[i] * inv);
  }
  return out;
}

std::pair<std::pair<int, int>, std::pair<int, int>> extreme_view_indices(
    const LightField& lf, EpiOrientation axis) {
  if (axis == EpiOrientation::kHorizontal) {
    int t = lf.t_mid_index();
    return {{0, t}, {lf.s_size() - 1, t}};
  }
  int s = lf.s_mid_index();
  return {{s, 0}, {s, lf.t_size() - 1}};
}

std::pair<Image, Image> extreme_views(const LightField& lf,
                                      EpiOrientation axis) {
  auto [a, b] = extreme_view_indices(lf, axis);
  return {lf.view(a.first, a.second), lf.view(b.first, b.second)};
}

namespace {

// SSD between 9x9 windows centred at (x,y) in `a` and (x - d, y) in `b`.
double window_ssd(const Image& a, const Image& b, int x, int y, int d, int r) {
  double ssd = 0.0;
  for (int wy = -r; wy <= r; ++wy) {
    for (int wx = -r; wx <= r; ++wx) {
      double diff = a.at_clamped(y + wy, x + wx) -
                    b.at_clamped(y + wy, x + wx - d);
      ssd += diff * diff;
    }
  }
  return ssd;
}

// Integer + parabolic-subpixel horizontal matching of `a` against `b`.
void match_direction(const Image& a, const Image& b, int max_disp, int r,
                     int sign, std::vector<float>* disp) {
  const int w = a.width(), h = a.height();
  disp->assign(static_cast<size_t>(w) * h, 0.0f);
  parallel_for(h, [&](int y) {
    std::vector<double> cost(2 * max_disp + 1);
    for (int x = 0; x < w; ++x) {
      int best = 0;
      double best_cost = 1e300;
      for (int d = -max_disp; d <= max_disp; ++d) {
        double cst = window_ssd(a, b, x, y, sign * d, r);
        cost[d + max_disp] = cst;
        if (cst < best_cost) {
          best_cost = cst;
          best = d;
        }
      }
      double sub = 0.0;
      if (best > -max_disp && best < max_disp) {
        double cm = cost[best - 1 + max_disp];
        double c0 = cost[best + max_disp];
        double cp = cost[best + 1 + max_disp];
        double denom = cm - 2.0 * c0 + cp;
        if (denom > 1e-18) sub = std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
      }
      (*disp)[static_cast<size_t>(y) * w + x] = static_cast<float>(best + sub);
    }
  });
}

}  // namespace

DisparityMap disparity_map(const Image& img_left, const Image& img_right,
                           const BlockMatchParams& params) {
  Image left = img_left.to_gray();
  Image right = img_right.to_gray();
  if (!left.same_shape(right)) {
    throw LfError(ErrorCode::kInconsistent, "disparity", "image sizes differ");
  }
  const int w = left.width(), h = left.height();
  const int r = params.window_radius;
  const int md = params.max_disparity;
  if (md <= 0 || md >= w / 4) {
    throw LfError(ErrorCode::kInvalidParam, "disparity",
                  "max disparity must be in (0, width/4)");
  }

  // Left-against-right: right position is x - d.
  std::vector<float> dl, dr;
  match_direction(left, right, md, r, +1, &dl);
  // Right-against-left: left position is x + d.
  match_direction(right, left, md, r, -1, &dr);

  DisparityMap map(w, h);
  const int margin = r + md;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float d = dl[static_cast<size_t>(y) * w + x];
      map.value(y, x) = d;
      if (x < margin || x >= w - margin || y < r || y >= h - r) continue;
      int xr = static_cast<int>(std::lround(x - d));
      if (xr < 0 || xr >= w) continue;
      float back = dr[static_cast<size_t>(y) * w + xr];
      if (std::abs(back - d) <= params.consistency_px) {
        map.set_valid(y, x, true);
      }
    }
  }
  return map;
}

double disparity_range(const DisparityMap& map, double trim_percent) {
  std::vector<float> vals;
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x)
      if (map.is_valid(y, x)) vals.push_back(map.value(y, x));
  if (vals.size() < 2) {
    throw LfError(ErrorCode::kEstimation, "disparity-range",
                  "too few valid pixels");
  }
  std::sort(vals.begin(), vals.end());
  size_t lo = static_cast<size_t>(vals.size() * trim_percent / 100.0);
  size_t hi = vals.size() - 1 - lo;
  if (hi <= lo) {
    lo = 0;
    hi = vals.size() - 1;
  }
  return vals[hi] - vals[lo];
}

std::pair<Epi, Epi> render_epi_comparison(const LightField& lf_single,
                                          const LightField& lf_extended,
                                          const EpiSliceSpec& spec) {
  if (lf_single.width() != lf_extended.width() ||
      lf_single.height() != lf_extended.height()) {
    throw LfError(ErrorCode::kInconsistent, "epi-comparison",
                  "spatial dimensions differ");
  }
  Epi a = extract_epi(lf_single, spec.orientation, spec.fixed_angular,
                      spec.fixed_spatial);
  Epi b = extract_epi(lf_extended, spec.orientation, spec.fixed_angular,
                      spec.fixed_spatial);
  return {a, b};
}

}  // namespace lf
