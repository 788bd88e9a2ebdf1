#pragma once

#include <cstdint>
#include <vector>

namespace lf {

/// Per-pixel signed horizontal disparity (px) with a validity mask.
/// Convention: value = u_left - u_right for a (left, right) view pair, so
/// nearer content has larger values.
struct DisparityMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  std::vector<uint8_t> valid;

  DisparityMap() = default;
  DisparityMap(int w, int h)
      : width(w),
        height(h),
        values(static_cast<size_t>(w) * h, 0.0f),
        valid(static_cast<size_t>(w) * h, 0) {}

  float& value(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
  float value(int y, int x) const {
    return values[static_cast<size_t>(y) * width + x];
  }
  bool is_valid(int y, int x) const {
    return valid[static_cast<size_t>(y) * width + x] != 0;
  }
  void set_valid(int y, int x, bool v) {
    valid[static_cast<size_t>(y) * width + x] = v ? 1 : 0;
  }
};

}  // namespace lf
