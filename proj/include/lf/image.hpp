#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <cstdint>
#include <vector>

namespace lf {

/// Dense raster of float intensities in [0,1], interleaved channels,
/// row-major. Channels is 1 (gray) or 3 (RGB).
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f)
      : width_(width),
        height_(height),
        channels_(channels),
        data_(static_cast<size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  size_t size() const { return data_.size(); }

  float& at(int y, int x, int c = 0) {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int y, int x, int c = 0) const {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }

  // Clamped integer access (replicate border).
  float at_clamped(int y, int x, int c = 0) const;

  // Bilinear sample at (x, y) with replicate border.
  float sample(float x, float y, int c = 0) const;

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  double mean(int c = 0) const;

  /// Luma 0.299 R + 0.587 G + 0.114 B; identity on single-channel images.
  Image to_gray() const;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Translates content by (dx, dy): out(x, y) = in(x - dx, y - dy), bilinear,
/// replicate border. A feature at p lands at p + (dx, dy).
Image shift_image(const Image& img, double dx, double dy);

/// Warps by the coordinate map H (input coords -> output coords):
/// out(y) = in(H^-1 y). Bilinear, replicate border, size unchanged.
Image warp_homography(const Image& img, const Eigen::Matrix3d& H);

/// Separable Gaussian blur; kernel has `ksize` taps (odd) normalized to sum 1,
/// replicate border.
Image gaussian_blur(const Image& img, double sigma, int ksize);

/// 1-D Gaussian kernel, `ksize` taps centered, normalized to sum 1.
std::vector<double> gaussian_kernel(double sigma, int ksize);

/// 3x3 Sobel derivatives of a grayscale image (replicate border), scaled so
/// the response approximates the true intensity gradient (divided by 8).
void sobel_gradients(const Image& gray, Image* dx, Image* dy);

/// Half-resolution pyramid level: 5-tap blur then 2x decimation.
Image downsample_half(const Image& gray);

/// Variance of the 3x3 Laplacian response over the interior, skipping
/// `margin` pixels on every side. The sharpness metric used across tests.
double variance_of_laplacian(const Image& gray, int margin = 8);

}  // namespace lf
