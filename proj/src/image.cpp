#include "lf/image.hpp"

#include <algorithm>
#include <cmath>

namespace lf {

float Image::at_clamped(int y, int x, int c) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(y, x, c);
}

float Image::sample(float x, float y, int c) const {
  // Replicate border: clamp the sampling point into the valid rectangle.
  x = std::clamp(x, 0.0f, static_cast<float>(width_ - 1));
  y = std::clamp(y, 0.0f, static_cast<float>(height_ - 1));
  int x0 = static_cast<int>(x);
  int y0 = static_cast<int>(y);
  int x1 = std::min(x0 + 1, width_ - 1);
  int y1 = std::min(y0 + 1, height_ - 1);
  float fx = x - x0;
  float fy = y - y0;
  float v00 = at(y0, x0, c);
  float v01 = at(y0, x1, c);
  float v10 = at(y1, x0, c);
  float v11 = at(y1, x1, c);
  return (1 - fy) * ((1 - fx) * v00 + fx * v01) +
         fy * ((1 - fx) * v10 + fx * v11);
}

double Image::mean(int c) const {
  double sum = 0.0;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) sum += at(y, x, c);
  return sum / (static_cast<double>(width_) * height_);
}

Image Image::to_gray() const {
  if (channels_ == 1) return *this;
  Image out(width_, height_, 1);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      out.at(y, x) = 0.299f * at(y, x, 0) + 0.587f * at(y, x, 1) +
                     0.114f * at(y, x, 2);
    }
  }
  return out;
}

Image shift_image(const Image& img, double dx, double dy) {
  if (dx == 0.0 && dy == 0.0) return img;
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      float sx = static_cast<float>(x - dx);
      float sy = static_cast<float>(y - dy);
      for (int c = 0; c < img.channels(); ++c) {
        out.at(y, x, c) = img.sample(sx, sy, c);
      }
    }
  }
  return out;
}

Image warp_homography(const Image& img, const Eigen::Matrix3d& H) {
  Eigen::Matrix3d Hinv = H.inverse();
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      Eigen::Vector3d p = Hinv * Eigen::Vector3d(x, y, 1.0);
      float sx = static_cast<float>(p.x() / p.z());
      float sy = static_cast<float>(p.y() / p.z());
      for (int c = 0; c < img.channels(); ++c) {
        out.at(y, x, c) = img.sample(sx, sy, c);
      }
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma, int ksize) {
  std::vector<double> k(ksize);
  int r = ksize / 2;
  double sum = 0.0;
  for (int i = 0; i < ksize; ++i) {
    double d = i - r;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

Image gaussian_blur(const Image& img, double sigma, int ksize) {
  std::vector<double> k = gaussian_kernel(sigma, ksize);
  int r = ksize / 2;
  Image tmp(img.width(), img.height(), img.channels());
  // Horizontal pass.
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * img.at_clamped(y, x + i, c);
        tmp.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  Image out(img.width(), img.height(), img.channels());
  // Vertical pass.
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.at_clamped(y + i, x, c);
        out.at(y, x, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

void sobel_gradients(const Image& gray, Image* dx, Image* dy) {
  assert(gray.channels() == 1);
  int w = gray.width(), h = gray.height();
  *dx = Image(w, h, 1);
  *dy = Image(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float p00 = gray.at_clamped(y - 1, x - 1), p01 = gray.at_clamped(y - 1, x),
            p02 = gray.at_clamped(y - 1, x + 1);
      float p10 = gray.at_clamped(y, x - 1), p12 = gray.at_clamped(y, x + 1);
      float p20 = gray.at_clamped(y + 1, x - 1), p21 = gray.at_clamped(y + 1, x),
            p22 = gray.at_clamped(y + 1, x + 1);
      dx->at(y, x) = ((p02 + 2 * p12 + p22) - (p00 + 2 * p10 + p20)) / 8.0f;
      dy->at(y, x) = ((p20 + 2 * p21 + p22) - (p00 + 2 * p01 + p02)) / 8.0f;
    }
  }
}

Image downsample_half(const Image& gray) {
  // 5-tap binomial blur then decimate.
  static const float k[5] = {1 / 16.f, 4 / 16.f, 6 / 16.f, 4 / 16.f, 1 / 16.f};
  int w = gray.width(), h = gray.height();
  Image tmp(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0.f;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * gray.at_clamped(y, x + i);
      tmp.at(y, x) = acc;
    }
  Image tmp2(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0.f;
      for (int i = -2; i <= 2; ++i) acc += k[i + 2] * tmp.at_clamped(y + i, x);
      tmp2.at(y, x) = acc;
    }
  int w2 = (w + 1) / 2, h2 = (h + 1) / 2;
  Image out(w2, h2, 1);
  for (int y = 0; y < h2; ++y)
    for (int x = 0; x < w2; ++x) out.at(y, x) = tmp2.at(2 * y, 2 * x);
  return out;
}

double variance_of_laplacian(const Image& gray, int margin) {
  assert(gray.channels() == 1);
  int w = gray.width(), h = gray.height();
  int x0 = margin, x1 = w - margin, y0 = margin, y1 = h - margin;
  if (x1 <= x0 || y1 <= y0) {
    x0 = 0;
    x1 = w;
    y0 = 0;
    y1 = h;
  }
  double sum = 0.0, sum2 = 0.0;
  long n = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      double v = gray.at_clamped(y, x - 1) + gray.at_clamped(y, x + 1) +
                 gray.at_clamped(y - 1, x) + gray.at_clamped(y + 1, x) -
                 4.0 * gray.at(y, x);
      sum += v;
      sum2 += v * v;
      ++n;
    }
  }
  double m = sum / n;
  return sum2 / n - m * m;
}

}  // namespace lf
