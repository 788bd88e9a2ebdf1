#include "lf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lf/error.hpp"
#include "lf/parallel.hpp"
#include "lf/rng.hpp"

namespace lf {

namespace {

void validate_scene(const PlanarScene& scene) {
  if (scene.planes.empty()) {
    throw LfError(ErrorCode::kGeometry, "lf-synth", "scene has no planes");
  }
  for (const ScenePlane& p : scene.planes) {
    if (!(p.depth > 0.0)) {
      throw LfError(ErrorCode::kGeometry, "lf-synth",
                    "plane depth must be positive");
    }
    if (p.texture.empty()) {
      throw LfError(ErrorCode::kGeometry, "lf-synth", "plane has no texture");
    }
  }
  for (size_t i = 0; i < scene.planes.size(); ++i) {
    for (size_t j = i + 1; j < scene.planes.size(); ++j) {
      if (scene.planes[i].depth == scene.planes[j].depth) {
        throw LfError(ErrorCode::kGeometry, "lf-synth",
                      "plane depths must be distinct");
      }
    }
  }
}

std::vector<int> depth_order(const PlanarScene& scene) {
  std::vector<int> order(scene.planes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return scene.planes[a].depth < scene.planes[b].depth;
  });
  return order;
}

// Returns the plane index hit by the ray, or -1; fills the world hit point.
int trace_ray(const PlanarScene& scene, const std::vector<int>& order,
              const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
              Eigen::Vector3d* hit) {
  for (int idx : order) {
    const ScenePlane& p = scene.planes[idx];
    if (std::abs(dir.z()) < 1e-12) continue;
    double lambda = (p.depth - origin.z()) / dir.z();
    if (lambda <= 0.0) continue;
    Eigen::Vector3d pt = origin + lambda * dir;
    if (std::abs(pt.x() - p.center.x()) <= p.size.x() / 2 &&
        std::abs(pt.y() - p.center.y()) <= p.size.y() / 2) {
      *hit = pt;
      return idx;
    }
  }
  return -1;
}

float sample_plane(const ScenePlane& p, const Eigen::Vector3d& world, int c) {
  double tx = (world.x() - (p.center.x() - p.size.x() / 2)) / p.size.x();
  double ty = (world.y() - (p.center.y() - p.size.y() / 2)) / p.size.y();
  return p.texture.sample(static_cast<float>(tx * (p.texture.width() - 1)),
                          static_cast<float>(ty * (p.texture.height() - 1)), c);
}

}  // namespace

void validate_pose(const ArrayPose& pose) {
  Eigen::Matrix3d e =
      pose.rotation.transpose() * pose.rotation - Eigen::Matrix3d::Identity();
  if (e.cwiseAbs().maxCoeff() > 1e-10 ||
      std::abs(pose.rotation.determinant() - 1.0) > 1e-10) {
    throw LfError(ErrorCode::kGeometry, "lf-synth",
                  "pose rotation is not a proper rotation matrix");
  }
  if (pose.baseline < 0.0) {
    throw LfError(ErrorCode::kGeometry, "lf-synth", "baseline must be >= 0");
  }
}

Eigen::Vector3d camera_center(const ArrayPose& pose, int s_size, int t_size,
                              int s, int t) {
  double ds = s - (s_size - 1) / 2.0;
  double dt = t - (t_size - 1) / 2.0;
  Eigen::Vector3d local(pose.baseline * ds, pose.baseline * dt,
                        pose.z_step * (ds + dt));
  return pose.center_translation + pose.rotation * local;
}

Eigen::Vector2d project_point(const ArrayPose& pose, const Intrinsics& intr,
                              int s_size, int t_size, int s, int t,
                              const Eigen::Vector3d& world) {
  Eigen::Vector3d c = camera_center(pose, s_size, t_size, s, t);
  Eigen::Vector3d cam = pose.rotation.transpose() * (world - c);
  if (cam.z() <= 0.0) {
    throw LfError(ErrorCode::kGeometry, "lf-synth",
                  "point projects behind the camera");
  }
  return Eigen::Vector2d(
      intr.focal_length_px * cam.x() / cam.z() + intr.principal_point.x(),
      intr.focal_length_px * cam.y() / cam.z() + intr.principal_point.y());
}

Image make_texture(int width, int height, uint64_t seed) {
  Rng rng(seed);
  Image tex(width, height, 3);

  // Three octaves of value noise shared across channels.
  const int cells[3] = {12, 24, 48};
  const double weights[3] = {0.50, 0.30, 0.20};
  std::vector<std::vector<float>> lattices;
  for (int o = 0; o < 3; ++o) {
    int n = cells[o] + 2;
    std::vector<float> lat(static_cast<size_t>(n) * n);
    for (float& v : lat) v = static_cast<float>(rng.uniform());
    lattices.push_back(std::move(lat));
  }
  auto lattice_sample = [&](int o, double fx, double fy) {
    int n = cells[o] + 2;
    double gx = fx * cells[o];
    double gy = fy * cells[o];
    int x0 = static_cast<int>(gx), y0 = static_cast<int>(gy);
    double ax = gx - x0, ay = gy - y0;
    const std::vector<float>& lat = lattices[o];
    auto v = [&](int yy, int xx) { return lat[static_cast<size_t>(yy) * n + xx]; };
    return (1 - ay) * ((1 - ax) * v(y0, x0) + ax * v(y0, x0 + 1)) +
           ay * ((1 - ax) * v(y0 + 1, x0) + ax * v(y0 + 1, x0 + 1));
  };

  double tint[3] = {rng.uniform(0.85, 1.0), rng.uniform(0.85, 1.0),
                    rng.uniform(0.85, 1.0)};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double fx = static_cast<double>(x) / width;
      double fy = static_cast<double>(y) / height;
      double v = 0.0;
      for (int o = 0; o < 3; ++o) v += weights[o] * lattice_sample(o, fx, fy);
      for (int c = 0; c < 3; ++c) {
        tex.at(y, x, c) = static_cast<float>(v * tint[c]);
      }
    }
  }

  // Scattered high-contrast squares to guarantee strong corners.
  int patches = std::max(24, width * height / 4096);
  for (int i = 0; i < patches; ++i) {
    int pw = 4 + static_cast<int>(rng.uniform_index(9));
    int ph = 4 + static_cast<int>(rng.uniform_index(9));
    int px = static_cast<int>(rng.uniform_index(std::max(1, width - pw)));
    int py = static_cast<int>(rng.uniform_index(std::max(1, height - ph)));
    float val = rng.uniform() < 0.5 ? 0.08f : 0.92f;
    for (int y = py; y < py + ph; ++y)
      for (int x = px; x < px + pw; ++x)
        for (int c = 0; c < 3; ++c) tex.at(y, x, c) = val;
  }

  for (float& v : tex.data()) v = std::clamp(v, 0.05f, 0.95f);
  return tex;
}

LightField render_light_field(const PlanarScene& scene, const ArrayPose& pose,
                              const Intrinsics& intrinsics, int width,
                              int height, int s_size, int t_size,
                              double noise_sigma, uint64_t noise_seed) {
  validate_scene(scene);
  validate_pose(pose);
  if (s_size < 1 || t_size < 1) {
    throw LfError(ErrorCode::kInvalidParam, "lf-synth", "grid must be >= 1x1");
  }
  if (width < 16 || height < 16) {
    throw LfError(ErrorCode::kInvalidParam, "lf-synth",
                  "views smaller than 16x16");
  }

  // Every plane must lie in front of every camera.
  double nearest = scene.planes.front().depth;
  for (const ScenePlane& p : scene.planes) nearest = std::min(nearest, p.depth);
  for (int s = 0; s < s_size; ++s) {
    for (int t = 0; t < t_size; ++t) {
      if (camera_center(pose, s_size, t_size, s, t).z() >= nearest) {
        throw LfError(ErrorCode::kGeometry, "lf-synth",
                      "plane behind (or at) a camera");
      }
    }
  }

  std::vector<int> order = depth_order(scene);
  const int w = width, h = height;

  LightField out(s_size, t_size, intrinsics, 1.0);
  Rng base(noise_seed);
  parallel_for(s_size * t_size, [&](int i) {
    int s = i / t_size;
    int t = i % t_size;
    Eigen::Vector3d origin = camera_center(pose, s_size, t_size, s, t);
    Image img(w, h, 3);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        Eigen::Vector3d dir_cam(
            (x - intrinsics.principal_point.x()) / intrinsics.focal_length_px,
            (y - intrinsics.principal_point.y()) / intrinsics.focal_length_px,
            1.0);
        Eigen::Vector3d dir = pose.rotation * dir_cam;
        Eigen::Vector3d hit;
        int idx = trace_ray(scene, order, origin, dir, &hit);
        for (int c = 0; c < 3; ++c) {
          img.at(y, x, c) =
              idx < 0 ? 0.5f : sample_plane(scene.planes[idx], hit, c);
        }
      }
    }
    if (noise_sigma > 0.0) {
      Rng rng = base.fork(static_cast<uint64_t>(i));
      for (float& v : img.data()) {
        v = std::clamp(v + static_cast<float>(noise_sigma * rng.normal()),
                       0.0f, 1.0f);
      }
    }
    out.view(s, t) = std::move(img);
  });
  return out;
}

DisparityMap ground_truth_disparity(const PlanarScene& scene,
                                    const ArrayPose& pose,
                                    const Intrinsics& intrinsics, int width,
                                    int height, int s_size, int t_size,
                                    std::pair<int, int> view_a,
                                    std::pair<int, int> view_b) {
  validate_scene(scene);
  validate_pose(pose);
  std::vector<int> order = depth_order(scene);
  const int w = width, h = height;

  Eigen::Vector3d origin =
      camera_center(pose, s_size, t_size, view_a.first, view_a.second);
  if (origin.z() >= scene.planes[order.front()].depth) {
    throw LfError(ErrorCode::kGeometry, "lf-synth", "plane behind a camera");
  }

  DisparityMap map(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Eigen::Vector3d dir_cam(
          (x - intrinsics.principal_point.x()) / intrinsics.focal_length_px,
          (y - intrinsics.principal_point.y()) / intrinsics.focal_length_px,
          1.0);
      Eigen::Vector3d dir = pose.rotation * dir_cam;
      Eigen::Vector3d hit;
      int idx = trace_ray(scene, order, origin, dir, &hit);
      if (idx < 0) continue;
      Eigen::Vector2d in_b = project_point(pose, intrinsics, s_size, t_size,
                                           view_b.first, view_b.second, hit);
      map.value(y, x) = static_cast<float>(x - in_b.x());
      map.set_valid(y, x, true);
    }
  }
  return map;
}

}  // namespace lf
