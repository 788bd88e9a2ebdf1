#include "lf/stitch.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <set>

#include "lf/error.hpp"
#include "lf/parallel.hpp"
#include "lf/preprocess.hpp"

namespace lf {

namespace {

// Strictly-inside-circumcircle predicate with a tolerance that leaves
// cocircular quadruples (regular grids) untouched.
bool in_circumcircle(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const Eigen::Vector2d& c, const Eigen::Vector2d& p) {
  long double ax = a.x() - p.x(), ay = a.y() - p.y();
  long double bx = b.x() - p.x(), by = b.y() - p.y();
  long double cx = c.x() - p.x(), cy = c.y() - p.y();
  long double det = (ax * ax + ay * ay) * (bx * cy - by * cx) -
                    (bx * bx + by * by) * (ax * cy - ay * cx) +
                    (cx * cx + cy * cy) * (ax * by - ay * bx);
  long double orient = (b.x() - a.x()) * (c.y() - a.y()) -
                       (b.y() - a.y()) * (c.x() - a.x());
  if (orient < 0) det = -det;  // normalize to CCW orientation
  return det > 1e-10;
}

}  // namespace

Triangulation delaunay(const std::vector<Eigen::Vector2d>& positions) {
  const int n = static_cast<int>(positions.size());
  if (n < 3) {
    throw LfError(ErrorCode::kDegenerate, "delaunay",
                  "need at least 3 points");
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((positions[i] - positions[j]).norm() < 1e-9) {
        throw LfError(ErrorCode::kDegenerate, "delaunay",
                      "duplicate points");
      }
    }
  }

  // Bounding super-triangle, generously oversized.
  Eigen::Vector2d lo = positions[0], hi = positions[0];
  for (const auto& p : positions) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Eigen::Vector2d mid = (lo + hi) / 2;
  double span = std::max((hi - lo).maxCoeff(), 1.0) * 64.0;

  std::vector<Eigen::Vector2d> pts = positions;
  pts.emplace_back(mid.x() - span, mid.y() - span / 2);
  pts.emplace_back(mid.x() + span, mid.y() - span / 2);
  pts.emplace_back(mid.x(), mid.y() + span);
  int s0 = n, s1 = n + 1, s2 = n + 2;

  std::vector<std::array<int, 3>> tris = {{s0, s1, s2}};
  for (int pi = 0; pi < n; ++pi) {
    const Eigen::Vector2d& p = pts[pi];
    std::vector<std::array<int, 3>> good;
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : tris) {
      if (in_circumcircle(pts[t[0]], pts[t[1]], pts[t[2]], p)) {
        for (int e = 0; e < 3; ++e) {
          int u = t[e], v = t[(e + 1) % 3];
          edge_count[{std::min(u, v), std::max(u, v)}]++;
        }
      } else {
        good.push_back(t);
      }
    }
    if (good.size() == tris.size()) {
      // Point on/outside every circumcircle boundary: force it into the
      // containing triangle's cavity (happens only for exact duplicates,
      // which were rejected above). Treat as internal failure.
      throw LfError(ErrorCode::kDegenerate, "delaunay",
                    "insertion produced an empty cavity");
    }
    for (const auto& [edge, count] : edge_count) {
      if (count != 1) continue;  // interior edge of the cavity
      good.push_back({edge.first, edge.second, pi});
    }
    tris = std::move(good);
  }

  Triangulation out;
  out.vertices = positions;
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : tris) {
    if (t[0] >= n || t[1] >= n || t[2] >= n) continue;
    // CCW orientation for downstream barycentric tests.
    std::array<int, 3> tri = t;
    double orient =
        (pts[tri[1]].x() - pts[tri[0]].x()) * (pts[tri[2]].y() - pts[tri[0]].y()) -
        (pts[tri[1]].y() - pts[tri[0]].y()) * (pts[tri[2]].x() - pts[tri[0]].x());
    if (std::abs(orient) < 1e-14) continue;  // sliver against the super hull
    if (orient < 0) std::swap(tri[1], tri[2]);
    out.triangles.push_back(tri);
    for (int e = 0; e < 3; ++e) {
      int u = tri[e], v = tri[(e + 1) % 3];
      edge_count[{std::min(u, v), std::max(u, v)}]++;
    }
  }
  if (out.triangles.empty()) {
    throw LfError(ErrorCode::kDegenerate, "delaunay", "all points collinear");
  }
  for (const auto& [edge, count] : edge_count) {
    if (count == 1) out.hull_edges.push_back({edge.first, edge.second});
  }
  return out;
}

std::array<double, 3> inverse_distance_weights(const std::array<double, 3>& d) {
  std::array<double, 3> inv = {1.0 / d[0], 1.0 / d[1], 1.0 / d[2]};
  double total = inv[0] + inv[1] + inv[2];
  return {inv[0] / total, inv[1] / total, inv[2] / total};
}

namespace {

// Similarity translation on the largest-displacement cluster of a pair.
bool pair_translation(const Image& a, const Image& b,
                      const TranslationOptions& opt, uint64_t salt,
                      Eigen::Vector2d* out) {
  try {
    CorrespondenceSet set = match_pair(a, b, opt.max_corners, opt.harris, opt.klt);
    DepthClustering clusters = cluster_depths(set, opt.seed ^ salt);
    int target = clusters.largest_centroid_cluster();
    std::vector<Correspondence> selected;
    int idx = 0;
    for (const auto& m : set.matches) {
      if (!m.inlier) continue;
      if (clusters.labels[idx++] == target) selected.push_back(m);
    }
    if (selected.size() < 3) return false;
    SimilarityTransform sim = estimate_similarity(selected);
    // Displacement the fitted similarity induces at the cluster centroid
    // (equals the cluster's mean displacement).
    Eigen::Vector2d mp = Eigen::Vector2d::Zero();
    for (const auto& m : selected) mp += m.p;
    mp /= static_cast<double>(selected.size());
    Eigen::Rotation2Dd R(sim.rotation_rad);
    *out = sim.scale * (R * mp) + sim.translation - mp;
    return true;
  } catch (const LfError&) {
    return false;
  }
}

}  // namespace

Eigen::Vector2d estimate_translation_within(const LightField& lf,
                                            EpiOrientation orientation,
                                            const TranslationOptions& opt) {
  struct Pair {
    int s0, t0, s1, t1;
  };
  std::vector<Pair> pairs;
  if (orientation == EpiOrientation::kHorizontal) {
    for (int s = 0; s + 1 < lf.s_size(); ++s)
      for (int t = 0; t < lf.t_size(); ++t) pairs.push_back({s, t, s + 1, t});
  } else {
    for (int s = 0; s < lf.s_size(); ++s)
      for (int t = 0; t + 1 < lf.t_size(); ++t) pairs.push_back({s, t, s, t + 1});
  }
  if (pairs.empty()) {
    throw LfError(ErrorCode::kInsufficientFeatures, "translation-within",
                  "no consecutive pairs along the requested axis");
  }
  std::vector<Eigen::Vector2d> results(pairs.size());
  std::vector<uint8_t> ok(pairs.size(), 0);
  parallel_for(static_cast<int>(pairs.size()), [&](int i) {
    Eigen::Vector2d t;
    if (pair_translation(lf.view(pairs[i].s0, pairs[i].t0),
                         lf.view(pairs[i].s1, pairs[i].t1), opt,
                         static_cast<uint64_t>(i) * 2654435761u, &t)) {
      results[i] = t;
      ok[i] = 1;
    }
  });
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  int n_ok = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (ok[i]) {
      mean += results[i];
      ++n_ok;
    }
  }
  if (n_ok < std::max<size_t>(1, static_cast<size_t>(
                                     opt.min_pair_success * pairs.size()))) {
    throw LfError(ErrorCode::kInsufficientFeatures, "translation-within",
                  "fewer than 25% of consecutive pairs usable");
  }
  return mean / n_ok;
}

Eigen::Vector2d estimate_translation_between(const LightField& lf_ref,
                                             const LightField& lf2,
                                             const TranslationOptions& opt) {
  Eigen::Vector2d t;
  if (!pair_translation(lf_ref.middle_view(), lf2.middle_view(), opt, 0xbe7, &t)) {
    throw LfError(ErrorCode::kInsufficientFeatures, "translation-between",
                  "middle-view pair unusable for translation estimation");
  }
  return t;
}

IrregularLightField place_samples(
    const std::vector<RigidRegistration>& registrations,
    const std::vector<LightField>& lfs) {
  if (registrations.size() != lfs.size() || lfs.empty()) {
    throw LfError(ErrorCode::kInvalidParam, "place-samples",
                  "one registration required per light field");
  }
  int w = lfs[0].width(), h = lfs[0].height();
  IrregularLightField ilf;
  ilf.intrinsics = lfs[0].intrinsics();
  for (size_t j = 0; j < lfs.size(); ++j) {
    const LightField& lf = lfs[j];
    if (lf.width() != w || lf.height() != h) {
      throw LfError(ErrorCode::kInconsistent, "place-samples",
                    "light field " + std::to_string(j) +
                        " has mismatched view dimensions");
    }
    for (int s = 0; s < lf.s_size(); ++s) {
      for (int t = 0; t < lf.t_size(); ++t) {
        IrregularSample sample;
        sample.position = registrations[j].offset_baselines +
                          Eigen::Vector2d(s - lf.s_mid(), t - lf.t_mid());
        sample.image = lf.view(s, t);
        sample.source_id = static_cast<int>(j);
        ilf.samples.push_back(std::move(sample));
      }
    }
  }
  return ilf;
}

IrregularLightField dedupe_samples(const IrregularLightField& ilf, double tol) {
  IrregularLightField out;
  out.intrinsics = ilf.intrinsics;
  for (const auto& s : ilf.samples) {
    bool dup = false;
    for (const auto& kept : out.samples) {
      if ((kept.position - s.position).norm() < tol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.samples.push_back(s);
  }
  return out;
}

namespace {

// Extent of the largest all-ones rectangle: {row0, col0, rows, cols}.
std::array<int, 4> largest_valid_rectangle(const std::vector<uint8_t>& valid,
                                           int rows, int cols) {
  std::vector<int> heights(cols, 0);
  std::array<int, 4> best = {0, 0, 0, 0};
  long best_area = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      heights[c] = valid[static_cast<size_t>(r) * cols + c] ? heights[c] + 1 : 0;
    }
    // Largest rectangle in a histogram via the increasing-index stack.
    std::vector<int> stack;
    for (int c = 0; c <= cols; ++c) {
      int hcur = c < cols ? heights[c] : 0;
      while (!stack.empty() && heights[stack.back()] >= hcur) {
        int top = stack.back();
        stack.pop_back();
        int left = stack.empty() ? 0 : stack.back() + 1;
        int width = c - left;
        long area = static_cast<long>(heights[top]) * width;
        if (area > best_area) {
          best_area = area;
          best = {r - heights[top] + 1, left, heights[top], width};
        }
      }
      stack.push_back(c);
    }
  }
  return best;
}

}  // namespace

ResampleResult resample_regular_grid(const IrregularLightField& ilf,
                                     const Triangulation& tri,
                                     double grid_step) {
  if (ilf.samples.empty()) {
    throw LfError(ErrorCode::kInvalidParam, "resample", "no samples");
  }
  if (grid_step <= 0) {
    throw LfError(ErrorCode::kInvalidParam, "resample", "grid step must be > 0");
  }
  const double kSnapTol = 0.05;      // baseline units
  const double kCoincident = 1e-6;   // exact-copy tolerance

  Eigen::Vector2d lo = ilf.samples[0].position, hi = lo;
  for (const auto& s : ilf.samples) {
    lo = lo.cwiseMin(s.position);
    hi = hi.cwiseMax(s.position);
  }
  auto grid_lo = [&](double v) {
    return static_cast<int>(std::ceil((v - kSnapTol) / grid_step - 1e-12));
  };
  auto grid_hi = [&](double v) {
    return static_cast<int>(std::floor((v + kSnapTol) / grid_step + 1e-12));
  };
  int s_lo = grid_lo(lo.x()), s_hi = grid_hi(hi.x());
  int t_lo = grid_lo(lo.y()), t_hi = grid_hi(hi.y());
  int cols = s_hi - s_lo + 1;
  int rows = t_hi - t_lo + 1;
  if (cols < 1 || rows < 1) {
    throw LfError(ErrorCode::kEstimation, "resample",
                  "empty target lattice (hull too sparse)");
  }

  const bool have_tri = !tri.triangles.empty();
  if (have_tri && tri.vertices.size() != ilf.samples.size()) {
    throw LfError(ErrorCode::kInvalidParam, "resample",
                  "triangulation does not match the sample set");
  }

  struct Cell {
    int mode = 0;  // 0 invalid, 1 copy, 2 blend
    int src = -1;
    std::array<int, 3> tri_idx = {-1, -1, -1};
    std::array<double, 3> weights = {0, 0, 0};
  };
  std::vector<Cell> cells(static_cast<size_t>(rows) * cols);
  std::vector<uint8_t> valid(static_cast<size_t>(rows) * cols, 0);

  auto nearest_sample = [&](const Eigen::Vector2d& p, double* dist) {
    int best = -1;
    double bd = 1e300;
    for (size_t i = 0; i < ilf.samples.size(); ++i) {
      double d = (ilf.samples[i].position - p).norm();
      if (d < bd) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    *dist = bd;
    return best;
  };

  auto point_triangle_distance = [&](const Eigen::Vector2d& p,
                                     const std::array<int, 3>& t) {
    // Distance from p to the (closed) triangle.
    const Eigen::Vector2d& a = tri.vertices[t[0]];
    const Eigen::Vector2d& b = tri.vertices[t[1]];
    const Eigen::Vector2d& c = tri.vertices[t[2]];
    auto seg = [&](const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
      Eigen::Vector2d d = v - u;
      double len2 = d.squaredNorm();
      double s = len2 > 0 ? std::clamp((p - u).dot(d) / len2, 0.0, 1.0) : 0.0;
      return (p - (u + s * d)).norm();
    };
    // Inside test via barycentrics (triangles stored CCW).
    double den = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
    double l1 = ((p - a).x() * (c - a).y() - (p - a).y() * (c - a).x()) / den;
    double l2 = ((b - a).x() * (p - a).y() - (b - a).y() * (p - a).x()) / den;
    double l0 = 1.0 - l1 - l2;
    if (l0 >= -1e-12 && l1 >= -1e-12 && l2 >= -1e-12) return 0.0;
    return std::min({seg(a, b), seg(b, c), seg(c, a)});
  };

  for (int r = 0; r < rows; ++r) {
    for (int ci = 0; ci < cols; ++ci) {
      Eigen::Vector2d p((s_lo + ci) * grid_step, (t_lo + r) * grid_step);
      Cell& cell = cells[static_cast<size_t>(r) * cols + ci];
      double dist;
      int near = nearest_sample(p, &dist);
      if (dist < kCoincident) {
        cell.mode = 1;
        cell.src = near;
        valid[static_cast<size_t>(r) * cols + ci] = 1;
        continue;
      }
      if (!have_tri) continue;
      // Containing triangle, else the nearest one within the snap tolerance.
      int best_tri = -1;
      double best_d = kSnapTol;
      for (size_t ti = 0; ti < tri.triangles.size(); ++ti) {
        double d = point_triangle_distance(p, tri.triangles[ti]);
        if (d < best_d) {
          best_d = d;
          best_tri = static_cast<int>(ti);
          if (d == 0.0) break;
        }
      }
      if (best_tri < 0) continue;
      const auto& t = tri.triangles[best_tri];
      std::array<double, 3> d = {(tri.vertices[t[0]] - p).norm(),
                                 (tri.vertices[t[1]] - p).norm(),
                                 (tri.vertices[t[2]] - p).norm()};
      // A vertex this close is a recorded sample: copy it.
      int argmin = static_cast<int>(std::min_element(d.begin(), d.end()) -
                                    d.begin());
      if (d[argmin] < kCoincident) {
        cell.mode = 1;
        cell.src = t[argmin];
      } else {
        cell.mode = 2;
        cell.tri_idx = t;
        cell.weights = inverse_distance_weights(d);
      }
      valid[static_cast<size_t>(r) * cols + ci] = 1;
    }
  }

  std::array<int, 4> rect = largest_valid_rectangle(valid, rows, cols);
  if (rect[2] < 1 || rect[3] < 1) {
    throw LfError(ErrorCode::kEstimation, "resample",
                  "no fully valid rectangle (hull too sparse)");
  }

  ResampleResult result;
  result.bbox_cols = cols;
  result.bbox_rows = rows;
  result.origin = Eigen::Vector2d((s_lo + rect[1]) * grid_step,
                                  (t_lo + rect[0]) * grid_step);
  LightField out(rect[3], rect[2], ilf.intrinsics, grid_step);

  int copied = 0, blended = 0;
  for (int r = 0; r < rect[2]; ++r) {
    for (int ci = 0; ci < rect[3]; ++ci) {
      const Cell& cell =
          cells[static_cast<size_t>(rect[0] + r) * cols + (rect[1] + ci)];
      if (cell.mode == 1) ++copied;
      if (cell.mode == 2) ++blended;
    }
  }
  result.copied_views = copied;
  result.interpolated_views = blended;

  parallel_for(rect[2] * rect[3], [&](int i) {
    int r = i / rect[3];
    int ci = i % rect[3];
    const Cell& cell =
        cells[static_cast<size_t>(rect[0] + r) * cols + (rect[1] + ci)];
    Image view;
    if (cell.mode == 1) {
      view = ilf.samples[cell.src].image;
    } else {
      const Image& a = ilf.samples[cell.tri_idx[0]].image;
      const Image& b = ilf.samples[cell.tri_idx[1]].image;
      const Image& c = ilf.samples[cell.tri_idx[2]].image;
      view = Image(a.width(), a.height(), a.channels());
      float w0 = static_cast<float>(cell.weights[0]);
      float w1 = static_cast<float>(cell.weights[1]);
      float w2 = static_cast<float>(cell.weights[2]);
      for (size_t px = 0; px < view.size(); ++px) {
        view.data()[px] =
            w0 * a.data()[px] + w1 * b.data()[px] + w2 * c.data()[px];
      }
    }
    out.view(ci, r) = std::move(view);
  });
  result.lf = std::move(out);
  return result;
}

namespace {

Eigen::Vector3d axis_angle_deg(const Eigen::Matrix3d& R) {
  Eigen::AngleAxisd aa(R);
  return aa.axis() * (aa.angle() * 180.0 / M_PI);
}

}  // namespace

std::string StitchReport::to_json() const {
  nlohmann::json j;
  j["grid"] = {{"rows", grid_rows}, {"cols", grid_cols}};
  j["grid_origin"] = {grid_origin.x(), grid_origin.y()};
  j["per_step_px"] = {
      {"horizontal", {per_step_horizontal_px.x(), per_step_horizontal_px.y()}},
      {"vertical", {per_step_vertical_px.x(), per_step_vertical_px.y()}}};
  j["sample_count"] = sample_count;
  j["interpolated_views"] = interpolated_views;
  j["copied_views"] = copied_views;
  nlohmann::json fields_json = nlohmann::json::array();
  for (const auto& f : fields) {
    nlohmann::json fj;
    fj["index"] = f.index;
    fj["rotation_axis_angle_deg"] = {f.rotation_axis_angle_deg.x(),
                                     f.rotation_axis_angle_deg.y(),
                                     f.rotation_axis_angle_deg.z()};
    fj["scale_between"] = f.scale_between;
    fj["scale_within_step"] = f.scale_within_step;
    fj["offset_baselines"] = {f.offset_baselines.x(), f.offset_baselines.y()};
    fj["recenter_disparity_px_per_view"] = {f.recenter_disparity_s,
                                            f.recenter_disparity_t};
    if (f.rotation_spread_deg >= 0.0) {
      fj["rotation_spread_deg"] = f.rotation_spread_deg;
    }
    fields_json.push_back(fj);
  }
  j["fields"] = fields_json;
  return j.dump(2);
}

StitchResult stitch(const std::vector<LightField>& lfs,
                    const StitchOptions& opt) {
  if (lfs.empty()) {
    throw LfError(ErrorCode::kInvalidParam, "stitch",
                  "need at least one light field");
  }
  StitchReport report;
  const int n = static_cast<int>(lfs.size());
  Eigen::Matrix3d K = lfs[0].intrinsics().K();

  // Stage 1: preprocessing (photometric + recenter) per field.
  std::vector<LightField> rectified(n);
  std::vector<StitchReport::PerField> fields(n);
  for (int j = 0; j < n; ++j) {
    fields[j].index = j;
    try {
      PreprocessOptions popt;
      popt.photometric = opt.photometric;
      popt.recenter = opt.recenter;
      popt.slope = opt.slope;
      RecenterInfo info;
      rectified[j] = preprocess_light_field(lfs[j], popt, &info);
      fields[j].recenter_disparity_s = info.disparity_s;
      fields[j].recenter_disparity_t = info.disparity_t;
    } catch (const LfError& e) {
      throw LfError(e.code(), "stitch/preprocess[" + std::to_string(j) + "]",
                    e.detail());
    }
  }

  // Stage 2: orientation + scale rectification against the reference field.
  std::vector<RigidRegistration> regs(n);
  for (int j = 1; j < n; ++j) {
    try {
      OrientationOptions oo = opt.orientation;
      oo.ransac.seed = opt.seed * 1000003u + j;
      RotationEstimate rot = estimate_orientation(
          rectified[0].middle_view(), rectified[j].middle_view(), K, oo);
      regs[j].rotation = rot.R;
      fields[j].rotation_axis_angle_deg = axis_angle_deg(rot.R);
      rectified[j] = apply_orientation_correction(
          rectified[j], orientation_homography(K, rot.R));

      if (opt.rotation_diagnostic) {
        // Spread of per-view rotation estimates over the corner views.
        double spread = 0.0;
        int s_hi = rectified[j].s_size() - 1, t_hi = rectified[j].t_size() - 1;
        std::pair<int, int> corners[4] = {{0, 0}, {s_hi, 0}, {0, t_hi},
                                          {s_hi, t_hi}};
        for (const auto& [cs, ct] : corners) {
          OrientationOptions oc = oo;
          oc.rounds = 1;
          try {
            RotationEstimate r2 = estimate_orientation(
                rectified[0].view(cs, ct), rectified[j].view(cs, ct), K, oc);
            spread = std::max(
                spread, rotation_angle(r2.R, Eigen::Matrix3d::Identity()) *
                            180.0 / M_PI);
          } catch (const LfError&) {
          }
        }
        fields[j].rotation_spread_deg = spread;
      }
    } catch (const LfError& e) {
      throw LfError(e.code(), "stitch/orientation[" + std::to_string(j) + "]",
                    e.detail());
    }

    try {
      ScaleOptions so = opt.scale;
      so.seed = opt.seed * 2000003u + j;
      double sw = estimate_scale_within(rectified[j], so);
      double sb = estimate_scale_between(rectified[0], rectified[j], so);
      regs[j].scale_within_step = sw;
      regs[j].scale_between = sb;
      fields[j].scale_within_step = sw;
      fields[j].scale_between = sb;

      const LightField& f = rectified[j];
      LightField scaled(f.s_size(), f.t_size(), f.intrinsics(),
                        f.angular_spacing());
      Eigen::Vector2d c = f.intrinsics().principal_point;
      regs[j].view_scales.assign(static_cast<size_t>(f.view_count()), 1.0);
      parallel_for(f.view_count(), [&](int i) {
        int s = i / f.t_size();
        int t = i % f.t_size();
        double steps = (s - f.s_mid()) + (t - f.t_mid());
        double sigma = sb * std::pow(sw, steps);
        regs[j].view_scales[static_cast<size_t>(s) * f.t_size() + t] = sigma;
        if (std::abs(sigma - 1.0) < 1e-9) {
          scaled.view(s, t) = f.view(s, t);
          return;
        }
        // Coordinate map y = c + (x - c)/sigma undoes the observed scale.
        Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
        H(0, 0) = H(1, 1) = 1.0 / sigma;
        H(0, 2) = c.x() * (1.0 - 1.0 / sigma);
        H(1, 2) = c.y() * (1.0 - 1.0 / sigma);
        scaled.view(s, t) = warp_homography(f.view(s, t), H);
      });
      rectified[j] = std::move(scaled);
    } catch (const LfError& e) {
      throw LfError(e.code(), "stitch/scale[" + std::to_string(j) + "]",
                    e.detail());
    }
  }
  regs[0].view_scales.assign(static_cast<size_t>(lfs[0].view_count()), 1.0);

  // Stage 3: translations -> angular positions in baseline units.
  Eigen::Vector2d step_h = Eigen::Vector2d::UnitX();
  Eigen::Vector2d step_v = Eigen::Vector2d::UnitY();
  if (n > 1) {
    try {
      TranslationOptions to = opt.translation;
      to.seed = opt.seed * 3000017u;
      step_h = estimate_translation_within(rectified[0],
                                           EpiOrientation::kHorizontal, to);
      step_v = estimate_translation_within(rectified[0],
                                           EpiOrientation::kVertical, to);
      report.per_step_horizontal_px = step_h;
      report.per_step_vertical_px = step_v;

      Eigen::Matrix2d basis;
      basis.col(0) = step_h;
      basis.col(1) = step_v;
      if (std::abs(basis.determinant()) < 1e-9) {
        throw LfError(ErrorCode::kDegenerate, "stitch/translation",
                      "per-step translation basis is singular");
      }
      for (int j = 1; j < n; ++j) {
        TranslationOptions tj = to;
        tj.seed = opt.seed * 3000017u + 77777u * j;
        Eigen::Vector2d between =
            estimate_translation_between(rectified[0], rectified[j], tj);
        regs[j].offset_baselines = basis.inverse() * between;
        fields[j].offset_baselines = regs[j].offset_baselines;
      }
    } catch (const LfError& e) {
      throw LfError(e.code(), "stitch/translation", e.detail());
    }
  }

  // Stage 4: place, triangulate, resample.
  try {
    IrregularLightField placed = place_samples(regs, rectified);
    for (size_t j = 0; j < regs.size(); ++j) {
      // Record per-view positions in the registration structs.
      const LightField& f = rectified[j];
      regs[j].view_positions.clear();
      for (int s = 0; s < f.s_size(); ++s)
        for (int t = 0; t < f.t_size(); ++t)
          regs[j].view_positions.push_back(
              regs[j].offset_baselines +
              Eigen::Vector2d(s - f.s_mid(), t - f.t_mid()));
    }
    IrregularLightField samples = dedupe_samples(placed, opt.dedupe_tol);
    report.sample_count = static_cast<int>(samples.samples.size());

    // Triangulation is only required when some lattice point must be
    // interpolated; a lone field already sits on the integer lattice.
    Triangulation tri;
    bool need_tri = false;
    {
      std::vector<Eigen::Vector2d> positions;
      for (const auto& s : samples.samples) positions.push_back(s.position);
      for (const auto& p : positions) {
        Eigen::Vector2d rounded(std::round(p.x() / opt.grid_step) * opt.grid_step,
                                std::round(p.y() / opt.grid_step) * opt.grid_step);
        if ((p - rounded).norm() > 1e-6) {
          need_tri = true;
          break;
        }
      }
      if (!need_tri && n > 1) need_tri = true;  // gaps between fields
      if (need_tri && positions.size() >= 3) tri = delaunay(positions);
    }

    ResampleResult res = resample_regular_grid(samples, tri, opt.grid_step);
    report.grid_rows = res.lf.t_size();
    report.grid_cols = res.lf.s_size();
    report.grid_origin = res.origin;
    report.interpolated_views = res.interpolated_views;
    report.copied_views = res.copied_views;
    report.fields = fields;

    StitchResult out;
    out.lf = std::move(res.lf);
    out.report = std::move(report);
    return out;
  } catch (const LfError& e) {
    if (std::string(e.stage()).rfind("stitch/", 0) == 0) throw;
    throw LfError(e.code(), "stitch/resample", e.detail());
  }
}

}  // namespace lf
