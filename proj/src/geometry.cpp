#include "lf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lf/error.hpp"
#include "lf/parallel.hpp"
#include "lf/rng.hpp"

namespace lf {

namespace {

Eigen::Vector3d homog(const Eigen::Vector2d& p) {
  return Eigen::Vector3d(p.x(), p.y(), 1.0);
}

// Hartley normalization: centroid to origin, mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::vector<Eigen::Vector2d>& pts) {
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - c).norm();
  mean_dist /= static_cast<double>(pts.size());
  double s = mean_dist > 1e-12 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d T;
  T << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return T;
}

Eigen::Matrix3d enforce_rank2(const Eigen::Matrix3d& F) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = svd.singularValues();
  s.z() = 0.0;
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Eigen::Matrix3d normalize_f(Eigen::Matrix3d F) {
  double n = F.norm();
  if (n < 1e-300) return F;
  F /= n;
  // Fix the overall sign for determinism.
  double dominant = 0.0;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (std::abs(F(r, c)) > std::abs(dominant)) dominant = F(r, c);
  if (dominant < 0) F = -F;
  return F;
}

// Solves p~^T F q~ = 0 in least squares from >= 8 correspondences.
bool solve_eight_point(const std::vector<Eigen::Vector2d>& ps,
                       const std::vector<Eigen::Vector2d>& qs,
                       Eigen::Matrix3d* F_out) {
  const int n = static_cast<int>(ps.size());
  if (n < 8) return false;
  Eigen::Matrix3d T1 = normalizing_transform(ps);
  Eigen::Matrix3d T2 = normalizing_transform(qs);
  Eigen::MatrixXd A(n, 9);
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d p = T1 * homog(ps[i]);
    Eigen::Vector3d q = T2 * homog(qs[i]);
    A.row(i) << p.x() * q.x(), p.x() * q.y(), p.x(), p.y() * q.x(),
        p.y() * q.y(), p.y(), q.x(), q.y(), 1.0;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  if (svd.rank() < 8 && n == 8) {
    // Degenerate minimal sample (coincident/collinear points).
    if (svd.singularValues()(7) < 1e-12) return false;
  }
  Eigen::Matrix<double, 9, 1> f = svd.matrixV().col(8);
  Eigen::Matrix3d Fn;
  Fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  Fn = enforce_rank2(Fn);
  *F_out = normalize_f(T1.transpose() * Fn * T2);
  return F_out->allFinite();
}

}  // namespace

double sampson_distance_sq(const Eigen::Matrix3d& F, const Eigen::Vector2d& p,
                           const Eigen::Vector2d& q) {
  Eigen::Vector3d ph = homog(p), qh = homog(q);
  double r = ph.dot(F * qh);
  Eigen::Vector3d Fq = F * qh;
  Eigen::Vector3d Ftp = F.transpose() * ph;
  double denom = Fq.x() * Fq.x() + Fq.y() * Fq.y() + Ftp.x() * Ftp.x() +
                 Ftp.y() * Ftp.y();
  if (denom < 1e-18) return 1e18;
  return r * r / denom;
}

FundamentalMatrix eight_point(const std::vector<Correspondence>& matches) {
  std::vector<Eigen::Vector2d> ps, qs;
  for (const auto& m : matches) {
    ps.push_back(m.p);
    qs.push_back(m.q);
  }
  Eigen::Matrix3d F;
  if (!solve_eight_point(ps, qs, &F)) {
    throw LfError(ErrorCode::kDegenerate, "eight-point",
                  "degenerate point configuration");
  }
  return FundamentalMatrix{F};
}

FundamentalMatrix ransac_fundamental(CorrespondenceSet& matches,
                                     const RansacOptions& opt) {
  const int n = static_cast<int>(matches.size());
  if (n < 8) {
    throw LfError(ErrorCode::kInsufficientFeatures, "ransac-fundamental",
                  "need at least 8 correspondences, have " + std::to_string(n));
  }
  const double thr_sq = opt.threshold_px * opt.threshold_px;
  Rng rng(opt.seed);

  int best_count = 0;
  double best_score = 1e300;
  Eigen::Matrix3d best_F = Eigen::Matrix3d::Zero();
  int needed = opt.max_iterations;

  std::vector<Eigen::Vector2d> ps(8), qs(8);
  int idx[8];
  for (int iter = 0; iter < needed; ++iter) {
    // Draw 8 distinct indices.
    for (int k = 0; k < 8; ++k) {
      bool fresh;
      do {
        idx[k] = static_cast<int>(rng.uniform_index(n));
        fresh = true;
        for (int j = 0; j < k; ++j) fresh = fresh && idx[j] != idx[k];
      } while (!fresh);
      ps[k] = matches.matches[idx[k]].p;
      qs[k] = matches.matches[idx[k]].q;
    }
    Eigen::Matrix3d F;
    if (!solve_eight_point(ps, qs, &F)) continue;

    int count = 0;
    double score = 0.0;
    for (const auto& m : matches.matches) {
      double d = sampson_distance_sq(F, m.p, m.q);
      if (d <= thr_sq) {
        ++count;
        score += d;
      }
    }
    if (count > best_count ||
        (count == best_count && count > 0 && score < best_score)) {
      best_count = count;
      best_score = score;
      best_F = F;
      // Adaptive iteration count at 99.9% confidence.
      double w = static_cast<double>(count) / n;
      double p_all = std::pow(w, 8);
      if (p_all > 1e-12) {
        double est = std::log(1.0 - opt.confidence) / std::log(1.0 - p_all);
        needed = std::clamp(static_cast<int>(std::ceil(est)),
                            opt.min_iterations, opt.max_iterations);
      }
    }
  }
  if (best_count < 8) {
    throw LfError(ErrorCode::kDegenerate, "ransac-fundamental",
                  "best consensus has fewer than 8 inliers");
  }

  // Re-estimate from the full consensus set, then refresh the mask.
  std::vector<Eigen::Vector2d> in_p, in_q;
  for (const auto& m : matches.matches) {
    if (sampson_distance_sq(best_F, m.p, m.q) <= thr_sq) {
      in_p.push_back(m.p);
      in_q.push_back(m.q);
    }
  }
  Eigen::Matrix3d F_final = best_F;
  Eigen::Matrix3d F_refit;
  if (solve_eight_point(in_p, in_q, &F_refit)) {
    int refit_count = 0;
    for (const auto& m : matches.matches) {
      if (sampson_distance_sq(F_refit, m.p, m.q) <= thr_sq) ++refit_count;
    }
    if (refit_count >= 8) F_final = F_refit;
  }
  for (auto& m : matches.matches) {
    m.inlier = sampson_distance_sq(F_final, m.p, m.q) <= thr_sq;
  }
  return FundamentalMatrix{normalize_f(F_final)};
}

namespace {

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& t) {
  Eigen::Matrix3d m;
  m << 0, -t.z(), t.y(), t.z(), 0, -t.x(), -t.y(), t.x(), 0;
  return m;
}

Eigen::Vector4d triangulate_dlt(const Eigen::Matrix<double, 3, 4>& Pa,
                                const Eigen::Matrix<double, 3, 4>& Pb,
                                const Eigen::Vector2d& xa,
                                const Eigen::Vector2d& xb) {
  Eigen::Matrix4d A;
  A.row(0) = xa.x() * Pa.row(2) - Pa.row(0);
  A.row(1) = xa.y() * Pa.row(2) - Pa.row(1);
  A.row(2) = xb.x() * Pb.row(2) - Pb.row(0);
  A.row(3) = xb.y() * Pb.row(2) - Pb.row(1);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(A, Eigen::ComputeFullV);
  return svd.matrixV().col(3);
}

Eigen::Vector2d project_h(const Eigen::Matrix<double, 3, 4>& P,
                          const Eigen::Vector3d& X) {
  Eigen::Vector3d h = P.leftCols<3>() * X + P.col(3);
  return Eigen::Vector2d(h.x() / h.z(), h.y() / h.z());
}

}  // namespace

GoldStandardResult refine_fundamental_gold_standard(
    const FundamentalMatrix& F0, const std::vector<Correspondence>& inliers) {
  if (inliers.size() < 8) {
    throw LfError(ErrorCode::kInsufficientFeatures, "gold-standard",
                  "need at least 8 inliers");
  }
  // Work in the column convention G = F^T (q~^T G p~ = 0): camera A = [I|0]
  // observes the image-1 points, camera B observes the image-2 points.
  Eigen::Matrix3d G = F0.F.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      G, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d e2 = svd.matrixU().col(2);  // left null vector of G
  Eigen::Matrix<double, 3, 4> Pa = Eigen::Matrix<double, 3, 4>::Zero();
  Pa.leftCols<3>() = Eigen::Matrix3d::Identity();
  Eigen::Matrix<double, 3, 4> Pb;
  Pb.leftCols<3>() = cross_matrix(e2) * G;
  Pb.col(3) = e2;

  // Triangulate; points at infinity are excluded from the refinement.
  struct Obs {
    Eigen::Vector3d X;
    Eigen::Vector2d pa, pb;
  };
  std::vector<Obs> obs;
  for (const auto& m : inliers) {
    Eigen::Vector4d Xh = triangulate_dlt(Pa, Pb, m.p, m.q);
    if (std::abs(Xh.w()) < 1e-10 * Xh.head<3>().norm()) continue;
    obs.push_back({Xh.head<3>() / Xh.w(), m.p, m.q});
  }
  if (obs.size() < 8) {
    throw LfError(ErrorCode::kDegenerate, "gold-standard",
                  "too few finite triangulations");
  }
  const int n = static_cast<int>(obs.size());

  auto cost_of = [&](const Eigen::Matrix<double, 3, 4>& P,
                     const std::vector<Obs>& o) {
    double c = 0.0;
    for (const auto& ob : o) {
      c += (project_h(Pa, ob.X) - ob.pa).squaredNorm();
      c += (project_h(P, ob.X) - ob.pb).squaredNorm();
    }
    return c;
  };

  double cost = cost_of(Pb, obs);
  GoldStandardResult result;
  result.rms_initial = std::sqrt(cost / (2.0 * n));

  double lambda = 1e-6;
  int iter = 0;
  bool converged = false;
  for (; iter < 50; ++iter) {
    // Normal equations with the structure block eliminated (Schur).
    Eigen::Matrix<double, 12, 12> U = Eigen::Matrix<double, 12, 12>::Zero();
    Eigen::Matrix<double, 12, 1> gc = Eigen::Matrix<double, 12, 1>::Zero();
    std::vector<Eigen::Matrix3d> V(n);
    std::vector<Eigen::Vector3d> gx(n);
    std::vector<Eigen::Matrix<double, 12, 3>> W(n);

    for (int i = 0; i < n; ++i) {
      const Obs& ob = obs[i];
      // Camera A residual block: depends on X only.
      Eigen::Vector3d Xa = ob.X;
      double za = Xa.z();
      Eigen::Vector2d ra(Xa.x() / za - ob.pa.x(), Xa.y() / za - ob.pa.y());
      Eigen::Matrix<double, 2, 3> Ja;
      Ja << 1.0 / za, 0, -Xa.x() / (za * za), 0, 1.0 / za, -Xa.y() / (za * za);

      // Camera B residual block: depends on P (12) and X.
      Eigen::Vector3d h = Pb.leftCols<3>() * ob.X + Pb.col(3);
      Eigen::Vector2d rb(h.x() / h.z() - ob.pb.x(), h.y() / h.z() - ob.pb.y());
      Eigen::Matrix<double, 2, 3> Jh;
      Jh << 1.0 / h.z(), 0, -h.x() / (h.z() * h.z()), 0, 1.0 / h.z(),
          -h.y() / (h.z() * h.z());
      // d h / d P laid out row-major: P row r, column c -> parameter 4r + c.
      Eigen::Matrix<double, 2, 12> Jp = Eigen::Matrix<double, 2, 12>::Zero();
      Eigen::Vector4d Xh(ob.X.x(), ob.X.y(), ob.X.z(), 1.0);
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
          Jp.col(4 * r + c) += Jh.col(r) * Xh(c);
        }
      }
      Eigen::Matrix<double, 2, 3> Jx = Jh * Pb.leftCols<3>();

      U += Jp.transpose() * Jp;
      gc += Jp.transpose() * rb;
      V[i] = Ja.transpose() * Ja + Jx.transpose() * Jx;
      gx[i] = Ja.transpose() * ra + Jx.transpose() * rb;
      W[i] = Jp.transpose() * Jx;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Eigen::Matrix<double, 12, 12> S =
          U + lambda * Eigen::Matrix<double, 12, 12>::Identity();
      Eigen::Matrix<double, 12, 1> rhs = -gc;
      std::vector<Eigen::Matrix3d> Vinv(n);
      for (int i = 0; i < n; ++i) {
        Eigen::Matrix3d Vd = V[i] + lambda * Eigen::Matrix3d::Identity();
        Vinv[i] = Vd.inverse();
        S -= W[i] * Vinv[i] * W[i].transpose();
        rhs += W[i] * Vinv[i] * gx[i];
      }
      Eigen::Matrix<double, 12, 1> dc = S.ldlt().solve(rhs);

      Eigen::Matrix<double, 3, 4> Pb_new = Pb;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) Pb_new(r, c) += dc(4 * r + c);
      std::vector<Obs> obs_new = obs;
      for (int i = 0; i < n; ++i) {
        Eigen::Vector3d dx = -Vinv[i] * (gx[i] + W[i].transpose() * dc);
        obs_new[i].X += dx;
      }
      double cost_new = cost_of(Pb_new, obs_new);
      if (std::isfinite(cost_new) && cost_new <= cost) {
        double rel = (cost - cost_new) / std::max(cost, 1e-300);
        Pb = Pb_new;
        obs = std::move(obs_new);
        cost = cost_new;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (rel < 1e-10) converged = true;
      } else {
        lambda *= 5.0;
      }
    }
    if (!accepted || converged) {
      converged = converged || !accepted;
      // A step that cannot be improved any further counts as converged when
      // the cost plateaued; otherwise report the best iterate with the flag.
      break;
    }
  }

  result.iterations = iter;
  result.converged = converged || iter < 50;
  result.rms_final = std::sqrt(cost / (2.0 * n));

  Eigen::Matrix3d G_refined =
      cross_matrix(Pb.col(3)) * Pb.leftCols<3>();  // F of a canonical pair
  result.F.F = normalize_f(enforce_rank2(G_refined.transpose()));
  return result;
}

EssentialMatrix project_essential(const Eigen::Matrix3d& E_raw) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      E_raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = svd.singularValues();
  double avg = (s(0) + s(1)) / 2.0;
  EssentialMatrix out;
  out.singular_values = Eigen::Vector3d(avg, avg, 0.0);
  out.E = svd.matrixU() * out.singular_values.asDiagonal() *
          svd.matrixV().transpose();
  return out;
}

EssentialMatrix essential_from_fundamental(const FundamentalMatrix& F,
                                           const Eigen::Matrix3d& K) {
  return project_essential(K.transpose() * F.F * K);
}

RotationEstimate decompose_essential(const EssentialMatrix& E,
                                     const std::vector<Correspondence>& inliers,
                                     const Eigen::Matrix3d& K) {
  if (inliers.empty()) {
    throw LfError(ErrorCode::kInsufficientFeatures, "decompose-essential",
                  "need at least one inlier correspondence");
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      E.E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d V = svd.matrixV();
  Eigen::Matrix3d W1, W2;
  W1 << 0, 1, 0, -1, 0, 0, 0, 0, 1;
  W2 = W1.transpose();

  Eigen::Matrix3d Kinv = K.inverse();
  std::vector<Eigen::Vector2d> pn, qn;
  pn.reserve(inliers.size());
  qn.reserve(inliers.size());
  for (const auto& m : inliers) {
    Eigen::Vector3d a = Kinv * homog(m.p);
    Eigen::Vector3d b = Kinv * homog(m.q);
    pn.emplace_back(a.x() / a.z(), a.y() / a.z());
    qn.emplace_back(b.x() / b.z(), b.y() / b.z());
  }

  // E = [t]x R with x1 ~ R x2 + t: the identity camera observes the image-2
  // points and [R|t] observes the image-1 points.
  RotationEstimate best;
  int best_count = -1;
  for (int wi = 0; wi < 2; ++wi) {
    Eigen::Matrix3d R = U * (wi == 0 ? W1 : W2) * V.transpose();
    if (R.determinant() < 0) R = -R;
    for (int ti = 0; ti < 2; ++ti) {
      Eigen::Vector3d t = (ti == 0 ? 1.0 : -1.0) * U.col(2);
      Eigen::Matrix<double, 3, 4> Pa = Eigen::Matrix<double, 3, 4>::Zero();
      Pa.leftCols<3>() = Eigen::Matrix3d::Identity();
      Eigen::Matrix<double, 3, 4> Pb;
      Pb.leftCols<3>() = R;
      Pb.col(3) = t;
      int count = 0;
      for (size_t i = 0; i < pn.size(); ++i) {
        Eigen::Vector4d Xh = triangulate_dlt(Pa, Pb, qn[i], pn[i]);
        if (std::abs(Xh.w()) < 1e-12) continue;
        Eigen::Vector3d X = Xh.head<3>() / Xh.w();
        double za = X.z();
        double zb = (R * X + t).z();
        if (za > 0 && zb > 0) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best.R = R;
        best.t_dir = t.normalized();
        best.cheirality_count = count;
      }
    }
  }
  if (best_count * 2 <= static_cast<int>(inliers.size())) {
    throw LfError(ErrorCode::kAmbiguous, "decompose-essential",
                  "no candidate places a majority of points in front of both "
                  "cameras");
  }
  return best;
}

Eigen::Matrix3d orientation_homography(const Eigen::Matrix3d& K,
                                       const Eigen::Matrix3d& R) {
  return K * R * K.inverse();
}

LightField apply_orientation_correction(const LightField& lf,
                                        const Eigen::Matrix3d& H) {
  LightField out(lf.s_size(), lf.t_size(), lf.intrinsics(),
                 lf.angular_spacing());
  parallel_for(lf.s_size() * lf.t_size(), [&](int i) {
    int s = i / lf.t_size();
    int t = i % lf.t_size();
    out.view(s, t) = warp_homography(lf.view(s, t), H);
  });
  return out;
}

int DepthClustering::smallest_centroid_cluster() const {
  return static_cast<int>(std::min_element(centroids.begin(), centroids.end()) -
                          centroids.begin());
}

int DepthClustering::largest_centroid_cluster() const {
  return static_cast<int>(std::max_element(centroids.begin(), centroids.end()) -
                          centroids.begin());
}

namespace {

constexpr double kVarFloor = 0.05 * 0.05;  // px^2

struct Gmm {
  std::vector<double> weight, mean, var;
  double loglik = -1e300;
};

Gmm fit_gmm(const std::vector<double>& x, int k, Rng& rng) {
  const int n = static_cast<int>(x.size());
  Gmm best;
  const int restarts = k == 1 ? 1 : 20;
  for (int attempt = 0; attempt < restarts; ++attempt) {
    // k-means++ seeding followed by a few Lloyd rounds.
    std::vector<double> mu;
    mu.push_back(x[rng.uniform_index(n)]);
    while (static_cast<int>(mu.size()) < k) {
      std::vector<double> d2(n);
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        double d = 1e300;
        for (double m : mu) d = std::min(d, (x[i] - m) * (x[i] - m));
        d2[i] = d;
        total += d;
      }
      if (total < 1e-30) {
        mu.push_back(x[rng.uniform_index(n)]);
        continue;
      }
      double r = rng.uniform() * total;
      int pick = n - 1;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
      mu.push_back(x[pick]);
    }
    for (int round = 0; round < 5; ++round) {
      std::vector<double> sum(k, 0.0);
      std::vector<int> cnt(k, 0);
      for (int i = 0; i < n; ++i) {
        int bi = 0;
        double bd = 1e300;
        for (int j = 0; j < k; ++j) {
          double d = std::abs(x[i] - mu[j]);
          if (d < bd) {
            bd = d;
            bi = j;
          }
        }
        sum[bi] += x[i];
        cnt[bi]++;
      }
      for (int j = 0; j < k; ++j)
        if (cnt[j] > 0) mu[j] = sum[j] / cnt[j];
    }

    Gmm g;
    g.weight.assign(k, 1.0 / k);
    g.mean = mu;
    g.var.assign(k, 0.0);
    {
      // Initial variances from the hard assignment.
      std::vector<double> ss(k, 0.0);
      std::vector<int> cnt(k, 0);
      for (int i = 0; i < n; ++i) {
        int bi = 0;
        double bd = 1e300;
        for (int j = 0; j < k; ++j) {
          double d = std::abs(x[i] - mu[j]);
          if (d < bd) {
            bd = d;
            bi = j;
          }
        }
        ss[bi] += (x[i] - mu[bi]) * (x[i] - mu[bi]);
        cnt[bi]++;
      }
      for (int j = 0; j < k; ++j) {
        g.var[j] = std::max(cnt[j] > 0 ? ss[j] / cnt[j] : kVarFloor, kVarFloor);
      }
    }

    std::vector<double> resp(static_cast<size_t>(n) * k);
    double prev = -1e300;
    for (int it = 0; it < 200; ++it) {
      // E step.
      double loglik = 0.0;
      for (int i = 0; i < n; ++i) {
        double mx = -1e300;
        std::vector<double> lp(k);
        for (int j = 0; j < k; ++j) {
          double d = x[i] - g.mean[j];
          lp[j] = std::log(std::max(g.weight[j], 1e-300)) -
                  0.5 * std::log(2.0 * M_PI * g.var[j]) -
                  0.5 * d * d / g.var[j];
          mx = std::max(mx, lp[j]);
        }
        double z = 0.0;
        for (int j = 0; j < k; ++j) z += std::exp(lp[j] - mx);
        loglik += mx + std::log(z);
        for (int j = 0; j < k; ++j)
          resp[static_cast<size_t>(i) * k + j] = std::exp(lp[j] - mx) / z;
      }
      // M step.
      for (int j = 0; j < k; ++j) {
        double nj = 0.0, sum = 0.0;
        for (int i = 0; i < n; ++i) {
          double r = resp[static_cast<size_t>(i) * k + j];
          nj += r;
          sum += r * x[i];
        }
        if (nj < 1e-9) {  // collapsed component: reseed
          g.mean[j] = x[rng.uniform_index(n)];
          g.var[j] = kVarFloor;
          g.weight[j] = 1.0 / n;
          continue;
        }
        g.mean[j] = sum / nj;
        double ss = 0.0;
        for (int i = 0; i < n; ++i) {
          double r = resp[static_cast<size_t>(i) * k + j];
          double d = x[i] - g.mean[j];
          ss += r * d * d;
        }
        g.var[j] = std::max(ss / nj, kVarFloor);
        g.weight[j] = nj / n;
      }
      g.loglik = loglik;
      if (it > 0 && std::abs(loglik - prev) < 1e-8 * (1.0 + std::abs(loglik)))
        break;
      prev = loglik;
    }
    if (g.loglik > best.loglik) best = g;
  }
  std::sort(best.mean.begin(), best.mean.end());
  return best;
}

std::vector<int> nearest_centroid_labels(const std::vector<double>& x,
                                         const std::vector<double>& centroids) {
  std::vector<int> labels(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    int bi = 0;
    double bd = 1e300;
    for (size_t j = 0; j < centroids.size(); ++j) {
      double d = std::abs(x[i] - centroids[j]);
      if (d < bd) {
        bd = d;
        bi = static_cast<int>(j);
      }
    }
    labels[i] = bi;
  }
  return labels;
}

double mean_silhouette(const std::vector<double>& x,
                       const std::vector<int>& labels, int k) {
  const int n = static_cast<int>(x.size());
  std::vector<int> count(k, 0);
  for (int l : labels) count[l]++;
  for (int j = 0; j < k; ++j)
    if (count[j] == 0) return -1.0;  // empty cluster: reject this k

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    std::vector<double> dist_sum(k, 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[labels[j]] += std::abs(x[i] - x[j]);
    }
    int own = labels[i];
    if (count[own] <= 1) continue;  // silhouette of a singleton is 0
    double a = dist_sum[own] / (count[own] - 1);
    double b = 1e300;
    for (int j = 0; j < k; ++j) {
      if (j == own) continue;
      b = std::min(b, dist_sum[j] / count[j]);
    }
    double m = std::max(a, b);
    total += m > 1e-300 ? (b - a) / m : 0.0;
  }
  return total / n;
}

}  // namespace

DepthClustering cluster_depths(const CorrespondenceSet& matches, uint64_t seed) {
  std::vector<double> x;
  for (const auto& m : matches.matches) {
    if (m.inlier) x.push_back((m.q - m.p).norm());
  }
  if (x.size() < 10) {
    throw LfError(ErrorCode::kInsufficientFeatures, "cluster-depths",
                  "need at least 10 inlier correspondences");
  }

  Rng rng(seed);
  DepthClustering best;
  best.chosen_k = 1;
  {
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
    best.centroids = {mean};
    best.silhouette = 0.0;
  }
  double best_sil = 0.5;  // anything below keeps k = 1
  int kmax = std::min<size_t>(5, x.size() / 2);
  for (int k = 2; k <= kmax; ++k) {
    Rng fork = rng.fork(k);
    Gmm g = fit_gmm(x, k, fork);
    std::vector<int> labels = nearest_centroid_labels(x, g.mean);
    double sil = mean_silhouette(x, labels, k);
    if (sil > best_sil) {
      best_sil = sil;
      best.chosen_k = k;
      best.centroids = g.mean;
      best.silhouette = sil;
    }
  }
  best.labels = nearest_centroid_labels(x, best.centroids);
  return best;
}

SimilarityTransform estimate_similarity(
    const std::vector<Correspondence>& matches) {
  const int n = static_cast<int>(matches.size());
  if (n < 3) {
    throw LfError(ErrorCode::kInsufficientFeatures, "similarity",
                  "need at least 3 correspondences");
  }
  double span = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      span = std::max(span, (matches[i].p - matches[j].p).norm());
    }
  }
  if (span < 2.0) {
    throw LfError(ErrorCode::kDegenerate, "similarity",
                  "points span less than 2 px");
  }

  Eigen::Vector2d mp = Eigen::Vector2d::Zero(), mq = Eigen::Vector2d::Zero();
  for (const auto& m : matches) {
    mp += m.p;
    mq += m.q;
  }
  mp /= n;
  mq /= n;
  double dot = 0.0, cross = 0.0, norm_p = 0.0;
  for (const auto& m : matches) {
    Eigen::Vector2d p = m.p - mp, q = m.q - mq;
    dot += p.dot(q);
    cross += p.x() * q.y() - p.y() * q.x();
    norm_p += p.squaredNorm();
  }
  SimilarityTransform sim;
  sim.scale = std::sqrt(dot * dot + cross * cross) / norm_p;
  sim.rotation_rad = std::atan2(cross, dot);
  Eigen::Rotation2Dd R(sim.rotation_rad);
  sim.translation = mq - sim.scale * (R * mp);
  double ss = 0.0;
  for (const auto& m : matches) {
    Eigen::Vector2d r = m.q - (sim.scale * (R * m.p) + sim.translation);
    ss += r.squaredNorm();
  }
  sim.rms = std::sqrt(ss / n);
  if (!(sim.scale > 0.0) || !std::isfinite(sim.scale)) {
    throw LfError(ErrorCode::kDegenerate, "similarity", "scale fit failed");
  }
  return sim;
}

namespace {

// Similarity fit restricted to the requested depth cluster of a view pair.
// cluster_pick < 0 selects the smallest centroid, > 0 the largest.
bool pair_cluster_similarity(const Image& a, const Image& b,
                             const ScaleOptions& opt, uint64_t salt,
                             int cluster_pick, SimilarityTransform* out) {
  try {
    CorrespondenceSet set = match_pair(a, b, opt.max_corners, opt.harris, opt.klt);
    DepthClustering clusters = cluster_depths(set, opt.seed ^ salt);
    int target = cluster_pick < 0 ? clusters.smallest_centroid_cluster()
                                  : clusters.largest_centroid_cluster();
    std::vector<Correspondence> selected;
    int idx = 0;
    for (const auto& m : set.matches) {
      if (!m.inlier) continue;
      if (clusters.labels[idx++] == target) selected.push_back(m);
    }
    if (selected.size() < 3) return false;
    *out = estimate_similarity(selected);
    return true;
  } catch (const LfError&) {
    return false;
  }
}

}  // namespace

double estimate_scale_within(const LightField& lf, const ScaleOptions& opt) {
  if (lf.view_count() < 2) {
    throw LfError(ErrorCode::kInsufficientFeatures, "scale-within",
                  "need at least 2 views");
  }
  struct Pair {
    int s0, t0, s1, t1;
  };
  std::vector<Pair> pairs;
  for (int s = 0; s + 1 < lf.s_size(); ++s)
    for (int t = 0; t < lf.t_size(); ++t) pairs.push_back({s, t, s + 1, t});
  for (int s = 0; s < lf.s_size(); ++s)
    for (int t = 0; t + 1 < lf.t_size(); ++t) pairs.push_back({s, t, s, t + 1});

  std::vector<double> scales(pairs.size(), 0.0);
  std::vector<uint8_t> ok(pairs.size(), 0);
  parallel_for(static_cast<int>(pairs.size()), [&](int i) {
    SimilarityTransform sim;
    if (pair_cluster_similarity(lf.view(pairs[i].s0, pairs[i].t0),
                                lf.view(pairs[i].s1, pairs[i].t1), opt,
                                static_cast<uint64_t>(i) * 1315423911u, -1,
                                &sim)) {
      scales[i] = sim.scale;
      ok[i] = 1;
    }
  });

  double log_sum = 0.0;
  int n_ok = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (ok[i]) {
      log_sum += std::log(scales[i]);
      ++n_ok;
    }
  }
  if (n_ok * 4 < static_cast<int>(pairs.size())) {
    throw LfError(ErrorCode::kInsufficientFeatures, "scale-within",
                  "fewer than 25% of consecutive pairs usable");
  }
  return std::exp(log_sum / n_ok);
}

double estimate_scale_between(const LightField& lf_ref, const LightField& lf2,
                              const ScaleOptions& opt) {
  SimilarityTransform sim;
  if (!pair_cluster_similarity(lf_ref.middle_view(), lf2.middle_view(), opt,
                               0x5eed, -1, &sim)) {
    throw LfError(ErrorCode::kInsufficientFeatures, "scale-between",
                  "middle-view pair unusable for scale estimation");
  }
  return sim.scale;
}

double rotation_angle(const Eigen::Matrix3d& Ra, const Eigen::Matrix3d& Rb) {
  double c = ((Ra * Rb.transpose()).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

RotationEstimate estimate_orientation(const Image& mid1, const Image& mid2,
                                      const Eigen::Matrix3d& K,
                                      const OrientationOptions& opt) {
  Image current = mid2;
  Eigen::Matrix3d R_total = Eigen::Matrix3d::Identity();
  RotationEstimate last;
  for (int round = 0; round < std::max(1, opt.rounds); ++round) {
    CorrespondenceSet set;
    try {
      set = match_pair(mid1, current, opt.max_corners, opt.harris, opt.klt);
    } catch (const LfError&) {
      if (round == 0) throw;
      break;  // keep the round-1 answer
    }
    RansacOptions ro = opt.ransac;
    ro.seed = opt.ransac.seed + round;
    FundamentalMatrix F = ransac_fundamental(set, ro);
    GoldStandardResult gs = refine_fundamental_gold_standard(F, set.inliers());
    for (auto& m : set.matches) {
      m.inlier = sampson_distance_sq(gs.F.F, m.p, m.q) <=
                 ro.threshold_px * ro.threshold_px;
    }
    EssentialMatrix E = essential_from_fundamental(gs.F, K);
    RotationEstimate rot = decompose_essential(E, set.inliers(), K);
    R_total = rot.R * R_total;
    last = rot;
    if (round + 1 < std::max(1, opt.rounds)) {
      current = warp_homography(mid2, orientation_homography(K, R_total));
    }
  }
  RotationEstimate out = last;
  out.R = R_total;
  return out;
}

}  // namespace lf
