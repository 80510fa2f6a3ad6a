#include "lidartrack/preprocess.hpp"

#include <array>
#include <cmath>
#include <map>
#include <random>

namespace lidartrack {

void FilterConfig::validate() const {
  if (!(min_range >= 0.0 && min_range < max_range)) {
    throw ContractViolation("FilterConfig: require 0 <= min_range < max_range");
  }
  if (voxel_leaf < 0.0) throw ContractViolation("FilterConfig: voxel_leaf must be >= 0");
}

void RansacConfig::validate() const {
  if (!(distance_threshold > 0.0)) throw ContractViolation("RansacConfig: distance_threshold must be > 0");
  if (max_iterations < 1) throw ContractViolation("RansacConfig: max_iterations must be >= 1");
  if (min_inlier_fraction < 0.0 || min_inlier_fraction > 1.0) {
    throw ContractViolation("RansacConfig: min_inlier_fraction must be in [0, 1]");
  }
}

PointCloud filter_cloud(const PointCloud& cloud, const FilterConfig& cfg) {
  cfg.validate();
  PointCloud out;
  out.frame = cloud.frame;
  out.timestamp = cloud.timestamp;

  auto in_range = [&](const Point3& p) {
    const double r = p.position().norm();
    return r >= cfg.min_range && r <= cfg.max_range;
  };

  if (cfg.voxel_leaf <= 0.0) {
    for (const auto& p : cloud.points) {
      if (in_range(p)) out.points.push_back(p);
    }
    return out;
  }

  struct Accum {
    double x = 0, y = 0, z = 0, i = 0;
    std::size_t n = 0;
  };
  std::map<std::array<std::int64_t, 3>, Accum> voxels;
  const double inv = 1.0 / cfg.voxel_leaf;
  for (const auto& p : cloud.points) {
    if (!in_range(p)) continue;
    const std::array<std::int64_t, 3> key{static_cast<std::int64_t>(std::floor(p.x * inv)),
                                          static_cast<std::int64_t>(std::floor(p.y * inv)),
                                          static_cast<std::int64_t>(std::floor(p.z * inv))};
    auto& a = voxels[key];
    a.x += p.x;
    a.y += p.y;
    a.z += p.z;
    a.i += p.intensity;
    ++a.n;
  }
  out.points.reserve(voxels.size());
  for (const auto& [_, a] : voxels) {
    const double n = static_cast<double>(a.n);
    out.points.push_back({a.x / n, a.y / n, a.z / n, a.i / n});
  }
  return out;
}

Plane fit_plane(const std::vector<Eigen::Vector3d>& points) {
  if (points.size() < 3) throw DegenerateInput("fit_plane: need at least 3 points");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Eigen::Vector3d n = es.eigenvectors().col(0).normalized();
  if (n.z() < 0.0) n = -n;
  return Plane(n, -n.dot(mean));
}

GroundRemoval remove_ground(const PointCloud& cloud, const RansacConfig& cfg) {
  cfg.validate();
  const std::size_t n = cloud.size();
  if (n < 3) throw DegenerateInput("remove_ground: need at least 3 points");

  std::vector<Eigen::Vector3d> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = cloud.points[i].position();

  std::mt19937_64 rng(cfg.rng_seed);
  auto pick = [&](std::size_t bound) {
    return static_cast<std::size_t>(rng() % bound);
  };

  std::size_t best_count = 0;
  Eigen::Vector3d best_normal = Eigen::Vector3d::UnitZ();
  double best_offset = 0.0;
  bool have_model = false;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    std::size_t a = pick(n), b = pick(n), c = pick(n);
    if (n == 3) {
      a = 0;
      b = 1;
      c = 2;
    }
    if (a == b || b == c || a == c) continue;
    const Eigen::Vector3d nrm = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double len = nrm.norm();
    const double scale = (pts[b] - pts[a]).norm() * (pts[c] - pts[a]).norm();
    if (!(len > 1e-12 * scale)) continue;  // collinear sample
    const Eigen::Vector3d unit = nrm / len;
    const double d = -unit.dot(pts[a]);
    std::size_t count = 0;
    for (const auto& p : pts) {
      if (std::abs(unit.dot(p) + d) <= cfg.distance_threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_normal = unit;
      best_offset = d;
      have_model = true;
    }
    if (n == 3) break;
  }

  GroundRemoval out;
  const double fraction = static_cast<double>(best_count) / static_cast<double>(n);
  if (!have_model || fraction < cfg.min_inlier_fraction) {
    out.nonground = cloud;
    out.nonground_indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.nonground_indices[i] = i;
    out.ground_found = false;
    return out;
  }

  std::vector<Eigen::Vector3d> inlier_pts;
  inlier_pts.reserve(best_count);
  for (const auto& p : pts) {
    if (std::abs(best_normal.dot(p) + best_offset) <= cfg.distance_threshold) inlier_pts.push_back(p);
  }
  out.plane = fit_plane(inlier_pts);
  out.ground_found = true;
  out.nonground.frame = cloud.frame;
  out.nonground.timestamp = cloud.timestamp;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(plane_distance(pts[i], out.plane)) <= cfg.distance_threshold) {
      out.inliers.push_back(i);
    } else {
      out.nonground_indices.push_back(i);
      out.nonground.points.push_back(cloud.points[i]);
    }
  }
  return out;
}

PointCloud to_world(const PointCloud& cloud, const Pose6D& pose) {
  if (cloud.frame != Frame::Sensor) throw ContractViolation("to_world: cloud is not in the sensor frame");
  return transform_cloud(cloud, pose_to_transform(pose), Frame::World);
}

PointCloud to_world(const PointCloud& cloud, const Pose6D& pose, const RigidTransform& sensor_to_body) {
  if (cloud.frame != Frame::Sensor) throw ContractViolation("to_world: cloud is not in the sensor frame");
  return transform_cloud(cloud, pose_to_transform(pose) * sensor_to_body, Frame::World);
}

}  // namespace lidartrack
