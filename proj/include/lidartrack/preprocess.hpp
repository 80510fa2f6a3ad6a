#ifndef LIDARTRACK_PREPROCESS_HPP
#define LIDARTRACK_PREPROCESS_HPP

#include <cstdint>
#include <vector>

#include "lidartrack/core.hpp"

namespace lidartrack {

struct FilterConfig {
  double max_range = 50.0;
  double min_range = 1.5;
  double voxel_leaf = 0.1;  // 0 disables voxel downsampling

  void validate() const;
};

struct RansacConfig {
  double distance_threshold = 0.15;
  int max_iterations = 200;
  double min_inlier_fraction = 0.2;
  std::uint64_t rng_seed = 42;

  void validate() const;
};

/// Range gate on the 3D distance from the sensor, then one centroid per
/// occupied voxel (emitted in lexicographic voxel index order).
PointCloud filter_cloud(const PointCloud& cloud, const FilterConfig& cfg);

struct GroundRemoval {
  PointCloud nonground;
  Plane plane;
  bool ground_found = false;
  std::vector<std::size_t> inliers;     // indices into the input cloud
  std::vector<std::size_t> nonground_indices;
};

/// Seeded RANSAC over 3-point samples, least-squares refit on the inliers,
/// normal oriented +z. Throws DegenerateInput for fewer than 3 points.
/// When no model reaches min_inlier_fraction the cloud is returned unchanged
/// with ground_found = false.
GroundRemoval remove_ground(const PointCloud& cloud, const RansacConfig& cfg);

/// Least-squares plane (centroid + smallest-eigenvalue normal, +z oriented).
Plane fit_plane(const std::vector<Eigen::Vector3d>& points);

PointCloud to_world(const PointCloud& cloud, const Pose6D& pose);
/// Variant with an explicit sensor-to-body extrinsic applied before the pose.
PointCloud to_world(const PointCloud& cloud, const Pose6D& pose, const RigidTransform& sensor_to_body);

}  // namespace lidartrack

#endif  // LIDARTRACK_PREPROCESS_HPP
