#ifndef LIDARTRACK_SEGMENTATION_HPP
#define LIDARTRACK_SEGMENTATION_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lidartrack/core.hpp"

namespace lidartrack {

/// Static balanced 3-d tree over point positions. Immutable after
/// construction; concurrent queries are safe.
class KdTree3 {
public:
  KdTree3() = default;
  explicit KdTree3(std::vector<Eigen::Vector3d> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Eigen::Vector3d& point(std::size_t i) const { return points_[i]; }

  /// All indices with ||p - q|| <= radius, ascending.
  std::vector<std::size_t> radius_search(const Eigen::Vector3d& q, double radius) const;
  /// Allocation-reusing form; `out` is cleared first.
  void radius_search(const Eigen::Vector3d& q, double radius, std::vector<std::size_t>& out) const;

  /// k nearest indices ordered by (distance, index).
  std::vector<std::size_t> knn(const Eigen::Vector3d& q, std::size_t k) const;

private:
  struct Node {
    std::uint32_t begin, end;  // range in order_
    std::int32_t left = -1, right = -1;
    std::uint8_t axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, int depth);

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;

  static constexpr std::uint32_t kLeafSize = 12;
};

KdTree3 build_kdtree(const PointCloud& cloud);

struct DbscanConfig {
  double eps = 0.5;
  std::size_t min_pts = 10;

  void validate() const;
};

struct Aabb {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Zero();

  Eigen::Vector3d extent() const { return max - min; }
};

struct ObjectCluster {
  std::vector<std::size_t> point_indices;  // into the clustered cloud
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Aabb box;

  std::size_t count() const { return point_indices.size(); }
};

inline constexpr int kNoise = -1;

struct DbscanResult {
  std::vector<ObjectCluster> clusters;
  std::vector<std::size_t> noise;
  std::vector<int> labels;  // cluster index per point or kNoise
};

/// DBSCAN with inclusive eps and the query point counted in its own
/// neighbourhood. Points are scanned in index order; a border point joins the
/// first cluster that reaches it.
DbscanResult dbscan(const PointCloud& cloud, const KdTree3& tree, const DbscanConfig& cfg);

/// Centroid and AABB over `indices`. Throws ContractViolation when empty.
ObjectCluster summarize(const std::vector<std::size_t>& indices, const PointCloud& cloud);

}  // namespace lidartrack

#endif  // LIDARTRACK_SEGMENTATION_HPP
