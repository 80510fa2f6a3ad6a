#ifndef LIDARTRACK_TEST_SUPPORT_HPP
#define LIDARTRACK_TEST_SUPPORT_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lidartrack/core.hpp"

namespace lidartrack::test {

inline Eigen::Vector3d random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = random_vec(rng, lo, hi);
    c.points.push_back({p.x(), p.y(), p.z(), 0.5});
  }
  return c;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("lidartrack_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace lidartrack::test

#endif  // LIDARTRACK_TEST_SUPPORT_HPP
