#ifndef LIDARTRACK_DESCRIPTOR_HPP
#define LIDARTRACK_DESCRIPTOR_HPP

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "lidartrack/core.hpp"

namespace lidartrack {

inline constexpr std::size_t kVfhAngularBins = 45;
inline constexpr std::size_t kVfhViewpointBins = 128;
inline constexpr std::size_t kVfhBins = 4 * kVfhAngularBins + kVfhViewpointBins;  // 308

/// Viewpoint feature histogram as a normalized PDF with its prefix-sum CDF.
/// Layout: [theta | cos alpha | cos phi | distance] x 45, then 128 viewpoint bins.
struct VfhDescriptor {
  std::array<double, kVfhBins> pdf{};
  std::array<double, kVfhBins> cdf{};

  bool operator==(const VfhDescriptor&) const = default;
};

struct NormalCloud {
  std::vector<Eigen::Vector3d> normals;
  std::vector<bool> degenerate;  // neighbourhood was collinear or a single location
};

/// Per-point normals from the k nearest neighbours (k clamped to the cluster
/// size), flipped so that n . (viewpoint - p) >= 0.
NormalCloud estimate_normals(const std::vector<Eigen::Vector3d>& points, std::size_t k,
                             const Eigen::Vector3d& viewpoint);

/// Throws DegenerateInput for fewer than 3 points, ContractViolation when the
/// normal count does not match.
VfhDescriptor compute_vfh(const std::vector<Eigen::Vector3d>& points, const NormalCloud& normals,
                          const Eigen::Vector3d& viewpoint);

/// sum (h1 - h2)^2 / (h1 + h2); empty bins contribute nothing.
double chi_squared_distance(const VfhDescriptor& h1, const VfhDescriptor& h2);
double chi_squared_distance(const std::vector<double>& h1, const std::vector<double>& h2);

/// Prefix sum with the last element pinned to exactly 1.
/// Throws ContractViolation on a negative bin or a non-normalized input.
std::vector<double> cdf_of(const std::vector<double>& pdf);

}  // namespace lidartrack

#endif  // LIDARTRACK_DESCRIPTOR_HPP
