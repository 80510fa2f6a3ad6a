#ifndef LIDARTRACK_CORE_HPP
#define LIDARTRACK_CORE_HPP

#include <vector>

#include <Eigen/Dense>

#include "lidartrack/errors.hpp"

namespace lidartrack {

using Matrix6d = Eigen::Matrix<double, 6, 6>;

enum class Frame { Sensor, World };

const char* to_string(Frame frame);

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;  // reflectance in [0, 1]

  Eigen::Vector3d position() const { return {x, y, z}; }
  bool finite() const;
};

struct PointCloud {
  std::vector<Point3> points;
  Frame frame = Frame::Sensor;
  double timestamp = 0.0;  // seconds

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point3& operator[](std::size_t i) const { return points[i]; }
};

/// Ego pose: position in world coordinates, unit quaternion orientation
/// and a 6x6 covariance ordered (x, y, z, roll, pitch, yaw).
struct Pose6D {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
  Matrix6d covariance = Matrix6d::Zero();

  static Pose6D identity() { return {}; }
};

/// Plane a*x + b*y + c*z + d = 0 with unit normal (a, b, c).
class Plane {
public:
  Plane() = default;
  /// Throws ContractViolation when the normal is not unit length.
  Plane(const Eigen::Vector3d& normal, double offset);

  /// Normalizes (normal, offset) jointly before construction.
  static Plane from_coefficients(const Eigen::Vector3d& normal, double offset);

  const Eigen::Vector3d& normal() const { return normal_; }
  double offset() const { return offset_; }

private:
  Eigen::Vector3d normal_ = Eigen::Vector3d::UnitZ();
  double offset_ = 0.0;
};

class RigidTransform {
public:
  RigidTransform() = default;
  /// Throws ContractViolation when the rotation is not orthonormal with det +1.
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidTransform identity() { return {}; }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }
  RigidTransform inverse() const;
  /// (this * other)(p) == this(other(p))
  RigidTransform operator*(const RigidTransform& other) const;

  static bool is_valid_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& tf, Frame target_frame);

inline double plane_distance(const Eigen::Vector3d& p, const Plane& plane) {
  return plane.normal().dot(p) + plane.offset();
}
inline double plane_distance(const Point3& p, const Plane& plane) {
  return plane_distance(p.position(), plane);
}

RigidTransform pose_to_transform(const Pose6D& pose);

/// Z-Y-X (yaw, pitch, roll) Euler angles to rotation matrix.
Eigen::Matrix3d rotation_from_rpy(double roll, double pitch, double yaw);
Eigen::Quaterniond quaternion_from_rpy(double roll, double pitch, double yaw);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// log N(x; mean, cov). Throws NumericallyDegenerate for a non-PD covariance.
double gaussian_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& cov);

/// Symmetric matrix positive semi-definite check via LDLT.
bool is_psd(const Eigen::MatrixXd& m, double tol = 1e-9);

}  // namespace lidartrack

#endif  // LIDARTRACK_CORE_HPP
