#include "lidartrack/core.hpp"

#include <cmath>
#include <numbers>

namespace lidartrack {

const char* to_string(Frame frame) {
  return frame == Frame::Sensor ? "sensor" : "world";
}

bool Point3::finite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

Plane::Plane(const Eigen::Vector3d& normal, double offset) : normal_(normal), offset_(offset) {
  if (std::abs(normal.norm() - 1.0) > 1e-9) {
    throw ContractViolation("plane normal must be unit length");
  }
}

Plane Plane::from_coefficients(const Eigen::Vector3d& normal, double offset) {
  const double n = normal.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw ContractViolation("plane normal must be non-zero");
  }
  return Plane(normal / n, offset / n);
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
  : rotation_(rotation), translation_(translation) {
  if (!is_valid_rotation(rotation)) {
    throw ContractViolation("rotation matrix is not orthonormal with det +1");
  }
  if (!translation.allFinite()) {
    throw ContractViolation("translation must be finite");
  }
}

bool RigidTransform::is_valid_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) return false;
  const Eigen::Matrix3d err = r * r.transpose() - Eigen::Matrix3d::Identity();
  return err.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& tf, Frame target_frame) {
  if (!RigidTransform::is_valid_rotation(tf.rotation())) {
    throw ContractViolation("transform_cloud: invalid rotation");
  }
  PointCloud out;
  out.frame = target_frame;
  out.timestamp = cloud.timestamp;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d q = tf.apply(p.position());
    out.points.push_back({q.x(), q.y(), q.z(), p.intensity});
  }
  return out;
}

RigidTransform pose_to_transform(const Pose6D& pose) {
  if (std::abs(pose.orientation.norm() - 1.0) > 1e-9) {
    throw ContractViolation("pose orientation quaternion is not unit length");
  }
  return RigidTransform(pose.orientation.toRotationMatrix(), pose.position);
}

Eigen::Matrix3d rotation_from_rpy(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

Eigen::Quaterniond quaternion_from_rpy(double roll, double pitch, double yaw) {
  const double cr = std::cos(roll * 0.5), sr = std::sin(roll * 0.5);
  const double cp = std::cos(pitch * 0.5), sp = std::sin(pitch * 0.5);
  const double cy = std::cos(yaw * 0.5), sy = std::sin(yaw * 0.5);
  Eigen::Quaterniond q(cr * cp * cy + sr * sp * sy,
                       sr * cp * cy - cr * sp * sy,
                       cr * sp * cy + sr * cp * sy,
                       cr * cp * sy - sr * sp * cy);
  q.normalize();
  return q;
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::fmod(a + pi, 2.0 * pi);
  if (a <= 0.0) a += 2.0 * pi;
  return a - pi;
}

double gaussian_log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw NumericallyDegenerate("gaussian_log_density: covariance not positive definite");
  }
  const Eigen::VectorXd r = x - mean;
  const Eigen::VectorXd w = llt.matrixL().solve(r);
  const Eigen::MatrixXd& l = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  const double k = static_cast<double>(x.size());
  return -0.5 * (w.squaredNorm() + log_det + k * std::log(2.0 * std::numbers::pi));
}

bool is_psd(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return es.eigenvalues().minCoeff() >= -tol * scale;
}

}  // namespace lidartrack
