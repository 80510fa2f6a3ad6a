#ifndef LIDARTRACK_POSE_EKF_HPP
#define LIDARTRACK_POSE_EKF_HPP

#include <Eigen/Dense>

#include "lidartrack/core.hpp"
#include "lidartrack/ingest.hpp"

namespace lidartrack {

using Matrix9d = Eigen::Matrix<double, 9, 9>;
using Vector9d = Eigen::Matrix<double, 9, 1>;

/// Ego state ordered as [position(3), velocity(3), roll, pitch, yaw].
struct EgoState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d orientation = Eigen::Vector3d::Zero();  // roll, pitch, yaw (rad)
  Matrix9d covariance = Matrix9d::Identity();

  Vector9d vector() const;
  void set_vector(const Vector9d& v);
};

struct EkfConfig {
  double accel_noise_density = 0.1;   // m/s^2/sqrt(Hz)
  double gyro_noise_density = 0.01;   // rad/s/sqrt(Hz)
  double gps_sigma = 0.5;             // m
  double velocity_sigma = 0.2;        // m/s
  double initial_position_sigma = 1.0;
  double initial_velocity_sigma = 1.0;
  double initial_orientation_sigma = 0.1;

  void validate() const;
};

inline const Eigen::Vector3d kGravity{0.0, 0.0, -9.81};

EgoState initial_state(const Eigen::Vector3d& position, const Eigen::Vector3d& velocity,
                       const Eigen::Vector3d& orientation, const EkfConfig& cfg);

/// Strapdown propagation with the accelerometer specific force rotated into the
/// world frame and gravity removed. Throws ContractViolation unless 0 < dt < 1.
EgoState predict(const EgoState& state, const ImuSample& imu, double dt, const EkfConfig& cfg);

/// Optional innovation output for diagnostics.
struct Innovation {
  Eigen::Vector3d residual = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
};

/// Position update, H = [I 0 0]. Throws NumericallyDegenerate on a singular
/// innovation covariance and InvalidMeasurement on non-finite input.
EgoState correct_gps(const EgoState& state, const Eigen::Vector3d& gps_local, const EkfConfig& cfg,
                     Innovation* innovation = nullptr);
/// Same as correct_gps with an explicit measurement sigma.
EgoState correct_gps(const EgoState& state, const Eigen::Vector3d& gps_local, double sigma,
                     Innovation* innovation = nullptr);

/// Velocity update, H = [0 I 0].
EgoState correct_velocity(const EgoState& state, const Eigen::Vector3d& velocity, const EkfConfig& cfg,
                          Innovation* innovation = nullptr);
EgoState correct_velocity(const EgoState& state, const Eigen::Vector3d& velocity, double sigma,
                          Innovation* innovation = nullptr);

Pose6D pose_of(const EgoState& state);

/// Single-writer wrapper used by the pipeline; keeps the last innovation.
class EgoPoseFilter {
public:
  explicit EgoPoseFilter(EkfConfig cfg = {});

  bool initialized() const { return initialized_; }
  void initialize(const Eigen::Vector3d& position, const Eigen::Vector3d& velocity,
                  const Eigen::Vector3d& orientation);
  void predict(const ImuSample& imu, double dt);
  void correct_gps(const Eigen::Vector3d& gps_local);
  void correct_velocity(const Eigen::Vector3d& velocity);

  const EgoState& state() const { return state_; }
  Pose6D pose() const { return pose_of(state_); }
  const Innovation& last_gps_innovation() const { return gps_innovation_; }
  const Innovation& last_velocity_innovation() const { return velocity_innovation_; }

private:
  EkfConfig cfg_;
  EgoState state_;
  bool initialized_ = false;
  Innovation gps_innovation_;
  Innovation velocity_innovation_;
};

}  // namespace lidartrack

#endif  // LIDARTRACK_POSE_EKF_HPP
