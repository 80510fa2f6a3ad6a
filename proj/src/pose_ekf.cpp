#include "lidartrack/pose_ekf.hpp"

#include <cmath>

namespace lidartrack {

namespace {

Eigen::Matrix3d rx(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return (Eigen::Matrix3d() << 1, 0, 0, 0, c, -s, 0, s, c).finished();
}
Eigen::Matrix3d ry(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return (Eigen::Matrix3d() << c, 0, s, 0, 1, 0, -s, 0, c).finished();
}
Eigen::Matrix3d rz(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return (Eigen::Matrix3d() << c, -s, 0, s, c, 0, 0, 0, 1).finished();
}
Eigen::Matrix3d drx(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return (Eigen::Matrix3d() << 0, 0, 0, 0, -s, -c, 0, c, -s).finished();
}
Eigen::Matrix3d dry(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return (Eigen::Matrix3d() << -s, 0, c, 0, 0, 0, -c, 0, -s).finished();
}
Eigen::Matrix3d drz(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return (Eigen::Matrix3d() << -s, -c, 0, c, -s, 0, 0, 0, 0).finished();
}

// Body rates to Z-Y-X Euler angle rates.
Eigen::Matrix3d euler_rate_matrix(double roll, double pitch) {
  const double sr = std::sin(roll), cr = std::cos(roll);
  const double tp = std::tan(pitch), cp = std::cos(pitch);
  Eigen::Matrix3d t;
  t << 1, sr * tp, cr * tp,
       0, cr, -sr,
       0, sr / cp, cr / cp;
  return t;
}

Eigen::Matrix3d d_euler_rate_droll(double roll, double pitch) {
  const double sr = std::sin(roll), cr = std::cos(roll);
  const double tp = std::tan(pitch), cp = std::cos(pitch);
  Eigen::Matrix3d t;
  t << 0, cr * tp, -sr * tp,
       0, -sr, -cr,
       0, cr / cp, -sr / cp;
  return t;
}

Eigen::Matrix3d d_euler_rate_dpitch(double roll, double pitch) {
  const double sr = std::sin(roll), cr = std::cos(roll);
  const double tp = std::tan(pitch), cp = std::cos(pitch);
  const double sec2 = 1.0 / (cp * cp);
  Eigen::Matrix3d t;
  t << 0, sr * sec2, cr * sec2,
       0, 0, 0,
       0, sr * tp / cp, cr * tp / cp;
  return t;
}

void symmetrize(Matrix9d& p) { p = 0.5 * (p + p.transpose()).eval(); }

EgoState linear_update(const EgoState& state, int block, const Eigen::Vector3d& z, double sigma,
                       Innovation* innovation, const char* what) {
  if (!z.allFinite()) {
    throw InvalidMeasurement(std::string(what) + ": measurement is not finite");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ContractViolation(std::string(what) + ": measurement sigma must be positive");
  }
  Eigen::Matrix<double, 3, 9> h = Eigen::Matrix<double, 3, 9>::Zero();
  h.block<3, 3>(0, block).setIdentity();
  const Eigen::Matrix3d r = Eigen::Matrix3d::Identity() * sigma * sigma;
  const Matrix9d& p = state.covariance;
  const Eigen::Matrix3d s = h * p * h.transpose() + r;
  Eigen::LLT<Eigen::Matrix3d> llt(s);
  if (!s.allFinite() || llt.info() != Eigen::Success) {
    throw NumericallyDegenerate(std::string(what) + ": innovation covariance is singular");
  }
  const Eigen::Vector3d y = z - h * state.vector();
  const Eigen::Matrix<double, 9, 3> k = llt.solve(h * p).transpose();

  EgoState out = state;
  Vector9d x = state.vector() + k * y;
  const Matrix9d ikh = Matrix9d::Identity() - k * h;
  out.covariance = ikh * p * ikh.transpose() + k * r * k.transpose();
  symmetrize(out.covariance);
  out.set_vector(x);
  out.orientation.z() = wrap_angle(out.orientation.z());
  if (innovation) *innovation = {y, s};
  return out;
}

}  // namespace

Vector9d EgoState::vector() const {
  Vector9d v;
  v << position, velocity, orientation;
  return v;
}

void EgoState::set_vector(const Vector9d& v) {
  position = v.segment<3>(0);
  velocity = v.segment<3>(3);
  orientation = v.segment<3>(6);
}

void EkfConfig::validate() const {
  for (double v : {accel_noise_density, gyro_noise_density, gps_sigma, velocity_sigma,
                   initial_position_sigma, initial_velocity_sigma, initial_orientation_sigma}) {
    if (!(v > 0.0)) throw ContractViolation("EkfConfig: all noise parameters must be > 0");
  }
}

EgoState initial_state(const Eigen::Vector3d& position, const Eigen::Vector3d& velocity,
                       const Eigen::Vector3d& orientation, const EkfConfig& cfg) {
  cfg.validate();
  EgoState s;
  s.position = position;
  s.velocity = velocity;
  s.orientation = orientation;
  s.orientation.z() = wrap_angle(orientation.z());
  Vector9d diag;
  diag << Eigen::Vector3d::Constant(cfg.initial_position_sigma * cfg.initial_position_sigma),
      Eigen::Vector3d::Constant(cfg.initial_velocity_sigma * cfg.initial_velocity_sigma),
      Eigen::Vector3d::Constant(cfg.initial_orientation_sigma * cfg.initial_orientation_sigma);
  s.covariance = diag.asDiagonal();
  return s;
}

EgoState predict(const EgoState& state, const ImuSample& imu, double dt, const EkfConfig& cfg) {
  if (!(dt > 0.0) || !(dt < 1.0)) throw ContractViolation("predict: dt must be in (0, 1) s");
  if (!imu.accel.allFinite() || !imu.gyro.allFinite()) {
    throw ContractViolation("predict: IMU sample is not finite");
  }
  const double roll = state.orientation.x(), pitch = state.orientation.y(), yaw = state.orientation.z();
  const Eigen::Matrix3d rot_x = rx(roll), rot_y = ry(pitch), rot_z = rz(yaw);
  const Eigen::Matrix3d rot = rot_z * rot_y * rot_x;
  const Eigen::Vector3d accel = rot * imu.accel + kGravity;

  EgoState out = state;
  out.position = state.position + state.velocity * dt + 0.5 * accel * dt * dt;
  out.velocity = state.velocity + accel * dt;
  out.orientation = state.orientation + euler_rate_matrix(roll, pitch) * imu.gyro * dt;
  out.orientation.z() = wrap_angle(out.orientation.z());

  Eigen::Matrix3d da;  // d(R f)/d(roll, pitch, yaw)
  da.col(0) = rot_z * rot_y * drx(roll) * imu.accel;
  da.col(1) = rot_z * dry(pitch) * rot_x * imu.accel;
  da.col(2) = drz(yaw) * rot_y * rot_x * imu.accel;
  Eigen::Matrix3d de = Eigen::Matrix3d::Identity();
  de.col(0) += d_euler_rate_droll(roll, pitch) * imu.gyro * dt;
  de.col(1) += d_euler_rate_dpitch(roll, pitch) * imu.gyro * dt;

  Matrix9d f = Matrix9d::Identity();
  f.block<3, 3>(0, 3) = Eigen::Matrix3d::Identity() * dt;
  f.block<3, 3>(0, 6) = 0.5 * dt * dt * da;
  f.block<3, 3>(3, 6) = dt * da;
  f.block<3, 3>(6, 6) = de;

  const double qa = cfg.accel_noise_density * cfg.accel_noise_density;
  const double qg = cfg.gyro_noise_density * cfg.gyro_noise_density;
  Matrix9d q = Matrix9d::Zero();
  const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
  q.block<3, 3>(0, 0) = i3 * qa * dt * dt * dt / 3.0;
  q.block<3, 3>(0, 3) = i3 * qa * dt * dt / 2.0;
  q.block<3, 3>(3, 0) = i3 * qa * dt * dt / 2.0;
  q.block<3, 3>(3, 3) = i3 * qa * dt;
  q.block<3, 3>(6, 6) = i3 * qg * dt;

  out.covariance = f * state.covariance * f.transpose() + q;
  symmetrize(out.covariance);
  return out;
}

EgoState correct_gps(const EgoState& state, const Eigen::Vector3d& gps_local, double sigma,
                     Innovation* innovation) {
  return linear_update(state, 0, gps_local, sigma, innovation, "correct_gps");
}

EgoState correct_gps(const EgoState& state, const Eigen::Vector3d& gps_local, const EkfConfig& cfg,
                     Innovation* innovation) {
  return correct_gps(state, gps_local, cfg.gps_sigma, innovation);
}

EgoState correct_velocity(const EgoState& state, const Eigen::Vector3d& velocity, double sigma,
                          Innovation* innovation) {
  return linear_update(state, 3, velocity, sigma, innovation, "correct_velocity");
}

EgoState correct_velocity(const EgoState& state, const Eigen::Vector3d& velocity, const EkfConfig& cfg,
                          Innovation* innovation) {
  return correct_velocity(state, velocity, cfg.velocity_sigma, innovation);
}

Pose6D pose_of(const EgoState& state) {
  Pose6D pose;
  pose.position = state.position;
  pose.orientation = quaternion_from_rpy(state.orientation.x(), state.orientation.y(), state.orientation.z());
  pose.covariance.block<3, 3>(0, 0) = state.covariance.block<3, 3>(0, 0);
  pose.covariance.block<3, 3>(0, 3) = state.covariance.block<3, 3>(0, 6);
  pose.covariance.block<3, 3>(3, 0) = state.covariance.block<3, 3>(6, 0);
  pose.covariance.block<3, 3>(3, 3) = state.covariance.block<3, 3>(6, 6);
  return pose;
}

EgoPoseFilter::EgoPoseFilter(EkfConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void EgoPoseFilter::initialize(const Eigen::Vector3d& position, const Eigen::Vector3d& velocity,
                               const Eigen::Vector3d& orientation) {
  state_ = initial_state(position, velocity, orientation, cfg_);
  initialized_ = true;
}

void EgoPoseFilter::predict(const ImuSample& imu, double dt) {
  state_ = lidartrack::predict(state_, imu, dt, cfg_);
}

void EgoPoseFilter::correct_gps(const Eigen::Vector3d& gps_local) {
  state_ = lidartrack::correct_gps(state_, gps_local, cfg_, &gps_innovation_);
}

void EgoPoseFilter::correct_velocity(const Eigen::Vector3d& velocity) {
  state_ = lidartrack::correct_velocity(state_, velocity, cfg_, &velocity_innovation_);
}

}  // namespace lidartrack
