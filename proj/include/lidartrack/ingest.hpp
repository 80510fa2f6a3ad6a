#ifndef LIDARTRACK_INGEST_HPP
#define LIDARTRACK_INGEST_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lidartrack/core.hpp"

namespace lidartrack {

struct ImuSample {
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // specific force, body frame, m/s^2
  Eigen::Vector3d gyro = Eigen::Vector3d::Zero();   // body rates, rad/s
};

struct GpsFix {
  double lat = 0.0;  // deg
  double lon = 0.0;  // deg
  double alt = 0.0;  // m
};

struct SensorFrame {
  PointCloud cloud;  // Sensor frame
  ImuSample imu;
  GpsFix gps;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // world (east, north, up), m/s
  Eigen::Vector3d attitude = Eigen::Vector3d::Zero();  // roll, pitch, yaw as reported by the INS
  double timestamp = 0.0;
};

struct GroundTruthObject {
  int object_id = 0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();  // world frame
  std::vector<std::size_t> point_indices;               // into SensorFrame::cloud
};

struct GroundTruth {
  std::size_t frame = 0;
  std::vector<GroundTruthObject> objects;
};

// ---------------------------------------------------------------------------
// KITTI raw data
// ---------------------------------------------------------------------------

struct VelodyneScan {
  PointCloud cloud;
  std::size_t dropped_non_finite = 0;
};

/// Reads a KITTI velodyne `.bin` (little-endian float32 x, y, z, reflectance).
/// Throws MalformedFile when the length is not a multiple of 16 bytes.
VelodyneScan read_velodyne_bin(const std::filesystem::path& path);
void write_velodyne_bin(const std::filesystem::path& path, const PointCloud& cloud);

/// One line of a KITTI OXTS record (30 fields, named as in the devkit).
struct OxtsRecord {
  double lat, lon, alt;
  double roll, pitch, yaw;
  double vn, ve, vf, vl, vu;
  double ax, ay, az, af, al, au;
  double wx, wy, wz, wf, wl, wu;
  double pos_accuracy, vel_accuracy;
  int navstat, numsats, posmode, velmode, orimode;

  GpsFix gps() const { return {lat, lon, alt}; }
  ImuSample imu() const { return {{ax, ay, az}, {wx, wy, wz}}; }
  Eigen::Vector3d velocity_enu() const { return {ve, vn, vu}; }
  Eigen::Vector3d attitude() const { return {roll, pitch, yaw}; }
};

inline constexpr std::size_t kOxtsFieldCount = 30;

std::vector<OxtsRecord> parse_oxts(const std::string& text);
std::vector<OxtsRecord> read_oxts(const std::filesystem::path& path);
std::string format_oxts(const OxtsRecord& rec);

/// Parses `YYYY-MM-DD hh:mm:ss.fffffffff` into seconds since the Unix epoch.
double parse_kitti_timestamp(const std::string& text);
std::string format_kitti_timestamp(double seconds);
std::vector<double> read_timestamps(const std::filesystem::path& path);

/// Mercator projection about `origin` (scale = cos(origin latitude)).
Eigen::Vector2d gps_to_local(const GpsFix& gps, const GpsFix& origin);
GpsFix local_to_gps(const Eigen::Vector2d& xy, double alt, const GpsFix& origin);

inline constexpr double kEarthRadius = 6378137.0;

/// Reads `calib_imu_to_velo.txt` (R: 9 values, T: 3 values); maps IMU to velodyne.
RigidTransform read_imu_to_velo(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Frame sources
// ---------------------------------------------------------------------------

struct FrameRecord {
  SensorFrame frame;
  std::optional<GroundTruth> truth;
};

class FrameSource {
public:
  virtual ~FrameSource() = default;
  /// Next frame in timestamp order, or nullopt at end of stream.
  virtual std::optional<FrameRecord> next() = 0;
  /// Maps sensor-frame points into the body frame used by the pose.
  virtual RigidTransform sensor_to_body() const { return RigidTransform::identity(); }
};

/// Sequential reader over a KITTI raw drive directory
/// (`velodyne_points/data/*.bin`, `oxts/data/*.txt`, timestamps).
/// A `groundtruth.log` next to them is loaded when present.
class KittiSequence : public FrameSource {
public:
  explicit KittiSequence(const std::filesystem::path& root);

  std::optional<FrameRecord> next() override;
  RigidTransform sensor_to_body() const override { return velo_to_imu_; }

  std::size_t size() const { return bins_.size(); }
  std::size_t dropped_non_finite() const { return dropped_; }

private:
  std::filesystem::path root_;
  std::vector<std::filesystem::path> bins_;
  std::vector<std::filesystem::path> oxts_;
  std::vector<double> stamps_;
  std::vector<GroundTruth> truth_;
  RigidTransform velo_to_imu_;
  std::size_t cursor_ = 0;
  std::size_t dropped_ = 0;
};

// ---------------------------------------------------------------------------
// Synthetic scenes
// ---------------------------------------------------------------------------

enum class Shape { Box, Cylinder, Sphere };

const char* to_string(Shape shape);
Shape shape_from_string(const std::string& s);

struct ScenarioObject {
  Shape shape = Shape::Box;
  /// Box: full extents. Cylinder: (diameter, diameter, height). Sphere: diameter in x.
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // geometric center at t = 0, world
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
};

struct SyntheticScenario {
  std::vector<ScenarioObject> objects;
  Eigen::Vector3d ego_start = Eigen::Vector3d::Zero();
  Eigen::Vector3d ego_velocity = Eigen::Vector3d::Zero();
  double ego_yaw = 0.0;
  double ground_z = -1.73;  // world height of the ground plane
  double noise_sigma = 0.02;
  std::size_t points_per_object = 400;
  std::size_t ground_points = 3000;
  double ground_radius = 30.0;
  double max_range = 50.0;  // objects are emitted only when fully inside this range
  std::size_t frames = 20;
  double rate_hz = 10.0;
  double start_time = 0.0;
  bool visible_only = true;  // sample only surface patches facing the sensor
  GpsFix origin{49.0, 8.4, 110.0};
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// Key-value text (`key = value`, `#` comments). Objects are given as
/// `;`-separated lists under `shapes`, `sizes`, `positions`, `velocities`.
SyntheticScenario parse_scenario(const std::string& text);
SyntheticScenario load_scenario(const std::filesystem::path& path);
std::string format_scenario(const SyntheticScenario& scenario);

class SyntheticGenerator : public FrameSource {
public:
  explicit SyntheticGenerator(SyntheticScenario scenario);

  std::optional<FrameRecord> next() override;
  /// Deterministic random access: frame k depends only on (scenario, k).
  FrameRecord frame(std::size_t k) const;

  const SyntheticScenario& scenario() const { return scenario_; }
  Eigen::Vector3d ego_position(std::size_t k) const;
  Eigen::Vector3d object_center(std::size_t object, std::size_t k) const;

private:
  SyntheticScenario scenario_;
  std::size_t cursor_ = 0;
};

std::vector<FrameRecord> generate_synthetic(const SyntheticScenario& scenario);

/// Stock scene families used by the CLI and the acceptance suite.
SyntheticScenario cyclists_and_vehicle_scenario(std::uint64_t seed, std::size_t frames = 100);
SyntheticScenario twin_crossing_scenario(std::uint64_t seed, std::size_t frames = 50);
/// About 100k points per frame: a dense ground disk and six mixed objects.
SyntheticScenario dense_scenario(std::uint64_t seed, std::size_t frames = 20, std::size_t ground_points = 94000);

/// Ground-truth log: one line per (frame, object):
/// `frame object_id cx cy cz count idx...`
void write_ground_truth(const std::filesystem::path& path, const std::vector<GroundTruth>& truth);
std::vector<GroundTruth> read_ground_truth(const std::filesystem::path& path);

/// Writes a KITTI-style drive directory (velodyne bins, OXTS, timestamps, ground truth).
void materialize_synthetic(const SyntheticScenario& scenario, const std::filesystem::path& out);

}  // namespace lidartrack

#endif  // LIDARTRACK_INGEST_HPP
