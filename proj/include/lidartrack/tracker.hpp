#ifndef LIDARTRACK_TRACKER_HPP
#define LIDARTRACK_TRACKER_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "lidartrack/association.hpp"
#include "lidartrack/core.hpp"
#include "lidartrack/descriptor.hpp"
#include "lidartrack/segmentation.hpp"

namespace lidartrack {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Object state [X, Y, Z, Vx, Vy, heading] plus kinematic diagnostics derived
/// from successive matched centroids.
struct MotionState {
  Vector6d mean = Vector6d::Zero();
  Matrix6d covariance = Matrix6d::Identity();

  double speed = 0.0;         // |V|, finite difference of matched centroids
  double accel_tangential = 0.0;
  double accel_normal = 0.0;
  double accel_total = 0.0;
  std::optional<Eigen::Vector2d> centroid_velocity;  // (X_n - X_{n-1}) / dT over matched centroids

  Eigen::Vector3d position() const { return mean.head<3>(); }
  Eigen::Vector2d velocity() const { return mean.segment<2>(3); }
  double heading() const { return mean(5); }
};

struct MotionConfig {
  double accel_noise = 0.5;        // white-acceleration spectral density, m^2/s^3
  double vertical_noise = 0.05;    // m^2/s
  double heading_noise = 0.01;     // rad^2/s
  double measurement_sigma = 0.1;  // centroid noise, m
  double initial_position_sigma = 0.3;
  double initial_velocity_sigma = 5.0;
  double initial_heading_sigma = 3.14159;
  double min_heading_speed = 0.1;  // m/s

  void validate() const;
};

struct DecayConfig {
  double decay_lambda = 0.7;
  double match_gain = 0.15;
  double initial_confidence = 0.5;
  double discard_threshold = 0.2;
  double high_confidence = 0.8;

  void validate() const;
};

struct TimedCentroid {
  double time = 0.0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
};

struct Track {
  int id = 0;
  MotionState motion;
  VfhDescriptor descriptor;
  Aabb box;
  double confidence = 0.0;
  int age = 1;
  int frames_since_match = 0;
  double last_time = 0.0;
  std::vector<TimedCentroid> history;  // matched centroids, oldest first
};

class TrackIdSource {
public:
  int next() { return next_++; }
  int peek() const { return next_; }

private:
  int next_ = 1;
};

Track init_track(const ObjectCluster& cluster, const VfhDescriptor& descriptor, double time, TrackIdSource& ids,
                 const MotionConfig& motion, const DecayConfig& decay);

/// Constant-velocity propagation. Throws ContractViolation unless dt > 0.
MotionState predict_motion(const MotionState& state, double dt, const MotionConfig& cfg);
/// Predicts by dt, then applies the centroid as a position measurement, and
/// refreshes heading and the speed/acceleration diagnostics.
/// Throws NumericallyDegenerate on a singular innovation covariance.
MotionState update_motion(const Track& track, const Eigen::Vector3d& centroid, double dt, const MotionConfig& cfg);

/// Gaussian log-density of `candidate` under the predicted position.
/// nullopt while the track is younger than `min_age` frames.
std::optional<double> motion_log_likelihood(const Track& track, const Eigen::Vector3d& candidate, double dt,
                                            const MotionConfig& cfg, int min_age = 3);

Track apply_decay(const Track& track, bool matched, const DecayConfig& cfg);

struct PruneResult {
  std::vector<Track> kept;
  std::vector<Track> removed;
};
/// Drops tracks with confidence strictly below the discard threshold.
PruneResult prune(std::vector<Track> tracks, const DecayConfig& cfg);

// ---------------------------------------------------------------------------

struct OccupancyConfig {
  double leaf = 0.2;
  double hit_log_odds = 0.85;
  double miss_log_odds = -0.4;
  double clamp = 4.0;
  bool free_space = false;  // ray-carve free voxels between sensor and hits
};

using VoxelKey = std::array<std::int64_t, 3>;

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : k) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

/// Fixed-leaf hashed voxel grid of clamped log-odds.
class OccupancyMap {
public:
  struct Cell {
    double log_odds = 0.0;
    std::size_t last_update = 0;
  };

  explicit OccupancyMap(OccupancyConfig cfg = {});

  VoxelKey key_of(const Eigen::Vector3d& p) const;
  void hit(const VoxelKey& key, std::size_t frame);
  void miss(const VoxelKey& key, std::size_t frame);
  /// Voxels traversed from origin up to (excluding) the endpoint voxel.
  std::vector<VoxelKey> traverse(const Eigen::Vector3d& origin, const Eigen::Vector3d& end) const;

  std::optional<Cell> cell(const VoxelKey& key) const;
  double log_odds(const Eigen::Vector3d& p) const;
  std::size_t size() const { return cells_.size(); }
  std::size_t occupied_count(double threshold = 0.0) const;
  const OccupancyConfig& config() const { return cfg_; }

private:
  void add(const VoxelKey& key, double delta, std::size_t frame);

  OccupancyConfig cfg_;
  std::unordered_map<VoxelKey, Cell, VoxelKeyHash> cells_;
};

/// One hit per voxel touched by points of the matched clusters.
void update_occupancy(OccupancyMap& map, const PointCloud& world_cloud,
                      const std::vector<const ObjectCluster*>& matched, std::size_t frame,
                      const Eigen::Vector3d& sensor_origin);

struct SuperFrameEntry {
  int id = 0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double confidence = 0.0;
  Aabb box;
};

struct SuperFrame {
  std::size_t frame = 0;
  double timestamp = 0.0;
  std::size_t occupied_voxels = 0;
  std::vector<SuperFrameEntry> tracks;
};

/// True on frame counts 10, 20, 30, ... for period 10 (frame counts start at 1).
inline bool superframe_due(std::size_t frame_count, std::size_t period) {
  return period > 0 && frame_count > 0 && frame_count % period == 0;
}

/// Tracks with confidence >= high_confidence, in id order.
SuperFrame emit_superframe(const std::vector<Track>& tracks, const OccupancyMap& map, std::size_t frame,
                           double timestamp, const DecayConfig& cfg);

std::string superframe_to_json(const SuperFrame& sf);
SuperFrame superframe_from_json(const std::string& text);

// ---------------------------------------------------------------------------

struct TrackerConfig {
  MotionConfig motion;
  DecayConfig decay;
  AssociationConfig association;
};

struct TrackerStep {
  AssociationResult association;
  std::vector<int> created;
  std::vector<Track> removed;
  std::map<int, std::size_t> matched_clusters;  // track id -> cluster index
};

/// Track store: runs one association round per frame and maintains the
/// lifecycle (update, decay, initiation, pruning).
class Tracker {
public:
  explicit Tracker(TrackerConfig cfg = {});

  /// `clusters` and `descriptors` are parallel. Timestamps must increase.
  TrackerStep step(const std::vector<ObjectCluster>& clusters, const std::vector<VfhDescriptor>& descriptors,
                   double timestamp);

  const std::vector<Track>& tracks() const { return tracks_; }
  const TrackerConfig& config() const { return cfg_; }
  std::size_t frames() const { return frames_; }

private:
  TrackerConfig cfg_;
  TrackIdSource ids_;
  std::vector<Track> tracks_;
  std::optional<double> last_time_;
  std::size_t frames_ = 0;
};

}  // namespace lidartrack

#endif  // LIDARTRACK_TRACKER_HPP
