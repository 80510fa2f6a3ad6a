#ifndef LIDARTRACK_EVALUATION_HPP
#define LIDARTRACK_EVALUATION_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lidartrack/ingest.hpp"

namespace lidartrack {

/// One row of tracks.log.
struct TrackLogEntry {
  std::size_t frame = 0;
  int track_id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double heading = 0.0;
  double confidence = 0.0;
  bool matched = false;
};

inline constexpr const char* kTrackLogHeader = "# frame track_id x y z vx vy theta confidence matched";

std::string format_track_entry(const TrackLogEntry& e);
/// Throws ParseError on malformed rows; '#' lines are skipped.
std::vector<TrackLogEntry> parse_track_log(const std::string& text);
std::vector<TrackLogEntry> read_track_log(const std::filesystem::path& path);

struct Summary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::size_t count = 0;

  double iqr() const { return q3 - q1; }
};

/// Linear-interpolated quantiles (type 7). Throws ContractViolation on empty input.
Summary summarize(std::vector<double> values);

struct FrameAccuracy {
  std::size_t frame = 0;
  std::size_t visible = 0;
  std::size_t correct = 0;
  double rate() const { return visible ? static_cast<double>(correct) / static_cast<double>(visible) : 0.0; }
};

struct AccuracyReport {
  std::vector<FrameAccuracy> frames;  // frames with at least one visible object
  Summary per_frame;
  double pooled = 0.0;  // sum(correct) / sum(visible)
  std::size_t id_switches = 0;
  std::size_t misses = 0;
};

/// Per frame, each visible object is paired with the nearest unclaimed track
/// within `match_radius` (globally closest pairs first). An object is correct
/// when paired and the track id equals its last paired id, or it has no prior
/// pairing. Throws ContractViolation when no frame has a visible object.
AccuracyReport score_accuracy(const std::vector<TrackLogEntry>& tracks, const std::vector<GroundTruth>& truth,
                              double match_radius = 1.0);

std::string format_accuracy(const AccuracyReport& r);

// ---------------------------------------------------------------------------

struct FrameTimings {
  std::size_t frame = 0;
  std::size_t points = 0;
  double read_ms = 0.0;
  double filtering_ms = 0.0;  // range/voxel filter and ground removal
  double pose_ms = 0.0;
  double transform_ms = 0.0;
  double clustering_ms = 0.0;   // kd-tree build and DBSCAN
  double association_ms = 0.0;  // normals, VFH, association and track update
  double mapping_ms = 0.0;      // occupancy and super frames
  double wall_ms = 0.0;         // whole frame, measured independently

  double stage_sum() const { return filtering_ms + pose_ms + transform_ms + clustering_ms + association_ms; }
};

struct TimingRow {
  std::string label;
  double mean_ms = 0.0;
};

struct TimingTable {
  std::vector<TimingRow> stages;
  double stage_total_ms = 0.0;
  double hz = 0.0;
  double wall_mean_ms = 0.0;
  double wall_hz = 0.0;
  std::size_t frames = 0;
};

inline constexpr double kReferenceTotalMs = 153.4615;
inline constexpr double kReferenceHz = 6.5;

/// Throws ContractViolation on an empty series.
TimingTable report_timings(const std::vector<FrameTimings>& timings);
std::string format_timing_table(const TimingTable& table);
std::string format_timing_record(const FrameTimings& t);

}  // namespace lidartrack

#endif  // LIDARTRACK_EVALUATION_HPP
