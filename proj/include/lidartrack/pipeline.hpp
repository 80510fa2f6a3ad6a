#ifndef LIDARTRACK_PIPELINE_HPP
#define LIDARTRACK_PIPELINE_HPP

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lidartrack/evaluation.hpp"
#include "lidartrack/ingest.hpp"
#include "lidartrack/pose_ekf.hpp"
#include "lidartrack/preprocess.hpp"
#include "lidartrack/segmentation.hpp"
#include "lidartrack/tracker.hpp"

namespace lidartrack {

enum class PoseMode { Ekf, Passthrough };

struct PipelineConfig {
  // Exactly one source.
  std::filesystem::path kitti_root;
  std::filesystem::path scenario_file;
  std::optional<SyntheticScenario> scenario;

  PoseMode pose_mode = PoseMode::Ekf;
  std::filesystem::path out_dir;  // empty: keep results in memory only
  std::optional<std::uint64_t> rng_seed;
  std::size_t max_frames = 0;  // 0: all frames

  FilterConfig filter;
  RansacConfig ransac;
  DbscanConfig dbscan;
  std::size_t normal_k = 10;
  TrackerConfig tracker;
  EkfConfig ekf;
  OccupancyConfig occupancy;
  std::size_t superframe_period = 10;
  double match_radius = 1.0;

  bool write_trace = false;
  bool write_descriptors = false;

  /// Throws ContractViolation on inconsistent settings or missing paths.
  void validate() const;
};

/// Key-value config; relative paths resolve against `base_dir`.
/// Unknown keys raise ParseError.
PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
/// Every recognised key with its default value.
std::string default_pipeline_config();

/// A frame could not be read or processed; carries the 0-based frame index.
class FrameAbort : public std::runtime_error {
public:
  FrameAbort(std::size_t frame, const std::string& what)
    : std::runtime_error("frame " + std::to_string(frame) + ": " + what), frame_(frame) {}
  std::size_t frame() const noexcept { return frame_; }

private:
  std::size_t frame_;
};

/// Per-frame state handed to an observer after the tracker ran.
struct FrameObservation {
  std::size_t frame = 0;
  const FrameRecord* record = nullptr;
  const Pose6D* pose = nullptr;
  const PointCloud* world_points = nullptr;  // clustered non-ground cloud, world frame
  const std::vector<ObjectCluster>* clusters = nullptr;
  const std::vector<VfhDescriptor>* descriptors = nullptr;
  const TrackerStep* step = nullptr;
  const std::vector<Track>* tracks = nullptr;
};

using FrameObserver = std::function<void(const FrameObservation&)>;

struct RunResult {
  std::vector<TrackLogEntry> tracks;
  std::vector<SuperFrame> superframes;
  std::vector<FrameTimings> timings;
  std::vector<GroundTruth> truth;
  std::optional<AccuracyReport> accuracy;
  std::array<std::size_t, 5> resolutions{};  // indexed by Resolution
  std::size_t frames = 0;
};

/// Runs the full per-frame loop and writes artifacts when out_dir is set:
/// tracks.log, poses.log, timings.log, timings.txt, accuracy.log (with truth),
/// pruned.log, superframes/, and optionally associations.log, descriptors.log.
RunResult run_pipeline(const PipelineConfig& cfg, const FrameObserver& observer = {});

}  // namespace lidartrack

#endif  // LIDARTRACK_PIPELINE_HPP
