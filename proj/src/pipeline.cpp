#include "lidartrack/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "lidartrack/descriptor.hpp"
#include "lidartrack/errors.hpp"
#include "lidartrack/key_value.hpp"

namespace lidartrack {

namespace fs = std::filesystem;

namespace {

// Applies `v(key, field)` to every numeric or boolean setting.
template <typename C, typename V>
void visit_fields(C& c, V&& v) {
  v("frames", c.max_frames);
  v("filter.max_range", c.filter.max_range);
  v("filter.min_range", c.filter.min_range);
  v("filter.voxel_leaf", c.filter.voxel_leaf);
  v("ransac.distance_threshold", c.ransac.distance_threshold);
  v("ransac.max_iterations", c.ransac.max_iterations);
  v("ransac.min_inlier_fraction", c.ransac.min_inlier_fraction);
  v("ransac.seed", c.ransac.rng_seed);
  v("dbscan.eps", c.dbscan.eps);
  v("dbscan.min_pts", c.dbscan.min_pts);
  v("descriptor.normal_k", c.normal_k);
  v("association.chi2_gate", c.tracker.association.chi2_gate);
  v("association.mdt_tie_epsilon", c.tracker.association.mdt_tie_epsilon);
  v("association.min_frames_for_motion", c.tracker.association.min_frames_for_motion);
  v("decay.lambda", c.tracker.decay.decay_lambda);
  v("decay.match_gain", c.tracker.decay.match_gain);
  v("decay.initial_confidence", c.tracker.decay.initial_confidence);
  v("decay.discard_threshold", c.tracker.decay.discard_threshold);
  v("decay.high_confidence", c.tracker.decay.high_confidence);
  v("motion.accel_noise", c.tracker.motion.accel_noise);
  v("motion.vertical_noise", c.tracker.motion.vertical_noise);
  v("motion.heading_noise", c.tracker.motion.heading_noise);
  v("motion.measurement_sigma", c.tracker.motion.measurement_sigma);
  v("motion.initial_position_sigma", c.tracker.motion.initial_position_sigma);
  v("motion.initial_velocity_sigma", c.tracker.motion.initial_velocity_sigma);
  v("motion.initial_heading_sigma", c.tracker.motion.initial_heading_sigma);
  v("motion.min_heading_speed", c.tracker.motion.min_heading_speed);
  v("ekf.accel_noise_density", c.ekf.accel_noise_density);
  v("ekf.gyro_noise_density", c.ekf.gyro_noise_density);
  v("ekf.gps_sigma", c.ekf.gps_sigma);
  v("ekf.velocity_sigma", c.ekf.velocity_sigma);
  v("ekf.initial_position_sigma", c.ekf.initial_position_sigma);
  v("ekf.initial_velocity_sigma", c.ekf.initial_velocity_sigma);
  v("ekf.initial_orientation_sigma", c.ekf.initial_orientation_sigma);
  v("occupancy.leaf", c.occupancy.leaf);
  v("occupancy.hit", c.occupancy.hit_log_odds);
  v("occupancy.miss", c.occupancy.miss_log_odds);
  v("occupancy.clamp", c.occupancy.clamp);
  v("occupancy.free_space", c.occupancy.free_space);
  v("superframe.period", c.superframe_period);
  v("eval.match_radius", c.match_radius);
  v("output.trace", c.write_trace);
  v("output.descriptors", c.write_descriptors);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw MalformedFile("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<Eigen::Vector3d> positions_of(const PointCloud& cloud, const std::vector<std::size_t>& idx) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(cloud.points[i].position());
  return out;
}

class Writer {
public:
  Writer(const fs::path& dir, const std::string& name, const char* header, bool enabled) {
    if (!enabled || dir.empty()) return;
    out_.open(dir / name);
    if (!out_) throw MalformedFile("cannot write " + (dir / name).string());
    if (header) out_ << header << '\n';
  }
  bool active() const { return out_.is_open(); }
  void line(const std::string& s) {
    if (active()) out_ << s << '\n';
  }

private:
  std::ofstream out_;
};

}  // namespace

void PipelineConfig::validate() const {
  const int sources = static_cast<int>(!kitti_root.empty()) + static_cast<int>(!scenario_file.empty()) +
                      static_cast<int>(scenario.has_value());
  if (sources != 1) throw ContractViolation("config: exactly one source is required");
  if (!kitti_root.empty() && !fs::is_directory(kitti_root)) {
    throw ContractViolation("config: KITTI path does not exist: " + kitti_root.string());
  }
  if (!scenario_file.empty() && !fs::is_regular_file(scenario_file)) {
    throw ContractViolation("config: scenario file does not exist: " + scenario_file.string());
  }
  if (scenario) scenario->validate();
  filter.validate();
  ransac.validate();
  dbscan.validate();
  tracker.motion.validate();
  tracker.decay.validate();
  tracker.association.validate();
  ekf.validate();
  if (normal_k < 3) throw ContractViolation("config: descriptor.normal_k must be >= 3");
  if (!(occupancy.leaf > 0.0) || !(occupancy.clamp > 0.0)) {
    throw ContractViolation("config: occupancy leaf and clamp must be > 0");
  }
  if (!(match_radius > 0.0)) throw ContractViolation("config: eval.match_radius must be > 0");
}

PipelineConfig parse_pipeline_config(const std::string& text, const fs::path& base_dir) {
  const auto kv = KeyValueFile::parse(text);
  PipelineConfig c;
  auto resolve = [&](const std::string& s) -> fs::path {
    if (s.empty()) return {};
    const fs::path p(s);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  c.kitti_root = resolve(kv.get_string("source.kitti", ""));
  c.scenario_file = resolve(kv.get_string("source.synthetic", ""));
  c.out_dir = resolve(kv.get_string("out", ""));
  const std::string mode = kv.get_string("pose.mode", "ekf");
  if (mode == "ekf") {
    c.pose_mode = PoseMode::Ekf;
  } else if (mode == "passthrough") {
    c.pose_mode = PoseMode::Passthrough;
  } else {
    throw ParseError("pose.mode must be 'ekf' or 'passthrough'", kv.line_of("pose.mode"));
  }
  if (kv.has("seed")) c.rng_seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));

  visit_fields(c, [&](const char* key, auto& field) {
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, bool>) {
      field = kv.get_bool(key, field);
    } else if constexpr (std::is_floating_point_v<T>) {
      field = kv.get_double(key, field);
    } else {
      const long long v = kv.get_int(key, static_cast<long long>(field));
      if (std::is_unsigned_v<T> && v < 0) throw ParseError(std::string(key) + ": must be >= 0", kv.line_of(key));
      field = static_cast<T>(v);
    }
  });
  if (const auto unused = kv.unused_keys(); !unused.empty()) {
    throw ParseError("config: unknown key '" + unused.front() + "'", kv.line_of(unused.front()));
  }
  return c;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  return parse_pipeline_config(read_file(path), path.parent_path());
}

std::string default_pipeline_config() {
  PipelineConfig c;
  std::ostringstream out;
  out << "# source.kitti = <drive directory>\n"
      << "# source.synthetic = <scenario file>\n"
      << "# out = <output directory>\n"
      << "# seed = <integer>\n"
      << "pose.mode = ekf\n";
  visit_fields(c, [&](const char* key, const auto& field) {
    using T = std::decay_t<decltype(field)>;
    out << key << " = ";
    if constexpr (std::is_same_v<T, bool>) {
      out << (field ? "true" : "false");
    } else {
      out << field;
    }
    out << '\n';
  });
  return out.str();
}

// ---------------------------------------------------------------------------

RunResult run_pipeline(const PipelineConfig& cfg, const FrameObserver& observer) {
  cfg.validate();

  std::unique_ptr<FrameSource> source;
  GpsFix origin;
  bool origin_set = false;
  if (!cfg.kitti_root.empty()) {
    source = std::make_unique<KittiSequence>(cfg.kitti_root);
  } else {
    SyntheticScenario sc = cfg.scenario ? *cfg.scenario : load_scenario(cfg.scenario_file);
    if (cfg.rng_seed) sc.rng_seed = *cfg.rng_seed;
    origin = sc.origin;
    origin_set = true;
    source = std::make_unique<SyntheticGenerator>(sc);
  }
  const RigidTransform sensor_to_body = source->sensor_to_body();

  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir / "superframes");
  Writer tracks_log(cfg.out_dir, "tracks.log", kTrackLogHeader, true);
  Writer poses_log(cfg.out_dir, "poses.log", "# frame timestamp x y z roll pitch yaw", true);
  Writer timings_log(cfg.out_dir, "timings.log",
                     "# frame points read filtering pose transform clustering association mapping stage_sum wall",
                     true);
  Writer pruned_log(cfg.out_dir, "pruned.log", "# frame track_id confidence age", true);
  Writer trace_log(cfg.out_dir, "associations.log", "# frame track candidates cluster:chi2:mdt:loglik -> choice rule",
                   cfg.write_trace);
  Writer desc_log(cfg.out_dir, "descriptors.log", "# frame cluster centroid_x centroid_y centroid_z pdf[308]",
                  cfg.write_descriptors);

  const std::uint64_t seed_base = splitmix64(cfg.ransac.rng_seed ^ splitmix64(cfg.rng_seed.value_or(0)));

  Tracker tracker(cfg.tracker);
  EgoPoseFilter ekf(cfg.ekf);
  OccupancyMap map(cfg.occupancy);
  RunResult result;
  std::optional<double> prev_time;

  for (std::size_t k = 0; cfg.max_frames == 0 || k < cfg.max_frames; ++k) {
    FrameTimings tm;
    tm.frame = k;
    const auto frame_start = Clock::now();
    std::optional<FrameRecord> rec;
    try {
      rec = source->next();
    } catch (const std::exception& e) {
      throw FrameAbort(k, e.what());
    }
    if (!rec) break;
    tm.read_ms = ms_since(frame_start);

    try {
      const SensorFrame& f = rec->frame;
      tm.points = f.cloud.size();

      // Pose.
      auto t0 = Clock::now();
      if (!origin_set) {
        origin = f.gps;
        origin_set = true;
      }
      const Eigen::Vector2d xy = gps_to_local(f.gps, origin);
      const Eigen::Vector3d gps_local(xy.x(), xy.y(), f.gps.alt - origin.alt);
      Pose6D pose;
      if (cfg.pose_mode == PoseMode::Passthrough) {
        pose.position = gps_local;
        pose.orientation = quaternion_from_rpy(f.attitude.x(), f.attitude.y(), f.attitude.z());
      } else {
        if (!ekf.initialized()) {
          ekf.initialize(gps_local, f.velocity, f.attitude);
        } else {
          ekf.predict(f.imu, f.timestamp - *prev_time);
          ekf.correct_gps(gps_local);
          ekf.correct_velocity(f.velocity);
        }
        pose = ekf.pose();
      }
      tm.pose_ms = ms_since(t0);

      // Filtering and ground removal, sensor frame.
      t0 = Clock::now();
      const PointCloud filtered = filter_cloud(f.cloud, cfg.filter);
      PointCloud nonground = filtered;
      if (filtered.size() >= 3) {
        RansacConfig rc = cfg.ransac;
        rc.rng_seed = splitmix64(seed_base + k);
        nonground = remove_ground(filtered, rc).nonground;
      }
      tm.filtering_ms = ms_since(t0);

      t0 = Clock::now();
      const PointCloud world = to_world(nonground, pose, sensor_to_body);
      const Eigen::Vector3d sensor_origin = pose_to_transform(pose).apply(sensor_to_body.translation());
      tm.transform_ms = ms_since(t0);

      t0 = Clock::now();
      std::vector<ObjectCluster> clusters;
      if (!world.empty()) {
        const KdTree3 tree = build_kdtree(world);
        for (auto& c : dbscan(world, tree, cfg.dbscan).clusters) {
          if (c.count() >= 3) clusters.push_back(std::move(c));
        }
      }
      tm.clustering_ms = ms_since(t0);

      t0 = Clock::now();
      std::vector<VfhDescriptor> descriptors;
      descriptors.reserve(clusters.size());
      for (const auto& c : clusters) {
        const auto pts = positions_of(world, c.point_indices);
        const auto normals = estimate_normals(pts, cfg.normal_k, sensor_origin);
        descriptors.push_back(compute_vfh(pts, normals, sensor_origin));
      }
      const TrackerStep step = tracker.step(clusters, descriptors, f.timestamp);
      tm.association_ms = ms_since(t0);

      t0 = Clock::now();
      std::vector<const ObjectCluster*> matched;
      for (const auto& [id, ci] : step.matched_clusters) matched.push_back(&clusters[ci]);
      update_occupancy(map, world, matched, k, sensor_origin);
      if (superframe_due(tracker.frames(), cfg.superframe_period)) {
        SuperFrame sf = emit_superframe(tracker.tracks(), map, tracker.frames(), f.timestamp, cfg.tracker.decay);
        if (!cfg.out_dir.empty()) {
          char name[64];
          std::snprintf(name, sizeof(name), "superframe_%06zu.json", sf.frame);
          std::ofstream(cfg.out_dir / "superframes" / name) << superframe_to_json(sf) << '\n';
        }
        result.superframes.push_back(std::move(sf));
      }
      tm.mapping_ms = ms_since(t0);

      // Records.
      for (const auto& t : tracker.tracks()) {
        TrackLogEntry e;
        e.frame = k;
        e.track_id = t.id;
        e.position = t.motion.position();
        e.velocity = t.motion.velocity();
        e.heading = t.motion.heading();
        e.confidence = t.confidence;
        e.matched = step.matched_clusters.count(t.id) != 0 || t.age == 1;
        tracks_log.line(format_track_entry(e));
        result.tracks.push_back(e);
      }
      for (const auto& t : step.removed) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%zu %d %.6f %d", k, t.id, t.confidence, t.age);
        pruned_log.line(buf);
      }
      for (const auto& tr : step.association.trace) {
        ++result.resolutions[static_cast<std::size_t>(tr.decision.rule)];
        trace_log.line(format_trace(k, tr));
      }
      if (desc_log.active()) {
        for (std::size_t i = 0; i < clusters.size(); ++i) {
          std::ostringstream row;
          row.precision(9);
          row << k << ' ' << i << ' ' << clusters[i].centroid.x() << ' ' << clusters[i].centroid.y() << ' '
              << clusters[i].centroid.z();
          for (double v : descriptors[i].pdf) row << ' ' << v;
          desc_log.line(row.str());
        }
      }
      {
        const Eigen::Matrix3d r = pose.orientation.toRotationMatrix();
        const Eigen::Vector3d rpy(std::atan2(r(2, 1), r(2, 2)), std::asin(std::clamp(-r(2, 0), -1.0, 1.0)),
                                  std::atan2(r(1, 0), r(0, 0)));
        char buf[192];
        std::snprintf(buf, sizeof(buf), "%zu %.6f %.6f %.6f %.6f %.6f %.6f %.6f", k, f.timestamp, pose.position.x(),
                      pose.position.y(), pose.position.z(), rpy.x(), rpy.y(), rpy.z());
        poses_log.line(buf);
      }
      if (rec->truth) result.truth.push_back(*rec->truth);

      if (observer) {
        observer({k, &*rec, &pose, &world, &clusters, &descriptors, &step, &tracker.tracks()});
      }
      prev_time = f.timestamp;
    } catch (const FrameAbort&) {
      throw;
    } catch (const std::exception& e) {
      throw FrameAbort(k, e.what());
    }
    tm.wall_ms = ms_since(frame_start);
    timings_log.line(format_timing_record(tm));
    result.timings.push_back(tm);
    ++result.frames;
  }

  if (!result.truth.empty()) {
    bool any_visible = false;
    for (const auto& g : result.truth) any_visible = any_visible || !g.objects.empty();
    if (any_visible) {
      result.accuracy = score_accuracy(result.tracks, result.truth, cfg.match_radius);
      if (!cfg.out_dir.empty()) std::ofstream(cfg.out_dir / "accuracy.log") << format_accuracy(*result.accuracy);
    }
  }
  if (!cfg.out_dir.empty() && !result.timings.empty()) {
    std::ofstream(cfg.out_dir / "timings.txt") << format_timing_table(report_timings(result.timings));
  }
  return result;
}

}  // namespace lidartrack
