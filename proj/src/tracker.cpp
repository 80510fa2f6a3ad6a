#include "lidartrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

namespace lidartrack {

namespace {

constexpr std::size_t kMaxHistory = 64;

void symmetrize(Matrix6d& p) { p = 0.5 * (p + p.transpose()).eval(); }

}  // namespace

void MotionConfig::validate() const {
  for (double v : {accel_noise, vertical_noise, heading_noise, measurement_sigma, initial_position_sigma,
                   initial_velocity_sigma, initial_heading_sigma}) {
    if (!(v > 0.0)) throw ContractViolation("MotionConfig: noise parameters must be > 0");
  }
}

void DecayConfig::validate() const {
  if (!(decay_lambda > 0.0 && decay_lambda < 1.0)) throw ContractViolation("DecayConfig: lambda must be in (0, 1)");
  if (!(discard_threshold > 0.0 && discard_threshold < initial_confidence && initial_confidence <= 1.0)) {
    throw ContractViolation("DecayConfig: require 0 < discard_threshold < initial_confidence <= 1");
  }
  if (match_gain < 0.0) throw ContractViolation("DecayConfig: match_gain must be >= 0");
}

Track init_track(const ObjectCluster& cluster, const VfhDescriptor& descriptor, double time, TrackIdSource& ids,
                 const MotionConfig& motion, const DecayConfig& decay) {
  Track t;
  t.id = ids.next();
  t.motion.mean << cluster.centroid.x(), cluster.centroid.y(), cluster.centroid.z(), 0.0, 0.0, 0.0;
  Vector6d var;
  const double sp = motion.initial_position_sigma, sv = motion.initial_velocity_sigma;
  var << sp * sp, sp * sp, sp * sp, sv * sv, sv * sv, motion.initial_heading_sigma * motion.initial_heading_sigma;
  t.motion.covariance = var.asDiagonal();
  t.descriptor = descriptor;
  t.box = cluster.box;
  t.confidence = decay.initial_confidence;
  t.age = 1;
  t.frames_since_match = 0;
  t.last_time = time;
  t.history.push_back({time, cluster.centroid});
  return t;
}

MotionState predict_motion(const MotionState& state, double dt, const MotionConfig& cfg) {
  if (!(dt > 0.0)) throw ContractViolation("predict_motion: dt must be > 0");
  Matrix6d f = Matrix6d::Identity();
  f(0, 3) = dt;
  f(1, 4) = dt;
  Matrix6d q = Matrix6d::Zero();
  const double qa = cfg.accel_noise;
  for (int axis = 0; axis < 2; ++axis) {
    q(axis, axis) = qa * dt * dt * dt / 3.0;
    q(axis, axis + 3) = q(axis + 3, axis) = qa * dt * dt / 2.0;
    q(axis + 3, axis + 3) = qa * dt;
  }
  q(2, 2) = cfg.vertical_noise * dt;
  q(5, 5) = cfg.heading_noise * dt;

  MotionState out = state;
  out.mean = f * state.mean;
  out.covariance = f * state.covariance * f.transpose() + q;
  symmetrize(out.covariance);
  return out;
}

MotionState update_motion(const Track& track, const Eigen::Vector3d& centroid, double dt, const MotionConfig& cfg) {
  MotionState out = predict_motion(track.motion, dt, cfg);

  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  h.leftCols<3>().setIdentity();
  const Eigen::Matrix3d r = Eigen::Matrix3d::Identity() * cfg.measurement_sigma * cfg.measurement_sigma;
  const Eigen::Matrix3d s = h * out.covariance * h.transpose() + r;
  Eigen::LLT<Eigen::Matrix3d> llt(s);
  if (!s.allFinite() || llt.info() != Eigen::Success) {
    throw NumericallyDegenerate("update_motion: innovation covariance is singular");
  }
  const Eigen::Vector3d y = centroid - h * out.mean;
  const Eigen::Matrix<double, 6, 3> k = llt.solve(h * out.covariance).transpose();
  out.mean += k * y;
  const Matrix6d ikh = Matrix6d::Identity() - k * h;
  out.covariance = ikh * out.covariance * ikh.transpose() + k * r * k.transpose();

  // Heading is derived from the filtered velocity; its covariance follows the
  // atan2 Jacobian plus the heading process noise as a floor.
  const double vx = out.mean(3), vy = out.mean(4);
  const double speed2 = vx * vx + vy * vy;
  if (std::sqrt(speed2) > cfg.min_heading_speed) {
    out.mean(5) = std::atan2(vy, vx);
    Matrix6d g = Matrix6d::Identity();
    g.row(5).setZero();
    g(5, 3) = -vy / speed2;
    g(5, 4) = vx / speed2;
    out.covariance = g * out.covariance * g.transpose();
    out.covariance(5, 5) += cfg.heading_noise * dt;
  }
  out.mean(5) = wrap_angle(out.mean(5));
  symmetrize(out.covariance);

  // Kinematic diagnostics over matched centroids.
  const double now = track.last_time + dt;
  out.speed = 0.0;
  out.accel_tangential = out.accel_normal = out.accel_total = 0.0;
  out.centroid_velocity.reset();
  if (!track.history.empty()) {
    const TimedCentroid& prev = track.history.back();
    const double span = now - prev.time;
    if (span > 0.0) {
      const Eigen::Vector2d v = (centroid - prev.centroid).head<2>() / span;
      out.centroid_velocity = v;
      out.speed = v.norm();
      if (track.motion.centroid_velocity) {
        const Eigen::Vector2d& v_prev = *track.motion.centroid_velocity;
        out.accel_total = (v - v_prev).norm() / span;
        out.accel_tangential = (v.norm() - v_prev.norm()) / span;
        const double an2 = out.accel_total * out.accel_total - out.accel_tangential * out.accel_tangential;
        out.accel_normal = std::sqrt(std::max(0.0, an2));
      }
    }
  }
  return out;
}

std::optional<double> motion_log_likelihood(const Track& track, const Eigen::Vector3d& candidate, double dt,
                                            const MotionConfig& cfg, int min_age) {
  if (track.age < min_age) return std::nullopt;
  const MotionState pred = predict_motion(track.motion, dt, cfg);
  return gaussian_log_density(candidate, pred.position(), pred.covariance.topLeftCorner<3, 3>());
}

Track apply_decay(const Track& track, bool matched, const DecayConfig& cfg) {
  Track t = track;
  if (matched) {
    t.confidence = std::min(1.0, t.confidence + cfg.match_gain);
    t.frames_since_match = 0;
  } else {
    t.confidence *= cfg.decay_lambda;
    ++t.frames_since_match;
  }
  t.confidence = std::clamp(t.confidence, 0.0, 1.0);
  return t;
}

PruneResult prune(std::vector<Track> tracks, const DecayConfig& cfg) {
  PruneResult out;
  for (auto& t : tracks) {
    (t.confidence < cfg.discard_threshold ? out.removed : out.kept).push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------

OccupancyMap::OccupancyMap(OccupancyConfig cfg) : cfg_(cfg) {
  if (!(cfg_.leaf > 0.0)) throw ContractViolation("OccupancyMap: leaf must be > 0");
  if (!(cfg_.clamp > 0.0)) throw ContractViolation("OccupancyMap: clamp must be > 0");
}

VoxelKey OccupancyMap::key_of(const Eigen::Vector3d& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cfg_.leaf)),
          static_cast<std::int64_t>(std::floor(p.y() / cfg_.leaf)),
          static_cast<std::int64_t>(std::floor(p.z() / cfg_.leaf))};
}

void OccupancyMap::add(const VoxelKey& key, double delta, std::size_t frame) {
  Cell& c = cells_[key];
  c.log_odds = std::clamp(c.log_odds + delta, -cfg_.clamp, cfg_.clamp);
  c.last_update = frame;
}

void OccupancyMap::hit(const VoxelKey& key, std::size_t frame) { add(key, cfg_.hit_log_odds, frame); }
void OccupancyMap::miss(const VoxelKey& key, std::size_t frame) { add(key, cfg_.miss_log_odds, frame); }

std::vector<VoxelKey> OccupancyMap::traverse(const Eigen::Vector3d& origin, const Eigen::Vector3d& end) const {
  std::vector<VoxelKey> out;
  VoxelKey cur = key_of(origin);
  const VoxelKey last = key_of(end);
  const Eigen::Vector3d dir = end - origin;
  const double len = dir.norm();
  if (len == 0.0) return out;
  std::array<int, 3> step{};
  Eigen::Vector3d t_max, t_delta;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] > 0) {
      step[a] = 1;
      t_max[a] = ((static_cast<double>(cur[a]) + 1.0) * cfg_.leaf - origin[a]) / dir[a];
      t_delta[a] = cfg_.leaf / dir[a];
    } else if (dir[a] < 0) {
      step[a] = -1;
      t_max[a] = (static_cast<double>(cur[a]) * cfg_.leaf - origin[a]) / dir[a];
      t_delta[a] = -cfg_.leaf / dir[a];
    } else {
      step[a] = 0;
      t_max[a] = t_delta[a] = std::numeric_limits<double>::infinity();
    }
  }
  const std::size_t max_steps = static_cast<std::size_t>(3.0 * len / cfg_.leaf) + 3;
  for (std::size_t i = 0; i < max_steps && cur != last; ++i) {
    out.push_back(cur);
    Eigen::Index a = 0;
    t_max.minCoeff(&a);
    if (t_max[a] > 1.0) break;
    cur[a] += step[a];
    t_max[a] += t_delta[a];
  }
  return out;
}

std::optional<OccupancyMap::Cell> OccupancyMap::cell(const VoxelKey& key) const {
  const auto it = cells_.find(key);
  if (it == cells_.end()) return std::nullopt;
  return it->second;
}

double OccupancyMap::log_odds(const Eigen::Vector3d& p) const {
  const auto c = cell(key_of(p));
  return c ? c->log_odds : 0.0;
}

std::size_t OccupancyMap::occupied_count(double threshold) const {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(),
                                                [&](const auto& kv) { return kv.second.log_odds > threshold; }));
}

void update_occupancy(OccupancyMap& map, const PointCloud& world_cloud,
                      const std::vector<const ObjectCluster*>& matched, std::size_t frame,
                      const Eigen::Vector3d& sensor_origin) {
  std::set<VoxelKey> hits;
  for (const ObjectCluster* c : matched) {
    for (std::size_t idx : c->point_indices) hits.insert(map.key_of(world_cloud.points.at(idx).position()));
  }
  if (map.config().free_space) {
    std::set<VoxelKey> free;
    for (const ObjectCluster* c : matched) {
      for (std::size_t idx : c->point_indices) {
        for (const auto& k : map.traverse(sensor_origin, world_cloud.points[idx].position())) {
          if (!hits.count(k)) free.insert(k);
        }
      }
    }
    for (const auto& k : free) map.miss(k, frame);
  }
  for (const auto& k : hits) map.hit(k, frame);
}

SuperFrame emit_superframe(const std::vector<Track>& tracks, const OccupancyMap& map, std::size_t frame,
                           double timestamp, const DecayConfig& cfg) {
  SuperFrame sf;
  sf.frame = frame;
  sf.timestamp = timestamp;
  sf.occupied_voxels = map.occupied_count();
  for (const auto& t : tracks) {
    if (t.confidence >= cfg.high_confidence) {
      sf.tracks.push_back({t.id, t.motion.position(), t.motion.velocity(), t.confidence, t.box});
    }
  }
  std::sort(sf.tracks.begin(), sf.tracks.end(),
            [](const SuperFrameEntry& a, const SuperFrameEntry& b) { return a.id < b.id; });
  return sf;
}

std::string superframe_to_json(const SuperFrame& sf) {
  using nlohmann::json;
  auto vec = [](const auto& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
  };
  json j;
  j["frame"] = sf.frame;
  j["timestamp"] = sf.timestamp;
  j["occupied_voxels"] = sf.occupied_voxels;
  j["tracks"] = json::array();
  for (const auto& e : sf.tracks) {
    j["tracks"].push_back({{"id", e.id},
                           {"centroid", vec(e.centroid)},
                           {"velocity", vec(e.velocity)},
                           {"confidence", e.confidence},
                           {"aabb", {{"min", vec(e.box.min)}, {"max", vec(e.box.max)}}}});
  }
  return j.dump(2);
}

SuperFrame superframe_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  SuperFrame sf;
  sf.frame = j.at("frame").get<std::size_t>();
  sf.timestamp = j.at("timestamp").get<double>();
  sf.occupied_voxels = j.at("occupied_voxels").get<std::size_t>();
  auto v3 = [](const nlohmann::json& a) { return Eigen::Vector3d(a.at(0), a.at(1), a.at(2)); };
  for (const auto& e : j.at("tracks")) {
    SuperFrameEntry s;
    s.id = e.at("id").get<int>();
    s.centroid = v3(e.at("centroid"));
    s.velocity = {e.at("velocity").at(0).get<double>(), e.at("velocity").at(1).get<double>()};
    s.confidence = e.at("confidence").get<double>();
    s.box.min = v3(e.at("aabb").at("min"));
    s.box.max = v3(e.at("aabb").at("max"));
    sf.tracks.push_back(s);
  }
  return sf;
}

// ---------------------------------------------------------------------------

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) {
  cfg_.motion.validate();
  cfg_.decay.validate();
  cfg_.association.validate();
}

TrackerStep Tracker::step(const std::vector<ObjectCluster>& clusters, const std::vector<VfhDescriptor>& descriptors,
                          double timestamp) {
  if (clusters.size() != descriptors.size()) throw ContractViolation("Tracker::step: clusters/descriptors size mismatch");
  if (last_time_ && !(timestamp > *last_time_)) {
    throw ContractViolation("Tracker::step: timestamps must be strictly increasing");
  }
  TrackerStep out;
  ++frames_;

  std::vector<ClusterView> cluster_views;
  cluster_views.reserve(clusters.size());
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    cluster_views.push_back({i, &descriptors[i], clusters[i].centroid});
  }

  if (!tracks_.empty()) {
    const double dt = timestamp - *last_time_;
    std::vector<MotionState> predicted;
    std::vector<TrackView> views;
    predicted.reserve(tracks_.size());
    views.reserve(tracks_.size());
    for (const auto& t : tracks_) {
      predicted.push_back(predict_motion(t.motion, dt, cfg_.motion));
      views.push_back({t.id, t.confidence, &t.descriptor,
                       {predicted.back().position(), predicted.back().covariance.topLeftCorner<3, 3>(), t.age}});
    }
    out.association = associate_frame(views, cluster_views, cfg_.association);

    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      Track& t = tracks_[i];
      const auto m = out.association.matches.find(t.id);
      if (m != out.association.matches.end()) {
        const ObjectCluster& c = clusters[m->second];
        t.motion = update_motion(t, c.centroid, dt, cfg_.motion);
        t.history.push_back({timestamp, c.centroid});
        if (t.history.size() > kMaxHistory) t.history.erase(t.history.begin());
        t.descriptor = descriptors[m->second];
        t.box = c.box;
        t = apply_decay(t, true, cfg_.decay);
        out.matched_clusters[t.id] = m->second;
      } else {
        t.motion = predicted[i];
        t = apply_decay(t, false, cfg_.decay);
      }
      ++t.age;
      t.last_time = timestamp;
    }
  } else {
    for (std::size_t i = 0; i < clusters.size(); ++i) out.association.unmatched_clusters.push_back(i);
  }

  for (std::size_t ci : out.association.unmatched_clusters) {
    tracks_.push_back(init_track(clusters[ci], descriptors[ci], timestamp, ids_, cfg_.motion, cfg_.decay));
    out.created.push_back(tracks_.back().id);
  }

  auto pruned = prune(std::move(tracks_), cfg_.decay);
  tracks_ = std::move(pruned.kept);
  out.removed = std::move(pruned.removed);
  last_time_ = timestamp;
  return out;
}

}  // namespace lidartrack
