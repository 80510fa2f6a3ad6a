#include "lidartrack/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "lidartrack/errors.hpp"
#include "lidartrack/key_value.hpp"

namespace lidartrack {

std::string format_track_entry(const TrackLogEntry& e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu %d %.6f %.6f %.6f %.6f %.6f %.6f %.6f %d", e.frame, e.track_id,
                e.position.x(), e.position.y(), e.position.z(), e.velocity.x(), e.velocity.y(), e.heading,
                e.confidence, e.matched ? 1 : 0);
  return buf;
}

std::vector<TrackLogEntry> parse_track_log(const std::string& text) {
  std::vector<TrackLogEntry> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream row(t);
    TrackLogEntry e;
    int matched = 0;
    if (!(row >> e.frame >> e.track_id >> e.position.x() >> e.position.y() >> e.position.z() >> e.velocity.x() >>
          e.velocity.y() >> e.heading >> e.confidence >> matched)) {
      throw ParseError("track log: expected 10 fields", lineno);
    }
    e.matched = matched != 0;
    out.push_back(e);
  }
  return out;
}

std::vector<TrackLogEntry> read_track_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedFile("cannot open track log: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_track_log(ss.str());
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) throw ContractViolation("summarize: empty series");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  Summary s;
  s.count = values.size();
  s.min = values.front();
  s.max = values.back();
  s.median = quantile(0.5);
  s.q1 = quantile(0.25);
  s.q3 = quantile(0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

AccuracyReport score_accuracy(const std::vector<TrackLogEntry>& tracks, const std::vector<GroundTruth>& truth,
                              double match_radius) {
  if (!(match_radius > 0.0)) throw ContractViolation("score_accuracy: match_radius must be > 0");
  std::map<std::size_t, std::vector<const TrackLogEntry*>> by_frame;
  for (const auto& e : tracks) by_frame[e.frame].push_back(&e);

  AccuracyReport r;
  std::map<int, int> last_id;  // object id -> track id at its last pairing
  std::size_t total_visible = 0, total_correct = 0;
  const double r2 = match_radius * match_radius;

  for (const auto& gt : truth) {
    if (gt.objects.empty()) continue;
    static const std::vector<const TrackLogEntry*> kNone;
    const auto it = by_frame.find(gt.frame);
    const auto& cands = it == by_frame.end() ? kNone : it->second;

    struct Pair {
      double d2;
      std::size_t obj, trk;
    };
    std::vector<Pair> pairs;
    for (std::size_t o = 0; o < gt.objects.size(); ++o) {
      for (std::size_t t = 0; t < cands.size(); ++t) {
        const double d2 = (cands[t]->position - gt.objects[o].centroid).squaredNorm();
        if (d2 <= r2) pairs.push_back({d2, o, t});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      if (a.d2 != b.d2) return a.d2 < b.d2;
      if (a.obj != b.obj) return a.obj < b.obj;
      return a.trk < b.trk;
    });
    std::vector<int> assigned(gt.objects.size(), -1);
    std::vector<bool> taken(cands.size(), false);
    for (const auto& p : pairs) {
      if (assigned[p.obj] >= 0 || taken[p.trk]) continue;
      assigned[p.obj] = static_cast<int>(p.trk);
      taken[p.trk] = true;
    }

    FrameAccuracy fa;
    fa.frame = gt.frame;
    fa.visible = gt.objects.size();
    for (std::size_t o = 0; o < gt.objects.size(); ++o) {
      const int oid = gt.objects[o].object_id;
      if (assigned[o] < 0) {
        ++r.misses;
        continue;
      }
      const int tid = cands[static_cast<std::size_t>(assigned[o])]->track_id;
      const auto prev = last_id.find(oid);
      if (prev == last_id.end() || prev->second == tid) {
        ++fa.correct;
      } else {
        ++r.id_switches;
      }
      last_id[oid] = tid;
    }
    total_visible += fa.visible;
    total_correct += fa.correct;
    r.frames.push_back(fa);
  }
  if (r.frames.empty()) throw ContractViolation("score_accuracy: ground truth has no visible objects");

  std::vector<double> rates;
  rates.reserve(r.frames.size());
  for (const auto& f : r.frames) rates.push_back(f.rate());
  r.per_frame = summarize(rates);
  r.pooled = static_cast<double>(total_correct) / static_cast<double>(total_visible);
  return r;
}

std::string format_accuracy(const AccuracyReport& r) {
  std::ostringstream out;
  out << "# frame visible correct rate\n";
  char buf[160];
  for (const auto& f : r.frames) {
    std::snprintf(buf, sizeof(buf), "%zu %zu %zu %.6f\n", f.frame, f.visible, f.correct, f.rate());
    out << buf;
  }
  const auto& s = r.per_frame;
  std::snprintf(buf, sizeof(buf), "# summary median %.4f q1 %.4f q3 %.4f min %.4f max %.4f mean %.4f\n", s.median,
                s.q1, s.q3, s.min, s.max, s.mean);
  out << buf;
  std::snprintf(buf, sizeof(buf), "# pooled %.6f id_switches %zu misses %zu frames %zu\n", r.pooled, r.id_switches,
                r.misses, r.frames.size());
  out << buf;
  return out.str();
}

// ---------------------------------------------------------------------------

TimingTable report_timings(const std::vector<FrameTimings>& timings) {
  if (timings.empty()) throw ContractViolation("report_timings: no frames");
  const double n = static_cast<double>(timings.size());
  auto mean = [&](double FrameTimings::*field) {
    double s = 0.0;
    for (const auto& t : timings) s += t.*field;
    return s / n;
  };
  TimingTable table;
  table.frames = timings.size();
  table.stages = {
      {"LiDAR Point Cloud Filtering", mean(&FrameTimings::filtering_ms)},
      {"Pose Estimation (EKF)", mean(&FrameTimings::pose_ms)},
      {"Point Cloud Transformation", mean(&FrameTimings::transform_ms)},
      {"Data Association (DBSCAN)", mean(&FrameTimings::clustering_ms)},
      {"Frame-to-frame mapping (MDT)", mean(&FrameTimings::association_ms)},
  };
  for (const auto& row : table.stages) table.stage_total_ms += row.mean_ms;
  table.hz = table.stage_total_ms > 0.0 ? 1000.0 / table.stage_total_ms : 0.0;
  table.wall_mean_ms = mean(&FrameTimings::wall_ms);
  table.wall_hz = table.wall_mean_ms > 0.0 ? 1000.0 / table.wall_mean_ms : 0.0;
  return table;
}

std::string format_timing_table(const TimingTable& t) {
  std::ostringstream out;
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-32s %12s\n", "Stage", "Mean (ms)");
  out << buf;
  for (const auto& row : t.stages) {
    std::snprintf(buf, sizeof(buf), "%-32s %12.4f\n", row.label.c_str(), row.mean_ms);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-32s %12.4f (%.1f Hz)\n", "Methodology Total", t.stage_total_ms, t.hz);
  out << buf;
  std::snprintf(buf, sizeof(buf), "%-32s %12.4f (%.1f Hz)\n", "Wall Total (per frame)", t.wall_mean_ms, t.wall_hz);
  out << buf;
  std::snprintf(buf, sizeof(buf), "%-32s %12.4f (%.1f Hz)\n", "Reference Total", kReferenceTotalMs, kReferenceHz);
  out << buf;
  std::snprintf(buf, sizeof(buf), "frames %zu\n", t.frames);
  out << buf;
  return out.str();
}

std::string format_timing_record(const FrameTimings& t) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu %zu %.4f %.4f %.4f %.4f %.4f %.4f %.4f %.4f %.4f", t.frame, t.points,
                t.read_ms, t.filtering_ms, t.pose_ms, t.transform_ms, t.clustering_ms, t.association_ms,
                t.mapping_ms, t.stage_sum(), t.wall_ms);
  return buf;
}

}  // namespace lidartrack
