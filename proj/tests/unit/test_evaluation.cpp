#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "lidartrack/errors.hpp"
#include "lidartrack/evaluation.hpp"
#include "test_support.hpp"

using namespace lidartrack;

namespace {

GroundTruthObject obj(int id, const Eigen::Vector3d& c) {
  GroundTruthObject o;
  o.object_id = id;
  o.centroid = c;
  return o;
}

TrackLogEntry row(std::size_t frame, int id, const Eigen::Vector3d& p) {
  TrackLogEntry e;
  e.frame = frame;
  e.track_id = id;
  e.position = p;
  e.confidence = 0.9;
  e.matched = true;
  return e;
}

// Two objects moving along parallel lines; `id_of(frame, object)` picks the track id.
template <class F>
std::pair<std::vector<TrackLogEntry>, std::vector<GroundTruth>> two_objects(std::size_t frames, F id_of) {
  std::vector<TrackLogEntry> tracks;
  std::vector<GroundTruth> truth;
  for (std::size_t f = 0; f < frames; ++f) {
    GroundTruth gt;
    gt.frame = f;
    for (int o = 0; o < 2; ++o) {
      const Eigen::Vector3d c(0.5 * static_cast<double>(f), 4.0 * o, 0.0);
      gt.objects.push_back(obj(o, c));
      tracks.push_back(row(f, id_of(f, o), c + Eigen::Vector3d(0.1, -0.1, 0.0)));
    }
    truth.push_back(gt);
  }
  return {tracks, truth};
}

}  // namespace

TEST(TrackLog, FormatParseRoundTrip) {
  TrackLogEntry e = row(3, 7, {1.25, -2.5, 0.125});
  e.velocity = {0.5, -0.25};
  e.heading = -0.4636476;
  e.matched = false;
  const std::string text = std::string(kTrackLogHeader) + "\n" + format_track_entry(e) + "\n";
  const auto back = parse_track_log(text);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].frame, 3u);
  EXPECT_EQ(back[0].track_id, 7);
  EXPECT_EQ(back[0].position, e.position);
  EXPECT_EQ(back[0].velocity, e.velocity);
  EXPECT_NEAR(back[0].heading, e.heading, 1e-6);
  EXPECT_FALSE(back[0].matched);
}

TEST(TrackLog, MalformedRowCarriesLine) {
  try {
    parse_track_log("# header\n1 2 3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(read_track_log("/nonexistent/tracks.log"), MalformedFile);
}

TEST(Summary, Quantiles) {
  const auto s = summarize({4, 1, 3, 2, 5});
  EXPECT_EQ(s.median, 3.0);
  EXPECT_EQ(s.q1, 2.0);
  EXPECT_EQ(s.q3, 4.0);
  EXPECT_EQ(s.iqr(), 2.0);
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 5.0);
  EXPECT_EQ(s.mean, 3.0);
  const auto even = summarize({1, 2, 3, 4});
  EXPECT_EQ(even.median, 2.5);
  EXPECT_EQ(even.q1, 1.75);
  EXPECT_THROW(summarize({}), ContractViolation);
}

TEST(Accuracy, PerfectTracking) {
  const auto [tracks, truth] = two_objects(10, [](std::size_t, int o) { return o + 1; });
  const auto r = score_accuracy(tracks, truth);
  EXPECT_EQ(r.frames.size(), 10u);
  for (const auto& f : r.frames) EXPECT_EQ(f.rate(), 1.0);
  EXPECT_EQ(r.per_frame.median, 1.0);
  EXPECT_EQ(r.pooled, 1.0);
  EXPECT_EQ(r.id_switches, 0u);
}

TEST(Accuracy, SingleSwitchHalvesOneFrame) {
  const auto [tracks, truth] = two_objects(10, [](std::size_t f, int o) { return o == 1 && f >= 5 ? 9 : o + 1; });
  const auto r = score_accuracy(tracks, truth);
  for (const auto& f : r.frames) EXPECT_EQ(f.rate(), f.frame == 5 ? 0.5 : 1.0);
  EXPECT_EQ(r.per_frame.median, 1.0);
  EXPECT_EQ(r.id_switches, 1u);
  EXPECT_DOUBLE_EQ(r.pooled, 19.0 / 20.0);
}

TEST(Accuracy, OutsideRadiusIsMiss) {
  auto [tracks, truth] = two_objects(4, [](std::size_t, int o) { return o + 1; });
  for (auto& t : tracks) {
    if (t.track_id == 2 && t.frame == 2) t.position.x() += 5.0;
  }
  const auto r = score_accuracy(tracks, truth);
  EXPECT_EQ(r.frames[2].correct, 1u);
  EXPECT_EQ(r.misses, 1u);
  // The object re-acquires its old id afterwards, which counts as correct.
  EXPECT_EQ(r.frames[3].correct, 2u);
}

TEST(Accuracy, InvariantToIdRelabeling) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> id(1, 4);
  auto [tracks, truth] = two_objects(30, [&](std::size_t, int o) { return o * 10 + id(rng); });
  const auto base = score_accuracy(tracks, truth);
  for (auto& t : tracks) t.track_id = 1000 - 7 * t.track_id;
  const auto relabeled = score_accuracy(tracks, truth);
  ASSERT_EQ(base.frames.size(), relabeled.frames.size());
  for (std::size_t i = 0; i < base.frames.size(); ++i) EXPECT_EQ(base.frames[i].correct, relabeled.frames[i].correct);
  EXPECT_EQ(base.pooled, relabeled.pooled);
}

TEST(Accuracy, RatesInUnitIntervalAndSummaryConsistent) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> id(1, 3);
  const auto [tracks, truth] = two_objects(50, [&](std::size_t, int) { return id(rng); });
  const auto r = score_accuracy(tracks, truth);
  std::vector<double> rates;
  for (const auto& f : r.frames) {
    EXPECT_GE(f.rate(), 0.0);
    EXPECT_LE(f.rate(), 1.0);
    rates.push_back(f.rate());
  }
  const auto s = summarize(rates);
  EXPECT_EQ(s.median, r.per_frame.median);
  EXPECT_LE(r.per_frame.min, r.per_frame.q1);
  EXPECT_LE(r.per_frame.q3, r.per_frame.max);
}

TEST(Accuracy, EmptyTruthRejected) {
  EXPECT_THROW(score_accuracy({}, {}), ContractViolation);
  GroundTruth empty_frame;
  EXPECT_THROW(score_accuracy({}, {empty_frame}), ContractViolation);
  EXPECT_THROW(score_accuracy({}, {}, 0.0), ContractViolation);
}

TEST(Accuracy, FormatHasSummaryLines) {
  const auto [tracks, truth] = two_objects(3, [](std::size_t, int o) { return o + 1; });
  const auto text = format_accuracy(score_accuracy(tracks, truth));
  EXPECT_NE(text.find("# summary median 1.0000"), std::string::npos);
  EXPECT_NE(text.find("# pooled 1.000000"), std::string::npos);
}

TEST(Timings, ArithmeticExample) {
  FrameTimings t;
  t.filtering_ms = 10;
  t.pose_ms = 2;
  t.transform_ms = 1;
  t.clustering_ms = 20;
  t.association_ms = 5;
  t.wall_ms = 40;
  const auto table = report_timings({t});
  EXPECT_DOUBLE_EQ(table.stage_total_ms, 38.0);
  EXPECT_NEAR(table.hz, 26.3, 0.05);
  const auto text = format_timing_table(table);
  EXPECT_NE(text.find("38.0000 (26.3 Hz)"), std::string::npos);
  EXPECT_NE(text.find("153.4615 (6.5 Hz)"), std::string::npos);
  EXPECT_THROW(report_timings({}), ContractViolation);
}

TEST(Timings, RowLabelsAndMeans) {
  FrameTimings a, b;
  a.filtering_ms = 1;
  b.filtering_ms = 3;
  a.wall_ms = b.wall_ms = 10;
  const auto table = report_timings({a, b});
  const std::vector<std::string> labels{"LiDAR Point Cloud Filtering", "Pose Estimation (EKF)",
                                        "Point Cloud Transformation", "Data Association (DBSCAN)",
                                        "Frame-to-frame mapping (MDT)"};
  ASSERT_EQ(table.stages.size(), labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) EXPECT_EQ(table.stages[i].label, labels[i]);
  EXPECT_EQ(table.stages[0].mean_ms, 2.0);
  EXPECT_EQ(table.wall_mean_ms, 10.0);
  EXPECT_EQ(table.frames, 2u);
}
