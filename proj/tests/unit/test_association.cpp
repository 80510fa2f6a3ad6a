#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "lidartrack/association.hpp"
#include "lidartrack/errors.hpp"

using namespace lidartrack;

namespace {

VfhDescriptor from_pdf(const std::vector<double>& head) {
  VfhDescriptor d;
  std::vector<double> pdf(kVfhBins, 0.0);
  std::copy(head.begin(), head.end(), pdf.begin());
  const auto cdf = cdf_of(pdf);
  std::copy(pdf.begin(), pdf.end(), d.pdf.begin());
  std::copy(cdf.begin(), cdf.end(), d.cdf.begin());
  return d;
}

// Two-bin histogram (p, 1 - p) at chi-squared distance `target` from (1, 0).
VfhDescriptor at_chi2_from_delta(double target) {
  auto f = [](double p) { return (1 - p) * (1 - p) / (1 + p) + (1 - p); };
  double lo = 0.0, hi = 1.0;  // f decreasing from 2 to 0
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > target ? lo : hi) = mid;
  }
  const double p = 0.5 * (lo + hi);
  return from_pdf({p, 1 - p});
}

Candidate cand(std::size_t id, const Eigen::Vector3d& c, double mdt) {
  Candidate k;
  k.cluster = id;
  k.centroid = c;
  k.mdt = mdt;
  return k;
}

}  // namespace

TEST(Mdt, Examples) {
  const std::vector<double> f1{0.2, 0.4, 0.6, 0.8, 1.0}, f2{0.1, 0.3, 0.5, 0.9, 1.0};
  EXPECT_NEAR(mdt_score(f1, f2), 0.9, 1e-12);
  EXPECT_EQ(mdt_score(f1, f1), 1.0);

  std::vector<double> s10(308, 0.0), s20(308, 0.0);
  for (std::size_t i = 10; i < 308; ++i) s10[i] = 1.0;
  for (std::size_t i = 20; i < 308; ++i) s20[i] = 1.0;
  EXPECT_EQ(mdt_score(s10, s20), 0.0);
  EXPECT_THROW(mdt_score(f1, s10), ContractViolation);
}

TEST(Mdt, RangeSymmetryIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> a(12), b(12);
    for (auto& v : a) v = u(rng) < 0.4 ? 0.0 : u(rng);
    for (auto& v : b) v = u(rng) < 0.4 ? 0.0 : u(rng);
    a[0] += 1e-3;
    b[0] += 1e-3;
    double sa = 0, sb = 0;
    for (double v : a) sa += v;
    for (double v : b) sb += v;
    for (auto& v : a) v /= sa;
    for (auto& v : b) v /= sb;
    const auto fa = cdf_of(a), fb = cdf_of(b);
    const double s = mdt_score(fa, fb);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_EQ(s, mdt_score(fb, fa));
    EXPECT_EQ(mdt_score(fa, fa), 1.0);
    EXPECT_EQ(s == 1.0, fa == fb);
  }
}

TEST(Gate, ThresholdSelection) {
  const VfhDescriptor track = from_pdf({1.0});
  const auto c1 = at_chi2_from_delta(0.1), c2 = at_chi2_from_delta(0.4), c3 = at_chi2_from_delta(0.9);
  EXPECT_NEAR(chi_squared_distance(track, c1), 0.1, 1e-9);
  EXPECT_NEAR(chi_squared_distance(track, c3), 0.9, 1e-9);
  const std::vector<ClusterView> views{{0, &c1, {}}, {1, &c2, {}}, {2, &c3, {}}};
  const auto set = gate(7, track, views, {});
  EXPECT_EQ(set.track_id, 7);
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set.candidates[0].cluster, 0u);
  EXPECT_EQ(set.candidates[1].cluster, 1u);
}

TEST(Gate, IdenticalInDisjointOut) {
  const VfhDescriptor a = from_pdf({0.5, 0.5}), b = from_pdf({0, 0, 0.5, 0.5});
  const std::vector<ClusterView> views{{3, &b, {}}, {4, &a, {}}};
  const auto set = gate(1, a, views, {});
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set.candidates[0].cluster, 4u);
  EXPECT_EQ(set.candidates[0].chi2, 0.0);

  const std::vector<ClusterView> only_b{{3, &b, {}}};
  EXPECT_TRUE(gate(1, a, only_b, {}).empty());
}

TEST(Resolve, SingleCandidateAlwaysWins) {
  CandidateSet s;
  s.candidates.push_back(cand(5, {100, 0, 0}, 0.01));
  const auto d = resolve(s, {}, {});
  EXPECT_EQ(d.cluster, 5u);
  EXPECT_EQ(d.rule, Resolution::SingleCandidate);

  CandidateSet empty;
  const auto n = resolve(empty, {}, {});
  EXPECT_FALSE(n.cluster);
  EXPECT_EQ(n.rule, Resolution::NoCandidate);
}

TEST(Resolve, ClearMdtWinnerSkipsMotion) {
  CandidateSet s;
  s.candidates = {cand(0, {0, 0, 0}, 0.60), cand(1, {50, 0, 0}, 0.95)};
  MotionPrediction pred;
  pred.age = 10;
  const auto d = resolve(s, pred, {});
  EXPECT_EQ(d.cluster, 1u);
  EXPECT_EQ(d.rule, Resolution::HighestMdt);
  for (const auto& c : s.candidates) EXPECT_FALSE(c.log_likelihood);
}

TEST(Resolve, TieBrokenByLikelihood) {
  MotionPrediction pred;
  pred.position = {5, 5, 0};
  pred.age = 3;
  CandidateSet s;
  s.candidates = {cand(0, {7, 5, 0}, 0.90), cand(1, {5, 5, 0}, 0.895)};
  const auto d = resolve(s, pred, {});
  EXPECT_EQ(d.cluster, 1u);
  EXPECT_EQ(d.rule, Resolution::MotionLikelihood);
  ASSERT_TRUE(s.candidates[0].log_likelihood && s.candidates[1].log_likelihood);
  // Identity covariance: the log-densities differ by half the squared distance.
  EXPECT_NEAR(*s.candidates[1].log_likelihood - *s.candidates[0].log_likelihood, 2.0, 1e-12);
}

TEST(Resolve, LikelihoodUsesCovarianceShape) {
  MotionPrediction pred;
  pred.covariance = Eigen::Vector3d(100, 0.01, 1).asDiagonal();
  pred.age = 4;
  CandidateSet s;
  s.candidates = {cand(0, {1.5, 0, 0}, 0.70), cand(1, {0, 0.5, 0}, 0.70)};
  EXPECT_EQ(resolve(s, pred, {}).cluster, 0u);

  pred.age = 2;
  const auto young = resolve(s, pred, {});
  EXPECT_EQ(young.cluster, 1u);
  EXPECT_EQ(young.rule, Resolution::NearestCentroid);
}

TEST(Resolve, ExactTiesGoToLowestId) {
  CandidateSet s;
  s.candidates = {cand(2, {1, 0, 0}, 0.8), cand(4, {-1, 0, 0}, 0.8)};
  EXPECT_EQ(resolve(s, {}, {}).cluster, 2u);
}

TEST(Resolve, RequiresScores) {
  CandidateSet s;
  s.candidates = {cand(0, {}, 0.5), Candidate{}};
  s.candidates[1].cluster = 1;
  EXPECT_THROW(resolve(s, {}, {}), ContractViolation);
}

TEST(AssociateFrame, DisjointPairs) {
  const VfhDescriptor a = from_pdf({1.0}), b = from_pdf({0, 1.0});
  std::vector<TrackView> tracks{{1, 0.9, &a, {}}, {2, 0.8, &b, {}}};
  std::vector<ClusterView> clusters{{0, &b, {}}, {1, &a, {}}};
  const auto r = associate_frame(tracks, clusters, {});
  EXPECT_EQ(r.matches.at(1), 1u);
  EXPECT_EQ(r.matches.at(2), 0u);
  EXPECT_TRUE(r.unmatched_tracks.empty());
  EXPECT_TRUE(r.unmatched_clusters.empty());
}

TEST(AssociateFrame, NoClusters) {
  const VfhDescriptor a = from_pdf({1.0});
  std::vector<TrackView> tracks{{1, 0.9, &a, {}}, {2, 0.5, &a, {}}};
  const auto r = associate_frame(tracks, {}, {});
  EXPECT_TRUE(r.matches.empty());
  EXPECT_EQ(r.unmatched_tracks, (std::vector<int>{1, 2}));
}

TEST(AssociateFrame, HigherConfidenceClaimsFirst) {
  const VfhDescriptor a = from_pdf({1.0});
  std::vector<TrackView> tracks{{1, 0.3, &a, {}}, {2, 0.9, &a, {}}};
  std::vector<ClusterView> clusters{{0, &a, {}}};
  const auto r = associate_frame(tracks, clusters, {});
  EXPECT_EQ(r.matches.at(2), 0u);
  EXPECT_EQ(r.unmatched_tracks, std::vector<int>{1});
  ASSERT_EQ(r.trace.size(), 2u);
  EXPECT_EQ(r.trace[0].candidates.track_id, 2);
}

TEST(AssociateFrame, InjectiveOnRandomInputs) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> count(0, 8);
  auto random_desc = [&] {
    std::vector<double> pdf(6);
    double s = 0;
    for (auto& v : pdf) s += (v = u(rng) + 0.01);
    for (auto& v : pdf) v /= s;
    return from_pdf(pdf);
  };
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<VfhDescriptor> td(count(rng)), cd(count(rng));
    for (auto& d : td) d = random_desc();
    for (auto& d : cd) d = random_desc();
    std::vector<TrackView> tracks;
    for (std::size_t i = 0; i < td.size(); ++i) {
      TrackView t{static_cast<int>(i), std::round(u(rng) * 4) / 4, &td[i], {}};
      t.prediction.position = Eigen::Vector3d(u(rng), u(rng), 0) * 10;
      t.prediction.age = count(rng);
      tracks.push_back(t);
    }
    std::vector<ClusterView> clusters;
    for (std::size_t i = 0; i < cd.size(); ++i) {
      clusters.push_back({i * 3, &cd[i], Eigen::Vector3d(u(rng), u(rng), 0) * 10});
    }
    const auto r = associate_frame(tracks, clusters, {});
    std::set<std::size_t> used;
    for (const auto& [tid, cid] : r.matches) EXPECT_TRUE(used.insert(cid).second);
    EXPECT_EQ(r.matches.size() + r.unmatched_tracks.size(), tracks.size());
    EXPECT_EQ(r.matches.size() + r.unmatched_clusters.size(), clusters.size());
    for (auto c : r.unmatched_clusters) EXPECT_FALSE(used.count(c));

    const auto again = associate_frame(tracks, clusters, {});
    EXPECT_EQ(again.matches, r.matches);
  }
}

TEST(AssociateFrame, ExactDescriptorWithOthersGatedOut) {
  const VfhDescriptor a = from_pdf({0.3, 0.7}), far = from_pdf({0, 0, 0, 1});
  std::vector<TrackView> tracks{{9, 1.0, &a, {}}};
  std::vector<ClusterView> clusters{{0, &far, {}}, {1, &a, {}}, {2, &far, {}}};
  const auto r = associate_frame(tracks, clusters, {});
  EXPECT_EQ(r.matches.at(9), 1u);
  EXPECT_EQ(r.trace[0].decision.rule, Resolution::SingleCandidate);
  EXPECT_EQ(r.unmatched_clusters, (std::vector<std::size_t>{0, 2}));
}

TEST(AssociationConfig, Validation) {
  AssociationConfig c;
  c.chi2_gate = 0.0;
  EXPECT_THROW(c.validate(), ContractViolation);
  c.chi2_gate = 2.5;
  EXPECT_THROW(c.validate(), ContractViolation);
  c = {};
  c.mdt_tie_epsilon = -1;
  EXPECT_THROW(c.validate(), ContractViolation);
}

TEST(Trace, Format) {
  AssociationTrace t;
  t.candidates.track_id = 3;
  t.candidates.candidates.push_back(cand(1, {}, 0.5));
  t.decision = {1, Resolution::SingleCandidate};
  const auto line = format_trace(12, t);
  EXPECT_EQ(line.rfind("12 3 1 ", 0), 0u);
  EXPECT_NE(line.find("-> 1 single"), std::string::npos);
}
