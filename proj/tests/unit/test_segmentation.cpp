#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lidartrack/errors.hpp"
#include "lidartrack/segmentation.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace lidartrack;

namespace {

std::vector<Eigen::Vector3d> positions(const PointCloud& c) {
  std::vector<Eigen::Vector3d> out;
  for (const auto& p : c.points) out.push_back(p.position());
  return out;
}

PointCloud blob(std::mt19937_64& rng, const Eigen::Vector3d& c, std::size_t n, double spread) {
  std::normal_distribution<double> g(0.0, spread);
  PointCloud out;
  for (std::size_t i = 0; i < n; ++i) out.points.push_back({c.x() + g(rng), c.y() + g(rng), c.z() + g(rng), 0});
  return out;
}

// Clumpy clouds exercise core, border and noise points together.
PointCloud clumpy_cloud(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> clumps(1, 6);
  const int k = clumps(rng);
  std::vector<Eigen::Vector3d> centres;
  for (int i = 0; i < k; ++i) centres.push_back(test::random_vec(rng, -5, 5));
  std::uniform_int_distribution<int> pick(0, k);
  std::normal_distribution<double> g(0.0, 0.4);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const int w = pick(rng);
    const Eigen::Vector3d p = w == k ? test::random_vec(rng, -6, 6)
                                     : Eigen::Vector3d(centres[w] + Eigen::Vector3d(g(rng), g(rng), g(rng)));
    c.points.push_back({p.x(), p.y(), p.z(), 0});
  }
  return c;
}

}  // namespace

TEST(KdTree, EmptyAndSingle) {
  const KdTree3 empty = build_kdtree(PointCloud{});
  EXPECT_TRUE(empty.empty());
  EXPECT_TRUE(empty.radius_search({0, 0, 0}, 10.0).empty());
  EXPECT_TRUE(empty.knn({0, 0, 0}, 3).empty());

  PointCloud one;
  one.points = {{1, 2, 3, 0}};
  const KdTree3 t = build_kdtree(one);
  EXPECT_EQ(t.radius_search({1, 2, 3}, 0.1), std::vector<std::size_t>{0});
}

TEST(KdTree, RadiusMatchesLinearScan) {
  std::mt19937_64 rng(42);
  const auto c = test::random_cloud(rng, 1000, -10, 10);
  const auto pts = positions(c);
  const KdTree3 t = build_kdtree(c);
  std::uniform_real_distribution<double> r(0.0, 4.0);
  for (int q = 0; q < 50; ++q) {
    const auto centre = test::random_vec(rng, -11, 11);
    const double rad = r(rng);
    EXPECT_EQ(t.radius_search(centre, rad), oracle::linear_radius(pts, centre, rad));
  }
}

TEST(KdTree, RadiusIsInclusiveOnBoundary) {
  PointCloud c;
  c.points = {{0, 0, 0, 0}, {0.5, 0, 0, 0}, {0, 0.5000001, 0, 0}};
  const KdTree3 t = build_kdtree(c);
  EXPECT_EQ(t.radius_search({0, 0, 0}, 0.5), (std::vector<std::size_t>{0, 1}));
}

TEST(KdTree, KnnMatchesSortedScan) {
  std::mt19937_64 rng(7);
  const auto c = test::random_cloud(rng, 400, -3, 3);
  const auto pts = positions(c);
  const KdTree3 t = build_kdtree(c);
  for (std::size_t k : {1u, 5u, 10u, 399u, 400u, 1000u}) {
    const auto q = test::random_vec(rng, -3, 3);
    EXPECT_EQ(t.knn(q, k), oracle::linear_knn(pts, q, k)) << "k=" << k;
  }
}

TEST(KdTree, DuplicatePoints) {
  PointCloud c;
  for (int i = 0; i < 50; ++i) c.points.push_back({1, 1, 1, 0});
  const KdTree3 t = build_kdtree(c);
  EXPECT_EQ(t.radius_search({1, 1, 1}, 0.0).size(), 50u);
}

TEST(Dbscan, TwoBlobs) {
  std::mt19937_64 rng(3);
  auto c = blob(rng, {0, 0, 0}, 20, 0.1);
  const auto b = blob(rng, {5, 0, 0}, 20, 0.1);
  c.points.insert(c.points.end(), b.points.begin(), b.points.end());
  const auto r = dbscan(c, build_kdtree(c), {0.5, 5});
  EXPECT_EQ(r.clusters.size(), 2u);
  EXPECT_TRUE(r.noise.empty());
  EXPECT_TRUE(oracle::same_partition(r.labels, oracle::brute_dbscan(positions(c), 0.5, 5)));
}

TEST(Dbscan, IsolatedPointsAreNoise) {
  PointCloud c;
  c.points = {{0, 0, 0, 0}, {10, 0, 0, 0}, {0, 10, 0, 0}};
  const auto r = dbscan(c, build_kdtree(c), {0.5, 5});
  EXPECT_TRUE(r.clusters.empty());
  EXPECT_EQ(r.noise.size(), 3u);
}

TEST(Dbscan, WideEpsGivesOneCluster) {
  std::mt19937_64 rng(4);
  const auto c = blob(rng, {2, 2, 2}, 60, 0.3);
  const auto r = dbscan(c, build_kdtree(c), {20.0, 5});
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0].count(), 60u);
}

TEST(Dbscan, BorderGoesToFirstCluster) {
  // Two 3-point cores at x = 0 and x = 2 with a shared border point at x = 1.
  PointCloud c;
  c.points = {{0, 0, 0, 0}, {0, 0.1, 0, 0}, {0, -0.1, 0, 0}, {1, 0, 0, 0},
              {2, 0, 0, 0}, {2, 0.1, 0, 0}, {2, -0.1, 0, 0}};
  const auto r = dbscan(c, build_kdtree(c), {1.0, 4});
  ASSERT_EQ(r.clusters.size(), 2u);
  EXPECT_EQ(r.labels[3], r.labels[0]);
  EXPECT_NE(r.labels[4], r.labels[0]);
  EXPECT_EQ(r.labels, oracle::brute_dbscan(positions(c), 1.0, 4));
}

TEST(Dbscan, MatchesBruteForceOnRandomClouds) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> size(0, 500), mp(1, 12);
  std::uniform_real_distribution<double> eps(0.2, 1.2);
  for (int trial = 0; trial < 60; ++trial) {
    const auto c = clumpy_cloud(rng, size(rng));
    const DbscanConfig cfg{eps(rng), mp(rng)};
    const auto r = dbscan(c, build_kdtree(c), cfg);
    ASSERT_TRUE(oracle::same_partition(r.labels, oracle::brute_dbscan(positions(c), cfg.eps, cfg.min_pts)))
        << "trial " << trial;
  }
}

TEST(Dbscan, PartitionsNonNoisePoints) {
  std::mt19937_64 rng(12);
  const auto c = clumpy_cloud(rng, 300);
  const auto r = dbscan(c, build_kdtree(c), {0.6, 6});
  std::vector<int> seen(c.size(), 0);
  for (const auto& cl : r.clusters) {
    EXPECT_GE(cl.count(), 1u);
    for (auto i : cl.point_indices) ++seen[i];
  }
  for (auto i : r.noise) ++seen[i];
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(Dbscan, CoreLabelsIndependentOfInsertionOrder) {
  std::mt19937_64 rng(13);
  const auto c = clumpy_cloud(rng, 300);
  const DbscanConfig cfg{0.6, 6};
  const auto pts = positions(c);
  std::vector<std::size_t> perm(c.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  PointCloud shuffled;
  for (auto i : perm) shuffled.points.push_back(c[i]);

  const auto a = dbscan(c, build_kdtree(c), cfg);
  const auto b = dbscan(shuffled, build_kdtree(shuffled), cfg);
  std::vector<int> la, lb;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    if (oracle::linear_radius(pts, pts[perm[k]], cfg.eps).size() < cfg.min_pts) continue;
    la.push_back(a.labels[perm[k]]);
    lb.push_back(b.labels[k]);
  }
  EXPECT_TRUE(oracle::same_partition(la, lb));
}

TEST(Dbscan, InvalidConfigAndTreeMismatch) {
  PointCloud c;
  c.points = {{0, 0, 0, 0}};
  EXPECT_THROW(dbscan(c, build_kdtree(c), {0.0, 5}), ContractViolation);
  EXPECT_THROW(dbscan(c, build_kdtree(c), {0.5, 0}), ContractViolation);
  EXPECT_THROW(dbscan(c, KdTree3{}, {0.5, 1}), ContractViolation);
}

TEST(Summarize, Examples) {
  PointCloud c;
  c.points = {{0, 0, 0, 0}, {2, 0, 0, 0}};
  const auto one = summarize({1}, c);
  EXPECT_EQ(one.centroid, Eigen::Vector3d(2, 0, 0));
  EXPECT_EQ(one.box.extent(), Eigen::Vector3d::Zero());
  const auto two = summarize({0, 1}, c);
  EXPECT_EQ(two.centroid, Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(two.box.max, Eigen::Vector3d(2, 0, 0));
  EXPECT_THROW(summarize({}, c), ContractViolation);
}

TEST(Summarize, CentroidIsMean) {
  std::mt19937_64 rng(5);
  const auto c = test::random_cloud(rng, 100, -50, 50);
  std::vector<std::size_t> all(100);
  for (std::size_t i = 0; i < 100; ++i) all[i] = i;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d lo = c[0].position(), hi = lo;
  for (const auto& p : c.points) {
    mean += p.position();
    lo = lo.cwiseMin(p.position());
    hi = hi.cwiseMax(p.position());
  }
  mean /= 100.0;
  const auto s = summarize(all, c);
  EXPECT_LT((s.centroid - mean).norm(), 1e-12);
  EXPECT_EQ(s.box.min, lo);
  EXPECT_EQ(s.box.max, hi);
}
