// Independent reference implementations used by unit and acceptance tests.
#ifndef LIDARTRACK_TEST_ORACLES_HPP
#define LIDARTRACK_TEST_ORACLES_HPP

#include <algorithm>
#include <cstddef>
#include <deque>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline std::vector<std::size_t> linear_radius(const std::vector<Eigen::Vector3d>& pts, const Eigen::Vector3d& q,
                                              double r) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if ((pts[i] - q).norm() <= r) out.push_back(i);
  }
  return out;
}

inline std::vector<std::size_t> linear_knn(const std::vector<Eigen::Vector3d>& pts, const Eigen::Vector3d& q,
                                           std::size_t k) {
  std::vector<std::size_t> idx(pts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return (pts[a] - q).norm() < (pts[b] - q).norm(); });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

constexpr int kNoise = -1;

// Textbook O(n^2) DBSCAN: breadth-first expansion from each unvisited core
// point in index order; neighbourhoods inclusive and self-counting.
inline std::vector<int> brute_dbscan(const std::vector<Eigen::Vector3d>& pts, double eps, std::size_t min_pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> nb(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if ((pts[i] - pts[j]).norm() <= eps) nb[i].push_back(j);
    }
  }
  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = nb[i].size() >= min_pts;

  std::vector<int> label(n, kNoise);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kNoise || !core[i]) continue;
    const int c = next++;
    std::deque<std::size_t> q{i};
    label[i] = c;
    while (!q.empty()) {
      const std::size_t p = q.front();
      q.pop_front();
      if (!core[p]) continue;
      for (std::size_t m : nb[p]) {
        if (label[m] != kNoise) continue;
        label[m] = c;
        q.push_back(m);
      }
    }
  }
  return label;
}

// True when both labelings induce the same partition, noise matching noise.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == kNoise) != (b[i] == kNoise)) return false;
    if (a[i] == kNoise) continue;
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

// Direct transcription of the histogram distance for cross-checking.
inline double chi2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] + b[i];
    if (d > 0.0) s += (a[i] - b[i]) * (a[i] - b[i]) / d;
  }
  return s;
}

}  // namespace oracle

#endif  // LIDARTRACK_TEST_ORACLES_HPP
