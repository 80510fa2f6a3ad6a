#include "lidartrack/segmentation.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <utility>

namespace lidartrack {

KdTree3::KdTree3(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  if (!points_.empty()) root_ = build(0, static_cast<std::uint32_t>(points_.size()), 0);
}

std::int32_t KdTree3::build(std::uint32_t begin, std::uint32_t end, int depth) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = points_[order_[begin]], hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  Eigen::Index axis = 0;
  (hi - lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  const int a = static_cast<int>(axis);
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t l, std::uint32_t r) {
                     const double pl = points_[l][a], pr = points_[r][a];
                     return pl < pr || (pl == pr && l < r);
                   });
  const double split = points_[order_[mid]][a];
  const std::int32_t left = build(begin, mid, depth + 1);
  const std::int32_t right = build(mid, end, depth + 1);
  Node& n = nodes_[static_cast<std::size_t>(id)];
  n.axis = static_cast<std::uint8_t>(a);
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

void KdTree3::radius_search(const Eigen::Vector3d& q, double radius, std::vector<std::size_t>& out) const {
  out.clear();
  if (root_ < 0 || radius < 0.0) return;
  const double r2 = radius * radius;
  std::int32_t stack[128];
  int top = 0;
  stack[top++] = root_;
  while (top > 0) {
    const Node& n = nodes_[static_cast<std::size_t>(stack[--top])];
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = order_[i];
        if ((points_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
      }
      continue;
    }
    const double diff = q[n.axis] - n.split;
    const std::int32_t near = diff < 0.0 ? n.left : n.right;
    const std::int32_t far = diff < 0.0 ? n.right : n.left;
    if (diff * diff <= r2) stack[top++] = far;
    stack[top++] = near;
  }
  std::sort(out.begin(), out.end());
}

std::vector<std::size_t> KdTree3::radius_search(const Eigen::Vector3d& q, double radius) const {
  std::vector<std::size_t> out;
  radius_search(q, radius, out);
  return out;
}

std::vector<std::size_t> KdTree3::knn(const Eigen::Vector3d& q, std::size_t k) const {
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry> heap;  // worst on top
  if (root_ < 0 || k == 0) return {};
  auto visit = [&](auto&& self, std::int32_t id) -> void {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const Entry e{(points_[order_[i]] - q).squaredNorm(), order_[i]};
        if (heap.size() < k) {
          heap.push(e);
        } else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    self(self, diff < 0.0 ? n.left : n.right);
    if (heap.size() < k || diff * diff <= heap.top().first) self(self, diff < 0.0 ? n.right : n.left);
  };
  visit(visit, root_);
  std::vector<std::size_t> out(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = heap.top().second;
    heap.pop();
  }
  return out;
}

KdTree3 build_kdtree(const PointCloud& cloud) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(cloud.size());
  for (const auto& p : cloud.points) pts.push_back(p.position());
  return KdTree3(std::move(pts));
}

void DbscanConfig::validate() const {
  if (!(eps > 0.0)) throw ContractViolation("DbscanConfig: eps must be > 0");
  if (min_pts < 1) throw ContractViolation("DbscanConfig: min_pts must be >= 1");
}

DbscanResult dbscan(const PointCloud& cloud, const KdTree3& tree, const DbscanConfig& cfg) {
  cfg.validate();
  if (tree.size() != cloud.size()) throw ContractViolation("dbscan: tree was not built over this cloud");
  constexpr int kUnvisited = -2;
  const std::size_t n = cloud.size();
  DbscanResult res;
  res.labels.assign(n, kUnvisited);

  std::vector<std::size_t> neighbours, frontier;
  int next_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (res.labels[i] != kUnvisited) continue;
    tree.radius_search(tree.point(i), cfg.eps, neighbours);
    if (neighbours.size() < cfg.min_pts) {
      res.labels[i] = kNoise;
      continue;
    }
    const int label = next_label++;
    res.labels[i] = label;
    frontier.assign(neighbours.begin(), neighbours.end());
    for (std::size_t f = 0; f < frontier.size(); ++f) {
      const std::size_t j = frontier[f];
      if (res.labels[j] == kNoise) {
        res.labels[j] = label;  // border point
        continue;
      }
      if (res.labels[j] != kUnvisited) continue;
      res.labels[j] = label;
      tree.radius_search(tree.point(j), cfg.eps, neighbours);
      if (neighbours.size() >= cfg.min_pts) {
        for (std::size_t m : neighbours) {
          if (res.labels[m] == kUnvisited || res.labels[m] == kNoise) frontier.push_back(m);
        }
      }
    }
  }

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(next_label));
  for (std::size_t i = 0; i < n; ++i) {
    if (res.labels[i] == kNoise) {
      res.noise.push_back(i);
    } else {
      members[static_cast<std::size_t>(res.labels[i])].push_back(i);
    }
  }
  res.clusters.reserve(members.size());
  for (const auto& m : members) res.clusters.push_back(summarize(m, cloud));
  return res;
}

ObjectCluster summarize(const std::vector<std::size_t>& indices, const PointCloud& cloud) {
  if (indices.empty()) throw ContractViolation("summarize: empty index set");
  ObjectCluster c;
  c.point_indices = indices;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  c.box.min = c.box.max = cloud.points.at(indices.front()).position();
  for (std::size_t idx : indices) {
    const Eigen::Vector3d p = cloud.points.at(idx).position();
    sum += p;
    c.box.min = c.box.min.cwiseMin(p);
    c.box.max = c.box.max.cwiseMax(p);
  }
  c.centroid = sum / static_cast<double>(indices.size());
  return c;
}

}  // namespace lidartrack
