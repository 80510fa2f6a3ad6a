#include "lidartrack/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "lidartrack/segmentation.hpp"

namespace lidartrack {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t bin_of(double value, double lo, double hi, std::size_t bins) {
  const double t = (value - lo) / (hi - lo);
  const double b = std::floor(t * static_cast<double>(bins));
  if (!(b >= 0.0)) return 0;
  return std::min(static_cast<std::size_t>(b), bins - 1);
}

Eigen::Vector3d any_orthogonal(const Eigen::Vector3d& dir) {
  Eigen::Index axis = 0;
  dir.cwiseAbs().minCoeff(&axis);
  return dir.cross(Eigen::Vector3d::Unit(axis)).normalized();
}

struct PairFeatures {
  double theta, cos_alpha, cos_phi, distance;
};

// Darboux-frame features between the (centroid, mean normal) reference and a
// surface sample. Returns false when the frame is undefined.
bool pair_features(const Eigen::Vector3d& p1, const Eigen::Vector3d& n1, const Eigen::Vector3d& p2,
                   const Eigen::Vector3d& n2, PairFeatures& out) {
  Eigen::Vector3d dp = p2 - p1;
  const double dist = dp.norm();
  if (dist == 0.0) return false;
  Eigen::Vector3d src_n = n1, tgt_n = n2;
  const double angle1 = n1.dot(dp) / dist;
  const double angle2 = n2.dot(dp) / dist;
  double cos_phi = angle1;
  if (std::acos(std::min(1.0, std::abs(angle1))) > std::acos(std::min(1.0, std::abs(angle2)))) {
    src_n = n2;
    tgt_n = n1;
    dp = -dp;
    cos_phi = -angle2;
  }
  Eigen::Vector3d v = dp.cross(src_n);
  const double v_norm = v.norm();
  if (v_norm == 0.0) return false;
  v /= v_norm;
  const Eigen::Vector3d w = src_n.cross(v);
  out.cos_alpha = v.dot(tgt_n);
  out.cos_phi = cos_phi;
  out.theta = std::atan2(w.dot(tgt_n), src_n.dot(tgt_n));
  out.distance = dist;
  return true;
}

}  // namespace

NormalCloud estimate_normals(const std::vector<Eigen::Vector3d>& points, std::size_t k,
                             const Eigen::Vector3d& viewpoint) {
  NormalCloud out;
  out.normals.resize(points.size());
  out.degenerate.assign(points.size(), false);
  if (points.empty()) return out;
  k = std::max<std::size_t>(1, std::min(k, points.size()));

  const KdTree3 tree(points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto nbrs = tree.knn(points[i], k);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (auto j : nbrs) mean += points[j];
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (auto j : nbrs) {
      const Eigen::Vector3d d = points[j] - mean;
      cov += d * d.transpose();
    }
    const Eigen::Vector3d to_view = viewpoint - points[i];
    Eigen::Vector3d n;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    const Eigen::Vector3d ev = es.eigenvalues();
    if (!(ev(2) > 1e-18)) {
      n = to_view.norm() > 0.0 ? to_view.normalized() : Eigen::Vector3d::UnitZ();
      out.degenerate[i] = true;
    } else if (ev(1) <= 1e-12 * ev(2)) {
      const Eigen::Vector3d dir = es.eigenvectors().col(2);
      const Eigen::Vector3d perp = to_view - to_view.dot(dir) * dir;
      n = perp.norm() > 1e-12 ? perp.normalized() : any_orthogonal(dir);
      out.degenerate[i] = true;
    } else {
      n = es.eigenvectors().col(0).normalized();
    }
    if (n.dot(to_view) < 0.0) n = -n;
    out.normals[i] = n;
  }
  return out;
}

VfhDescriptor compute_vfh(const std::vector<Eigen::Vector3d>& points, const NormalCloud& normals,
                          const Eigen::Vector3d& viewpoint) {
  const std::size_t n = points.size();
  if (n < 3) throw DegenerateInput("compute_vfh: need at least 3 points");
  if (normals.normals.size() != n) throw ContractViolation("compute_vfh: normal count mismatch");

  // Canonical order so that the floating-point sums do not depend on input order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = points[a];
    const auto& pb = points[b];
    for (int i = 0; i < 3; ++i) {
      if (pa[i] != pb[i]) return pa[i] < pb[i];
    }
    const auto& na = normals.normals[a];
    const auto& nb = normals.normals[b];
    for (int i = 0; i < 3; ++i) {
      if (na[i] != nb[i]) return na[i] < nb[i];
    }
    return false;
  });

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_normal = Eigen::Vector3d::Zero();
  for (auto i : order) {
    centroid += points[i];
    mean_normal += normals.normals[i];
  }
  centroid /= static_cast<double>(n);
  mean_normal /= static_cast<double>(n);

  Eigen::Vector3d view_dir = viewpoint - centroid;
  view_dir = view_dir.norm() > 0.0 ? view_dir.normalized() : Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d ref_normal = mean_normal.norm() > 1e-9 ? mean_normal.normalized() : view_dir;

  double max_dist = 0.0;
  for (auto i : order) max_dist = std::max(max_dist, (points[i] - centroid).norm());

  std::array<double, kVfhBins> counts{};
  constexpr std::size_t a = kVfhAngularBins;
  for (auto i : order) {
    const Eigen::Vector3d& nrm = normals.normals[i];
    PairFeatures f{};
    if (pair_features(centroid, ref_normal, points[i], nrm, f)) {
      counts[bin_of(f.theta, -kPi, kPi, a)] += 1.0;
      counts[a + bin_of(f.cos_alpha, -1.0, 1.0, a)] += 1.0;
      counts[2 * a + bin_of(f.cos_phi, -1.0, 1.0, a)] += 1.0;
      counts[3 * a + (max_dist > 0.0 ? bin_of(f.distance, 0.0, max_dist, a) : 0)] += 1.0;
    }
    const double angle = std::acos(std::clamp(nrm.dot(view_dir), -1.0, 1.0));
    counts[4 * a + bin_of(angle, 0.0, kPi, kVfhViewpointBins)] += 1.0;
  }

  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  VfhDescriptor d;
  double run = 0.0;
  for (std::size_t b = 0; b < kVfhBins; ++b) {
    d.pdf[b] = counts[b] / total;
    run += d.pdf[b];
    d.cdf[b] = std::min(run, 1.0);  // rounding must not push the prefix past the pinned end
  }
  d.cdf[kVfhBins - 1] = 1.0;
  return d;
}

namespace {
template <typename A, typename B>
double chi2_impl(const A& h1, const B& h2, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = h1[i] + h2[i];
    if (s == 0.0) continue;
    const double d = h1[i] - h2[i];
    sum += d * d / s;
  }
  return sum;
}
}  // namespace

double chi_squared_distance(const VfhDescriptor& h1, const VfhDescriptor& h2) {
  return chi2_impl(h1.pdf, h2.pdf, kVfhBins);
}

double chi_squared_distance(const std::vector<double>& h1, const std::vector<double>& h2) {
  if (h1.size() != h2.size()) throw ContractViolation("chi_squared_distance: length mismatch");
  return chi2_impl(h1, h2, h1.size());
}

std::vector<double> cdf_of(const std::vector<double>& pdf) {
  if (pdf.empty()) throw ContractViolation("cdf_of: empty histogram");
  std::vector<double> cdf(pdf.size());
  double run = 0.0;
  for (std::size_t i = 0; i < pdf.size(); ++i) {
    if (pdf[i] < 0.0 || !std::isfinite(pdf[i])) throw ContractViolation("cdf_of: negative or non-finite bin");
    run += pdf[i];
    cdf[i] = std::min(run, 1.0);
  }
  if (std::abs(run - 1.0) > 1e-6) throw ContractViolation("cdf_of: histogram does not sum to 1");
  cdf.back() = 1.0;
  return cdf;
}

}  // namespace lidartrack
