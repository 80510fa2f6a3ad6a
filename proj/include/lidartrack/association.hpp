#ifndef LIDARTRACK_ASSOCIATION_HPP
#define LIDARTRACK_ASSOCIATION_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lidartrack/descriptor.hpp"

namespace lidartrack {

struct AssociationConfig {
  double chi2_gate = 0.5;
  double mdt_tie_epsilon = 0.02;
  int min_frames_for_motion = 3;

  void validate() const;
};

/// Predicted track position for the current frame and its 3x3 covariance.
struct MotionPrediction {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
  int age = 0;  // frames since the track was initiated, inclusive
};

struct ClusterView {
  std::size_t id = 0;
  const VfhDescriptor* descriptor = nullptr;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
};

struct TrackView {
  int id = 0;
  double confidence = 0.0;
  const VfhDescriptor* descriptor = nullptr;
  MotionPrediction prediction;
};

struct Candidate {
  std::size_t cluster = 0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  double chi2 = 0.0;
  std::optional<double> mdt;
  std::optional<double> log_likelihood;
};

struct CandidateSet {
  int track_id = 0;
  std::vector<Candidate> candidates;  // ascending cluster id

  std::size_t size() const { return candidates.size(); }
  bool empty() const { return candidates.empty(); }
};

enum class Resolution {
  NoCandidate,
  SingleCandidate,
  HighestMdt,
  MotionLikelihood,
  NearestCentroid,
};

const char* to_string(Resolution r);

struct Decision {
  std::optional<std::size_t> cluster;
  Resolution rule = Resolution::NoCandidate;
};

/// 1 - max_i |F1(i) - F2(i)|. Throws ContractViolation on a length mismatch.
double mdt_score(std::span<const double> f1, std::span<const double> f2);
double mdt_score(const VfhDescriptor& a, const VfhDescriptor& b);

/// Clusters whose chi-squared distance to the track descriptor is <= chi2_gate.
CandidateSet gate(int track_id, const VfhDescriptor& track_descriptor, std::span<const ClusterView> clusters,
                  const AssociationConfig& cfg);

/// Fills the MDT score of every candidate against the track CDF.
void score_candidates(CandidateSet& set, const VfhDescriptor& track_descriptor,
                      std::span<const ClusterView> clusters);

/// Picks at most one candidate: a lone candidate wins outright, otherwise the
/// highest MDT. When the top two MDT scores differ by less than the tie
/// epsilon, the motion likelihood decides (given enough history) or else the
/// nearest predicted centroid. Remaining ties go to the lowest cluster id.
Decision resolve(CandidateSet& set, const MotionPrediction& prediction, const AssociationConfig& cfg);

struct AssociationTrace {
  CandidateSet candidates;
  Decision decision;
};

struct AssociationResult {
  std::map<int, std::size_t> matches;  // track id -> cluster id
  std::vector<int> unmatched_tracks;
  std::vector<std::size_t> unmatched_clusters;
  std::vector<AssociationTrace> trace;  // in resolution order
};

/// Greedy per-track resolution in descending confidence order (ties by id);
/// a claimed cluster is not offered to later tracks.
AssociationResult associate_frame(std::span<const TrackView> tracks, std::span<const ClusterView> clusters,
                                  const AssociationConfig& cfg);

/// One line per track: `frame track candidates... chosen rule`.
std::string format_trace(std::size_t frame, const AssociationTrace& t);

}  // namespace lidartrack

#endif  // LIDARTRACK_ASSOCIATION_HPP
