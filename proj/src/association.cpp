#include "lidartrack/association.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace lidartrack {

void AssociationConfig::validate() const {
  if (!(chi2_gate > 0.0 && chi2_gate <= 2.0)) throw ContractViolation("AssociationConfig: chi2_gate must be in (0, 2]");
  if (mdt_tie_epsilon < 0.0) throw ContractViolation("AssociationConfig: mdt_tie_epsilon must be >= 0");
  if (min_frames_for_motion < 1) throw ContractViolation("AssociationConfig: min_frames_for_motion must be >= 1");
}

const char* to_string(Resolution r) {
  switch (r) {
    case Resolution::NoCandidate: return "none";
    case Resolution::SingleCandidate: return "single";
    case Resolution::HighestMdt: return "mdt";
    case Resolution::MotionLikelihood: return "motion";
    case Resolution::NearestCentroid: return "nearest";
  }
  return "none";
}

double mdt_score(std::span<const double> f1, std::span<const double> f2) {
  if (f1.size() != f2.size()) throw ContractViolation("mdt_score: CDF length mismatch");
  double dev = 0.0;
  for (std::size_t i = 0; i < f1.size(); ++i) dev = std::max(dev, std::abs(f1[i] - f2[i]));
  return std::clamp(1.0 - dev, 0.0, 1.0);
}

double mdt_score(const VfhDescriptor& a, const VfhDescriptor& b) {
  return mdt_score(std::span<const double>(a.cdf), std::span<const double>(b.cdf));
}

CandidateSet gate(int track_id, const VfhDescriptor& track_descriptor, std::span<const ClusterView> clusters,
                  const AssociationConfig& cfg) {
  CandidateSet set;
  set.track_id = track_id;
  for (const auto& c : clusters) {
    const double chi2 = chi_squared_distance(track_descriptor, *c.descriptor);
    if (chi2 <= cfg.chi2_gate) set.candidates.push_back({c.id, c.centroid, chi2, std::nullopt, std::nullopt});
  }
  std::sort(set.candidates.begin(), set.candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.cluster < b.cluster; });
  return set;
}

void score_candidates(CandidateSet& set, const VfhDescriptor& track_descriptor,
                      std::span<const ClusterView> clusters) {
  for (auto& cand : set.candidates) {
    const auto it = std::find_if(clusters.begin(), clusters.end(),
                                 [&](const ClusterView& c) { return c.id == cand.cluster; });
    if (it == clusters.end()) throw ContractViolation("score_candidates: unknown cluster id");
    cand.mdt = mdt_score(track_descriptor, *it->descriptor);
  }
}

Decision resolve(CandidateSet& set, const MotionPrediction& prediction, const AssociationConfig& cfg) {
  auto& cands = set.candidates;
  if (cands.empty()) return {std::nullopt, Resolution::NoCandidate};
  if (cands.size() == 1) return {cands.front().cluster, Resolution::SingleCandidate};
  for (const auto& c : cands) {
    if (!c.mdt) throw ContractViolation("resolve: candidates must be scored before resolution");
  }

  // Candidates are in ascending cluster id, so strict comparisons keep the
  // lowest id on exact ties.
  const Candidate* best = &cands.front();
  for (const auto& c : cands) {
    if (*c.mdt > *best->mdt) best = &c;
  }
  double runner_up = -std::numeric_limits<double>::infinity();
  for (const auto& c : cands) {
    if (&c != best) runner_up = std::max(runner_up, *c.mdt);
  }
  if (*best->mdt - runner_up >= cfg.mdt_tie_epsilon) return {best->cluster, Resolution::HighestMdt};

  std::vector<Candidate*> tied;
  for (auto& c : cands) {
    if (*best->mdt - *c.mdt < cfg.mdt_tie_epsilon) tied.push_back(&c);
  }

  if (prediction.age >= cfg.min_frames_for_motion) {
    try {
      const Candidate* pick = nullptr;
      for (auto* c : tied) {
        c->log_likelihood = gaussian_log_density(c->centroid, prediction.position, prediction.covariance);
        if (!pick || *c->log_likelihood > *pick->log_likelihood) pick = c;
      }
      return {pick->cluster, Resolution::MotionLikelihood};
    } catch (const NumericallyDegenerate&) {
      for (auto* c : tied) c->log_likelihood.reset();
    }
  }
  const Candidate* pick = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (auto* c : tied) {
    const double d = (c->centroid - prediction.position).squaredNorm();
    if (d < best_d) {
      best_d = d;
      pick = c;
    }
  }
  return {pick->cluster, Resolution::NearestCentroid};
}

AssociationResult associate_frame(std::span<const TrackView> tracks, std::span<const ClusterView> clusters,
                                  const AssociationConfig& cfg) {
  cfg.validate();
  std::vector<const TrackView*> order;
  order.reserve(tracks.size());
  for (const auto& t : tracks) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const TrackView* a, const TrackView* b) {
    if (a->confidence != b->confidence) return a->confidence > b->confidence;
    return a->id < b->id;
  });

  AssociationResult res;
  std::set<std::size_t> claimed;
  std::vector<ClusterView> open;
  open.reserve(clusters.size());
  for (const TrackView* t : order) {
    open.clear();
    for (const auto& c : clusters) {
      if (!claimed.count(c.id)) open.push_back(c);
    }
    AssociationTrace tr;
    tr.candidates = gate(t->id, *t->descriptor, open, cfg);
    if (tr.candidates.size() > 1) score_candidates(tr.candidates, *t->descriptor, open);
    tr.decision = resolve(tr.candidates, t->prediction, cfg);
    if (tr.decision.cluster) {
      claimed.insert(*tr.decision.cluster);
      res.matches[t->id] = *tr.decision.cluster;
    } else {
      res.unmatched_tracks.push_back(t->id);
    }
    res.trace.push_back(std::move(tr));
  }
  for (const auto& c : clusters) {
    if (!claimed.count(c.id)) res.unmatched_clusters.push_back(c.id);
  }
  std::sort(res.unmatched_tracks.begin(), res.unmatched_tracks.end());
  std::sort(res.unmatched_clusters.begin(), res.unmatched_clusters.end());
  return res;
}

std::string format_trace(std::size_t frame, const AssociationTrace& t) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu %d %zu", frame, t.candidates.track_id, t.candidates.size());
  out += buf;
  for (const auto& c : t.candidates.candidates) {
    std::snprintf(buf, sizeof(buf), " %zu:%.6f:%s:%s", c.cluster, c.chi2,
                  c.mdt ? std::to_string(*c.mdt).c_str() : "-",
                  c.log_likelihood ? std::to_string(*c.log_likelihood).c_str() : "-");
    out += buf;
  }
  if (t.decision.cluster) {
    std::snprintf(buf, sizeof(buf), " -> %zu %s", *t.decision.cluster, to_string(t.decision.rule));
  } else {
    std::snprintf(buf, sizeof(buf), " -> - %s", to_string(t.decision.rule));
  }
  out += buf;
  return out;
}

}  // namespace lidartrack
