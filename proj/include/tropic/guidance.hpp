#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <vector>

#include "tropic/errors.hpp"
#include "tropic/ingestion.hpp"
#include "tropic/pipeline.hpp"
#include "tropic/scoring.hpp"

namespace tropic {

// One job's view: shared edge-list artifacts plus the current annotations
// and the records they produce. Cheap to copy; each annotation yields a new
// value.
struct JobState {
  std::shared_ptr<const Artifacts> artifacts;
  ScoringConfig scoring;
  BaseKnowledge baseline;                       // as uploaded
  std::map<PublisherId, int> user_annotations;  // edits; override the baseline
  std::vector<PublisherRecord> records;

  BaseKnowledge knowledge() const {
    BaseKnowledge k = baseline;
    for (const auto& [id, score] : user_annotations) k.entries[id] = score;
    return k;
  }
};

inline void rescore(JobState& state) {
  const auto& a = *state.artifacts;
  state.records = score_all(a.discussion, a.necs, state.knowledge(), state.scoring, a.stats);
}

inline JobState make_job_state(std::shared_ptr<const Artifacts> artifacts, BaseKnowledge baseline,
                               const ScoringConfig& scoring = {}) {
  JobState state{std::move(artifacts), scoring, std::move(baseline), {}, {}};
  rescore(state);
  return state;
}

inline JobState run_pipeline(EdgeList edges, BaseKnowledge baseline, const PipelineConfig& config,
                             const PhaseCallback& on_phase = {}) {
  auto artifacts = build_artifacts(std::move(edges), config, on_phase);
  if (on_phase) on_phase(Phase::scoring);
  return make_job_state(std::move(artifacts), std::move(baseline), config.scoring);
}

inline std::map<PublisherId, PublisherStats> compute_stats(const JobState& state) {
  const auto& a = *state.artifacts;
  std::map<PublisherId, PublisherStats> out;
  for (std::uint32_t p = 0; p < a.discussion.n_publishers(); ++p) out.emplace(a.discussion.publishers()[p], a.stats[p]);
  return out;
}

struct ImpactRank {
  PublisherId publisher;
  std::size_t unlocked_voters = 0;  // unprofilable voters with a NEC share of this publisher
  std::size_t n_nec_urls = 0;
};

// Voters that currently have no profile.
inline std::vector<node_index> unprofilable_voters(const JobState& state) {
  const auto& a = *state.artifacts;
  const auto profiles = profile_voters(a.discussion, a.necs, state.knowledge());
  std::vector<node_index> out;
  for (node_index u : select_voters(a.discussion, a.necs))
    if (!profiles[u]) out.push_back(u);
  return out;
}

// Unannotated publishers by unlocked voters desc, NEC URLs desc, id asc.
inline std::vector<ImpactRank> rank_candidates(const JobState& state) {
  const auto& a = *state.artifacts;
  const auto knowledge = state.knowledge();
  std::vector<std::size_t> unlocked(a.discussion.n_publishers(), 0);
  std::vector<std::uint32_t> seen;
  for (node_index u : unprofilable_voters(state)) {
    seen.clear();
    for (const auto& s : a.discussion.shares(u))
      if (a.necs.in_nec(s.url)) seen.push_back(a.discussion.publisher_of(s.url));
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (auto p : seen) ++unlocked[p];
  }
  std::vector<ImpactRank> out;
  for (std::uint32_t p = 0; p < a.discussion.n_publishers(); ++p) {
    const auto& id = a.discussion.publishers()[p];
    if (knowledge.contains(id)) continue;
    out.push_back({id, unlocked[p], a.stats[p].n_nec_urls});
  }
  std::stable_sort(out.begin(), out.end(), [](const ImpactRank& l, const ImpactRank& r) {
    if (l.unlocked_voters != r.unlocked_voters) return l.unlocked_voters > r.unlocked_voters;
    if (l.n_nec_urls != r.n_nec_urls) return l.n_nec_urls > r.n_nec_urls;
    return l.publisher < r.publisher;
  });
  return out;
}

// Re-scores only; edge-list artifacts are shared untouched.
inline JobState apply_annotation(const JobState& state, const PublisherId& publisher, int score) {
  if (!state.artifacts->discussion.find(publisher)) throw unknown_publisher(publisher.str());
  if (score < 0 || score > 100)
    throw score_out_of_range("score " + std::to_string(score) + " outside [0, 100]");
  JobState next = state;
  next.user_annotations[publisher] = score;
  rescore(next);
  return next;
}

inline JobState remove_annotation(const JobState& state, const PublisherId& publisher) {
  if (!state.artifacts->discussion.find(publisher)) throw unknown_publisher(publisher.str());
  if (!state.user_annotations.count(publisher)) throw not_user_annotated(publisher.str());
  JobState next = state;
  next.user_annotations.erase(publisher);
  rescore(next);
  return next;
}

struct Summary {
  std::array<std::size_t, 10> score_histogram{};       // annotated scores, [0,10) .. [90,100]
  std::size_t annotated = 0;
  std::size_t predicted = 0;
  std::size_t unclassified = 0;
  std::array<std::size_t, 10> confidence_histogram{};  // predicted confidences, [0,0.1) .. [0.9,1]

  friend bool operator==(const Summary&, const Summary&) = default;
};

// Lower-inclusive buckets of equal width over [0, top]; the last one is closed.
inline std::size_t bucket_of(double value, double top) {
  const auto b = static_cast<long long>(value * 10.0 / top);
  return static_cast<std::size_t>(std::clamp(b, 0LL, 9LL));
}

inline Summary summarize(const std::vector<PublisherRecord>& records) {
  Summary s;
  for (const auto& r : records) {
    switch (r.state) {
      case RecordState::annotated:
        ++s.annotated;
        ++s.score_histogram[bucket_of(*r.score, 100.0)];
        break;
      case RecordState::predicted:
        ++s.predicted;
        ++s.confidence_histogram[bucket_of(r.confidence, 1.0)];
        break;
      case RecordState::unclassified:
        ++s.unclassified;
        break;
    }
  }
  return s;
}

inline Summary summary(const JobState& state) { return summarize(state.records); }

}  // namespace tropic
