#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tropic/bicm.hpp"
#include "tropic/bipartite.hpp"
#include "tropic/communities.hpp"
#include "tropic/errors.hpp"
#include "tropic/ingestion.hpp"
#include "tropic/scoring.hpp"
#include "tropic/validation.hpp"

namespace tropic {

struct PipelineConfig {
  SolverConfig solver;
  double alpha = 0.05;
  PValueMode pvalue_mode = PValueMode::automatic;
  double resolution = 1.0;
  std::uint64_t seed = 0;
  std::size_t min_size = 2;
  ScoringConfig scoring;

  void validate() const {
    solver.validate();
    if (!(alpha > 0.0 && alpha <= 1.0)) throw invalid_argument("alpha must lie in (0, 1]");
    if (!(resolution > 0.0)) throw invalid_argument("resolution must be positive");
    if (min_size < 2) throw invalid_argument("min_size must be at least 2");
    scoring.validate();
  }
};

enum class Phase { queued, parsing, fitting_model, validating, detecting_communities, scoring, done, failed };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::queued: return "Queued";
    case Phase::parsing: return "Parsing";
    case Phase::fitting_model: return "FittingModel";
    case Phase::validating: return "Validating";
    case Phase::detecting_communities: return "DetectingCommunities";
    case Phase::scoring: return "Scoring";
    case Phase::done: return "Done";
    default: return "Failed";
  }
}

// Everything derived from the edge list alone. Immutable once built and
// shared by every snapshot of a job.
struct Artifacts {
  EdgeList edges;
  BipartiteGraph graph;
  BicmModel model;
  ValidatedProjection projection;
  NecPartition necs;
  Discussion discussion;
  std::vector<PublisherStats> stats;
};

using PhaseCallback = std::function<void(Phase)>;

// Runs ingestion-to-NEC stages. `on_phase` is told before each stage starts.
inline std::shared_ptr<const Artifacts> build_artifacts(EdgeList edges, const PipelineConfig& config,
                                                        const PhaseCallback& on_phase = {}) {
  config.validate();
  auto notify = [&](Phase p) {
    if (on_phase) on_phase(p);
  };
  auto out = std::make_shared<Artifacts>();
  out->edges = std::move(edges);
  notify(Phase::parsing);
  out->graph = build_bipartite(out->edges);
  notify(Phase::fitting_model);
  out->model = fit_bicm(out->graph, config.solver);
  notify(Phase::validating);
  out->projection = validate_projection(out->graph, out->model, config.alpha, config.pvalue_mode);
  notify(Phase::detecting_communities);
  out->necs = extract_necs(detect_communities(out->projection, config.resolution, config.seed), config.min_size);
  out->discussion = Discussion(out->graph);
  out->stats = publisher_stats(out->discussion, out->necs);
  return out;
}

}  // namespace tropic
