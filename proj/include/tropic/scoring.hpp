#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tropic/bipartite.hpp"
#include "tropic/communities.hpp"
#include "tropic/errors.hpp"
#include "tropic/ingestion.hpp"

namespace tropic {

struct ScoringConfig {
  double label_threshold = 60.0;          // T iff score >= threshold
  std::uint32_t confidence_halfpoint = 5;  // voters at which the count factor is 1/2
  double dispersion_scale = 50.0;         // profile std-dev that drives confidence to 0

  void validate() const {
    if (!(label_threshold > 0.0 && label_threshold < 100.0))
      throw invalid_argument("label_threshold must lie in (0, 100)");
    if (confidence_halfpoint < 1) throw invalid_argument("confidence_halfpoint must be at least 1");
    if (!(dispersion_scale > 0.0)) throw invalid_argument("dispersion_scale must be positive");
  }
};

struct Share {
  node_index url = 0;
  std::uint32_t count = 0;
};

// Share structure of a discussion keyed by publisher. Publishers are sorted
// by id; users and URLs keep the graph's indices.
class Discussion {
public:
  Discussion() = default;

  explicit Discussion(const BipartiteGraph& graph) : user_labels_(graph.user_labels()) {
    std::map<PublisherId, std::vector<node_index>> by_publisher;
    std::vector<PublisherId> url_pub(graph.n_urls());
    for (node_index a = 0; a < graph.n_urls(); ++a) {
      url_pub[a] = extract_publisher(graph.url_labels()[a]);
      by_publisher[url_pub[a]].push_back(a);
    }
    url_publisher_.resize(graph.n_urls());
    for (auto& [id, urls] : by_publisher) {
      const auto p = static_cast<std::uint32_t>(publishers_.size());
      for (node_index a : urls) url_publisher_[a] = p;
      publishers_.push_back(id);
      publisher_urls_.push_back(std::move(urls));
    }
    shares_.resize(graph.n_users());
    publisher_users_.resize(publishers_.size());
    for (node_index i = 0; i < graph.n_users(); ++i) {
      const auto& adj = graph.adjacency()[i];
      const auto& mult = graph.multiplicities(i);
      for (std::size_t k = 0; k < adj.size(); ++k) {
        shares_[i].push_back({adj[k], mult[k]});
        auto& users = publisher_users_[url_publisher_[adj[k]]];
        if (users.empty() || users.back() != i) users.push_back(i);
      }
    }
  }

  std::size_t n_users() const noexcept { return shares_.size(); }
  std::size_t n_publishers() const noexcept { return publishers_.size(); }
  const std::vector<PublisherId>& publishers() const noexcept { return publishers_; }
  const std::string& user_label(node_index u) const { return user_labels_.at(u); }
  const std::vector<Share>& shares(node_index user) const { return shares_.at(user); }
  std::uint32_t publisher_of(node_index url) const { return url_publisher_.at(url); }
  const std::vector<node_index>& urls_of(std::uint32_t publisher) const { return publisher_urls_.at(publisher); }
  // Users with at least one share of the publisher's URLs, ascending.
  const std::vector<node_index>& users_of(std::uint32_t publisher) const { return publisher_users_.at(publisher); }

  std::optional<std::uint32_t> find(const PublisherId& id) const {
    auto it = std::lower_bound(publishers_.begin(), publishers_.end(), id);
    if (it == publishers_.end() || *it != id) return std::nullopt;
    return static_cast<std::uint32_t>(it - publishers_.begin());
  }

private:
  std::vector<std::string> user_labels_;
  std::vector<std::vector<Share>> shares_;
  std::vector<std::uint32_t> url_publisher_;
  std::vector<PublisherId> publishers_;
  std::vector<std::vector<node_index>> publisher_urls_;
  std::vector<std::vector<node_index>> publisher_users_;
};

struct VoterProfile {
  node_index user = 0;
  std::string user_id;
  double score = 0.0;    // in [0, 100]
  double support = 0.0;  // share-count mass over annotated publishers
};

// Profiles indexed by user; empty for non-voters and unprofilable voters.
using ProfileTable = std::vector<std::optional<VoterProfile>>;

struct Prediction {
  double score = 0.0;
  double confidence = 0.0;
  std::size_t n_voters = 0;
};

enum class RecordState { annotated, predicted, unclassified };
enum class Label { trustworthy, untrustworthy };

inline char state_code(RecordState s) {
  switch (s) {
    case RecordState::annotated: return 'A';
    case RecordState::predicted: return 'P';
    default: return 'U';
  }
}

inline char label_code(Label l) { return l == Label::trustworthy ? 'T' : 'N'; }

struct PublisherStats {
  std::size_t n_voters = 0;    // voters who shared any of the publisher's URLs
  std::size_t n_nec_urls = 0;  // publisher URLs inside a NEC
  std::size_t n_urls = 0;      // distinct URLs
  std::size_t n_shares = 0;    // total share multiplicity

  friend bool operator==(const PublisherStats&, const PublisherStats&) = default;
};

struct PublisherRecord {
  PublisherId publisher;
  RecordState state = RecordState::unclassified;
  std::optional<double> score;
  double confidence = 0.0;
  std::optional<Label> label;
  PublisherStats stats;

  friend bool operator==(const PublisherRecord&, const PublisherRecord&) = default;
};

inline bool is_voter(const Discussion& discussion, const NecPartition& necs, node_index user) {
  for (const auto& s : discussion.shares(user))
    if (necs.in_nec(s.url)) return true;
  return false;
}

// Users with at least one share of a NEC URL, ascending.
inline std::vector<node_index> select_voters(const Discussion& discussion, const NecPartition& necs) {
  std::vector<node_index> out;
  for (node_index u = 0; u < discussion.n_users(); ++u)
    if (is_voter(discussion, necs, u)) out.push_back(u);
  return out;
}

// Share-weighted mean of annotated publisher scores over the voter's NEC
// URLs; nothing when none of those URLs has an annotated publisher.
inline std::optional<VoterProfile> profile_voter(node_index user, const Discussion& discussion,
                                                 const NecPartition& necs, const BaseKnowledge& knowledge) {
  if (user >= discussion.n_users()) throw index_out_of_range(user, discussion.n_users());
  if (!is_voter(discussion, necs, user)) throw not_a_voter(discussion.user_label(user));
  double weighted = 0.0, weight = 0.0;
  int lo = 100, hi = 0;
  for (const auto& s : discussion.shares(user)) {
    if (!necs.in_nec(s.url)) continue;
    const auto score = knowledge.find(discussion.publishers()[discussion.publisher_of(s.url)]);
    if (!score) continue;
    weighted += static_cast<double>(s.count) * *score;
    weight += s.count;
    lo = std::min(lo, *score);
    hi = std::max(hi, *score);
  }
  if (weight == 0.0) return std::nullopt;
  const double score = std::clamp(weighted / weight, static_cast<double>(lo), static_cast<double>(hi));
  return VoterProfile{user, discussion.user_label(user), score, weight};
}

inline ProfileTable profile_voters(const Discussion& discussion, const NecPartition& necs,
                                   const BaseKnowledge& knowledge) {
  ProfileTable out(discussion.n_users());
  for (node_index u : select_voters(discussion, necs)) out[u] = profile_voter(u, discussion, necs, knowledge);
  return out;
}

// Confidence = n / (n + n0) * max(0, 1 - sd / dispersion_scale), sd the
// population standard deviation of the contributing profiles.
inline double prediction_confidence(std::size_t n, double sd, const ScoringConfig& config) {
  if (n == 0) return 0.0;
  const double nd = static_cast<double>(n);
  return nd / (nd + config.confidence_halfpoint) * std::max(0.0, 1.0 - sd / config.dispersion_scale);
}

// Mean profile of the profilable voters who shared any URL of the
// publisher; nothing (Unclassified) when there are none.
inline std::optional<Prediction> predict_publisher(const PublisherId& publisher, const Discussion& discussion,
                                                   const ProfileTable& profiles, const BaseKnowledge& knowledge,
                                                   const ScoringConfig& config = {}) {
  if (knowledge.contains(publisher)) throw already_annotated(publisher.str());
  const auto p = discussion.find(publisher);
  if (!p) throw unknown_publisher(publisher.str());
  double sum = 0.0, lo = 100.0, hi = 0.0;
  std::size_t n = 0;
  for (node_index u : discussion.users_of(*p)) {
    if (!profiles.at(u)) continue;
    sum += profiles[u]->score;
    lo = std::min(lo, profiles[u]->score);
    hi = std::max(hi, profiles[u]->score);
    ++n;
  }
  if (n == 0) return std::nullopt;
  // clamped so rounding never leaves the contributing range
  const double mean = std::clamp(sum / static_cast<double>(n), lo, hi);
  double var = 0.0;
  for (node_index u : discussion.users_of(*p)) {
    if (!profiles[u]) continue;
    const double d = profiles[u]->score - mean;
    var += d * d;
  }
  const double sd = std::sqrt(var / static_cast<double>(n));
  return Prediction{mean, prediction_confidence(n, sd, config), n};
}

inline Label assign_label(double score, const ScoringConfig& config = {}) {
  if (!(score >= 0.0 && score <= 100.0))
    throw score_out_of_range("score " + std::to_string(score) + " outside [0, 100]");
  return score >= config.label_threshold ? Label::trustworthy : Label::untrustworthy;
}

// IR statistics per publisher (same order as discussion.publishers()).
// Depends only on the discussion and the NEC partition.
inline std::vector<PublisherStats> publisher_stats(const Discussion& discussion, const NecPartition& necs) {
  std::vector<bool> voter(discussion.n_users(), false);
  for (node_index u : select_voters(discussion, necs)) voter[u] = true;
  std::vector<PublisherStats> out(discussion.n_publishers());
  for (std::uint32_t p = 0; p < discussion.n_publishers(); ++p) {
    auto& st = out[p];
    st.n_urls = discussion.urls_of(p).size();
    for (node_index a : discussion.urls_of(p))
      if (necs.in_nec(a)) ++st.n_nec_urls;
    for (node_index u : discussion.users_of(p)) {
      if (voter[u]) ++st.n_voters;
      for (const auto& s : discussion.shares(u))
        if (discussion.publisher_of(s.url) == p) st.n_shares += s.count;
    }
  }
  return out;
}

// One record per publisher of the discussion, ordered by publisher id.
inline std::vector<PublisherRecord> score_all(const Discussion& discussion, const NecPartition& necs,
                                              const BaseKnowledge& knowledge, const ScoringConfig& config,
                                              const std::vector<PublisherStats>& stats) {
  config.validate();
  const auto profiles = profile_voters(discussion, necs, knowledge);
  std::vector<PublisherRecord> out;
  out.reserve(discussion.n_publishers());
  for (std::uint32_t p = 0; p < discussion.n_publishers(); ++p) {
    PublisherRecord r;
    r.publisher = discussion.publishers()[p];
    r.stats = stats.at(p);
    if (auto annotated = knowledge.find(r.publisher)) {
      r.state = RecordState::annotated;
      r.score = *annotated;
      r.confidence = 1.0;
    } else if (auto pred = predict_publisher(r.publisher, discussion, profiles, knowledge, config)) {
      r.state = RecordState::predicted;
      r.score = pred->score;
      r.confidence = pred->confidence;
    }
    if (r.score) r.label = assign_label(*r.score, config);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<PublisherRecord> score_all(const Discussion& discussion, const NecPartition& necs,
                                              const BaseKnowledge& knowledge, const ScoringConfig& config = {}) {
  return score_all(discussion, necs, knowledge, config, publisher_stats(discussion, necs));
}

}  // namespace tropic
