#include <gtest/gtest.h>

#include <set>

#include "support.hpp"
#include "tropic/guidance.hpp"
#include "tropic/synthetic.hpp"

using namespace tropic;
using testing_support::edges;
using testing_support::parse_base;

namespace {

PublisherId pid(const char* s) { return PublisherId::from_normalized(s); }

// Artifacts with a hand-placed NEC partition; model and projection unused.
std::shared_ptr<const Artifacts> artifacts_with(const EdgeList& el, const std::vector<std::vector<std::string>>& nec_urls) {
  auto a = std::make_shared<Artifacts>();
  a->edges = el;
  a->graph = build_bipartite(el);
  a->necs = testing_support::necs_by_label(a->graph, nec_urls);
  a->discussion = Discussion(a->graph);
  a->stats = publisher_stats(a->discussion, a->necs);
  return a;
}

// a.com unlocks v1..v5, b.com unlocks v6 and v7, c.com has no NEC URL.
JobState ranking_state(BaseKnowledge baseline = {}) {
  EdgeList el;
  for (int i = 1; i <= 5; ++i) el.add({"https://a.com/n", "v" + std::to_string(i)});
  for (int i = 6; i <= 7; ++i) el.add({"https://b.com/n", "v" + std::to_string(i)});
  el.add({"https://c.com/x", "v1"});
  el.add({"https://c.com/x", "v6"});
  return make_job_state(artifacts_with(el, {{"https://a.com/n", "https://b.com/n"}}), std::move(baseline));
}

std::size_t unprofilable_recount(const JobState& s) {
  const auto& a = *s.artifacts;
  const auto k = s.knowledge();
  std::size_t n = 0;
  for (node_index u = 0; u < a.discussion.n_users(); ++u) {
    bool voter = false, profilable = false;
    for (const auto& sh : a.discussion.shares(u)) {
      if (!a.necs.in_nec(sh.url)) continue;
      voter = true;
      if (k.contains(a.discussion.publishers()[a.discussion.publisher_of(sh.url)])) profilable = true;
    }
    n += voter && !profilable;
  }
  return n;
}

JobState synthetic_state(std::uint64_t seed) {
  synthetic::PlantedConfig cfg;
  cfg.seed = seed;
  auto data = synthetic::planted_discussion(cfg);
  return run_pipeline(data.edges, data.annotated, PipelineConfig{});
}

}  // namespace

TEST(ComputeStats, Counting) {
  auto state = make_job_state(artifacts_with(edges({{"https://pub.com/1", "a"},
                                                    {"https://pub.com/1", "b"},
                                                    {"https://pub.com/2", "c"},
                                                    {"https://pub.com/3", "d"},
                                                    {"https://pub.com/3", "d"},
                                                    {"https://pub.com/3", "d"},
                                                    {"https://pub.com/2", "a"},
                                                    {"https://x.com/1", "a"}}),
                                             {{"https://pub.com/1", "https://x.com/1"}}),
                              {});
  auto stats = compute_stats(state);
  const auto& s = stats.at(pid("pub.com"));
  EXPECT_EQ(s.n_voters, 2u);
  EXPECT_EQ(s.n_nec_urls, 1u);
  EXPECT_EQ(s.n_urls, 3u);
  EXPECT_EQ(s.n_shares, 7u);
  EXPECT_EQ(stats.at(pid("x.com")).n_urls, 1u);
}

TEST(ComputeStats, UsersOfPublisherCounted) {
  // (4 users, 1 NEC URL, 3 URLs, 7 shares)
  auto state = make_job_state(artifacts_with(edges({{"https://p.com/1", "a"},
                                                    {"https://p.com/2", "b"},
                                                    {"https://p.com/2", "b"},
                                                    {"https://p.com/3", "c"},
                                                    {"https://p.com/3", "d"},
                                                    {"https://p.com/3", "d"},
                                                    {"https://p.com/3", "d"},
                                                    {"https://q.com/1", "a"}}),
                                             {{"https://p.com/1", "https://q.com/1"}}),
                              {});
  const auto& s = compute_stats(state).at(pid("p.com"));
  EXPECT_EQ(s.n_nec_urls, 1u);
  EXPECT_EQ(s.n_urls, 3u);
  EXPECT_EQ(s.n_shares, 7u);
  EXPECT_EQ(state.artifacts->discussion.users_of(*state.artifacts->discussion.find(pid("p.com"))).size(), 4u);
}

TEST(ComputeStats, NoNecUrls) {
  auto state = ranking_state();
  EXPECT_EQ(compute_stats(state).at(pid("c.com")).n_nec_urls, 0u);
}

TEST(ComputeStats, IndependentOfAnnotations) {
  auto state = synthetic_state(2);
  auto before = compute_stats(state);
  auto after = compute_stats(apply_annotation(state, state.artifacts->discussion.publishers()[0], 10));
  EXPECT_EQ(before, after);
}

TEST(RankCandidates, ByUnlockedVoters) {
  auto ranks = rank_candidates(ranking_state());
  ASSERT_EQ(ranks.size(), 3u);
  EXPECT_EQ(ranks[0].publisher.str(), "a.com");
  EXPECT_EQ(ranks[0].unlocked_voters, 5u);
  EXPECT_EQ(ranks[1].publisher.str(), "b.com");
  EXPECT_EQ(ranks[1].unlocked_voters, 2u);
  EXPECT_EQ(ranks[2].publisher.str(), "c.com");
  EXPECT_EQ(ranks[2].unlocked_voters, 0u);
}

TEST(RankCandidates, TieBrokenByNecUrlsThenId) {
  auto state = make_job_state(artifacts_with(edges({{"https://b.com/1", "v1"},
                                                    {"https://b.com/2", "v1"},
                                                    {"https://b.com/3", "v1"},
                                                    {"https://a.com/1", "v2"},
                                                    {"https://d.com/1", "v3"},
                                                    {"https://c.com/1", "v3"}}),
                                             {{"https://b.com/1", "https://b.com/2", "https://b.com/3", "https://a.com/1"},
                                              {"https://d.com/1", "https://c.com/1"}}),
                              {});
  auto ranks = rank_candidates(state);
  ASSERT_EQ(ranks.size(), 4u);
  EXPECT_EQ(ranks[0].publisher.str(), "b.com");  // 1 voter, 3 NEC URLs
  EXPECT_EQ(ranks[1].publisher.str(), "a.com");  // 1 voter, 1 NEC URL, id order
  EXPECT_EQ(ranks[2].publisher.str(), "c.com");
  EXPECT_EQ(ranks[3].publisher.str(), "d.com");
}

TEST(RankCandidates, AllAnnotatedIsEmpty) {
  EXPECT_TRUE(rank_candidates(ranking_state(parse_base("a.com,1\nb.com,2\nc.com,3\n"))).empty());
}

TEST(RankCandidates, ExactlyTheUnannotatedOnce) {
  auto state = synthetic_state(3);
  auto ranks = rank_candidates(state);
  std::set<PublisherId> seen;
  for (const auto& r : ranks) EXPECT_TRUE(seen.insert(r.publisher).second);
  const auto k = state.knowledge();
  for (const auto& id : state.artifacts->discussion.publishers()) EXPECT_EQ(seen.count(id) == 1, !k.contains(id));
}

TEST(ApplyAnnotation, Passthrough) {
  auto state = ranking_state();
  auto next = apply_annotation(state, pid("c.com"), 75);
  const auto& r = next.records[2];
  EXPECT_EQ(r.publisher.str(), "c.com");
  EXPECT_EQ(r.state, RecordState::annotated);
  EXPECT_EQ(r.score, 75.0);
  EXPECT_EQ(r.confidence, 1.0);
  EXPECT_EQ(r.label, Label::trustworthy);
  EXPECT_EQ(next.artifacts, state.artifacts);
  EXPECT_TRUE(state.user_annotations.empty());
}

TEST(ApplyAnnotation, Errors) {
  auto state = ranking_state();
  EXPECT_THROW(apply_annotation(state, pid("nope.com"), 50), unknown_publisher);
  EXPECT_THROW(apply_annotation(state, pid("a.com"), 101), score_out_of_range);
  EXPECT_THROW(apply_annotation(state, pid("a.com"), -1), score_out_of_range);
}

TEST(ApplyAnnotation, OverridesBaseline) {
  auto state = ranking_state(parse_base("a.com,20\n"));
  auto next = apply_annotation(state, pid("a.com"), 90);
  EXPECT_EQ(next.records[0].score, 90.0);
  EXPECT_EQ(remove_annotation(next, pid("a.com")).records[0].score, 20.0);
}

TEST(ApplyAnnotation, NecPartitionUntouched) {
  auto state = synthetic_state(4);
  const auto before = serialize(state.artifacts->necs);
  auto s = state;
  for (const auto& r : rank_candidates(state)) {
    s = apply_annotation(s, r.publisher, 50);
    EXPECT_EQ(serialize(s.artifacts->necs), before);
  }
}

TEST(ApplyAnnotation, TopCandidateUnlocksItsVoters) {
  for (std::uint64_t seed : {1ull, 2ull}) {
    synthetic::PlantedConfig cfg;
    cfg.seed = seed;
    cfg.annotated_fraction = 0.05;
    auto data = synthetic::planted_discussion(cfg);
    auto state = run_pipeline(data.edges, data.annotated, PipelineConfig{});
    for (int step = 0; step < 5; ++step) {
      auto ranks = rank_candidates(state);
      ASSERT_FALSE(ranks.empty());
      const auto before = unprofilable_recount(state);
      EXPECT_EQ(before, unprofilable_voters(state).size());
      auto next = apply_annotation(state, ranks[0].publisher, 50);
      EXPECT_EQ(before - unprofilable_recount(next), ranks[0].unlocked_voters);
      if (ranks[0].unlocked_voters > 0) {
        EXPECT_LT(unprofilable_recount(next), before);
      }
      state = std::move(next);
    }
  }
}

TEST(ApplyAnnotation, UnclassifiedNonIncreasing) {
  auto state = synthetic_state(7);
  auto s = state;
  auto prev = summary(s).unclassified;
  for (const auto& id : state.artifacts->discussion.publishers()) {
    s = apply_annotation(s, id, 30);
    const auto now = summary(s).unclassified;
    EXPECT_LE(now, prev);
    prev = now;
  }
  EXPECT_EQ(prev, 0u);
}

TEST(RemoveAnnotation, InverseOfApply) {
  auto state = synthetic_state(8);
  for (const auto& r : rank_candidates(state)) {
    auto applied = apply_annotation(state, r.publisher, 64);
    EXPECT_EQ(remove_annotation(applied, r.publisher).records, state.records);
  }
}

TEST(RemoveAnnotation, Errors) {
  auto state = ranking_state(parse_base("a.com,20\n"));
  EXPECT_THROW(remove_annotation(state, pid("a.com")), not_user_annotated);
  EXPECT_THROW(remove_annotation(state, pid("b.com")), not_user_annotated);
  EXPECT_THROW(remove_annotation(state, pid("nope.com")), unknown_publisher);
}

TEST(Summary, ScoreBuckets) {
  auto state = make_job_state(artifacts_with(edges({{"https://a.com/1", "u"}, {"https://b.com/1", "u"}, {"https://c.com/1", "u"}}), {}),
                              parse_base("a.com,95\nb.com,90\nc.com,85\n"));
  auto s = summary(state);
  EXPECT_EQ(s.score_histogram[9], 2u);
  EXPECT_EQ(s.score_histogram[8], 1u);
  EXPECT_EQ(s.annotated, 3u);
}

TEST(Summary, BucketBoundaries) {
  EXPECT_EQ(bucket_of(0.0, 100.0), 0u);
  EXPECT_EQ(bucket_of(9.99, 100.0), 0u);
  EXPECT_EQ(bucket_of(10.0, 100.0), 1u);
  EXPECT_EQ(bucket_of(100.0, 100.0), 9u);
  EXPECT_EQ(bucket_of(0.1, 1.0), 1u);
  EXPECT_EQ(bucket_of(1.0, 1.0), 9u);
}

TEST(Summary, Empty) {
  auto s = summarize({});
  EXPECT_EQ(s, Summary{});
}

TEST(Summary, Counts) {
  std::vector<PublisherRecord> records(6);
  records[0].state = records[1].state = RecordState::annotated;
  records[0].score = 10;
  records[1].score = 100;
  for (int k = 2; k < 5; ++k) {
    records[k].state = RecordState::predicted;
    records[k].score = 50;
    records[k].confidence = 0.05 + 0.3 * (k - 2);
  }
  auto s = summarize(records);
  EXPECT_EQ(s.annotated, 2u);
  EXPECT_EQ(s.predicted, 3u);
  EXPECT_EQ(s.unclassified, 1u);
  EXPECT_EQ(s.confidence_histogram[0], 1u);
  EXPECT_EQ(s.confidence_histogram[3], 1u);
  EXPECT_EQ(s.confidence_histogram[6], 1u);
  EXPECT_EQ(s.score_histogram[1], 1u);
  EXPECT_EQ(s.score_histogram[9], 1u);
}

TEST(Summary, CountsSumToPublishers) {
  auto state = synthetic_state(9);
  auto s = summary(state);
  EXPECT_EQ(s.annotated + s.predicted + s.unclassified, state.artifacts->discussion.n_publishers());
}
