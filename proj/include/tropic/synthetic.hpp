#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "tropic/ingestion.hpp"

namespace tropic::synthetic {

// Portable draws straight from mt19937_64 output.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <class T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

// Two-population discussion: half the publishers are trustworthy (scores
// high_center +- spread), half are not (low_center +- spread). Each user
// belongs to one population and follows a few "stories" (sets of URLs from
// its own population's publishers), plus a handful of random noise shares.
struct PlantedConfig {
  std::size_t users = 500;
  std::size_t publishers = 60;
  std::size_t urls_per_publisher = 4;
  std::size_t story_size = 10;
  std::size_t min_follow = 2;
  std::size_t max_follow = 3;
  double share_probability = 0.7;
  double repeat_probability = 0.2;
  std::size_t noise_shares = 3;
  int high_center = 90;
  int low_center = 20;
  int spread = 5;
  double annotated_fraction = 0.3;
  std::uint64_t seed = 1;
};

struct PlantedDiscussion {
  EdgeList edges;
  BaseKnowledge annotated;               // the revealed subset
  std::map<PublisherId, int> truth;      // planted score of every publisher
  std::map<PublisherId, bool> trusted;   // planted population
};

inline PlantedDiscussion planted_discussion(const PlantedConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  PlantedDiscussion out;
  const std::size_t half = cfg.publishers / 2;

  std::vector<std::string> domains(cfg.publishers);
  std::vector<std::vector<std::string>> group_urls(2);
  for (std::size_t p = 0; p < cfg.publishers; ++p) {
    char name[64];
    std::snprintf(name, sizeof name, "outlet%02zu.example", p);
    domains[p] = name;
    const bool trusted = p < half;
    const int center = trusted ? cfg.high_center : cfg.low_center;
    const int score = center - cfg.spread + static_cast<int>(uniform_index(rng, 2 * cfg.spread + 1));
    auto id = PublisherId::from_normalized(domains[p]);
    out.truth[id] = score;
    out.trusted[id] = trusted;
    for (std::size_t k = 0; k < cfg.urls_per_publisher; ++k) {
      char url[128];
      std::snprintf(url, sizeof url, "https://%s%s/news/%zu", (k % 2 ? "www." : ""), name, k);
      group_urls[trusted ? 0 : 1].push_back(url);
    }
  }

  std::vector<std::vector<std::vector<std::string>>> stories(2);
  for (int g = 0; g < 2; ++g) {
    auto urls = group_urls[g];
    shuffle(urls, rng);
    for (std::size_t i = 0; i < urls.size(); i += cfg.story_size)
      stories[g].emplace_back(urls.begin() + i, urls.begin() + std::min(urls.size(), i + cfg.story_size));
  }
  std::vector<std::string> all_urls = group_urls[0];
  all_urls.insert(all_urls.end(), group_urls[1].begin(), group_urls[1].end());

  for (std::size_t u = 0; u < cfg.users; ++u) {
    char user[32];
    std::snprintf(user, sizeof user, "user%04zu", u);
    const int g = u < cfg.users / 2 ? 0 : 1;
    std::vector<std::size_t> order(stories[g].size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);
    const std::size_t follow =
        std::min(order.size(), cfg.min_follow + uniform_index(rng, cfg.max_follow - cfg.min_follow + 1));
    auto share = [&](const std::string& url) {
      out.edges.add({url, user});
      if (uniform01(rng) < cfg.repeat_probability) out.edges.add({url, user});
    };
    for (std::size_t f = 0; f < follow; ++f)
      for (const auto& url : stories[g][order[f]])
        if (uniform01(rng) < cfg.share_probability) share(url);
    for (std::size_t k = 0; k < cfg.noise_shares; ++k) share(all_urls[uniform_index(rng, all_urls.size())]);
  }

  std::vector<std::size_t> pubs(cfg.publishers);
  for (std::size_t p = 0; p < pubs.size(); ++p) pubs[p] = p;
  shuffle(pubs, rng);
  const auto n_annotated = static_cast<std::size_t>(std::lround(cfg.annotated_fraction * cfg.publishers));
  for (std::size_t k = 0; k < n_annotated; ++k) {
    auto id = PublisherId::from_normalized(domains[pubs[k]]);
    out.annotated.entries[id] = out.truth[id];
  }
  return out;
}

}  // namespace tropic::synthetic
