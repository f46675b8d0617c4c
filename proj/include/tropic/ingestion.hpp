#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <compare>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tropic/bipartite.hpp"
#include "tropic/errors.hpp"

namespace tropic {

struct Edge {
  std::string url;
  std::string user_id;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Normalized publisher identity: lowercase host with leading "www." removed.
class PublisherId {
public:
  PublisherId() = default;

  // Validates an already-normalized domain string.
  static PublisherId from_normalized(std::string domain) {
    if (domain.empty()) throw invalid_argument("empty publisher id");
    for (unsigned char c : domain) {
      if (c == '/' || c == '?' || c == '#' || std::isspace(c) || std::isupper(c))
        throw invalid_argument("'" + domain + "' is not a normalized publisher id");
    }
    PublisherId p;
    p.domain_ = std::move(domain);
    return p;
  }

  const std::string& str() const noexcept { return domain_; }

  friend auto operator<=>(const PublisherId&, const PublisherId&) = default;
  friend bool operator==(const PublisherId&, const PublisherId&) = default;

private:
  std::string domain_;
};

struct BaseKnowledge {
  std::map<PublisherId, int> entries;

  bool contains(const PublisherId& p) const { return entries.count(p) != 0; }
  std::optional<int> find(const PublisherId& p) const {
    auto it = entries.find(p);
    if (it == entries.end()) return std::nullopt;
    return it->second;
  }
  std::size_t size() const noexcept { return entries.size(); }
};

// Edges in input order plus (user_id, url) -> multiplicity.
struct EdgeList {
  std::vector<Edge> edges;
  std::map<std::pair<std::string, std::string>, std::size_t> counts;

  void add(Edge e) {
    ++counts[{e.user_id, e.url}];
    edges.push_back(std::move(e));
  }
  std::size_t size() const noexcept { return edges.size(); }
  bool empty() const noexcept { return edges.empty(); }
};

struct EdgeListOptions {
  std::optional<std::size_t> limit;
  std::size_t max_row_errors = 100;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct UrlParts {
  std::size_t host_begin = 0;  // offsets into the source string
  std::size_t host_end = 0;
  std::size_t authority_end = 0;
};

// Locates scheme://[userinfo@]host[:port] in an absolute URL.
inline std::optional<UrlParts> split_url(std::string_view url) {
  auto sep = url.find("://");
  if (sep == std::string_view::npos || sep == 0) return std::nullopt;
  if (!std::isalpha(static_cast<unsigned char>(url[0]))) return std::nullopt;
  for (std::size_t i = 1; i < sep; ++i) {
    unsigned char c = url[i];
    if (!std::isalnum(c) && c != '+' && c != '-' && c != '.') return std::nullopt;
  }
  std::size_t begin = sep + 3;
  std::size_t end = url.find_first_of("/?#", begin);
  if (end == std::string_view::npos) end = url.size();
  UrlParts parts;
  parts.authority_end = end;
  std::string_view authority = url.substr(begin, end - begin);
  if (auto at = authority.rfind('@'); at != std::string_view::npos) {
    begin += at + 1;
    authority = url.substr(begin, end - begin);
  }
  std::size_t host_len = authority.size();
  if (!authority.empty() && authority.front() == '[') {
    auto close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host_len = close + 1;
  } else if (auto colon = authority.rfind(':'); colon != std::string_view::npos) {
    host_len = colon;
  }
  if (host_len == 0) return std::nullopt;
  for (std::size_t i = 0; i < host_len; ++i)
    if (std::isspace(static_cast<unsigned char>(authority[i]))) return std::nullopt;
  parts.host_begin = begin;
  parts.host_end = begin + host_len;
  return parts;
}

// Scheme and host lowercased; everything after the host kept byte-exact.
inline std::optional<std::string> normalize_url(std::string_view url) {
  url = trim(url);
  auto parts = split_url(url);
  if (!parts) return std::nullopt;
  for (unsigned char c : url)
    if (std::isspace(c)) return std::nullopt;
  std::string out = lower(url.substr(0, parts->host_end));
  out.append(url.substr(parts->host_end));
  return out;
}

inline bool parse_int(std::string_view s, long long& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Splits "a<sep>b": on the tab when one is present, otherwise on the last
// comma (URLs may carry commas in their query strings).
inline std::optional<std::pair<std::string_view, std::string_view>> split_record(std::string_view line) {
  auto pos = line.find('\t');
  if (pos == std::string_view::npos) pos = line.rfind(',');
  if (pos == std::string_view::npos) return std::nullopt;
  return std::pair{trim(line.substr(0, pos)), trim(line.substr(pos + 1))};
}

// Calls fn(line_no, content) for every non-blank line; strips CR and BOM.
template <class Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view view(line);
    if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (trim(view).empty()) continue;
    if (!fn(line_no, view)) return;
  }
}

}  // namespace detail

inline PublisherId extract_publisher(std::string_view url) {
  auto trimmed = detail::trim(url);
  auto parts = detail::split_url(trimmed);
  if (!parts) throw no_host(std::string(url));
  std::string host = detail::lower(trimmed.substr(parts->host_begin, parts->host_end - parts->host_begin));
  while (host.size() > 4 && host.compare(0, 4, "www.") == 0) host.erase(0, 4);
  if (host == "www.") throw no_host(std::string(url));
  return PublisherId::from_normalized(std::move(host));
}

inline EdgeList parse_edge_list(std::istream& in, const EdgeListOptions& options = {}) {
  EdgeList out;
  std::vector<row_error> errors;
  std::size_t records = 0;
  bool first = true;
  bool aborted = false;
  detail::for_each_line(in, [&](std::size_t line_no, std::string_view line) {
    auto fields = detail::split_record(line);
    std::optional<std::string> url;
    if (fields) url = detail::normalize_url(fields->first);
    if (first) {
      first = false;
      if (!url) return true;  // header
    }
    ++records;
    if (!fields) {
      errors.push_back({line_no, "expected 'url,user_id'"});
    } else if (!url) {
      errors.push_back({line_no, "url has no scheme or host"});
    } else if (fields->second.empty()) {
      errors.push_back({line_no, "empty user id"});
    } else if (errors.empty()) {
      out.add({std::move(*url), std::string(fields->second)});
    }
    if (options.max_row_errors > 0 && errors.size() >= options.max_row_errors) {
      aborted = true;
      return false;
    }
    return true;
  });
  if (aborted) throw malformed_input(std::move(errors), true);
  if (options.limit && records > *options.limit) throw limit_exceeded(records, *options.limit);
  if (!errors.empty()) throw malformed_input(std::move(errors), false);
  if (out.empty()) throw empty_input();
  return out;
}

// Writes one "url,user_id" record per edge, in order. Tab-separated when the
// user id itself contains a comma.
inline void write_edge_list(const EdgeList& edges, std::ostream& out) {
  for (const auto& e : edges.edges) {
    char sep = e.user_id.find(',') == std::string::npos ? ',' : '\t';
    out << e.url << sep << e.user_id << '\n';
  }
}

inline BaseKnowledge parse_base_knowledge(std::istream& in) {
  BaseKnowledge out;
  bool first = true;
  detail::for_each_line(in, [&](std::size_t line_no, std::string_view line) {
    auto fields = detail::split_record(line);
    long long score = 0;
    bool numeric = fields && detail::parse_int(fields->second, score);
    if (first) {
      first = false;
      // header: a non-numeric score column with no digits at all
      if (fields && !numeric &&
          std::none_of(fields->second.begin(), fields->second.end(), [](unsigned char c) { return std::isdigit(c); }))
        return true;
    }
    if (!fields || !numeric || fields->first.empty())
      throw malformed_input({{line_no, "expected 'domain,score' with an integer score"}}, false);
    if (score < 0 || score > 100)
      throw score_out_of_range("line " + std::to_string(line_no) + ": score " + std::to_string(score) +
                                   " outside [0, 100]",
                               line_no);
    std::string domain(fields->first);
    if (domain.find("://") == std::string::npos) domain = "https://" + domain;
    PublisherId id;
    try {
      id = extract_publisher(domain);
    } catch (const error&) {
      throw malformed_input({{line_no, "invalid domain '" + std::string(fields->first) + "'"}}, false);
    }
    if (!out.entries.emplace(id, static_cast<int>(score)).second) throw duplicate_domain(id.str());
    return true;
  });
  return out;
}

inline void write_base_knowledge(const BaseKnowledge& bk, std::ostream& out) {
  for (const auto& [id, score] : bk.entries) out << id.str() << ',' << score << '\n';
}

// Dense 0-based indices: users and URLs in lexicographic label order.
inline BipartiteGraph build_bipartite(const EdgeList& edge_list) {
  if (edge_list.counts.empty()) throw empty_input();
  std::vector<std::string> users;
  std::set<std::string> url_set;
  for (const auto& [key, count] : edge_list.counts) {
    if (users.empty() || users.back() != key.first) users.push_back(key.first);
    url_set.insert(key.second);
  }
  std::vector<std::string> urls(url_set.begin(), url_set.end());
  std::map<std::string_view, node_index> url_index;
  for (node_index j = 0; j < urls.size(); ++j) url_index.emplace(urls[j], j);

  std::vector<std::vector<node_index>> adjacency(users.size());
  std::vector<std::vector<std::uint32_t>> mult(users.size());
  std::size_t u = 0;
  for (const auto& [key, count] : edge_list.counts) {
    if (users[u] != key.first) ++u;
    adjacency[u].push_back(url_index.at(key.second));
    mult[u].push_back(static_cast<std::uint32_t>(count));
  }
  const std::size_t n_urls = urls.size();
  return BipartiteGraph(n_urls, std::move(adjacency), std::move(mult), std::move(users), std::move(urls));
}

}  // namespace tropic
