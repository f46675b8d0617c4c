#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

// Eigen before httplib: <resolv.h> defines a `_res` macro.
#include "tropic/errors.hpp"
#include "tropic/export.hpp"
#include "tropic/guidance.hpp"
#include "tropic/ingestion.hpp"
#include "tropic/pipeline.hpp"

#include <httplib.h>
#include <json.hpp>

namespace tropic {

using json = nlohmann::json;

struct ServiceSettings {
  std::size_t max_edges = 50000;  // 0 disables the cap
  PipelineConfig pipeline;
  std::optional<std::filesystem::path> snapshot_dir;
  std::string bind_addr = "127.0.0.1:8080";
  std::optional<std::filesystem::path> demo_dir;  // holds edges.csv and base_knowledge.csv
};

namespace detail {

inline std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

inline double env_double(const std::string& name, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::logic_error&) {
  }
  throw invalid_argument(name + " is not a number: '" + v + "'");
}

inline std::uint64_t env_uint(const std::string& name, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v.front() != '-') {
      auto n = std::stoull(v, &pos);
      if (pos == v.size()) return n;
    }
  } catch (const std::logic_error&) {
  }
  throw invalid_argument(name + " is not a non-negative integer: '" + v + "'");
}

}  // namespace detail

// TROPIC_MAX_EDGES, TROPIC_ALPHA, TROPIC_LABEL_THRESHOLD, TROPIC_SEED,
// TROPIC_SNAPSHOT_DIR, TROPIC_BIND_ADDR, TROPIC_DEMO_DIR.
inline ServiceSettings settings_from_env() {
  ServiceSettings s;
  if (auto v = detail::env("TROPIC_MAX_EDGES")) s.max_edges = detail::env_uint("TROPIC_MAX_EDGES", *v);
  if (auto v = detail::env("TROPIC_ALPHA")) s.pipeline.alpha = detail::env_double("TROPIC_ALPHA", *v);
  if (auto v = detail::env("TROPIC_LABEL_THRESHOLD"))
    s.pipeline.scoring.label_threshold = detail::env_double("TROPIC_LABEL_THRESHOLD", *v);
  if (auto v = detail::env("TROPIC_SEED")) s.pipeline.seed = detail::env_uint("TROPIC_SEED", *v);
  if (auto v = detail::env("TROPIC_SNAPSHOT_DIR")) s.snapshot_dir = *v;
  if (auto v = detail::env("TROPIC_BIND_ADDR")) s.bind_addr = *v;
  if (auto v = detail::env("TROPIC_DEMO_DIR")) s.demo_dir = *v;
  s.pipeline.validate();
  return s;
}

// ---- JSON encodings -------------------------------------------------------

inline const char* pvalue_mode_name(PValueMode m) {
  switch (m) {
    case PValueMode::exact: return "exact";
    case PValueMode::poisson: return "poisson";
    default: return "automatic";
  }
}

inline json config_to_json(const PipelineConfig& c) {
  return {{"alpha", c.alpha},
          {"pvalue_mode", pvalue_mode_name(c.pvalue_mode)},
          {"resolution", c.resolution},
          {"seed", c.seed},
          {"min_size", c.min_size},
          {"label_threshold", c.scoring.label_threshold},
          {"confidence_halfpoint", c.scoring.confidence_halfpoint},
          {"dispersion_scale", c.scoring.dispersion_scale},
          {"solver_tolerance", c.solver.tolerance},
          {"solver_max_iterations", c.solver.max_iterations},
          {"solver_method", c.solver.method == SolverMethod::newton ? "newton" : "fixed_point"}};
}

// Applies the keys present in `j` on top of `base`. Values may be JSON
// numbers or numeric strings (multipart form fields arrive as text).
inline PipelineConfig config_from_json(const json& j, PipelineConfig base) {
  auto number = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key)) return std::nullopt;
    const auto& v = j.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return detail::env_double(key, v.get<std::string>());
    throw invalid_argument(std::string(key) + " must be a number");
  };
  auto integer = [&](const char* key) -> std::optional<std::uint64_t> {
    if (!j.contains(key)) return std::nullopt;
    const auto& v = j.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_string()) return detail::env_uint(key, v.get<std::string>());
    throw invalid_argument(std::string(key) + " must be a non-negative integer");
  };
  auto text = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key)) return std::nullopt;
    if (!j.at(key).is_string()) throw invalid_argument(std::string(key) + " must be a string");
    return j.at(key).get<std::string>();
  };
  if (auto v = number("alpha")) base.alpha = *v;
  if (auto v = text("pvalue_mode")) {
    if (*v == "exact") base.pvalue_mode = PValueMode::exact;
    else if (*v == "poisson") base.pvalue_mode = PValueMode::poisson;
    else if (*v == "automatic") base.pvalue_mode = PValueMode::automatic;
    else throw invalid_argument("pvalue_mode must be automatic, exact or poisson");
  }
  if (auto v = number("resolution")) base.resolution = *v;
  if (auto v = integer("seed")) base.seed = *v;
  if (auto v = integer("min_size")) base.min_size = *v;
  if (auto v = number("label_threshold")) base.scoring.label_threshold = *v;
  if (auto v = integer("confidence_halfpoint")) {
    if (*v > UINT32_MAX) throw invalid_argument("confidence_halfpoint too large");
    base.scoring.confidence_halfpoint = static_cast<std::uint32_t>(*v);
  }
  if (auto v = number("dispersion_scale")) base.scoring.dispersion_scale = *v;
  if (auto v = number("solver_tolerance")) base.solver.tolerance = *v;
  if (auto v = integer("solver_max_iterations")) base.solver.max_iterations = *v;
  if (auto v = text("solver_method")) {
    if (*v == "newton") base.solver.method = SolverMethod::newton;
    else if (*v == "fixed_point") base.solver.method = SolverMethod::fixed_point;
    else throw invalid_argument("solver_method must be fixed_point or newton");
  }
  base.validate();
  return base;
}

inline json record_to_json(const PublisherRecord& r) {
  json j = {{"publisher", r.publisher.str()},
            {"state", std::string(1, state_code(r.state))},
            {"score", nullptr},
            {"confidence", r.confidence},
            {"label", nullptr},
            {"n_voters", r.stats.n_voters},
            {"n_nec_urls", r.stats.n_nec_urls},
            {"n_urls", r.stats.n_urls},
            {"n_shares", r.stats.n_shares}};
  if (r.score) j["score"] = *r.score;
  if (r.label) j["label"] = std::string(1, label_code(*r.label));
  return j;
}

inline json summary_to_json(const Summary& s) {
  return {{"score_histogram", s.score_histogram},
          {"counts", {{"annotated", s.annotated}, {"predicted", s.predicted}, {"unclassified", s.unclassified}}},
          {"confidence_histogram", s.confidence_histogram}};
}

// ---- job store ------------------------------------------------------------

class JobStore;

// One job. `phase` only moves forward; `snapshot` is swapped atomically so
// readers never block on a mutation.
class Job {
public:
  Job(std::string id, std::int64_t created_at, PipelineConfig config)
      : id_(std::move(id)), created_at_(created_at), config_(std::move(config)) {}

  const std::string& id() const noexcept { return id_; }
  std::int64_t created_at() const noexcept { return created_at_; }
  const PipelineConfig& config() const noexcept { return config_; }
  Phase phase() const noexcept { return phase_.load(); }

  std::string failure() const {
    std::lock_guard lock(status_mutex_);
    return failure_;
  }

  std::shared_ptr<const JobState> snapshot() const { return std::atomic_load(&snapshot_); }

  json status_json() const {
    json j = {{"id", id_}, {"phase", phase_name(phase())}, {"created_at", created_at_},
              {"config", config_to_json(config_)}};
    if (phase() == Phase::failed) j["error"] = failure();
    if (auto s = snapshot()) {
      const auto& a = *s->artifacts;
      j["diagnostics"] = {{"users", a.graph.n_users()},
                          {"urls", a.graph.n_urls()},
                          {"edges", a.edges.size()},
                          {"solver_iterations", a.model.iterations()},
                          {"solver_residual", a.model.tolerance_achieved()},
                          {"tested_pairs", a.projection.tested_pairs},
                          {"validated_edges", a.projection.edges.size()},
                          {"necs", a.necs.necs.size()},
                          {"modularity", a.necs.modularity}};
    }
    return j;
  }

private:
  friend class JobStore;

  void advance(Phase p) {
    Phase cur = phase_.load();
    while (cur != Phase::failed && static_cast<int>(p) > static_cast<int>(cur) &&
           !phase_.compare_exchange_weak(cur, p)) {
    }
  }
  void fail(const std::string& message) {
    {
      std::lock_guard lock(status_mutex_);
      failure_ = message;
    }
    phase_.store(Phase::failed);
  }
  void publish(std::shared_ptr<const JobState> s) { std::atomic_store(&snapshot_, std::move(s)); }

  std::string id_;
  std::int64_t created_at_;
  PipelineConfig config_;
  std::atomic<Phase> phase_{Phase::queued};
  mutable std::mutex status_mutex_;
  std::string failure_;
  std::shared_ptr<const JobState> snapshot_;
  std::mutex mutation_mutex_;
  // Inputs kept for snapshots.
  EdgeList edges_;
  BaseKnowledge baseline_;
};

class not_ready : public error {
public:
  explicit not_ready(const std::string& id) : error("not_ready", "job '" + id + "' is not done") {}
};

class unknown_job : public error {
public:
  explicit unknown_job(const std::string& id) : error("unknown_job", "no job '" + id + "'") {}
};

// In-memory job registry with optional snapshot-to-directory persistence.
// Snapshot layout: <dir>/<job id>.json, written via <id>.json.tmp + rename.
class JobStore {
public:
  explicit JobStore(std::optional<std::filesystem::path> snapshot_dir = std::nullopt)
      : snapshot_dir_(std::move(snapshot_dir)), rng_(std::random_device{}()) {
    if (snapshot_dir_) {
      std::filesystem::create_directories(*snapshot_dir_);
      restore();
    }
  }

  JobStore(const JobStore&) = delete;
  JobStore& operator=(const JobStore&) = delete;

  ~JobStore() {
    std::lock_guard lock(workers_mutex_);
    workers_.clear();  // joins
  }

  std::shared_ptr<Job> create(EdgeList edges, BaseKnowledge baseline, const PipelineConfig& config) {
    auto job = std::make_shared<Job>(new_id(), unix_now(), config);
    job->edges_ = std::move(edges);
    job->baseline_ = std::move(baseline);
    {
      std::lock_guard lock(jobs_mutex_);
      jobs_[job->id()] = job;
    }
    launch(job, {});
    return job;
  }

  std::shared_ptr<Job> find(const std::string& id) const {
    std::lock_guard lock(jobs_mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw unknown_job(id);
    return it->second;
  }

  std::shared_ptr<const JobState> ready_state(const std::string& id) const {
    auto job = find(id);
    auto s = job->snapshot();
    if (job->phase() != Phase::done || !s) throw not_ready(id);
    return s;
  }

  // Serialized per job; returns the state before and after the change.
  template <class Fn>
  std::pair<std::shared_ptr<const JobState>, std::shared_ptr<const JobState>> mutate(const std::string& id, Fn&& fn) {
    auto job = find(id);
    std::lock_guard lock(job->mutation_mutex_);
    auto before = job->snapshot();
    if (job->phase() != Phase::done || !before) throw not_ready(id);
    auto after = std::make_shared<const JobState>(fn(*before));
    job->publish(after);
    persist(*job);
    return {before, after};
  }

  // Blocks until the job leaves the running phases.
  Phase wait(const std::string& id, std::chrono::milliseconds timeout = std::chrono::minutes(10)) const {
    auto job = find(id);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < deadline) {
      const auto p = job->phase();
      if (p == Phase::done || p == Phase::failed) return p;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return job->phase();
  }

  // Builds (or reuses) edge-list artifacts; identical edge lists and
  // configs share one cached result.
  std::shared_ptr<const Artifacts> artifacts_for(const EdgeList& edges, const PipelineConfig& config,
                                                 const PhaseCallback& on_phase = {}) {
    std::ostringstream key;
    key << config_to_json(config).dump() << '\n';
    write_edge_list(edges, key);
    const std::string k = key.str();
    {
      std::lock_guard lock(cache_mutex_);
      for (const auto& [ck, value] : cache_)
        if (ck == k) return value;
    }
    auto built = build_artifacts(edges, config, on_phase);
    std::lock_guard lock(cache_mutex_);
    cache_.emplace_back(k, built);
    if (cache_.size() > cache_capacity) cache_.pop_front();
    return built;
  }

  std::size_t size() const {
    std::lock_guard lock(jobs_mutex_);
    return jobs_.size();
  }

  static constexpr std::size_t cache_capacity = 8;

private:
  static std::int64_t unix_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  std::string new_id() {
    std::lock_guard lock(jobs_mutex_);
    for (;;) {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng_()));
      if (!jobs_.count(buf)) return buf;
    }
  }

  void launch(const std::shared_ptr<Job>& job, std::map<PublisherId, int> annotations) {
    std::lock_guard lock(workers_mutex_);
    workers_.emplace_back([this, job, annotations = std::move(annotations)] {
      try {
        auto artifacts = artifacts_for(job->edges_, job->config_, [&](Phase p) { job->advance(p); });
        job->advance(Phase::scoring);
        auto state = make_job_state(std::move(artifacts), job->baseline_, job->config_.scoring);
        for (const auto& [publisher, score] : annotations) {
          if (state.artifacts->discussion.find(publisher)) state = apply_annotation(state, publisher, score);
        }
        job->publish(std::make_shared<const JobState>(std::move(state)));
        job->advance(Phase::done);
      } catch (const std::exception& e) {
        job->fail(e.what());
      }
      persist(*job);
    });
  }

  void persist(const Job& job) const {
    if (!snapshot_dir_) return;
    json j = {{"id", job.id()}, {"created_at", job.created_at()}, {"config", config_to_json(job.config())},
              {"phase", phase_name(job.phase())}};
    if (job.phase() == Phase::failed) j["error"] = job.failure();
    json edges = json::array();
    for (const auto& e : job.edges_.edges) edges.push_back({e.url, e.user_id});
    j["edges"] = std::move(edges);
    json baseline = json::object();
    for (const auto& [id, score] : job.baseline_.entries) baseline[id.str()] = score;
    j["baseline"] = std::move(baseline);
    json annotations = json::object();
    if (auto s = job.snapshot())
      for (const auto& [id, score] : s->user_annotations) annotations[id.str()] = score;
    j["user_annotations"] = std::move(annotations);

    std::lock_guard lock(persist_mutex_);
    const auto path = *snapshot_dir_ / (job.id() + ".json");
    const auto tmp = *snapshot_dir_ / (job.id() + ".json.tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << j.dump();
    }
    std::filesystem::rename(tmp, path);
  }

  void restore() {
    for (const auto& entry : std::filesystem::directory_iterator(*snapshot_dir_)) {
      if (entry.path().extension() != ".json") continue;
      json j;
      try {
        std::ifstream in(entry.path(), std::ios::binary);
        j = json::parse(in);
      } catch (const std::exception&) {
        continue;
      }
      auto job = std::make_shared<Job>(j.at("id").get<std::string>(), j.at("created_at").get<std::int64_t>(),
                                       config_from_json(j.at("config"), PipelineConfig{}));
      for (const auto& e : j.at("edges")) job->edges_.add({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
      for (const auto& [domain, score] : j.at("baseline").items())
        job->baseline_.entries[PublisherId::from_normalized(domain)] = score.get<int>();
      std::map<PublisherId, int> annotations;
      for (const auto& [domain, score] : j.at("user_annotations").items())
        annotations[PublisherId::from_normalized(domain)] = score.get<int>();
      {
        std::lock_guard lock(jobs_mutex_);
        jobs_[job->id()] = job;
      }
      if (j.value("phase", "") == std::string("Failed")) {
        job->fail(j.value("error", std::string("failed before restart")));
      } else {
        launch(job, std::move(annotations));
      }
    }
  }

  std::optional<std::filesystem::path> snapshot_dir_;
  mutable std::mutex jobs_mutex_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::mt19937_64 rng_;
  std::mutex cache_mutex_;
  std::deque<std::pair<std::string, std::shared_ptr<const Artifacts>>> cache_;
  mutable std::mutex persist_mutex_;
  std::mutex workers_mutex_;
  std::vector<std::jthread> workers_;  // last: joined before the rest is destroyed
};

// ---- HTTP layer -----------------------------------------------------------

class Service {
public:
  explicit Service(ServiceSettings settings) : settings_(std::move(settings)), store_(settings_.snapshot_dir) {}

  JobStore& store() noexcept { return store_; }
  const ServiceSettings& settings() const noexcept { return settings_; }

  // Warms the artifact cache for the bundled demo edge list.
  void precompute_demo() {
    if (!settings_.demo_dir) return;
    std::ifstream in(*settings_.demo_dir / "edges.csv", std::ios::binary);
    if (!in) return;
    store_.artifacts_for(parse_edge_list(in), settings_.pipeline);
  }

  void mount(httplib::Server& server) {
    server.Post("/api/jobs", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { create_job(req, res); });
    });
    server.Get(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { send_json(res, 200, store_.find(req.matches[1])->status_json()); });
    });
    server.Get(R"(/api/jobs/([^/]+)/results)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { results(req, res); });
    });
    server.Post(R"(/api/jobs/([^/]+)/annotations)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { annotate(req, res); });
    });
    server.Delete(R"(/api/jobs/([^/]+)/annotations/([^/]+))",
                  [this](const httplib::Request& req, httplib::Response& res) {
                    handle(res, [&] { unannotate(req, res); });
                  });
    server.Get(R"(/api/jobs/([^/]+)/suggestions)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { suggestions(req, res); });
    });
    server.Get(R"(/api/jobs/([^/]+)/summary)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] { send_json(res, 200, summary_to_json(summary(*store_.ready_state(req.matches[1])))); });
    });
    server.Get(R"(/api/jobs/([^/]+)/export)", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        auto state = store_.ready_state(req.matches[1]);
        const bool only = req.get_param_value("only") == "annotated";
        res.status = 200;
        res.set_content(export_csv(state->records, only), "text/csv; charset=utf-8");
      });
    });
  }

private:
  class unprocessable : public error {
  public:
    explicit unprocessable(const std::string& what) : error("unprocessable", what) {}
  };

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const error& e, json extra = json::object()) {
    extra["error"] = e.code();
    extra["message"] = e.what();
    send_json(res, status, extra);
  }

  template <class Fn>
  void handle(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const limit_exceeded& e) {
      send_error(res, 413, e, {{"count", e.count}, {"limit", e.limit}});
    } catch (const malformed_input& e) {
      json rows = json::array();
      for (const auto& r : e.rows) rows.push_back({{"line", r.line_no}, {"reason", r.reason}});
      send_error(res, 400, e, {{"rows", rows}});
    } catch (const score_out_of_range& e) {
      json extra = json::object();
      if (e.line_no) {
        extra["line"] = e.line_no;
        send_error(res, 400, e, extra);
      } else {
        send_error(res, 422, e);
      }
    } catch (const duplicate_domain& e) {
      send_error(res, 400, e, {{"domain", e.domain}});
    } catch (const empty_input& e) {
      send_error(res, 400, e);
    } catch (const unknown_job& e) {
      send_error(res, 404, e);
    } catch (const unknown_publisher& e) {
      send_error(res, 404, e);
    } catch (const not_ready& e) {
      send_error(res, 409, e);
    } catch (const not_user_annotated& e) {
      send_error(res, 409, e);
    } catch (const error& e) {
      send_error(res, 422, e);
    } catch (const json::exception& e) {
      send_error(res, 400, error("bad_request", e.what()));
    }
  }

  static std::string param(const httplib::Request& req, const char* key, const std::string& fallback) {
    return req.has_param(key) ? req.get_param_value(key) : fallback;
  }

  static std::size_t size_param(const httplib::Request& req, const char* key, std::size_t fallback) {
    if (!req.has_param(key)) return fallback;
    try {
      return detail::env_uint(key, req.get_param_value(key));
    } catch (const error& e) {
      throw unprocessable(e.what());
    }
  }

  static PublisherId publisher_param(const std::string& raw) {
    const std::string url = raw.find("://") == std::string::npos ? "https://" + raw : raw;
    try {
      return extract_publisher(url);
    } catch (const error&) {
      throw unknown_publisher(raw);
    }
  }

  void create_job(const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> edges_text, base_text;
    json overrides = json::object();
    bool demo = false;
    if (req.is_multipart_form_data()) {
      for (const auto& [name, item] : req.files) {
        if (name == "edges" || name == "edge_list") edges_text = item.content;
        else if (name == "base_knowledge") base_text = item.content;
        else if (name == "demo") demo = item.content == "1" || item.content == "true";
        else overrides[name] = item.content;
      }
    } else {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        throw malformed_input({{0, std::string("request body is not JSON: ") + e.what()}}, false);
      }
      if (body.contains("edges")) edges_text = body.at("edges").get<std::string>();
      if (body.contains("base_knowledge") && !body.at("base_knowledge").is_null())
        base_text = body.at("base_knowledge").get<std::string>();
      demo = body.value("demo", false);
      if (body.contains("config")) overrides = body.at("config");
    }
    if (demo) {
      if (!settings_.demo_dir) throw unprocessable("no demo fixtures configured");
      auto slurp = [](const std::filesystem::path& p) -> std::optional<std::string> {
        std::ifstream in(p, std::ios::binary);
        if (!in) return std::nullopt;
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
      };
      edges_text = slurp(*settings_.demo_dir / "edges.csv");
      if (!base_text) base_text = slurp(*settings_.demo_dir / "base_knowledge.csv");
      if (!edges_text) throw unprocessable("demo edge list missing");
    }
    if (!edges_text) throw malformed_input({{0, "missing 'edges' upload"}}, false);

    PipelineConfig config;
    try {
      config = config_from_json(overrides, settings_.pipeline);
    } catch (const error& e) {
      throw unprocessable(e.what());
    }
    EdgeListOptions opts;
    if (settings_.max_edges > 0) opts.limit = settings_.max_edges;
    std::istringstream edges_in(*edges_text);
    auto edges = parse_edge_list(edges_in, opts);
    BaseKnowledge baseline;
    if (base_text) {
      std::istringstream base_in(*base_text);
      baseline = parse_base_knowledge(base_in);
    }
    auto job = store_.create(std::move(edges), std::move(baseline), config);
    send_json(res, 202, {{"id", job->id()}, {"phase", phase_name(job->phase())}});
  }

  void results(const httplib::Request& req, httplib::Response& res) {
    auto state = store_.ready_state(req.matches[1]);
    const auto key = param(req, "sort", "publisher");
    const auto order = param(req, "order", "asc");
    if (order != "asc" && order != "desc") throw unprocessable("order must be asc or desc");
    const std::size_t page = size_param(req, "page", 1);
    const std::size_t page_size = size_param(req, "page_size", 50);
    if (page < 1 || page_size < 1) throw unprocessable("page and page_size start at 1");

    using Key = std::function<double(const PublisherRecord&)>;
    static const std::map<std::string, Key> keys = {
        {"publisher", nullptr},
        {"state", [](const PublisherRecord& r) { return static_cast<double>(state_code(r.state)); }},
        {"score", [](const PublisherRecord& r) { return r.score ? *r.score : -1.0; }},
        {"confidence", [](const PublisherRecord& r) { return r.confidence; }},
        {"n_voters", [](const PublisherRecord& r) { return static_cast<double>(r.stats.n_voters); }},
        {"n_nec_urls", [](const PublisherRecord& r) { return static_cast<double>(r.stats.n_nec_urls); }},
        {"n_shares", [](const PublisherRecord& r) { return static_cast<double>(r.stats.n_shares); }},
    };
    auto it = keys.find(key);
    if (it == keys.end()) throw unprocessable("unknown sort key '" + key + "'");

    const auto states = param(req, "state", "");
    for (char c : states)
      if (c != 'A' && c != 'P' && c != 'U') throw unprocessable("state filter takes letters from 'APU'");
    const auto query = detail::lower(param(req, "q", ""));

    std::vector<const PublisherRecord*> rows;
    for (const auto& r : state->records) {  // publisher order
      if (!states.empty() && states.find(state_code(r.state)) == std::string::npos) continue;
      if (!query.empty() && r.publisher.str().find(query) == std::string::npos) continue;
      rows.push_back(&r);
    }
    const bool desc = order == "desc";
    if (it->second) {
      const auto& f = it->second;
      std::stable_sort(rows.begin(), rows.end(), [&](auto l, auto r) { return desc ? f(*l) > f(*r) : f(*l) < f(*r); });
    } else if (desc) {
      std::reverse(rows.begin(), rows.end());
    }
    json records = json::array();
    const std::size_t begin = (page - 1) * page_size;
    for (std::size_t k = begin; k < rows.size() && k < begin + page_size; ++k) records.push_back(record_to_json(*rows[k]));
    send_json(res, 200,
              {{"total", rows.size()}, {"page", page}, {"page_size", page_size}, {"records", std::move(records)}});
  }

  static json changed_records(const JobState& before, const JobState& after) {
    json out = json::array();
    for (std::size_t k = 0; k < after.records.size(); ++k)
      if (k >= before.records.size() || !(before.records[k] == after.records[k]))
        out.push_back(record_to_json(after.records[k]));
    return out;
  }

  static json record_of(const JobState& state, const PublisherId& p) {
    for (const auto& r : state.records)
      if (r.publisher == p) return record_to_json(r);
    return nullptr;
  }

  void annotate(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    store_.ready_state(id);
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      throw unprocessable("request body must be JSON {\"publisher\": ..., \"score\": ...}");
    }
    if (!body.contains("publisher") || !body.at("publisher").is_string())
      throw unprocessable("missing 'publisher'");
    if (!body.contains("score") || !body.at("score").is_number_integer())
      throw unprocessable("'score' must be an integer in [0, 100]");
    const auto score = body.at("score").get<long long>();
    if (score < 0 || score > 100) throw unprocessable("'score' must be an integer in [0, 100]");
    const auto publisher = publisher_param(body.at("publisher").get<std::string>());
    auto [before, after] = store_.mutate(
        id, [&](const JobState& s) { return apply_annotation(s, publisher, static_cast<int>(score)); });
    send_json(res, 200,
              {{"record", record_of(*after, publisher)},
               {"records", changed_records(*before, *after)},
               {"summary", summary_to_json(summary(*after))}});
  }

  void unannotate(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto publisher = publisher_param(httplib::detail::decode_url(req.matches[2], false));
    auto [before, after] = store_.mutate(id, [&](const JobState& s) { return remove_annotation(s, publisher); });
    send_json(res, 200,
              {{"record", record_of(*after, publisher)},
               {"records", changed_records(*before, *after)},
               {"summary", summary_to_json(summary(*after))}});
  }

  void suggestions(const httplib::Request& req, httplib::Response& res) {
    auto state = store_.ready_state(req.matches[1]);
    const std::size_t limit = size_param(req, "limit", 10);
    json out = json::array();
    for (const auto& r : rank_candidates(*state)) {
      if (out.size() >= limit) break;
      out.push_back({{"publisher", r.publisher.str()}, {"unlocked_voters", r.unlocked_voters}, {"n_nec_urls", r.n_nec_urls}});
    }
    send_json(res, 200, {{"suggestions", std::move(out)}});
  }

  ServiceSettings settings_;
  JobStore store_;
};

}  // namespace tropic
