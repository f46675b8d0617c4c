// tropic: one-shot trust scoring (`run`), HTTP service (`serve`) and
// synthetic demo data (`generate`).

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tropic/export.hpp"
#include "tropic/guidance.hpp"
#include "tropic/ingestion.hpp"
#include "tropic/service.hpp"
#include "tropic/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct ConfigFlags {
  std::optional<double> alpha, label_threshold, resolution, dispersion_scale, tolerance;
  std::optional<std::uint64_t> seed, max_iterations;
  std::optional<std::size_t> min_size;
  std::optional<std::uint32_t> halfpoint;
  std::optional<std::string> pvalue_mode, solver;

  void add(CLI::App* app) {
    app->add_option("--alpha", alpha, "false discovery rate for validated co-sharing");
    app->add_option("--label-threshold", label_threshold, "score at or above which a publisher is trustworthy");
    app->add_option("--seed", seed, "community detection seed");
    app->add_option("--resolution", resolution, "modularity resolution");
    app->add_option("--min-size", min_size, "smallest community kept");
    app->add_option("--pvalue-mode", pvalue_mode, "automatic, exact or poisson")
        ->check(CLI::IsMember({"automatic", "exact", "poisson"}));
    app->add_option("--solver", solver, "fixed_point or newton")->check(CLI::IsMember({"fixed_point", "newton"}));
    app->add_option("--tolerance", tolerance, "solver tolerance");
    app->add_option("--max-iterations", max_iterations, "solver iteration cap");
    app->add_option("--confidence-halfpoint", halfpoint, "voter count at which confidence is halved");
    app->add_option("--dispersion-scale", dispersion_scale, "profile spread that zeroes confidence");
  }

  tropic::PipelineConfig apply(tropic::PipelineConfig base) const {
    tropic::json j = tropic::json::object();
    if (alpha) j["alpha"] = *alpha;
    if (label_threshold) j["label_threshold"] = *label_threshold;
    if (seed) j["seed"] = *seed;
    if (resolution) j["resolution"] = *resolution;
    if (min_size) j["min_size"] = *min_size;
    if (pvalue_mode) j["pvalue_mode"] = *pvalue_mode;
    if (solver) j["solver_method"] = *solver;
    if (tolerance) j["solver_tolerance"] = *tolerance;
    if (max_iterations) j["solver_max_iterations"] = *max_iterations;
    if (halfpoint) j["confidence_halfpoint"] = *halfpoint;
    if (dispersion_scale) j["dispersion_scale"] = *dispersion_scale;
    return tropic::config_from_json(j, std::move(base));
  }
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tropic::error("io", "cannot open '" + path + "'");
  return in;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw tropic::error("io", "cannot write '" + path.string() + "'");
  out << content;
}

void report(const tropic::error& e) {
  std::fprintf(stderr, "tropic: %s: %s\n", e.code().c_str(), e.what());
  if (auto* m = dynamic_cast<const tropic::malformed_input*>(&e)) {
    std::size_t shown = 0;
    for (const auto& r : m->rows) {
      if (++shown > 20) break;
      std::fprintf(stderr, "  line %zu: %s\n", r.line_no, r.reason.c_str());
    }
  }
}

int run(const std::string& edges_path, const std::string& base_path, const std::string& output,
        std::optional<std::size_t> max_edges, bool only_annotated, const ConfigFlags& flags) {
  auto settings = tropic::settings_from_env();
  if (max_edges) settings.max_edges = *max_edges;
  const auto config = flags.apply(settings.pipeline);

  tropic::EdgeListOptions opts;
  if (settings.max_edges > 0) opts.limit = settings.max_edges;
  auto edges_in = open_input(edges_path);
  auto edges = tropic::parse_edge_list(edges_in, opts);
  tropic::BaseKnowledge baseline;
  if (!base_path.empty()) {
    auto base_in = open_input(base_path);
    baseline = tropic::parse_base_knowledge(base_in);
  }
  const auto state = tropic::run_pipeline(std::move(edges), std::move(baseline), config, [](tropic::Phase p) {
    std::fprintf(stderr, "%s\n", tropic::phase_name(p));
  });
  const auto csv = tropic::export_csv(state.records, only_annotated);
  if (output.empty() || output == "-") {
    std::cout << csv;
  } else {
    write_file(output, csv);
  }
  const auto s = tropic::summary(state);
  std::fprintf(stderr, "%zu publishers: %zu annotated, %zu predicted, %zu unclassified\n", state.records.size(),
               s.annotated, s.predicted, s.unclassified);
  return 0;
}

httplib::Server* g_server = nullptr;

int serve(std::optional<std::string> bind, std::optional<std::string> demo_dir, const ConfigFlags& flags) {
  auto settings = tropic::settings_from_env();
  if (bind) settings.bind_addr = *bind;
  if (demo_dir) settings.demo_dir = *demo_dir;
  settings.pipeline = flags.apply(settings.pipeline);

  const auto colon = settings.bind_addr.rfind(':');
  if (colon == std::string::npos) throw tropic::invalid_argument("bind address must be host:port");
  const std::string host = settings.bind_addr.substr(0, colon);
  const int port = std::stoi(settings.bind_addr.substr(colon + 1));

  tropic::Service service(settings);
  service.precompute_demo();
  httplib::Server server;
  service.mount(server);
  g_server = &server;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  std::fprintf(stderr, "listening on %s:%d\n", host.c_str(), port);
  if (!server.listen(host, port)) throw tropic::error("io", "cannot listen on " + settings.bind_addr);
  return 0;
}

int generate(const std::string& dir, tropic::synthetic::PlantedConfig cfg) {
  const auto data = tropic::synthetic::planted_discussion(cfg);
  fs::create_directories(dir);
  std::ostringstream edges, base, truth;
  edges << "url,user_id\n";
  tropic::write_edge_list(data.edges, edges);
  base << "domain,score\n";
  tropic::write_base_knowledge(data.annotated, base);
  truth << "domain,score,trusted\n";
  for (const auto& [id, score] : data.truth) truth << id.str() << ',' << score << ',' << data.trusted.at(id) << '\n';
  write_file(fs::path(dir) / "edges.csv", edges.str());
  write_file(fs::path(dir) / "base_knowledge.csv", base.str());
  write_file(fs::path(dir) / "truth.csv", truth.str());
  std::fprintf(stderr, "%zu edges, %zu annotated of %zu publishers\n", data.edges.size(), data.annotated.size(),
               data.truth.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust scoring of news publishers from sharing communities"};
  app.require_subcommand(1);

  std::string edges_path, base_path, output;
  std::optional<std::size_t> max_edges;
  bool only_annotated = false;
  ConfigFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "score an edge list and write the export CSV");
  run_cmd->add_option("edges", edges_path, "edge list (url,user_id)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-b,--base-knowledge", base_path, "annotated domains (domain,score)")->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--output", output, "output CSV, '-' for stdout");
  run_cmd->add_option("--max-edges", max_edges, "edge cap, 0 disables");
  run_cmd->add_flag("--only-annotated", only_annotated, "export annotated publishers only");
  run_flags.add(run_cmd);

  std::optional<std::string> bind, demo_dir;
  ConfigFlags serve_flags;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option("--bind", bind, "host:port");
  serve_cmd->add_option("--demo-dir", demo_dir, "directory with edges.csv and base_knowledge.csv");
  serve_flags.add(serve_cmd);

  std::string gen_dir;
  tropic::synthetic::PlantedConfig planted;
  auto* gen_cmd = app.add_subcommand("generate", "write a synthetic discussion with planted communities");
  gen_cmd->add_option("dir", gen_dir, "output directory")->required();
  gen_cmd->add_option("--users", planted.users);
  gen_cmd->add_option("--publishers", planted.publishers);
  gen_cmd->add_option("--urls-per-publisher", planted.urls_per_publisher);
  gen_cmd->add_option("--annotated-fraction", planted.annotated_fraction);
  gen_cmd->add_option("--seed", planted.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(edges_path, base_path, output, max_edges, only_annotated, run_flags);
    if (*serve_cmd) return serve(bind, demo_dir, serve_flags);
    if (*gen_cmd) return generate(gen_dir, planted);
  } catch (const tropic::limit_exceeded& e) {
    report(e);
    return 3;
  } catch (const tropic::error& e) {
    report(e);
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "tropic: %s\n", e.what());
    return 1;
  }
  return 0;
}
