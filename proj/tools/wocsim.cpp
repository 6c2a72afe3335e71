// wocsim: co-simulation experiments for cell-based voltage control.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "woc/bus/tcp.hpp"
#include "woc/clients/recorder.hpp"
#include "woc/experiment/config.hpp"
#include "woc/experiment/run.hpp"
#include "woc/util/sectioned.hpp"
#include "woc/util/text.hpp"

namespace fs = std::filesystem;
using namespace woc;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeAbort = 3;

std::string self_executable(const char* argv0) {
  std::error_code ec;
  auto p = fs::read_symlink("/proc/self/exe", ec);
  if (!ec) return p.string();
  return fs::absolute(argv0).string();
}

int cmd_run(const std::string& config_path, const experiment::RunOverrides& o) {
  auto cfg = experiment::load_config(config_path);
  auto r = experiment::run_experiment(cfg, o);
  fmt::print("scenario   {}\n", r.name);
  fmt::print("cells      k={}{}\n", r.k, r.modified ? " (modified lines)" : "");
  fmt::print("steps      {}/{}\n", r.losses_mw.size(), r.steps);
  fmt::print("losses     {:.6f} MWh\n", r.energy_losses_mwh);
  fmt::print("violations {}\n", r.violation_count);
  fmt::print("wall time  {:.2f} s\n", r.wall_seconds);
  fmt::print("output     {}\n", r.output_dir);
  if (!r.completed) {
    fmt::print(stderr, "experiment failed: {}\n", r.failure);
    return kRuntimeAbort;
  }
  return kOk;
}

int cmd_cells(const std::string& network, std::size_t k, bool modified, const std::string& out) {
  auto rep = experiment::cells_report(network, k, modified, out);
  auto show = [](const char* tag, const experiment::CellsVariant& v) {
    fmt::print("{}: {} cells, contiguous={}, D_norm entries > 0.5: {}\n", tag, v.partition.k,
               v.contiguous ? "yes" : "no", v.weak_coupling);
    for (std::size_t c = 0; c < v.partition.k; ++c) {
      fmt::print("  cell {}: {}", c + 1, fmt::join(v.partition.members(c), " "));
      if (c < v.partition.devices.size() && !v.partition.devices[c].empty()) {
        fmt::print("  [{}]", fmt::join(v.partition.devices[c], " "));
      }
      fmt::print("\n");
    }
  };
  show("original", rep.original);
  if (rep.modified) show("modified", *rep.modified);
  for (const auto& f : rep.files) fmt::print("wrote {}\n", f);
  return kOk;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<experiment::ScenarioResult> results;
  for (const auto& d : dirs) results.push_back(experiment::read_result(d));
  auto cmp = experiment::compare_scenarios(results);
  fs::create_directories(out);
  experiment::write_comparison(cmp, out);
  std::cout << experiment::comparison_csv(cmp);
  return kOk;
}

int cmd_serve(const std::string& config_path, std::uint16_t port, const std::string& out) {
  auto cfg = experiment::load_config(config_path);
  bus::TcpBrokerServer server(cfg.manifest(), bus::TcpServerOptions{"0.0.0.0", port, 5.0});
  server.start();
  fmt::print("broker listening on port {}\n", server.port());
  std::fflush(stdout);
  auto outcome = server.wait();
  if (!out.empty()) {
    util::write_file((fs::path(out) / "events.log").string(), server.log().timed_text());
    util::write_file((fs::path(out) / "transcript.txt").string(), bus::transcript_text(server.transcript()));
  }
  if (!outcome.finished) {
    fmt::print(stderr, "broker aborted: {}\n", outcome.reason);
    return kRuntimeAbort;
  }
  return kOk;
}

int cmd_client(const std::string& role, const std::string& config_path, std::uint16_t port,
               const experiment::RunOverrides& o) {
  auto cfg = experiment::load_config(config_path);
  experiment::apply_overrides(cfg, o);
  const auto scenario = experiment::prepare_scenario(cfg);
  auto client = experiment::make_client(role, scenario);
  auto res = bus::run_tcp_client(*client, "127.0.0.1", port);
  if (auto* rec = dynamic_cast<clients::Recorder*>(client.get())) {
    rec->store().export_csv((fs::path(cfg.resolve(cfg.output_dir)) / "recorder.csv").string());
  }
  for (const auto& e : res.errors) fmt::print(stderr, "{}: {}\n", role, e);
  return res.shutdown_received ? kOk : kRuntimeAbort;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Co-simulation of cell-based post-primary voltage control"};
  app.require_subcommand(1);

  experiment::RunOverrides overrides;
  bool fast = false;
  bool paced = false;
  bool spawn = false;
  double speedup = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string transport;

  auto add_common = [&](CLI::App* sub) {
    auto* f = sub->add_flag("--fast", fast, "as fast as possible");
    auto* p = sub->add_flag("--paced", paced, "wall-clock pacing");
    f->excludes(p);
    sub->add_option("--speedup", speedup, "paced mode speed-up factor")->check(CLI::PositiveNumber);
    sub->add_flag("--spawn", spawn, "run clients as separate processes over TCP");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out, "output directory");
  };

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment");
  run->add_option("config", config_path, "experiment config")->required();
  run->add_option("--transport", transport, "in-process, tcp-threads or spawn");
  add_common(run);

  std::string network;
  std::size_t k = 3;
  bool modified = false;
  auto* cells = app.add_subcommand("cells", "electrical distance heatmaps and cell partition");
  cells->add_option("network", network, "network file")->required();
  cells->add_option("--k", k, "number of cells")->required()->check(CLI::PositiveNumber);
  cells->add_flag("--modified", modified, "also analyse the line-length study (line1, line2, line12)");
  cells->add_option("--out", out, "output directory");

  std::vector<std::string> result_dirs;
  auto* compare = app.add_subcommand("compare", "compare finished experiments");
  compare->add_option("results", result_dirs, "result directories")->required()->expected(2, -1);
  compare->add_option("--out", out, "output directory");

  std::uint16_t port = bus::kDefaultPort;
  auto* serve = app.add_subcommand("serve", "standalone broker");
  serve->add_option("config", config_path, "experiment config")->required();
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--out", out, "directory for the event log and transcript");

  std::string role;
  auto* client = app.add_subcommand("client", "");
  client->group("");
  client->add_option("role", role)->required();
  client->add_option("config", config_path)->required();
  client->add_option("--port", port)->required();
  client->add_option("--seed", seed);
  client->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  if (seed != 0 || (run->count("--seed") + client->count("--seed")) > 0) overrides.seed = seed;
  if (!out.empty()) overrides.output_dir = out;
  if (fast) overrides.pacing = bus::Pacing::Fast;
  if (paced) overrides.pacing = bus::Pacing::Paced;
  if (speedup > 0) overrides.speedup = speedup;
  if (spawn) overrides.transport = experiment::Transport::Spawn;

  try {
    if (*run) {
      if (!transport.empty()) {
        auto t = experiment::transport_from_string(transport);
        if (!t) {
          fmt::print(stderr, "unknown transport '{}'\n", transport);
          return kConfigError;
        }
        if (!spawn) overrides.transport = *t;
      }
      overrides.executable = self_executable(argv[0]);
      overrides.config_path = fs::absolute(config_path).string();
      return cmd_run(config_path, overrides);
    }
    if (*cells) return cmd_cells(network, k, modified, out.empty() ? "cells" : out);
    if (*compare) return cmd_compare(result_dirs, out.empty() ? "comparison" : out);
    if (*serve) return cmd_serve(config_path, port, out);
    if (*client) return cmd_client(role, config_path, port, overrides);
  } catch (const experiment::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const util::ParseError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntimeAbort;
  }
  return kOk;
}
