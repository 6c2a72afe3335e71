#include "woc/experiment/run.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "woc/bus/inprocess.hpp"
#include "woc/bus/tcp.hpp"
#include "woc/cells/heatmap.hpp"
#include "woc/clients/controller_client.hpp"
#include "woc/clients/converter_client.hpp"
#include "woc/clients/grid_client.hpp"
#include "woc/grid/network_io.hpp"
#include "woc/util/svg.hpp"
#include "woc/util/text.hpp"

extern char** environ;

namespace woc::experiment {

namespace fs = std::filesystem;
using util::format_double;

CellsVariant analyse_cells(const grid::Network& net, std::size_t k) {
  CellsVariant v;
  const auto pu = grid::to_per_unit(net);
  const auto sol = powerflow::solve_power_flow(pu);
  if (!sol.converged) throw cells::CellError("flat-start power flow did not converge");
  v.pipeline = cells::distance_pipeline(pu, sol);
  v.partition = cells::cluster_cells(v.pipeline.normalized, k, net);
  v.contiguous = cells::cells_contiguous(v.partition, net);
  v.weak_coupling = cells::count_above(v.pipeline.normalized, 0.5);
  return v;
}

std::string partition_csv(const cells::CellPartition& p) {
  std::string out = "cell,member,role\n";
  for (std::size_t c = 0; c < p.k; ++c) {
    for (const auto& b : p.members(c)) out += fmt::format("{},{},bus\n", c + 1, b);
    for (const auto& [b, cell] : p.attached) {
      if (cell == c) out += fmt::format("{},{},attached\n", c + 1, b);
    }
    if (c < p.devices.size()) {
      for (const auto& d : p.devices[c]) out += fmt::format("{},{},device\n", c + 1, d);
    }
  }
  return out;
}

Scenario prepare_scenario(const ExperimentConfig& config) {
  config.validate();
  Scenario s;
  s.config = config;
  try {
    s.network = grid::parse_network(config.resolve(config.network));
    if (config.modified) {
      for (const auto& [id, len] : config.line_lengths) s.network = grid::modify_line_length(s.network, id, len);
    }
    s.network.validate();
    s.load = clients::load_profile(config.resolve(config.load_profile));
    s.irradiance = clients::load_profile(config.resolve(config.irradiance_profile));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  for (const auto* p : {&s.load, &s.irradiance}) {
    if (p->size() < config.schedule.steps) {
      throw ConfigError(fmt::format("profile has {} points, schedule needs {}", p->size(), config.schedule.steps));
    }
    if (p->step_seconds != config.schedule.step_seconds) {
      throw ConfigError(fmt::format("profile step of {} s differs from the schedule's {} s", p->step_seconds,
                                    config.schedule.step_seconds));
    }
  }
  if (config.has_client("converter")) {
    const auto* g = s.network.find_generator(config.converter.generator);
    if (!g || !g->external) {
      throw ConfigError(fmt::format("converter generator '{}' must be an external generator of the network",
                                    config.converter.generator));
    }
    if (g->bus != config.converter.bus) {
      throw ConfigError(fmt::format("converter generator '{}' sits at {}, not {}", g->id, g->bus, config.converter.bus));
    }
  }
  if (config.k >= 1) {
    try {
      s.partition = analyse_cells(s.network, config.k).partition;
      s.partition->validate_for_ppvc();
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("cell partition with k={}: {}", config.k, e.what()));
    }
  }
  return s;
}

std::unique_ptr<bus::Client> make_client(const std::string& role, const Scenario& s) {
  const auto& c = s.config;
  clients::ConverterState conv;
  conv.rated_s_kva = c.converter.rated_s_kva;
  conv.q_max_kvar = c.converter.q_max_kvar;
  conv.p_peak_kw = c.converter.p_peak_kw;
  if (role == "grid") {
    clients::GridClientOptions o;
    o.band = c.band;
    o.relaxation_iterations = c.relaxation_iterations;
    if (c.has_client("converter")) {
      o.relaxation = clients::RelaxationModel{c.converter.generator, c.converter.bus, conv, c.droop};
    }
    return std::make_unique<clients::GridClient>(clients::StepModel(s.network, s.load, s.irradiance), o);
  }
  if (role == "converter") {
    clients::ConverterClientOptions o;
    o.generator = c.converter.generator;
    o.bus = c.converter.bus;
    o.converter = conv;
    o.curve = c.droop;
    o.irradiance = s.irradiance;
    return std::make_unique<clients::ConverterClient>(o);
  }
  if (role == "controller") {
    if (!s.partition) throw RunError("controller requires k >= 1");
    clients::ControllerOptions o;
    o.cadence = c.cadence;
    o.seed = c.seed;
    o.settings.band = c.band;
    o.settings.penalty_weight = c.penalty_weight;
    o.settings.de = c.de;
    return std::make_unique<clients::ControllerClient>(clients::StepModel(s.network, s.load, s.irradiance),
                                                       *s.partition, o);
  }
  if (role == "recorder") return std::make_unique<clients::Recorder>();
  throw RunError(fmt::format("unknown client role '{}'", role));
}

void apply_overrides(ExperimentConfig& c, const RunOverrides& o) {
  if (o.transport) c.transport = *o.transport;
  if (o.pacing) c.schedule.pacing = *o.pacing;
  if (o.speedup) c.schedule.speedup = *o.speedup;
  if (o.seed) {
    c.seed = *o.seed;
    c.de.seed = *o.seed;
  }
  if (o.output_dir) c.output_dir = fs::absolute(*o.output_dir).string();
}

ScenarioResult summarize(const Scenario& s, const clients::RecordStore& store) {
  ScenarioResult r;
  r.name = s.config.name;
  r.k = s.config.k;
  r.modified = s.config.modified;
  r.steps = s.config.schedule.steps;
  r.step_seconds = s.config.schedule.step_seconds;
  r.config_hash = config_hash(s.config);
  r.profile_hash = util::fnv1a(clients::serialize_profile(s.load) + clients::serialize_profile(s.irradiance));
  r.losses_mw = store.numbers(clients::kLossesTopic);
  r.v_min = store.numbers("signal/grid/v_min");
  r.v_max = store.numbers("signal/grid/v_max");
  r.violations = store.numbers("signal/grid/violations");
  for (double l : r.losses_mw) r.energy_losses_mwh += l * r.step_seconds / 3600.0;
  for (double v : r.violations) r.violation_count += static_cast<std::uint64_t>(v);
  const auto diagnostics = store.series(clients::kDiagnosticTopic);
  if (!diagnostics.empty()) {
    r.failure = fmt::format("grid diagnostic at step {}: {}", diagnostics.front()->step, diagnostics.front()->value);
  } else if (r.losses_mw.size() != r.steps) {
    r.failure = fmt::format("loss series has {} of {} steps", r.losses_mw.size(), r.steps);
  }
  r.completed = r.failure.empty();
  return r;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Transported {
  bus::HubOutcome outcome;
  bus::EventLog log;
  bus::Transcript transcript;
  clients::RecordStore store;
  std::vector<std::string> client_errors;
};

Transported run_in_process(const Scenario& s) {
  const auto& c = s.config;
  bus::HubOptions ho;
  ho.logical_clock = c.schedule.pacing == bus::Pacing::Fast;
  bus::InProcessHub hub(c.manifest(), ho);
  std::vector<std::unique_ptr<bus::Client>> owned;
  clients::Recorder* recorder = nullptr;
  for (const auto& e : c.roster()) {
    owned.push_back(make_client(e.name, s));
    if (e.name == "recorder") recorder = static_cast<clients::Recorder*>(owned.back().get());
    hub.attach(*owned.back());
  }
  Transported t;
  t.outcome = hub.run();
  t.log = hub.broker().log();
  t.transcript = hub.transcript();
  if (recorder) t.store = recorder->store();
  return t;
}

Transported run_tcp_threads(const Scenario& s) {
  const auto& c = s.config;
  bus::TcpBrokerServer server(c.manifest(), bus::TcpServerOptions{"127.0.0.1", c.port, 5.0});
  server.start();
  std::vector<std::unique_ptr<bus::Client>> owned;
  clients::Recorder* recorder = nullptr;
  for (const auto& e : c.roster()) {
    owned.push_back(make_client(e.name, s));
    if (e.name == "recorder") recorder = static_cast<clients::Recorder*>(owned.back().get());
  }
  std::mutex errors_mutex;
  Transported t;
  std::vector<std::thread> threads;
  for (auto& client : owned) {
    threads.emplace_back([&, cl = client.get()] {
      try {
        auto res = bus::run_tcp_client(*cl, "127.0.0.1", server.port());
        std::lock_guard lk(errors_mutex);
        for (auto& e : res.errors) t.client_errors.push_back(fmt::format("{}: {}", cl->name(), e));
      } catch (const std::exception& e) {
        {
          std::lock_guard lk(errors_mutex);
          t.client_errors.push_back(fmt::format("{}: {}", cl->name(), e.what()));
        }
        server.abort(fmt::format("client '{}' failed: {}", cl->name(), e.what()));
      }
    });
  }
  t.outcome = server.wait();
  for (auto& th : threads) th.join();
  t.log = server.log();
  t.transcript = server.transcript();
  if (recorder) t.store = recorder->store();
  return t;
}

Transported run_spawned(const Scenario& s, const RunOverrides& o, const std::string& out_dir) {
  const auto& c = s.config;
  if (o.executable.empty() || o.config_path.empty()) throw RunError("spawn transport needs the executable and config path");
  bus::TcpBrokerServer server(c.manifest(), bus::TcpServerOptions{"127.0.0.1", c.port, 5.0});
  server.start();
  std::vector<std::pair<pid_t, std::string>> children;
  for (const auto& e : c.roster()) {
    std::vector<std::string> args = {o.executable, "client", e.name, o.config_path,
                                     "--port", std::to_string(server.port()), "--seed", std::to_string(c.seed),
                                     "--out", out_dir};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    pid_t pid = 0;
    if (int rc = ::posix_spawn(&pid, o.executable.c_str(), nullptr, nullptr, argv.data(), environ); rc != 0) {
      server.abort(fmt::format("cannot spawn client '{}': {}", e.name, std::strerror(rc)));
      break;
    }
    children.emplace_back(pid, e.name);
  }
  Transported t;
  std::atomic<bool> broker_done{false};
  std::thread supervisor([&] {
    std::size_t alive = children.size();
    std::vector<bool> reaped(children.size(), false);
    std::optional<std::chrono::steady_clock::time_point> done_at;
    while (alive > 0) {
      for (std::size_t i = 0; i < children.size(); ++i) {
        if (reaped[i]) continue;
        int status = 0;
        if (::waitpid(children[i].first, &status, WNOHANG) == children[i].first) {
          reaped[i] = true;
          --alive;
          const bool ok = WIFEXITED(status) && WEXITSTATUS(status) == 0;
          if (!ok) {
            auto why = WIFEXITED(status) ? fmt::format("exited with status {}", WEXITSTATUS(status))
                                         : fmt::format("killed by signal {}", WTERMSIG(status));
            t.client_errors.push_back(fmt::format("{}: {}", children[i].second, why));
            server.abort(fmt::format("client '{}' {}", children[i].second, why));
          }
        }
      }
      if (broker_done && !done_at) done_at = std::chrono::steady_clock::now();
      if (done_at && seconds_since(*done_at) > 10.0) {
        for (std::size_t i = 0; i < children.size(); ++i) {
          if (!reaped[i]) ::kill(children[i].first, SIGKILL);
        }
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });
  t.outcome = server.wait();
  broker_done = true;
  supervisor.join();
  t.log = server.log();
  t.transcript = server.transcript();
  const auto csv = (fs::path(out_dir) / "recorder.csv").string();
  if (fs::exists(csv)) t.store = clients::RecordStore::import_csv(csv);
  return t;
}

std::string losses_csv(const ScenarioResult& r) {
  std::string out = "step,losses_mw,v_min,v_max,violations\n";
  for (std::size_t i = 0; i < r.losses_mw.size(); ++i) {
    auto at = [&](const std::vector<double>& v) { return i < v.size() ? format_double(v[i]) : std::string(); };
    out += fmt::format("{},{},{},{},{}\n", i + 1, format_double(r.losses_mw[i]), at(r.v_min), at(r.v_max),
                       at(r.violations));
  }
  return out;
}

}  // namespace

ScenarioResult run_experiment(const ExperimentConfig& config, const RunOverrides& overrides) {
  ExperimentConfig c = config;
  apply_overrides(c, overrides);
  const auto scenario = prepare_scenario(c);
  const std::string out_dir = c.resolve(c.output_dir);
  fs::create_directories(out_dir);
  util::write_file((fs::path(out_dir) / "config.cfg").string(), serialize_config(c));
  if (scenario.partition) util::write_file((fs::path(out_dir) / "partition.csv").string(), partition_csv(*scenario.partition));

  const auto t0 = std::chrono::steady_clock::now();
  Transported t;
  switch (c.transport) {
    case Transport::InProcess: t = run_in_process(scenario); break;
    case Transport::TcpThreads: t = run_tcp_threads(scenario); break;
    case Transport::Spawn: t = run_spawned(scenario, overrides, out_dir); break;
  }

  ScenarioResult r = summarize(scenario, t.store);
  r.wall_seconds = seconds_since(t0);
  r.output_dir = out_dir;
  r.recorder_csv = (fs::path(out_dir) / "recorder.csv").string();
  if (!t.outcome.finished) {
    r.completed = false;
    r.failure = t.outcome.reason.empty() ? "broker did not finish" : t.outcome.reason;
  }
  if (!r.completed && !t.client_errors.empty()) r.failure += fmt::format(" ({})", t.client_errors.front());

  if (c.transport != Transport::Spawn || !fs::exists(r.recorder_csv)) t.store.export_csv(r.recorder_csv);
  util::write_file((fs::path(out_dir) / "losses.csv").string(), losses_csv(r));
  util::write_file((fs::path(out_dir) / "events.log").string(), t.log.timed_text());
  if (c.transport != Transport::InProcess) {
    util::write_file((fs::path(out_dir) / "transcript.txt").string(), bus::transcript_text(t.transcript));
  }
  util::write_file((fs::path(out_dir) / "losses.svg").string(),
                   util::svg::line_chart({{"losses", r.losses_mw}}, c.name + " total losses", "step", "MW"));
  write_result(r, out_dir);
  return r;
}

void write_result(const ScenarioResult& r, const std::string& dir) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["k"] = r.k;
  j["modified"] = r.modified;
  j["completed"] = r.completed;
  j["failure"] = r.failure;
  j["steps"] = r.steps;
  j["step_seconds"] = r.step_seconds;
  j["energy_losses_mwh"] = r.energy_losses_mwh;
  j["violation_count"] = r.violation_count;
  j["config_hash"] = fmt::format("{:016x}", r.config_hash);
  j["profile_hash"] = fmt::format("{:016x}", r.profile_hash);
  j["wall_seconds"] = r.wall_seconds;
  j["recorder_csv"] = "recorder.csv";
  j["losses_csv"] = "losses.csv";
  util::write_file((fs::path(dir) / "result.json").string(), j.dump(2) + "\n");
}

ScenarioResult read_result(const std::string& dir) {
  const auto path = (fs::path(dir) / "result.json").string();
  ScenarioResult r;
  try {
    const auto j = nlohmann::json::parse(util::read_file(path));
    r.name = j.at("name").get<std::string>();
    r.k = j.at("k").get<std::size_t>();
    r.modified = j.at("modified").get<bool>();
    r.completed = j.at("completed").get<bool>();
    r.failure = j.at("failure").get<std::string>();
    r.steps = j.at("steps").get<std::uint64_t>();
    r.step_seconds = j.at("step_seconds").get<double>();
    r.energy_losses_mwh = j.at("energy_losses_mwh").get<double>();
    r.violation_count = j.at("violation_count").get<std::uint64_t>();
    r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    r.profile_hash = std::stoull(j.at("profile_hash").get<std::string>(), nullptr, 16);
    r.wall_seconds = j.value("wall_seconds", 0.0);
  } catch (const std::exception& e) {
    throw RunError(fmt::format("{}: {}", path, e.what()));
  }
  r.output_dir = dir;
  r.recorder_csv = (fs::path(dir) / "recorder.csv").string();
  const auto losses = (fs::path(dir) / "losses.csv").string();
  if (fs::exists(losses)) {
    bool header = true;
    for (auto line : util::split(util::read_file(losses), '\n')) {
      if (line.empty()) continue;
      if (header) {
        header = false;
        continue;
      }
      auto f = util::split(line, ',');
      double v = 0.0;
      if (f.size() >= 2 && util::parse_double(f[1], v)) r.losses_mw.push_back(v);
      if (f.size() >= 5) {
        if (util::parse_double(f[2], v)) r.v_min.push_back(v);
        if (util::parse_double(f[3], v)) r.v_max.push_back(v);
        if (util::parse_double(f[4], v)) r.violations.push_back(v);
      }
    }
  }
  return r;
}

Comparison compare_scenarios(const std::vector<ScenarioResult>& results) {
  if (results.size() < 2) throw RunError("comparison needs at least two results");
  for (const auto& r : results) {
    if (!r.completed) {
      throw RunError(fmt::format("result '{}' did not complete: {}", r.name, r.failure));
    }
  }
  const auto& first = results.front();
  for (const auto& r : results) {
    if (r.steps != first.steps || r.step_seconds != first.step_seconds || r.profile_hash != first.profile_hash) {
      throw RunError(fmt::format("mismatched schedules: '{}' and '{}'", first.name, r.name));
    }
  }
  Comparison c;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].k == 0) {
      c.base = i;
      break;
    }
  }
  const double base = results[c.base].energy_losses_mwh;
  for (const auto& r : results) {
    c.rows.push_back(ComparisonRow{r.name, r.k, r.modified, r.energy_losses_mwh,
                                   r.energy_losses_mwh / base, r.violation_count});
  }
  std::vector<std::size_t> order(c.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.rows[a].k < c.rows[b].k; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto& lo = c.rows[order[i - 1]];
    const auto& hi = c.rows[order[i]];
    if (hi.k > lo.k && hi.normalized > lo.normalized) {
      c.monotone_in_k = false;
      c.counterexamples.push_back(fmt::format("k={} ({}) above k={} ({})", hi.k, format_double(hi.normalized), lo.k,
                                              format_double(lo.normalized)));
    }
  }
  return c;
}

std::string comparison_csv(const Comparison& c) {
  std::string out = "scenario,k,modified,energy_losses_mwh,normalized_losses,violations\n";
  for (const auto& r : c.rows) {
    out += util::csv_row({r.name, std::to_string(r.k), r.modified ? "true" : "false", format_double(r.energy_losses_mwh),
                          format_double(r.normalized), std::to_string(r.violation_count)});
    out += '\n';
  }
  out += fmt::format("# base,{}\n# monotone_in_k,{}\n", c.rows[c.base].name, c.monotone_in_k ? "true" : "false");
  for (const auto& ce : c.counterexamples) out += fmt::format("# counterexample,{}\n", util::csv_field(ce));
  return out;
}

void write_comparison(const Comparison& c, const std::string& dir) {
  util::write_file((fs::path(dir) / "comparison.csv").string(), comparison_csv(c));
  std::vector<std::string> labels;
  std::vector<double> values;
  for (const auto& r : c.rows) {
    labels.push_back(r.name);
    values.push_back(r.normalized);
  }
  util::write_file((fs::path(dir) / "comparison.svg").string(),
                   util::svg::bar_chart(labels, values, "Normalized losses", "losses / base case"));
}

CellsReport cells_report(const std::string& network_path, std::size_t k, bool modified, const std::string& out_dir) {
  CellsReport rep;
  const auto net = grid::parse_network(network_path);
  rep.original = analyse_cells(net, k);
  auto emit = [&](const CellsVariant& v, const std::string& tag) {
    auto files = cells::export_heatmap(v.pipeline.normalized, (fs::path(out_dir) / ("heatmap_" + tag + ".csv")).string());
    rep.files.push_back(files.csv);
    if (!files.image.empty()) rep.files.push_back(files.image);
    const auto part = (fs::path(out_dir) / ("partition_" + tag + ".csv")).string();
    util::write_file(part, partition_csv(v.partition));
    rep.files.push_back(part);
  };
  emit(rep.original, "original");
  if (modified) {
    auto mod = net;
    for (const auto& [id, len] : line_length_study()) mod = grid::modify_line_length(mod, id, len);
    rep.modified = analyse_cells(mod, k);
    emit(*rep.modified, "modified");
  }
  return rep;
}

}  // namespace woc::experiment
