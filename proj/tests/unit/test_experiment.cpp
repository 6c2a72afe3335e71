#include "doctest.h"
#include "support.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <regex>

#include <fmt/format.h>

#include "woc/clients/profile.hpp"
#include "woc/clients/recorder.hpp"
#include "woc/experiment/config.hpp"
#include "woc/experiment/run.hpp"
#include "woc/powerflow/power_flow.hpp"
#include "woc/util/text.hpp"

using namespace woc;
using namespace woc::experiment;
namespace fs = std::filesystem;

namespace {

std::string reference_text() { return util::read_file(testing::data_path("experiment.cfg")); }

// Replaces `key,<old>` in the [experiment] section.
std::string with(std::string text, const std::string& key, const std::string& value) {
  std::regex re("\n" + key + ",[^\n]*");
  return std::regex_replace(text, re, "\n" + key + "," + value, std::regex_constants::format_first_only);
}

std::string roster(std::string text, const std::string& clients) {
  std::regex re("\\[clients\\]\nname,mode\n(?:[a-z]+,[a-z-]+\n)+");
  return std::regex_replace(text, re, "[clients]\nname,mode\n" + clients);
}

ExperimentConfig config(const std::string& text, const std::string& out) {
  auto c = parse_config(text, "<test>", std::string(WOC_DATA_DIR));
  c.output_dir = out;
  return c;
}

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(WOCSIM_EXE) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const std::string kNoController = "grid,stepped\nconverter,stepped\nrecorder,free-running\n";

}  // namespace

TEST_CASE("config parses and round-trips") {
  auto c = parse_config(reference_text(), "experiment.cfg", WOC_DATA_DIR);
  CHECK(c.name == "k3-modified");
  CHECK(c.schedule.steps == 1440);
  CHECK(c.schedule.step_seconds == 60.0);
  CHECK(c.k == 3);
  CHECK(c.modified);
  CHECK(c.cadence == 15);
  CHECK(c.clients.size() == 4);
  CHECK(c.line_lengths == line_length_study());
  CHECK(c.droop.knots.size() == 4);
  const auto again = parse_config(serialize_config(c), "snapshot", WOC_DATA_DIR);
  CHECK(serialize_config(again) == serialize_config(c));
  CHECK(config_hash(again) == config_hash(c));
  CHECK(c.roster().size() == 4);
  c.k = 0;
  CHECK(c.roster().size() == 3);
}

TEST_CASE("config hash changes iff a field changes") {
  const auto text = reference_text();
  const auto h = config_hash(parse_config(text));
  CHECK(config_hash(parse_config(text)) == h);
  // comments and blank lines are not fields
  CHECK(config_hash(parse_config("# note\n\n" + text)) == h);
  for (auto [key, value] : std::vector<std::pair<std::string, std::string>>{{"steps", "1439"},
                                                                           {"seed", "2"},
                                                                           {"k", "2"},
                                                                           {"de_mutation", "0.71"},
                                                                           {"v_hi", "1.06"},
                                                                           {"pacing", "paced"},
                                                                           {"cadence", "16"},
                                                                           {"name", "other"}}) {
    CAPTURE(key);
    CHECK(config_hash(parse_config(with(text, key, value))) != h);
  }
  auto c = parse_config(text);
  c.droop.knots[0].u = 0.94;
  CHECK(config_hash(c) != h);
  c = parse_config(text);
  c.line_lengths["line12"] = 6.2;
  CHECK(config_hash(c) != h);
}

TEST_CASE("config errors") {
  const auto text = reference_text();
  CHECK_THROWS_AS(parse_config(with(text, "steps", "0")), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(with(text, "steps", "many")), doctest::Contains("<config>:13:"), ConfigError);
  CHECK_THROWS_AS(parse_config(with(text, "k", "-1")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(text, "transport", "carrier-pigeon")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(text, "v_lo", "1.1")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(text, "de_population", "3")), ConfigError);
  CHECK_THROWS_AS(parse_config(text + "\n[experiment]\nkey,value\nbogus,1\n"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(with(text, "name", "x\nbogus,1")), doctest::Contains("bogus"), ConfigError);
  CHECK_THROWS_AS(parse_config(roster(text, "converter,stepped\nrecorder,free-running\n")), ConfigError);
  CHECK_THROWS_AS(parse_config(roster(text, kNoController)), ConfigError);
  CHECK_NOTHROW(parse_config(roster(with(text, "k", "0"), kNoController)));
  CHECK_THROWS_AS(parse_config(roster(text, "grid,free-running\nrecorder,free-running\ncontroller,free-running\n")),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/x.cfg"), std::exception);

  auto c = config(with(text, "network", "nope.net"), "/tmp/x");
  CHECK_THROWS_AS(prepare_scenario(c), ConfigError);
  c = config(with(text, "converter_bus", "node5"), "/tmp/x");
  CHECK_THROWS_AS(prepare_scenario(c), ConfigError);
  c = config(with(text, "steps", "1441"), "/tmp/x");
  CHECK_THROWS_AS(prepare_scenario(c), ConfigError);
  c = config(with(text, "k", "8"), "/tmp/x");
  CHECK_THROWS_AS(prepare_scenario(c), ConfigError);
}

TEST_CASE("one step without PPVC equals a direct power-flow loss") {
  const auto dir = testing::scratch_dir("one_step");
  auto text = roster(with(with(reference_text(), "k", "0"), "steps", "1"), "grid,stepped\nrecorder,free-running\n");
  const auto r = run_experiment(config(text, dir));
  REQUIRE(r.completed);
  REQUIRE(r.losses_mw.size() == 1);

  auto net = testing::benchmark_modified();
  const auto load = clients::load_profile(testing::data_path("profiles/load.csv"));
  const auto irr = clients::load_profile(testing::data_path("profiles/irradiance.csv"));
  for (auto& l : net.loads) {
    l.p_mw *= load.at(1);
    l.q_mvar *= load.at(1);
  }
  for (auto& g : net.generators) {
    if (g.external) {
      g.p_mw = 0.0;
      g.q_mvar = 0.0;
    } else {
      g.p_mw *= irr.at(1);
    }
  }
  const auto sol = powerflow::solve_power_flow(grid::to_per_unit(net));
  REQUIRE(sol.converged);
  CHECK(r.losses_mw[0] == doctest::Approx(sol.total_losses_mw).epsilon(1e-9));
  CHECK(r.energy_losses_mwh == doctest::Approx(sol.total_losses_mw / 60.0).epsilon(1e-9));
  for (const char* f : {"recorder.csv", "losses.csv", "config.cfg", "events.log", "result.json"}) {
    CHECK(fs::exists(fs::path(dir) / f));
  }
  const auto back = read_result(dir);
  CHECK(back.losses_mw == r.losses_mw);
  CHECK(back.config_hash == r.config_hash);
}

TEST_CASE("in-process runs are bit-identical") {
  auto text = with(reference_text(), "steps", "45");
  const auto a = run_experiment(config(text, testing::scratch_dir("det_a")));
  const auto b = run_experiment(config(text, testing::scratch_dir("det_b")));
  REQUIRE(a.completed);
  REQUIRE(b.completed);
  CHECK(a.losses_mw.size() == 45);
  CHECK(a.losses_mw == b.losses_mw);
  CHECK(util::read_file(a.recorder_csv) == util::read_file(b.recorder_csv));
  CHECK(fs::exists(fs::path(a.output_dir) / "partition.csv"));

  const auto c = run_experiment(config(with(text, "seed", "7"), testing::scratch_dir("det_c")));
  REQUIRE(c.completed);
  CHECK(c.config_hash != a.config_hash);
}

TEST_CASE("grid failure marks the experiment failed and keeps partial results") {
  const auto dir = testing::scratch_dir("fail");
  clients::Profile heavy = clients::Profile::constant(150.0, 3);
  util::write_file(dir + "/heavy.csv", clients::serialize_profile(heavy));
  auto text = with(with(with(reference_text(), "k", "0"), "steps", "3"), "load_profile", dir + "/heavy.csv");
  const auto r = run_experiment(config(roster(text, kNoController), dir + "/out"));
  CHECK_FALSE(r.completed);
  CHECK(r.failure.find("grid") != std::string::npos);
  CHECK(fs::exists(fs::path(dir) / "out" / "recorder.csv"));
  CHECK(fs::exists(fs::path(dir) / "out" / "result.json"));
}

TEST_CASE("scenario comparison") {
  ScenarioResult base;
  base.name = "base";
  base.completed = true;
  base.steps = 3;
  base.losses_mw = {0.1, 0.2, 0.3};
  base.energy_losses_mwh = 0.01;
  ScenarioResult same = base;
  same.name = "again";
  auto cmp = compare_scenarios({base, same});
  CHECK(cmp.rows[0].normalized == 1.0);
  CHECK(cmp.rows[1].normalized == 1.0);

  ScenarioResult k1 = base, k2 = base;
  k1.name = "k1";
  k1.k = 1;
  k1.energy_losses_mwh = 0.009;
  k2.name = "k2";
  k2.k = 2;
  k2.energy_losses_mwh = 0.0095;
  cmp = compare_scenarios({k1, base, k2});
  CHECK(cmp.base == 1);
  CHECK(cmp.rows[0].normalized == doctest::Approx(0.9));
  CHECK_FALSE(cmp.monotone_in_k);
  REQUIRE(cmp.counterexamples.size() == 1);
  const auto csv = comparison_csv(cmp);
  CHECK(csv.rfind("scenario,k,modified,energy_losses_mwh,normalized_losses,violations\n", 0) == 0);
  CHECK(csv.find("# monotone_in_k,false") != std::string::npos);

  ScenarioResult failed = base;
  failed.completed = false;
  failed.failure = "grid aborted";
  CHECK_THROWS_AS(compare_scenarios({base, failed}), RunError);
  ScenarioResult longer = base;
  longer.steps = 4;
  CHECK_THROWS_AS(compare_scenarios({base, longer}), RunError);
  ScenarioResult other_profile = base;
  other_profile.profile_hash = 42;
  CHECK_THROWS_AS(compare_scenarios({base, other_profile}), RunError);
  CHECK_THROWS_AS(compare_scenarios({base}), RunError);
}

TEST_CASE("cells report") {
  const auto dir = testing::scratch_dir("cells");
  const auto rep = cells_report(testing::data_path("cigre_mv.net"), 3, true, dir);
  REQUIRE(rep.modified);
  CHECK(rep.modified->partition.k == 3);
  CHECK(rep.modified->contiguous);
  for (const auto& devs : rep.modified->partition.devices) CHECK_FALSE(devs.empty());
  CHECK(rep.modified->weak_coupling > rep.original.weak_coupling);
  for (const char* f : {"heatmap_original.csv", "heatmap_original.svg", "heatmap_modified.csv",
                        "heatmap_modified.svg", "partition_original.csv", "partition_modified.csv"}) {
    CHECK(fs::exists(fs::path(dir) / f));
  }
  const auto one = cells_report(testing::data_path("cigre_mv.net"), 1, false, testing::scratch_dir("cells1"));
  CHECK(one.original.partition.k == 1);
  CHECK_FALSE(one.modified);
  const auto listing = partition_csv(one.original.partition);
  CHECK(listing.find("\n2,") == std::string::npos);
}

TEST_CASE("transports agree without a controller") {
  auto text = roster(with(with(reference_text(), "k", "0"), "steps", "12"), kNoController);
  const auto dir = testing::scratch_dir("transport");
  util::write_file(dir + "/exp.cfg", with(with(with(text, "network", testing::data_path("cigre_mv.net")),
                                                    "load_profile", testing::data_path("profiles/load.csv")),
                                               "irradiance_profile", testing::data_path("profiles/irradiance.csv")));
  const auto cfg = load_config(dir + "/exp.cfg");
  const auto local = run_experiment(cfg, RunOverrides{.output_dir = dir + "/local"});
  RunOverrides tcp;
  tcp.transport = Transport::TcpThreads;
  tcp.output_dir = dir + "/tcp";
  const auto threaded = run_experiment(cfg, tcp);
  RunOverrides sp;
  sp.transport = Transport::Spawn;
  sp.output_dir = dir + "/spawn";
  sp.executable = WOCSIM_EXE;
  sp.config_path = dir + "/exp.cfg";
  const auto spawned = run_experiment(cfg, sp);
  REQUIRE(local.completed);
  REQUIRE(threaded.completed);
  REQUIRE(spawned.completed);
  CHECK(threaded.losses_mw == local.losses_mw);
  CHECK(spawned.losses_mw == local.losses_mw);
  CHECK(fs::exists(fs::path(dir) / "tcp" / "transcript.txt"));
}

TEST_CASE("command line exit codes") {
  const auto dir = testing::scratch_dir("cli");
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("run /nonexistent/x.cfg") == 2);
  CHECK(run_cli(fmt::format("cells {} --k 3 --modified --out {}", testing::data_path("cigre_mv.net"), dir)) == 0);
  CHECK(fs::exists(fs::path(dir) / "partition_modified.csv"));
  CHECK(run_cli(fmt::format("cells {} --k 0", testing::data_path("cigre_mv.net"))) == 2);

  util::write_file(dir + "/bad.cfg", with(reference_text(), "steps", "0"));
  CHECK(run_cli(fmt::format("run {}", dir + "/bad.cfg")) == 2);

  const auto base_text = with(with(with(roster(with(reference_text(), "k", "0"), kNoController), "steps", "5"),
                                   "network", testing::data_path("cigre_mv.net")),
                              "load_profile", testing::data_path("profiles/load.csv"));
  const auto ok_text = with(base_text, "irradiance_profile", testing::data_path("profiles/irradiance.csv"));
  util::write_file(dir + "/ok.cfg", ok_text);
  CHECK(run_cli(fmt::format("run {} --fast --out {}", dir + "/ok.cfg", dir + "/a")) == 0);
  CHECK(run_cli(fmt::format("run {} --seed 3 --out {}", dir + "/ok.cfg", dir + "/b")) == 0);
  CHECK(run_cli(fmt::format("compare {} {} --out {}", dir + "/a", dir + "/b", dir + "/cmp")) == 0);
  CHECK(fs::exists(fs::path(dir) / "cmp" / "comparison.csv"));
  CHECK(run_cli(fmt::format("compare {}", dir + "/a")) == 2);

  util::write_file(dir + "/heavy.csv", clients::serialize_profile(clients::Profile::constant(150.0, 5)));
  util::write_file(dir + "/heavy.cfg", with(ok_text, "load_profile", dir + "/heavy.csv"));
  CHECK(run_cli(fmt::format("run {} --out {}", dir + "/heavy.cfg", dir + "/h")) == 3);
  CHECK(run_cli(fmt::format("compare {} {}", dir + "/a", dir + "/h")) == 3);
}
