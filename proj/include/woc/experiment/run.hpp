#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "woc/bus/client.hpp"
#include "woc/cells/clustering.hpp"
#include "woc/cells/electrical_distance.hpp"
#include "woc/clients/profile.hpp"
#include "woc/clients/recorder.hpp"
#include "woc/experiment/config.hpp"
#include "woc/grid/network.hpp"

namespace woc::experiment {

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything the clients are built from.
struct Scenario {
  ExperimentConfig config;
  grid::Network network;  // modifications applied
  clients::Profile load;
  clients::Profile irradiance;
  std::optional<cells::CellPartition> partition;  // k >= 1
};

// Loads files, applies line modifications, clusters. Throws ConfigError.
Scenario prepare_scenario(const ExperimentConfig& config);

std::unique_ptr<bus::Client> make_client(const std::string& role, const Scenario& scenario);

struct RunOverrides {
  std::optional<Transport> transport;
  std::optional<bus::Pacing> pacing;
  std::optional<double> speedup;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  // Spawn transport: executable providing `client <role> <config>`, and the config path.
  std::string executable;
  std::string config_path;
};

void apply_overrides(ExperimentConfig& config, const RunOverrides& o);

struct ScenarioResult {
  std::string name;
  std::size_t k = 0;
  bool modified = false;
  bool completed = false;
  std::string failure;
  std::uint64_t steps = 0;
  double step_seconds = 60.0;
  std::vector<double> losses_mw;
  std::vector<double> v_min;
  std::vector<double> v_max;
  std::vector<double> violations;
  double energy_losses_mwh = 0.0;
  std::uint64_t violation_count = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t profile_hash = 0;
  std::string output_dir;
  std::string recorder_csv;
  double wall_seconds = 0.0;
};

// Runs the schedule and writes recorder.csv, losses.csv, config.cfg,
// events.log, partition.csv (k >= 1) and result.json to the output directory.
// A failed run returns completed = false with partial results written.
ScenarioResult run_experiment(const ExperimentConfig& config, const RunOverrides& overrides = {});

// Summary from the recorder contents.
ScenarioResult summarize(const Scenario& scenario, const clients::RecordStore& store);

void write_result(const ScenarioResult& r, const std::string& dir);
ScenarioResult read_result(const std::string& dir);

struct ComparisonRow {
  std::string name;
  std::size_t k = 0;
  bool modified = false;
  double energy_losses_mwh = 0.0;
  double normalized = 1.0;
  std::uint64_t violation_count = 0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::size_t base = 0;  // index of the denominator row
  bool monotone_in_k = true;
  std::vector<std::string> counterexamples;
};

// Base case: the first result with k = 0, else the first result.
Comparison compare_scenarios(const std::vector<ScenarioResult>& results);
std::string comparison_csv(const Comparison& c);
// comparison.csv and comparison.svg.
void write_comparison(const Comparison& c, const std::string& dir);

struct CellsVariant {
  cells::DistancePipeline pipeline;
  cells::CellPartition partition;
  bool contiguous = false;
  std::size_t weak_coupling = 0;  // D_norm entries > 0.5
};

struct CellsReport {
  CellsVariant original;
  std::optional<CellsVariant> modified;
  std::vector<std::string> files;
};

CellsVariant analyse_cells(const grid::Network& net, std::size_t k);
CellsReport cells_report(const std::string& network_path, std::size_t k, bool modified, const std::string& out_dir);
std::string partition_csv(const cells::CellPartition& p);

}  // namespace woc::experiment
