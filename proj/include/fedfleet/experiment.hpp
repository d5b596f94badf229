#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fedfleet/simulation.hpp"

namespace fedfleet {

struct SyntheticSource {
  int samples_per_class = 1000;
  int test_samples_per_class = 200;
  int dims = 16;
  int num_classes = 10;
  double spread = 0.25;
};

struct IdxSource {
  std::filesystem::path dir;
  std::size_t max_train_samples = 10000;  // 0 = keep everything
  std::size_t max_test_samples = 2000;
};

using DatasetSource = std::variant<SyntheticSource, IdxSource>;

struct RecoveryConfig {
  std::vector<RecoveryStrategy> strategies;
  double threshold = 0.9;  // fraction of the pre-fault accuracy that counts as recovered
  int checkpoint_interval_rounds = 5;
  int epoch_cap = 50;
};

/// Everything a run needs; defaults reproduce the case study on synthetic
/// data (10 nodes, even digits first, odds ramping in, one model-loss fault
/// mid-ramp, all three recovery strategies).
struct ScenarioConfig {
  DatasetSource dataset = SyntheticSource{};
  int num_nodes = 10;
  std::variant<UniformShards, QuantitySkew, LabelFilter> partition_strategy = UniformShards{};
  std::optional<std::uint64_t> partition_seed;  // default: derived from master_seed
  DriftSchedule drift{{0, 2, 4, 6, 8}, {1, 3, 5, 7, 9}, 12, 10, 0.5};
  Consolidation consolidation = Consolidation::DataWeighted;
  int local_epochs = 1;
  SamplingPolicy sampling = SampleAll{};
  std::optional<std::uint64_t> scheme_seed;  // default: derived from master_seed
  double learning_rate = 0.05;
  int batch_size = 32;
  int hidden_dim = 64;
  double per_sample_cost_ms = 0.01;
  std::vector<double> criticalities;          // empty = all 1.0
  std::vector<double> baseline_latencies_ms;  // empty = all 0.0
  FaultPlan faults{{FaultEvent{17, 0, OfflineModelLoss{}}}};
  RecoveryConfig recovery{
      {RecoveryStrategy{RetrainScratch{}, 10}, RecoveryStrategy{ReinstateHistorical{10}, 10},
       RecoveryStrategy{FederatedPush{}, 10}},
      0.9,
      5,
      50};
  int num_rounds = 25;
  std::uint64_t master_seed = 42;
  std::filesystem::path out_dir = "out";
  bool quiet = false;
  int num_threads = 0;
};

/// Throws ConfigError naming the offending field.
void validate_scenario(const ScenarioConfig& cfg);

/// Dataset loaded, shards cut, fleet built, global initialized; seeds all
/// derived from the master seed.
struct PreparedScenario {
  LabeledDataset train_pool;
  LabeledDataset test_pool;
  std::vector<NodeState> fleet;
  GlobalModelRegistry registry;
  AggregationScheme scheme;
  std::uint64_t eval_seed = 0;
};

PreparedScenario prepare_scenario(const ScenarioConfig& cfg);

/// FNV-1a over the global params, version and every node's status/model.
/// Used to prove the recovery branches start from identical world state.
std::string world_state_hash(const GlobalModelRegistry& registry,
                             const std::vector<NodeState>& fleet);

struct SimulationResult {
  std::vector<MetricsRow> rows;
  std::filesystem::path manifest_path;
  std::filesystem::path metrics_csv_path;
};

/// Plain federated run: manifest first, then the rounds, then metrics.csv.
SimulationResult run_simulation(const ScenarioConfig& cfg);

struct CaseStudyResult {
  std::vector<MetricsRow> rows;
  std::vector<RecoveryReport> reports;  // one per configured strategy, in order
  std::vector<std::pair<std::string, std::vector<double>>> curves;
  int fault_round = 0;
  int recovery_round = 0;
  double pre_fault_accuracy = 0.0;
  std::string branch_snapshot_hash;
  std::filesystem::path manifest_path;
  std::filesystem::path metrics_csv_path;
  std::filesystem::path recovery_csv_path;
  std::filesystem::path recovery_svg_path;
};

/// The full fault-recovery comparison: train federally under drift, lose a
/// node's model mid-ramp, keep training, then branch from one frozen world
/// state into each recovery strategy. Branches share every seed, so they
/// differ only in the strategy.
CaseStudyResult run_case_study(const ScenarioConfig& cfg);

// Emitters. Byte-exact contracts: 6-decimal reals, LF endings.
std::string emit_metrics_csv(std::span<const MetricsRow> rows);
std::string emit_recovery_csv(std::span<const RecoveryReport> reports);
std::string emit_recovery_svg(
    std::span<const std::pair<std::string, std::vector<double>>> curves);

/// The resolved configuration as a JSON document that parse_config accepts
/// unchanged (this is what run-manifest.json holds).
std::string scenario_to_json(const ScenarioConfig& cfg);

}  // namespace fedfleet
