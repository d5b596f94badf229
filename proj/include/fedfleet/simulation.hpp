#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fedfleet/faults.hpp"
#include "fedfleet/federation.hpp"

namespace fedfleet {

struct MetricsRow {
  int round = 0;
  double global_test_accuracy = 0.0;
  double global_test_loss = 0.0;
  int sampled_node_count = 0;
  bool skipped = false;
  std::size_t round_update_bytes = 0;
  std::size_t cumulative_update_bytes = 0;
  std::optional<double> faulted_node_accuracy;  // tracked node, when it has a model
  std::size_t raw_data_bytes = 0;  // counterfactual: shipping the sampled views verbatim
};

struct SimulationOptions {
  RoundOptions round;
  /// Global test pool; each round evaluates on its drift view.
  DriftSchedule eval_drift;
  std::uint64_t eval_seed = 0;
  /// Case-study fault target; its local-model accuracy on its own test view
  /// is recorded every round it has one.
  std::optional<int> tracked_node;
  CheckpointStore* checkpoints = nullptr;
  std::vector<RoundReport>* reports = nullptr;           // optional capture
  std::function<void(const MetricsRow&)> on_round;       // optional progress hook
};

/// Runs rounds 0..num_rounds-1: applies due fault events and restorations,
/// then the synchronous round, then the checkpoint tick. One MetricsRow per
/// round; fully deterministic for a fixed master seed.
std::vector<MetricsRow> run_rounds(GlobalModelRegistry& registry, std::vector<NodeState>& fleet,
                                   const AggregationScheme& scheme, int num_rounds,
                                   const FaultPlan& faults, const LabeledDataset& eval_pool,
                                   const SimulationOptions& options);

}  // namespace fedfleet
