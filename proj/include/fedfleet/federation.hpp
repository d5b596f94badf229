#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedfleet/dataset.hpp"
#include "fedfleet/model.hpp"

namespace fedfleet {

struct Online {
  friend bool operator==(const Online&, const Online&) = default;
};
struct Offline {
  friend bool operator==(const Offline&, const Offline&) = default;
};
struct Degraded {
  double latency_ms = 0.0;
  friend bool operator==(const Degraded&, const Degraded&) = default;
};
using NodeStatus = std::variant<Online, Offline, Degraded>;

bool is_offline(const NodeStatus& status);

/// A federated node: private data pool plus the model it last trained.
struct NodeState {
  int node_id = 0;
  std::optional<MlpModel> local_model;  // absent after a model-loss fault
  LabeledDataset shard;                 // full pool; drift_view filters it per round
  DriftSchedule drift;
  NodeStatus status = Online{};
  double criticality = 1.0;
  double baseline_latency_ms = 0.0;
  std::uint64_t drift_seed = 0;  // stable per node so the drift sample grows as a prefix
};

/// Degraded latency when degraded, baseline otherwise.
double status_latency_ms(const NodeState& node);

/// One shard per node; criticalities/latencies may be empty (defaults 1.0 / 0.0)
/// or hold one entry per node.
std::vector<NodeState> build_fleet(std::vector<LabeledDataset> shards,
                                   const DriftSchedule& drift, std::uint64_t master_seed,
                                   std::span<const double> criticalities = {},
                                   std::span<const double> baseline_latencies_ms = {});

/// What a node reports back: the parameter delta, never the data.
struct ModelUpdate {
  int node_id = 0;
  int round = 0;
  ParamVector delta;  // locally trained - received global
  std::size_t num_samples = 0;
  double sim_train_ms = 0.0;
  std::size_t update_bytes = 0;  // 8 * param count + serialization header
};

enum class Consolidation { PlainAverage, DataWeighted, CriticalityWeighted };

struct SampleAll {};
struct RandomFraction {
  double fraction = 1.0;  // in (0, 1]
};
struct DataThreshold {
  std::size_t min_samples = 1;
  std::optional<std::size_t> max_samples;
};
struct LatencyAware {
  double cutoff_ms = 0.0;
};
using SamplingPolicy = std::variant<SampleAll, RandomFraction, DataThreshold, LatencyAware>;

/// The three-axis aggregation policy: how to consolidate, how much local
/// work per round, and which nodes to ask.
struct AggregationScheme {
  Consolidation consolidation = Consolidation::DataWeighted;
  int local_epochs = 1;
  SamplingPolicy sampling = SampleAll{};
  std::uint64_t seed = 0;
};

void validate_scheme(const AggregationScheme& scheme);

struct GlobalModelRegistry {
  MlpModel current;
  int version = 0;  // increments once per applied aggregation
  std::vector<std::pair<int, double>> history;  // (version, accuracy)
};

GlobalModelRegistry init_global(std::uint64_t seed, int input_dim, int hidden_dim,
                                int num_classes);

/// Node ids eligible this round, sorted ascending. Offline nodes are never
/// returned. RandomFraction draws exactly max(1, floor(C * |eligible|)) ids
/// from a stream seeded by (scheme.seed, round); DataThreshold keeps nodes
/// whose current drift-view size lies within [min, max]; LatencyAware keeps
/// nodes at or below the cutoff. An empty result is legal.
std::vector<int> sample_nodes(const std::vector<NodeState>& fleet,
                              const AggregationScheme& scheme, int round);

struct LocalRoundResult {
  std::optional<ModelUpdate> update;
  std::string skip_reason;  // set when update is absent
};

/// Trains a copy of the received global on the node's drift view and emits
/// the delta; stores the trained model on the node. The training stream is
/// seeded by (cfg.seed, node_id, round) so execution order never matters.
/// An empty drift view skips the node instead of failing the round.
LocalRoundResult local_round(NodeState& node, const MlpModel& global, int round,
                             const TrainConfig& cfg, double per_sample_cost_ms);

/// Weighted mean of the deltas, summed in ascending node_id order so the
/// result is independent of input permutation.
ParamVector consolidate(std::span<const ModelUpdate> updates, const AggregationScheme& scheme,
                        const std::vector<NodeState>& fleet);

struct RoundOptions {
  TrainConfig train;  // seed acts as the master seed; epochs comes from the scheme
  double per_sample_cost_ms = 0.01;
  int num_threads = 0;  // <= 0: FEDFLEET_THREADS env or hardware default
};

struct RoundReport {
  int round = 0;
  bool skipped = false;
  std::vector<int> sampled_ids;       // nodes that produced an update
  std::vector<double> sim_train_ms;   // parallel to sampled_ids
  std::vector<std::string> skip_log;  // nodes sampled but skipped, with reasons
  std::size_t update_bytes = 0;
  std::size_t raw_data_bytes = 0;  // counterfactual cost of shipping the views
  double global_accuracy = 0.0;    // post-round, on eval_set
  double global_loss = 0.0;
};

/// One synchronous round: broadcast, sample, train locally, consolidate,
/// apply. When no node produces an update the round is a recorded no-op
/// (global and version unchanged, report flagged skipped).
RoundReport run_round(GlobalModelRegistry& registry, std::vector<NodeState>& fleet,
                      const AggregationScheme& scheme, int round,
                      const LabeledDataset& eval_set, const RoundOptions& options);

}  // namespace fedfleet
