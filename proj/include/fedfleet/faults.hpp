#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fedfleet/federation.hpp"

namespace fedfleet {

/// Node goes offline and its local model is gone.
struct OfflineModelLoss {
  friend bool operator==(const OfflineModelLoss&, const OfflineModelLoss&) = default;
};
/// Node unreachable for duration_rounds but keeps its model.
struct ConnectivityLoss {
  int duration_rounds = 1;
  friend bool operator==(const ConnectivityLoss&, const ConnectivityLoss&) = default;
};
/// Node reachable but slow for duration_rounds.
struct HighLatency {
  double latency_ms = 0.0;
  int duration_rounds = 1;
  friend bool operator==(const HighLatency&, const HighLatency&) = default;
};
using FaultKind = std::variant<OfflineModelLoss, ConnectivityLoss, HighLatency>;

struct FaultEvent {
  int round = 0;
  int node_id = 0;
  FaultKind kind;
};

struct FaultPlan {
  std::vector<FaultEvent> events;
};

/// Applies the event's immediate state change. Timed faults are restored by
/// the round loop after their duration.
void inject(std::vector<NodeState>& fleet, const FaultEvent& event);

/// Periodic snapshots of node models, kept in memory and (when a directory
/// is configured) mirrored to ckpt-node<id>-r<round>.bin files in the
/// ParamVector wire format.
class CheckpointStore {
 public:
  CheckpointStore() = default;
  explicit CheckpointStore(int interval_rounds, std::filesystem::path dir = {});

  int interval_rounds() const { return interval_rounds_; }

  /// Rounds must be strictly increasing per node.
  void add(int node_id, int round, const ParamVector& params);

  const ParamVector* newest_before(int node_id, int round) const;
  std::optional<int> newest_round_before(int node_id, int round) const;

  const std::map<int, std::vector<std::pair<int, ParamVector>>>& snapshots() const {
    return snapshots_;
  }

 private:
  int interval_rounds_ = 5;
  std::filesystem::path dir_;
  std::map<int, std::vector<std::pair<int, ParamVector>>> snapshots_;
};

/// Snapshots every non-offline node that has a model when
/// round % interval == 0.
void checkpoint_tick(CheckpointStore& store, const std::vector<NodeState>& fleet, int round);

struct RetrainScratch {};
struct ReinstateHistorical {
  int max_checkpoint_age_rounds = 10;
};
struct FederatedPush {};

struct RecoveryStrategy {
  std::variant<RetrainScratch, ReinstateHistorical, FederatedPush> kind = FederatedPush{};
  int post_recovery_epochs = 0;  // extra epochs recorded on the curve past the threshold
};

std::string strategy_name(const RecoveryStrategy& strategy);

struct RecoveryReport {
  std::string strategy;
  double accuracy_at_recovery = 0.0;  // before any post-recovery training
  std::optional<int> epochs_to_threshold;  // nullopt: cap reached without crossing
  double threshold_accuracy = 0.0;
  double pre_fault_accuracy = 0.0;
};

struct RecoveryOutcome {
  NodeState node;  // back online with the recovered (and possibly retrained) model
  RecoveryReport report;
  std::vector<double> accuracy_curve;  // index = post-recovery training epochs
};

/// Restores a node that lost its model. The replacement model comes from
/// the strategy (fresh init / newest eligible checkpoint / current global);
/// accuracy is then measured on test_view and the model trained on
/// train_view in whole-epoch increments until it reaches
/// threshold * pre_fault_accuracy or epoch_cap. Never touches the registry.
RecoveryOutcome recover(const NodeState& node, const RecoveryStrategy& strategy,
                        const GlobalModelRegistry& registry, const CheckpointStore& checkpoints,
                        const TrainConfig& local_cfg, double threshold,
                        double pre_fault_accuracy, int round, const LabeledDataset& train_view,
                        const LabeledDataset& test_view, int epoch_cap = 50);

}  // namespace fedfleet
