#include "fedfleet/faults.hpp"

#include <algorithm>

#include "fedfleet/errors.hpp"
#include "fedfleet/rng.hpp"

namespace fedfleet {

namespace {

NodeState& find_node(std::vector<NodeState>& fleet, int node_id) {
  for (auto& node : fleet) {
    if (node.node_id == node_id) return node;
  }
  throw LookupError("no node with id " + std::to_string(node_id));
}

}  // namespace

void inject(std::vector<NodeState>& fleet, const FaultEvent& event) {
  NodeState& node = find_node(fleet, event.node_id);
  if (std::holds_alternative<OfflineModelLoss>(event.kind)) {
    node.status = Offline{};
    node.local_model.reset();
  } else if (const auto* loss = std::get_if<ConnectivityLoss>(&event.kind)) {
    if (loss->duration_rounds < 1) throw DomainError("connectivity-loss duration must be >= 1");
    node.status = Offline{};  // model retained
  } else {
    const auto& slow = std::get<HighLatency>(event.kind);
    if (slow.duration_rounds < 1) throw DomainError("high-latency duration must be >= 1");
    if (!(slow.latency_ms > 0.0)) throw DomainError("high-latency latency must be > 0");
    node.status = Degraded{slow.latency_ms};
  }
}

CheckpointStore::CheckpointStore(int interval_rounds, std::filesystem::path dir)
    : interval_rounds_(interval_rounds), dir_(std::move(dir)) {
  if (interval_rounds_ < 1) throw DomainError("checkpoint interval must be >= 1");
  if (!dir_.empty()) std::filesystem::create_directories(dir_);
}

void CheckpointStore::add(int node_id, int round, const ParamVector& params) {
  auto& snaps = snapshots_[node_id];
  if (!snaps.empty() && snaps.back().first >= round) {
    throw DomainError("checkpoint rounds must be strictly increasing per node");
  }
  snaps.emplace_back(round, params);
  if (!dir_.empty()) {
    write_param_file(
        dir_ / ("ckpt-node" + std::to_string(node_id) + "-r" + std::to_string(round) + ".bin"),
        params);
  }
}

const ParamVector* CheckpointStore::newest_before(int node_id, int round) const {
  const auto it = snapshots_.find(node_id);
  if (it == snapshots_.end()) return nullptr;
  const ParamVector* best = nullptr;
  for (const auto& [snap_round, params] : it->second) {
    if (snap_round <= round) best = &params;
  }
  return best;
}

std::optional<int> CheckpointStore::newest_round_before(int node_id, int round) const {
  const auto it = snapshots_.find(node_id);
  if (it == snapshots_.end()) return std::nullopt;
  std::optional<int> best;
  for (const auto& [snap_round, params] : it->second) {
    if (snap_round <= round) best = snap_round;
  }
  return best;
}

void checkpoint_tick(CheckpointStore& store, const std::vector<NodeState>& fleet, int round) {
  if (round % store.interval_rounds() != 0) return;
  for (const auto& node : fleet) {
    if (is_offline(node.status)) continue;
    if (!node.local_model) continue;
    store.add(node.node_id, round, node.local_model->params());
  }
}

std::string strategy_name(const RecoveryStrategy& strategy) {
  if (std::holds_alternative<RetrainScratch>(strategy.kind)) return "retrain_scratch";
  if (std::holds_alternative<ReinstateHistorical>(strategy.kind)) return "reinstate_historical";
  return "federated_push";
}

RecoveryOutcome recover(const NodeState& node, const RecoveryStrategy& strategy,
                        const GlobalModelRegistry& registry, const CheckpointStore& checkpoints,
                        const TrainConfig& local_cfg, double threshold,
                        double pre_fault_accuracy, int round, const LabeledDataset& train_view,
                        const LabeledDataset& test_view, int epoch_cap) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw DomainError("threshold must lie in (0, 1]");
  const MlpModel& global = registry.current;

  MlpModel model = [&]() -> MlpModel {
    if (std::holds_alternative<RetrainScratch>(strategy.kind)) {
      return MlpModel::init(global.input_dim(), global.hidden_dim(), global.num_classes(),
                            derive_seed(local_cfg.seed, static_cast<std::uint64_t>(node.node_id),
                                        static_cast<std::uint64_t>(round), seed_tag::kScratch));
    }
    if (const auto* hist = std::get_if<ReinstateHistorical>(&strategy.kind)) {
      const auto snap_round = checkpoints.newest_round_before(node.node_id, round);
      if (!snap_round || round - *snap_round > hist->max_checkpoint_age_rounds) {
        throw LookupError("node " + std::to_string(node.node_id) +
                          " has no checkpoint within " +
                          std::to_string(hist->max_checkpoint_age_rounds) + " rounds of round " +
                          std::to_string(round));
      }
      return MlpModel(global.input_dim(), global.hidden_dim(), global.num_classes(),
                      *checkpoints.newest_before(node.node_id, round));
    }
    return global;  // federated push: the current global model, used as-is
  }();

  RecoveryReport report;
  report.strategy = strategy_name(strategy);
  report.pre_fault_accuracy = pre_fault_accuracy;
  report.threshold_accuracy = threshold * pre_fault_accuracy;

  std::vector<double> curve;
  curve.push_back(evaluate(model, test_view).accuracy);
  report.accuracy_at_recovery = curve.front();
  if (curve.front() >= report.threshold_accuracy) report.epochs_to_threshold = 0;

  int epoch = 0;
  const bool can_train = train_view.size() > 0;
  while (can_train && ((!report.epochs_to_threshold && epoch < epoch_cap) ||
                       epoch < strategy.post_recovery_epochs)) {
    TrainConfig cfg = local_cfg;
    cfg.epochs = 1;
    cfg.seed = derive_seed(local_cfg.seed, static_cast<std::uint64_t>(node.node_id),
                           static_cast<std::uint64_t>(epoch), seed_tag::kRecovery);
    model = train_local(model, train_view, cfg).first;
    ++epoch;
    const double accuracy = evaluate(model, test_view).accuracy;
    curve.push_back(accuracy);
    if (!report.epochs_to_threshold && accuracy >= report.threshold_accuracy) {
      report.epochs_to_threshold = epoch;
    }
  }

  NodeState recovered = node;
  recovered.status = Online{};
  recovered.local_model = std::move(model);
  return RecoveryOutcome{std::move(recovered), std::move(report), std::move(curve)};
}

}  // namespace fedfleet
