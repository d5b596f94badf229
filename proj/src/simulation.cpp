#include "fedfleet/simulation.hpp"

#include <algorithm>

#include "fedfleet/errors.hpp"
#include "fedfleet/rng.hpp"

namespace fedfleet {

namespace {

struct PendingRestore {
  int restore_round = 0;
  int node_id = 0;
};

NodeState* find_node(std::vector<NodeState>& fleet, int node_id) {
  for (auto& node : fleet) {
    if (node.node_id == node_id) return &node;
  }
  return nullptr;
}

}  // namespace

std::vector<MetricsRow> run_rounds(GlobalModelRegistry& registry, std::vector<NodeState>& fleet,
                                   const AggregationScheme& scheme, int num_rounds,
                                   const FaultPlan& faults, const LabeledDataset& eval_pool,
                                   const SimulationOptions& options) {
  if (num_rounds < 1) throw DomainError("num_rounds must be >= 1");
  for (const auto& event : faults.events) {
    if (find_node(fleet, event.node_id) == nullptr) {
      throw LookupError("fault plan names unknown node " + std::to_string(event.node_id));
    }
    if (event.round < 0) throw DomainError("fault round must be >= 0");
  }
  if (options.tracked_node && find_node(fleet, *options.tracked_node) == nullptr) {
    throw LookupError("tracked node " + std::to_string(*options.tracked_node) + " not in fleet");
  }

  std::vector<MetricsRow> rows;
  rows.reserve(static_cast<std::size_t>(num_rounds));
  std::vector<PendingRestore> pending;
  std::size_t cumulative_bytes = 0;

  for (int round = 0; round < num_rounds; ++round) {
    // restorations first, so a duration of d means exactly d missed rounds
    for (auto it = pending.begin(); it != pending.end();) {
      if (it->restore_round == round) {
        find_node(fleet, it->node_id)->status = Online{};
        it = pending.erase(it);
      } else {
        ++it;
      }
    }
    for (const auto& event : faults.events) {
      if (event.round != round) continue;
      inject(fleet, event);
      if (const auto* loss = std::get_if<ConnectivityLoss>(&event.kind)) {
        pending.push_back({round + loss->duration_rounds, event.node_id});
      } else if (const auto* slow = std::get_if<HighLatency>(&event.kind)) {
        pending.push_back({round + slow->duration_rounds, event.node_id});
      }
    }

    const LabeledDataset eval_set =
        drift_view(eval_pool, options.eval_drift, round, options.eval_seed);
    if (eval_set.size() == 0) {
      throw EmptyDataError("evaluation view is empty at round " + std::to_string(round));
    }
    const RoundReport report =
        run_round(registry, fleet, scheme, round, eval_set, options.round);
    if (options.checkpoints != nullptr) checkpoint_tick(*options.checkpoints, fleet, round);

    MetricsRow row;
    row.round = round;
    row.global_test_accuracy = report.global_accuracy;
    row.global_test_loss = report.global_loss;
    row.sampled_node_count = static_cast<int>(report.sampled_ids.size());
    row.skipped = report.skipped;
    row.round_update_bytes = report.update_bytes;
    cumulative_bytes += report.update_bytes;
    row.cumulative_update_bytes = cumulative_bytes;
    row.raw_data_bytes = report.raw_data_bytes;

    if (options.tracked_node) {
      const NodeState* node = find_node(fleet, *options.tracked_node);
      if (node->local_model) {
        const LabeledDataset node_test = drift_view(
            eval_pool, node->drift, round,
            derive_seed(options.eval_seed, static_cast<std::uint64_t>(node->node_id),
                        seed_tag::kEval));
        if (node_test.size() > 0) {
          row.faulted_node_accuracy = evaluate(*node->local_model, node_test).accuracy;
        }
      }
    }

    if (options.reports != nullptr) options.reports->push_back(report);
    if (options.on_round) options.on_round(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fedfleet
