#include "fedfleet/federation.hpp"

#include <algorithm>
#include <unordered_map>

#include "fedfleet/errors.hpp"
#include "fedfleet/parallel.hpp"
#include "fedfleet/rng.hpp"

namespace fedfleet {

bool is_offline(const NodeStatus& status) {
  return std::holds_alternative<Offline>(status);
}

double status_latency_ms(const NodeState& node) {
  if (const auto* degraded = std::get_if<Degraded>(&node.status)) return degraded->latency_ms;
  return node.baseline_latency_ms;
}

std::vector<NodeState> build_fleet(std::vector<LabeledDataset> shards,
                                   const DriftSchedule& drift, std::uint64_t master_seed,
                                   std::span<const double> criticalities,
                                   std::span<const double> baseline_latencies_ms) {
  validate_schedule(drift);
  if (!criticalities.empty() && criticalities.size() != shards.size()) {
    throw DomainError("criticality count differs from node count");
  }
  if (!baseline_latencies_ms.empty() && baseline_latencies_ms.size() != shards.size()) {
    throw DomainError("baseline latency count differs from node count");
  }
  std::vector<NodeState> fleet;
  fleet.reserve(shards.size());
  for (std::size_t i = 0; i < shards.size(); ++i) {
    NodeState node;
    node.node_id = static_cast<int>(i);
    node.shard = std::move(shards[i]);
    node.drift = drift;
    node.criticality = criticalities.empty() ? 1.0 : criticalities[i];
    if (node.criticality <= 0.0) throw DomainError("criticality must be > 0");
    node.baseline_latency_ms = baseline_latencies_ms.empty() ? 0.0 : baseline_latencies_ms[i];
    if (node.baseline_latency_ms < 0.0) throw DomainError("baseline latency must be >= 0");
    node.drift_seed = derive_seed(master_seed, static_cast<std::uint64_t>(i), seed_tag::kDrift);
    fleet.push_back(std::move(node));
  }
  return fleet;
}

void validate_scheme(const AggregationScheme& scheme) {
  if (scheme.local_epochs < 1) throw DomainError("local_epochs must be >= 1");
  if (const auto* rf = std::get_if<RandomFraction>(&scheme.sampling)) {
    if (!(rf->fraction > 0.0 && rf->fraction <= 1.0)) {
      throw DomainError("random-fraction C must lie in (0, 1]");
    }
  } else if (const auto* dt = std::get_if<DataThreshold>(&scheme.sampling)) {
    if (dt->min_samples < 1) throw DomainError("data-threshold min_samples must be >= 1");
    if (dt->max_samples && *dt->max_samples < dt->min_samples) {
      throw DomainError("data-threshold max_samples must be >= min_samples");
    }
  } else if (const auto* la = std::get_if<LatencyAware>(&scheme.sampling)) {
    if (!(la->cutoff_ms > 0.0)) throw DomainError("latency-aware cutoff must be > 0");
  }
}

GlobalModelRegistry init_global(std::uint64_t seed, int input_dim, int hidden_dim,
                                int num_classes) {
  return GlobalModelRegistry{MlpModel::init(input_dim, hidden_dim, num_classes, seed), 0, {}};
}

std::vector<int> sample_nodes(const std::vector<NodeState>& fleet,
                              const AggregationScheme& scheme, int round) {
  if (fleet.empty()) throw EmptyDataError("cannot sample from an empty fleet");
  validate_scheme(scheme);

  std::vector<const NodeState*> eligible;
  eligible.reserve(fleet.size());
  for (const auto& node : fleet) {
    if (!is_offline(node.status)) eligible.push_back(&node);
  }

  std::vector<int> picked;
  if (std::holds_alternative<SampleAll>(scheme.sampling)) {
    for (const auto* node : eligible) picked.push_back(node->node_id);
  } else if (const auto* rf = std::get_if<RandomFraction>(&scheme.sampling)) {
    if (!eligible.empty()) {
      const auto want = static_cast<std::size_t>(std::max<long long>(
          1, static_cast<long long>(rf->fraction * static_cast<double>(eligible.size()))));
      Rng rng(derive_seed(scheme.seed, static_cast<std::uint64_t>(round), seed_tag::kSampling));
      for (const std::size_t i : rng.sample_without_replacement(eligible.size(), want)) {
        picked.push_back(eligible[i]->node_id);
      }
    }
  } else if (const auto* dt = std::get_if<DataThreshold>(&scheme.sampling)) {
    for (const auto* node : eligible) {
      const std::size_t view = drift_view_size(node->shard, node->drift, round);
      if (view >= dt->min_samples && (!dt->max_samples || view <= *dt->max_samples)) {
        picked.push_back(node->node_id);
      }
    }
  } else {
    const auto& la = std::get<LatencyAware>(scheme.sampling);
    for (const auto* node : eligible) {
      if (status_latency_ms(*node) <= la.cutoff_ms) picked.push_back(node->node_id);
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

LocalRoundResult local_round(NodeState& node, const MlpModel& global, int round,
                             const TrainConfig& cfg, double per_sample_cost_ms) {
  if (is_offline(node.status)) {
    throw DomainError("node " + std::to_string(node.node_id) + " is offline");
  }
  const LabeledDataset view = drift_view(node.shard, node.drift, round, node.drift_seed);
  if (view.size() == 0) {
    return LocalRoundResult{
        std::nullopt, "node " + std::to_string(node.node_id) + ": empty drift view at round " +
                          std::to_string(round)};
  }

  TrainConfig local_cfg = cfg;
  local_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(node.node_id),
                               static_cast<std::uint64_t>(round), seed_tag::kTrain);
  auto [trained, stats] = train_local(global, view, local_cfg, per_sample_cost_ms);

  ModelUpdate update;
  update.node_id = node.node_id;
  update.round = round;
  update.delta = model_delta(trained.params(), global.params());
  update.num_samples = view.size();
  update.sim_train_ms = stats.sim_train_ms + status_latency_ms(node);
  update.update_bytes =
      8 * update.delta.size() + serialized_header_bytes(update.delta.layout().size());
  node.local_model = std::move(trained);
  return LocalRoundResult{std::move(update), {}};
}

ParamVector consolidate(std::span<const ModelUpdate> updates, const AggregationScheme& scheme,
                        const std::vector<NodeState>& fleet) {
  if (updates.empty()) throw EmptyDataError("no updates to consolidate");

  std::vector<std::size_t> order(updates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return updates[a].node_id < updates[b].node_id;
  });

  for (const auto& update : updates) {
    if (!update.delta.same_layout(updates.front().delta)) {
      throw ShapeError("update deltas disagree on layout");
    }
  }

  std::vector<double> weights(updates.size(), 0.0);
  switch (scheme.consolidation) {
    case Consolidation::PlainAverage: {
      const double w = 1.0 / static_cast<double>(updates.size());
      for (double& weight : weights) weight = w;
      break;
    }
    case Consolidation::DataWeighted: {
      std::size_t total = 0;
      for (const std::size_t i : order) total += updates[i].num_samples;
      if (total == 0) throw DomainError("data-weighted consolidation with zero total samples");
      for (std::size_t i = 0; i < updates.size(); ++i) {
        weights[i] = static_cast<double>(updates[i].num_samples) / static_cast<double>(total);
      }
      break;
    }
    case Consolidation::CriticalityWeighted: {
      std::unordered_map<int, double> criticality;
      for (const auto& node : fleet) criticality[node.node_id] = node.criticality;
      double total = 0.0;
      for (const std::size_t i : order) {
        const auto it = criticality.find(updates[i].node_id);
        if (it == criticality.end()) {
          throw LookupError("update from unknown node " + std::to_string(updates[i].node_id));
        }
        total += it->second;
      }
      for (std::size_t i = 0; i < updates.size(); ++i) {
        weights[i] = criticality.at(updates[i].node_id) / total;
      }
      break;
    }
  }

  ParamVector out = ParamVector::zeros(updates.front().delta.layout());
  for (const std::size_t i : order) out.axpy(weights[i], updates[i].delta);
  return out;
}

RoundReport run_round(GlobalModelRegistry& registry, std::vector<NodeState>& fleet,
                      const AggregationScheme& scheme, int round,
                      const LabeledDataset& eval_set, const RoundOptions& options) {
  RoundReport report;
  report.round = round;

  std::unordered_map<int, std::size_t> index_of;
  for (std::size_t i = 0; i < fleet.size(); ++i) index_of[fleet[i].node_id] = i;

  const std::vector<int> sampled = sample_nodes(fleet, scheme, round);

  TrainConfig cfg = options.train;
  cfg.epochs = scheme.local_epochs;

  // broadcast: every sampled node trains its own copy of the same global
  const MlpModel global = registry.current;
  std::vector<LocalRoundResult> results(sampled.size());
  parallel_for(sampled.size(), options.num_threads, [&](std::size_t i) {
    NodeState& node = fleet[index_of.at(sampled[i])];
    results[i] = local_round(node, global, round, cfg, options.per_sample_cost_ms);
  });

  std::vector<ModelUpdate> updates;
  for (auto& result : results) {
    if (result.update) {
      updates.push_back(std::move(*result.update));
    } else {
      report.skip_log.push_back(result.skip_reason);
    }
  }

  const int feature_dim = registry.current.input_dim();
  for (const auto& update : updates) {
    report.sampled_ids.push_back(update.node_id);
    report.sim_train_ms.push_back(update.sim_train_ms);
    report.update_bytes += update.update_bytes;
    // shipping the view verbatim: 8 bytes per feature plus 1 per label
    report.raw_data_bytes +=
        update.num_samples * (static_cast<std::size_t>(feature_dim) * 8 + 1);
  }

  if (updates.empty()) {
    report.skipped = true;
  } else {
    const ParamVector delta = consolidate(updates, scheme, fleet);
    registry.current.set_params(apply_delta(registry.current.params(), delta));
    registry.version += 1;
  }

  const EvalResult eval = evaluate(registry.current, eval_set);
  report.global_accuracy = eval.accuracy;
  report.global_loss = eval.mean_loss;
  if (!report.skipped) registry.history.emplace_back(registry.version, eval.accuracy);
  return report;
}

}  // namespace fedfleet
