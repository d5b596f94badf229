#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "fedfleet/matrix.hpp"

namespace fedfleet {

/// Features in [0,1], one label per row.
struct LabeledDataset {
  Matrix features;          // n x d
  std::vector<int> labels;  // n entries in [0, num_classes)
  int num_classes = 0;

  std::size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(features.cols()); }
};

/// Validates the invariants (row counts agree, features in [0,1], labels in range).
LabeledDataset make_dataset(Matrix features, std::vector<int> labels, int num_classes);

LabeledDataset select_rows(const LabeledDataset& data, std::span<const std::size_t> rows);

/// Per-class row counts, length num_classes.
std::vector<std::size_t> label_histogram(const LabeledDataset& data);

/// Deterministic subsample of at most max_rows rows (original row order kept).
LabeledDataset subsample(const LabeledDataset& data, std::size_t max_rows, std::uint64_t seed);

/// Concatenates datasets sharing dim and num_classes.
LabeledDataset concat(std::span<const LabeledDataset> parts);

// ---------------------------------------------------------------------------
// IDX files (the MNIST distribution format). Headers are big-endian u32:
// magic 2051 for images (then count, rows, cols and count*rows*cols pixel
// bytes), magic 2049 for labels (then count and count label bytes).

Matrix load_idx_images(std::span<const std::uint8_t> bytes);
std::vector<int> load_idx_labels(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> write_idx_images(const Matrix& images, std::uint32_t rows,
                                           std::uint32_t cols);
std::vector<std::uint8_t> write_idx_labels(std::span<const int> labels);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Loads train-images-idx3-ubyte / train-labels-idx1-ubyte (train) or the
/// t10k pair (test) from dir; labels must all be < 10.
LabeledDataset load_idx_dir(const std::filesystem::path& dir, bool train_split);

// ---------------------------------------------------------------------------
// Synthetic stand-in so everything runs without the real MNIST files.

/// Gaussian blobs: class c is drawn around a distinct seeded center and
/// clipped to [0,1]. Rows are emitted class by class, samples_per_class each.
LabeledDataset synth_blobs(std::uint64_t seed, int samples_per_class, int dims,
                           int num_classes, double spread);

// ---------------------------------------------------------------------------
// Non-i.i.d. partitioning across federated nodes.

struct UniformShards {};
struct QuantitySkew {
  std::vector<double> weights;  // one per node, non-negative, sums to 1
};
struct LabelFilter {
  std::vector<std::vector<int>> allowed;  // one non-empty label set per node
};

struct PartitionSpec {
  std::variant<UniformShards, QuantitySkew, LabelFilter> strategy = UniformShards{};
  std::uint64_t seed = 0;
};

/// Splits data into num_nodes pairwise-disjoint shards. QuantitySkew shard
/// sizes are floor(weight*n) with the remainder on the last node (the
/// UniformShards rule is the same with equal weights). A LabelFilter node
/// matching zero rows is an error, never silently empty.
std::vector<LabeledDataset> partition(const LabeledDataset& data, const PartitionSpec& spec,
                                      int num_nodes);

// ---------------------------------------------------------------------------
// Class drift: previously unseen classes ramp into a node's effective data.

struct DriftSchedule {
  std::vector<int> base_classes;   // present from round 0
  std::vector<int> drift_classes;  // introduced from start_round on
  int start_round = 0;
  int ramp_rounds = 1;
  double target_fraction = 0.0;  // drift-class share of the view at full ramp
};

void validate_schedule(const DriftSchedule& schedule);

/// Drift-class share of the effective set at the given round: 0 before
/// start_round, then target_fraction * min(1, (round-start_round+1)/ramp_rounds).
/// Non-decreasing in round.
double drift_fraction(const DriftSchedule& schedule, int round);

/// Row count of drift_view without materializing it.
std::size_t drift_view_size(const LabeledDataset& pool, const DriftSchedule& schedule, int round);

/// Effective dataset at a round: every base-class row plus enough seeded-
/// sampled drift-class rows to make their share of the view drift_fraction
/// (within rounding, capped by the rows available). The sample is a prefix
/// of one seeded permutation, so earlier rounds' drift rows stay included
/// as the ramp grows.
LabeledDataset drift_view(const LabeledDataset& pool, const DriftSchedule& schedule, int round,
                          std::uint64_t seed);

}  // namespace fedfleet
