#include "fedfleet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <string>

#include "fedfleet/errors.hpp"
#include "fedfleet/rng.hpp"

namespace fedfleet {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::uint32_t get_u32_be(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

LabeledDataset make_dataset(Matrix features, std::vector<int> labels, int num_classes) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeError("feature rows (" + std::to_string(features.rows()) +
                     ") and label count (" + std::to_string(labels.size()) + ") differ");
  }
  if (num_classes < 1) throw DomainError("num_classes must be >= 1");
  for (const int label : labels) {
    if (label < 0 || label >= num_classes) {
      throw DomainError("label " + std::to_string(label) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
  }
  for (Eigen::Index i = 0; i < features.size(); ++i) {
    const double v = features.data()[i];
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("feature value outside [0, 1]");
  }
  return LabeledDataset{std::move(features), std::move(labels), num_classes};
}

LabeledDataset select_rows(const LabeledDataset& data, std::span<const std::size_t> rows) {
  Matrix features(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    features.row(static_cast<Eigen::Index>(i)) =
        data.features.row(static_cast<Eigen::Index>(rows[i]));
    labels[i] = data.labels[rows[i]];
  }
  return LabeledDataset{std::move(features), std::move(labels), data.num_classes};
}

std::vector<std::size_t> label_histogram(const LabeledDataset& data) {
  std::vector<std::size_t> hist(static_cast<std::size_t>(data.num_classes), 0);
  for (const int label : data.labels) hist[static_cast<std::size_t>(label)]++;
  return hist;
}

LabeledDataset subsample(const LabeledDataset& data, std::size_t max_rows, std::uint64_t seed) {
  if (data.size() <= max_rows) return data;
  Rng rng(seed);
  auto picked = rng.sample_without_replacement(data.size(), max_rows);
  std::sort(picked.begin(), picked.end());
  return select_rows(data, picked);
}

LabeledDataset concat(std::span<const LabeledDataset> parts) {
  if (parts.empty()) throw EmptyDataError("concat of zero datasets");
  Eigen::Index total = 0;
  for (const auto& part : parts) {
    if (part.dim() != parts.front().dim() || part.num_classes != parts.front().num_classes) {
      throw ShapeError("concat parts disagree on dim or num_classes");
    }
    total += part.features.rows();
  }
  Matrix features(total, parts.front().features.cols());
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(total));
  Eigen::Index at = 0;
  for (const auto& part : parts) {
    features.middleRows(at, part.features.rows()) = part.features;
    labels.insert(labels.end(), part.labels.begin(), part.labels.end());
    at += part.features.rows();
  }
  return LabeledDataset{std::move(features), std::move(labels), parts.front().num_classes};
}

// --------------------------------------------------------------------------
// IDX

Matrix load_idx_images(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("idx image stream too short for a magic number");
  const std::uint32_t magic = get_u32_be(bytes, 0);
  if (magic != kImageMagic) {
    throw FormatError("idx image stream has magic " + std::to_string(magic) + ", expected " +
                      std::to_string(kImageMagic));
  }
  if (bytes.size() < 16) throw LengthError("idx image header truncated");
  const std::uint32_t count = get_u32_be(bytes, 4);
  const std::uint32_t rows = get_u32_be(bytes, 8);
  const std::uint32_t cols = get_u32_be(bytes, 12);
  const std::size_t pixels =
      static_cast<std::size_t>(count) * static_cast<std::size_t>(rows) * cols;
  if (bytes.size() != 16 + pixels) {
    throw LengthError("idx image payload holds " + std::to_string(bytes.size() - 16) +
                      " bytes, expected " + std::to_string(pixels));
  }
  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(rows) * cols);
  for (std::size_t i = 0; i < pixels; ++i) {
    out.data()[i] = static_cast<double>(bytes[16 + i]) / 255.0;
  }
  return out;
}

std::vector<int> load_idx_labels(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw FormatError("idx label stream too short for a magic number");
  const std::uint32_t magic = get_u32_be(bytes, 0);
  if (magic != kLabelMagic) {
    throw FormatError("idx label stream has magic " + std::to_string(magic) + ", expected " +
                      std::to_string(kLabelMagic));
  }
  if (bytes.size() < 8) throw LengthError("idx label header truncated");
  const std::uint32_t count = get_u32_be(bytes, 4);
  if (bytes.size() != 8 + static_cast<std::size_t>(count)) {
    throw LengthError("idx label payload holds " + std::to_string(bytes.size() - 8) +
                      " bytes, expected " + std::to_string(count));
  }
  std::vector<int> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) labels[i] = static_cast<int>(bytes[8 + i]);
  return labels;
}

std::vector<std::uint8_t> write_idx_images(const Matrix& images, std::uint32_t rows,
                                           std::uint32_t cols) {
  if (images.cols() != static_cast<Eigen::Index>(rows) * cols) {
    throw ShapeError("image matrix has " + std::to_string(images.cols()) +
                     " columns, expected rows*cols = " +
                     std::to_string(static_cast<std::size_t>(rows) * cols));
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + static_cast<std::size_t>(images.size()));
  put_u32_be(out, kImageMagic);
  put_u32_be(out, static_cast<std::uint32_t>(images.rows()));
  put_u32_be(out, rows);
  put_u32_be(out, cols);
  for (Eigen::Index i = 0; i < images.size(); ++i) {
    const double v = std::clamp(images.data()[i], 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return out;
}

std::vector<std::uint8_t> write_idx_labels(std::span<const int> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  put_u32_be(out, kLabelMagic);
  put_u32_be(out, static_cast<std::uint32_t>(labels.size()));
  for (const int label : labels) {
    if (label < 0 || label > 255) throw DomainError("idx label outside byte range");
    out.push_back(static_cast<std::uint8_t>(label));
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw LookupError("cannot open " + path.string());
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw LookupError("short read from " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LookupError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LookupError("short write to " + path.string());
}

LabeledDataset load_idx_dir(const std::filesystem::path& dir, bool train_split) {
  const char* image_name = train_split ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
  const char* label_name = train_split ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte";
  const auto image_path = dir / image_name;
  const auto label_path = dir / label_name;
  if (!std::filesystem::exists(image_path)) {
    throw ConfigError("data dir " + dir.string() + " is missing " + image_name);
  }
  if (!std::filesystem::exists(label_path)) {
    throw ConfigError("data dir " + dir.string() + " is missing " + label_name);
  }
  Matrix features = load_idx_images(read_file_bytes(image_path));
  std::vector<int> labels = load_idx_labels(read_file_bytes(label_path));
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw LengthError("image and label counts differ in " + dir.string());
  }
  for (const int label : labels) {
    if (label >= 10) throw DomainError("label " + std::to_string(label) + " is not an MNIST digit");
  }
  return make_dataset(std::move(features), std::move(labels), 10);
}

// --------------------------------------------------------------------------
// Synthetic blobs

LabeledDataset synth_blobs(std::uint64_t seed, int samples_per_class, int dims, int num_classes,
                           double spread) {
  if (samples_per_class < 1 || dims < 1 || num_classes < 1) {
    throw DomainError("synth_blobs counts must be positive");
  }
  if (spread < 0.0) throw DomainError("synth_blobs spread must be non-negative");
  Rng rng(seed);
  Matrix centers(num_classes, dims);
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = rng.uniform(0.2, 0.8);

  const Eigen::Index n = static_cast<Eigen::Index>(samples_per_class) * num_classes;
  Matrix features(n, dims);
  std::vector<int> labels(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (int c = 0; c < num_classes; ++c) {
    for (int s = 0; s < samples_per_class; ++s, ++row) {
      for (int j = 0; j < dims; ++j) {
        features(row, j) = std::clamp(rng.normal(centers(c, j), spread), 0.0, 1.0);
      }
      labels[static_cast<std::size_t>(row)] = c;
    }
  }
  return LabeledDataset{std::move(features), std::move(labels), num_classes};
}

// --------------------------------------------------------------------------
// Partitioning

std::vector<LabeledDataset> partition(const LabeledDataset& data, const PartitionSpec& spec,
                                      int num_nodes) {
  if (num_nodes < 1) throw DomainError("num_nodes must be >= 1");
  const std::size_t n = data.size();
  Rng rng(spec.seed);
  std::vector<std::size_t> order = rng.permutation(n);

  std::vector<std::vector<std::size_t>> shards(static_cast<std::size_t>(num_nodes));

  if (const auto* skew = std::get_if<QuantitySkew>(&spec.strategy);
      skew != nullptr || std::holds_alternative<UniformShards>(spec.strategy)) {
    std::vector<double> weights;
    if (skew != nullptr) {
      weights = skew->weights;
      if (static_cast<int>(weights.size()) != num_nodes) {
        throw DomainError("quantity-skew weights count differs from num_nodes");
      }
      double sum = 0.0;
      for (const double w : weights) {
        if (w < 0.0) throw DomainError("quantity-skew weights must be non-negative");
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw DomainError("quantity-skew weights must sum to 1");
    } else {
      weights.assign(static_cast<std::size_t>(num_nodes), 1.0 / num_nodes);
    }
    std::vector<std::size_t> sizes(static_cast<std::size_t>(num_nodes));
    std::size_t assigned = 0;
    for (int i = 0; i < num_nodes; ++i) {
      sizes[static_cast<std::size_t>(i)] =
          static_cast<std::size_t>(std::floor(weights[static_cast<std::size_t>(i)] *
                                              static_cast<double>(n)));
      assigned += sizes[static_cast<std::size_t>(i)];
    }
    sizes.back() += n - assigned;  // remainder rows go to the last node
    std::size_t at = 0;
    for (int i = 0; i < num_nodes; ++i) {
      auto& shard = shards[static_cast<std::size_t>(i)];
      shard.assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                   order.begin() + static_cast<std::ptrdiff_t>(at + sizes[static_cast<std::size_t>(i)]));
      at += sizes[static_cast<std::size_t>(i)];
    }
  } else {
    const auto& filter = std::get<LabelFilter>(spec.strategy);
    if (static_cast<int>(filter.allowed.size()) != num_nodes) {
      throw DomainError("label-filter set count differs from num_nodes");
    }
    for (const auto& allowed : filter.allowed) {
      if (allowed.empty()) throw DomainError("label-filter sets must be non-empty");
    }
    // eligible nodes per label, then round-robin among them so overlapping
    // sets still yield disjoint shards
    std::vector<std::vector<int>> takers(static_cast<std::size_t>(data.num_classes));
    for (int node = 0; node < num_nodes; ++node) {
      for (const int label : sorted_unique(filter.allowed[static_cast<std::size_t>(node)])) {
        if (label < 0 || label >= data.num_classes) {
          throw DomainError("label-filter label " + std::to_string(label) + " out of range");
        }
        takers[static_cast<std::size_t>(label)].push_back(node);
      }
    }
    std::vector<std::size_t> cursor(static_cast<std::size_t>(data.num_classes), 0);
    for (const std::size_t row : order) {
      const auto label = static_cast<std::size_t>(data.labels[row]);
      const auto& eligible = takers[label];
      if (eligible.empty()) continue;  // label allowed nowhere: row is dropped
      const int node = eligible[cursor[label] % eligible.size()];
      cursor[label]++;
      shards[static_cast<std::size_t>(node)].push_back(row);
    }
    for (int node = 0; node < num_nodes; ++node) {
      if (shards[static_cast<std::size_t>(node)].empty()) {
        throw EmptyDataError("label-filter node " + std::to_string(node) + " matched zero rows");
      }
    }
  }

  std::vector<LabeledDataset> out;
  out.reserve(static_cast<std::size_t>(num_nodes));
  for (auto& shard : shards) {
    std::sort(shard.begin(), shard.end());
    out.push_back(select_rows(data, shard));
  }
  return out;
}

// --------------------------------------------------------------------------
// Drift schedule

void validate_schedule(const DriftSchedule& schedule) {
  if (schedule.ramp_rounds < 1) throw DomainError("drift ramp_rounds must be >= 1");
  if (schedule.start_round < 0) throw DomainError("drift start_round must be >= 0");
  if (schedule.target_fraction < 0.0 || schedule.target_fraction > 1.0) {
    throw DomainError("drift target_fraction must lie in [0, 1]");
  }
  std::set<int> base(schedule.base_classes.begin(), schedule.base_classes.end());
  for (const int c : schedule.drift_classes) {
    if (base.count(c) != 0) {
      throw DomainError("drift class " + std::to_string(c) + " also appears in base_classes");
    }
  }
}

double drift_fraction(const DriftSchedule& schedule, int round) {
  if (round < schedule.start_round) return 0.0;
  const double progress =
      static_cast<double>(round - schedule.start_round + 1) / schedule.ramp_rounds;
  return schedule.target_fraction * std::min(1.0, progress);
}

namespace {

bool contains(const std::vector<int>& classes, int label) {
  return std::find(classes.begin(), classes.end(), label) != classes.end();
}

/// Drift rows to include so their share of (base + drift) is f, capped by
/// what the pool holds.
std::size_t drift_sample_count(std::size_t base_count, std::size_t drift_count, double f) {
  if (f <= 0.0 || drift_count == 0) return 0;
  if (f >= 1.0) return drift_count;
  const double wanted = f / (1.0 - f) * static_cast<double>(base_count);
  return std::min(drift_count, static_cast<std::size_t>(std::llround(wanted)));
}

}  // namespace

std::size_t drift_view_size(const LabeledDataset& pool, const DriftSchedule& schedule, int round) {
  std::size_t base_count = 0;
  std::size_t drift_count = 0;
  for (const int label : pool.labels) {
    if (contains(schedule.base_classes, label)) base_count++;
    else if (contains(schedule.drift_classes, label)) drift_count++;
  }
  return base_count + drift_sample_count(base_count, drift_count,
                                         drift_fraction(schedule, round));
}

LabeledDataset drift_view(const LabeledDataset& pool, const DriftSchedule& schedule, int round,
                          std::uint64_t seed) {
  validate_schedule(schedule);
  std::vector<std::size_t> base_rows;
  std::vector<std::size_t> drift_rows;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const int label = pool.labels[i];
    if (contains(schedule.base_classes, label)) base_rows.push_back(i);
    else if (contains(schedule.drift_classes, label)) drift_rows.push_back(i);
  }
  const std::size_t k =
      drift_sample_count(base_rows.size(), drift_rows.size(), drift_fraction(schedule, round));

  std::vector<std::size_t> picked = base_rows;
  if (k > 0) {
    // one permutation per seed; the round only moves the prefix length
    Rng rng(seed);
    const auto perm = rng.permutation(drift_rows.size());
    for (std::size_t i = 0; i < k; ++i) picked.push_back(drift_rows[perm[i]]);
  }
  std::sort(picked.begin(), picked.end());
  return select_rows(pool, picked);
}

}  // namespace fedfleet
