#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "fedfleet/dataset.hpp"
#include "fedfleet/matrix.hpp"
#include "fedfleet/param_vector.hpp"

namespace fedfleet {

/// Same layout as the model's ParamVector; values are d(mean batch loss)/d(param).
using Gradients = ParamVector;

struct TrainConfig {
  double learning_rate = 0.05;
  int batch_size = 32;
  int epochs = 1;
  std::uint64_t seed = 0;
};

void validate_train_config(const TrainConfig& cfg);

/// Dense classifier: input -> rectified hidden -> softmax over classes.
class MlpModel {
 public:
  MlpModel(int input_dim, int hidden_dim, int num_classes, ParamVector params);

  static Layout layout_for(int input_dim, int hidden_dim, int num_classes);

  /// Weights uniform in +-sqrt(6/(fan_in+fan_out)) from the seeded stream,
  /// biases zero.
  static MlpModel init(int input_dim, int hidden_dim, int num_classes, std::uint64_t seed);

  int input_dim() const { return input_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  int num_classes() const { return num_classes_; }
  const ParamVector& params() const { return params_; }
  void set_params(ParamVector params);

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  int input_dim_ = 0;
  int hidden_dim_ = 0;
  int num_classes_ = 0;
  ParamVector params_;
};

/// Row-wise softmax with max-shift, stable for large logits.
Matrix softmax_rows(const Matrix& logits);

/// Class probabilities, one row per sample; rows sum to 1 within 1e-9.
Matrix forward(const MlpModel& model, const Matrix& features);

/// Mean of -log p[true label]; probabilities are clamped below at 1e-12
/// before the log so saturated rows stay finite.
double cross_entropy(const Matrix& probabilities, std::span<const int> labels);

/// Analytic gradient of the mean cross-entropy over the batch.
Gradients backward(const MlpModel& model, const Matrix& features, std::span<const int> labels);

/// params - learning_rate * grads, element-wise.
ParamVector sgd_step(const ParamVector& params, const Gradients& grads, double learning_rate);

struct TrainStats {
  std::size_t samples_seen = 0;  // epochs * |data|
  double sim_train_ms = 0.0;     // samples_seen * per_sample_cost_ms
};

/// cfg.epochs passes of seeded-shuffled mini-batch SGD. Pure function of
/// its arguments: repeated calls are bit-identical.
std::pair<MlpModel, TrainStats> train_local(const MlpModel& model, const LabeledDataset& data,
                                            const TrainConfig& cfg,
                                            double per_sample_cost_ms = 0.01);

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// Accuracy by argmax (ties break to the lowest class index) plus mean loss.
EvalResult evaluate(const MlpModel& model, const LabeledDataset& data);

}  // namespace fedfleet
