#include "fedfleet/model.hpp"

#include <cmath>
#include <string>

#include "fedfleet/errors.hpp"
#include "fedfleet/rng.hpp"

namespace fedfleet {

namespace {

constexpr double kProbFloor = 1e-12;

/// Weight/bias views over a flat parameter buffer.
struct ParamMaps {
  Eigen::Map<Matrix> w1;
  Eigen::Map<RowVector> b1;
  Eigen::Map<Matrix> w2;
  Eigen::Map<RowVector> b2;
};

struct ConstParamMaps {
  Eigen::Map<const Matrix> w1;
  Eigen::Map<const RowVector> b1;
  Eigen::Map<const Matrix> w2;
  Eigen::Map<const RowVector> b2;
};

ParamMaps map_params(double* flat, int input_dim, int hidden_dim, int num_classes) {
  double* p = flat;
  Eigen::Map<Matrix> w1(p, input_dim, hidden_dim);
  p += static_cast<std::ptrdiff_t>(input_dim) * hidden_dim;
  Eigen::Map<RowVector> b1(p, hidden_dim);
  p += hidden_dim;
  Eigen::Map<Matrix> w2(p, hidden_dim, num_classes);
  p += static_cast<std::ptrdiff_t>(hidden_dim) * num_classes;
  Eigen::Map<RowVector> b2(p, num_classes);
  return ParamMaps{w1, b1, w2, b2};
}

ConstParamMaps map_params(const double* flat, int input_dim, int hidden_dim, int num_classes) {
  const double* p = flat;
  Eigen::Map<const Matrix> w1(p, input_dim, hidden_dim);
  p += static_cast<std::ptrdiff_t>(input_dim) * hidden_dim;
  Eigen::Map<const RowVector> b1(p, hidden_dim);
  p += hidden_dim;
  Eigen::Map<const Matrix> w2(p, hidden_dim, num_classes);
  p += static_cast<std::ptrdiff_t>(hidden_dim) * num_classes;
  Eigen::Map<const RowVector> b2(p, num_classes);
  return ConstParamMaps{w1, b1, w2, b2};
}

struct ForwardPass {
  Matrix z1;      // pre-activation, needed for the rectifier mask
  Matrix hidden;  // max(z1, 0)
  Matrix probs;
};

ForwardPass forward_pass(const ConstParamMaps& maps, const Matrix& features) {
  ForwardPass pass;
  pass.z1.noalias() = features * maps.w1;
  pass.z1.rowwise() += maps.b1;
  pass.hidden = pass.z1.cwiseMax(0.0);
  Matrix logits;
  logits.noalias() = pass.hidden * maps.w2;
  logits.rowwise() += maps.b2;
  pass.probs = softmax_rows(logits);
  return pass;
}

/// Writes the batch gradient into grad_flat (same layout as params).
void backward_pass(const ConstParamMaps& maps, const Matrix& features,
                   std::span<const int> labels, const ForwardPass& pass, double* grad_flat,
                   int input_dim, int hidden_dim, int num_classes) {
  const auto n = features.rows();
  Matrix dlogits = pass.probs;  // (P - onehot) / n
  for (Eigen::Index i = 0; i < n; ++i) {
    dlogits(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  }
  dlogits /= static_cast<double>(n);

  ParamMaps grads = map_params(grad_flat, input_dim, hidden_dim, num_classes);
  grads.w2.noalias() = pass.hidden.transpose() * dlogits;
  grads.b2 = dlogits.colwise().sum();

  Matrix dhidden;
  dhidden.noalias() = dlogits * maps.w2.transpose();
  dhidden = (pass.z1.array() > 0.0).select(dhidden, 0.0);

  grads.w1.noalias() = features.transpose() * dhidden;
  grads.b1 = dhidden.colwise().sum();
}

void check_features(const MlpModel& model, const Matrix& features) {
  if (features.cols() != model.input_dim()) {
    throw ShapeError("features have " + std::to_string(features.cols()) +
                     " columns but the model expects " + std::to_string(model.input_dim()));
  }
  if (features.rows() < 1) throw EmptyDataError("feature matrix has no rows");
}

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw DomainError("learning_rate must be > 0");
  if (cfg.batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (cfg.epochs < 0) throw DomainError("epochs must be >= 0");
}

MlpModel::MlpModel(int input_dim, int hidden_dim, int num_classes, ParamVector params)
    : input_dim_(input_dim),
      hidden_dim_(hidden_dim),
      num_classes_(num_classes),
      params_(std::move(params)) {
  if (input_dim < 1 || hidden_dim < 1) throw DomainError("model dims must be positive");
  if (num_classes < 2) throw DomainError("num_classes must be >= 2");
  if (params_.layout() != layout_for(input_dim, hidden_dim, num_classes)) {
    throw ShapeError("param layout does not match the model dimensions");
  }
}

Layout MlpModel::layout_for(int input_dim, int hidden_dim, int num_classes) {
  return Layout{
      LayerShape{static_cast<std::uint32_t>(input_dim), static_cast<std::uint32_t>(hidden_dim)},
      LayerShape{static_cast<std::uint32_t>(hidden_dim), static_cast<std::uint32_t>(num_classes)},
  };
}

MlpModel MlpModel::init(int input_dim, int hidden_dim, int num_classes, std::uint64_t seed) {
  ParamVector params = ParamVector::zeros(layout_for(input_dim, hidden_dim, num_classes));
  Rng rng(seed);
  double* p = params.data();
  for (const auto& layer : params.layout()) {
    const double limit = std::sqrt(6.0 / (static_cast<double>(layer.rows) + layer.cols));
    for (std::size_t i = 0; i < layer.weight_count(); ++i) *p++ = rng.uniform(-limit, limit);
    p += layer.cols;  // biases stay zero
  }
  return MlpModel(input_dim, hidden_dim, num_classes, std::move(params));
}

void MlpModel::set_params(ParamVector params) {
  if (params.layout() != params_.layout()) {
    throw ShapeError("replacement params do not match the model layout");
  }
  params_ = std::move(params);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - shift).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

Matrix forward(const MlpModel& model, const Matrix& features) {
  check_features(model, features);
  const auto maps = map_params(model.params().data(), model.input_dim(), model.hidden_dim(),
                               model.num_classes());
  return forward_pass(maps, features).probs;
}

double cross_entropy(const Matrix& probabilities, std::span<const int> labels) {
  if (static_cast<std::size_t>(probabilities.rows()) != labels.size()) {
    throw ShapeError("probability rows and label count differ");
  }
  const int num_classes = static_cast<int>(probabilities.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= num_classes) {
      throw DomainError("label " + std::to_string(label) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
    total += -std::log(std::max(probabilities(i, label), kProbFloor));
  }
  return total / static_cast<double>(probabilities.rows());
}

Gradients backward(const MlpModel& model, const Matrix& features, std::span<const int> labels) {
  check_features(model, features);
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ShapeError("feature rows and label count differ");
  }
  for (const int label : labels) {
    if (label < 0 || label >= model.num_classes()) {
      throw DomainError("label " + std::to_string(label) + " outside [0, " +
                        std::to_string(model.num_classes()) + ")");
    }
  }
  const auto maps = map_params(model.params().data(), model.input_dim(), model.hidden_dim(),
                               model.num_classes());
  const ForwardPass pass = forward_pass(maps, features);
  Gradients grads = ParamVector::zeros(model.params().layout());
  backward_pass(maps, features, labels, pass, grads.data(), model.input_dim(),
                model.hidden_dim(), model.num_classes());
  return grads;
}

ParamVector sgd_step(const ParamVector& params, const Gradients& grads, double learning_rate) {
  ParamVector out = params;
  out.axpy(-learning_rate, grads);
  return out;
}

std::pair<MlpModel, TrainStats> train_local(const MlpModel& model, const LabeledDataset& data,
                                            const TrainConfig& cfg, double per_sample_cost_ms) {
  validate_train_config(cfg);
  TrainStats stats;
  if (cfg.epochs == 0) return {model, stats};
  if (data.size() == 0) throw EmptyDataError("cannot train on an empty dataset");
  check_features(model, data.features);

  const int input_dim = model.input_dim();
  const int hidden_dim = model.hidden_dim();
  const int num_classes = model.num_classes();
  ParamVector params = model.params();
  ParamVector grads = ParamVector::zeros(params.layout());
  const auto maps = map_params(static_cast<const double*>(params.data()), input_dim, hidden_dim,
                               num_classes);

  Rng rng(cfg.seed);
  const std::size_t n = data.size();
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  Matrix batch_features;
  std::vector<int> batch_labels;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = rng.permutation(n);
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t count = std::min(batch_size, n - start);
      batch_features.resize(static_cast<Eigen::Index>(count), input_dim);
      batch_labels.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        batch_features.row(static_cast<Eigen::Index>(i)) =
            data.features.row(static_cast<Eigen::Index>(order[start + i]));
        batch_labels[i] = data.labels[order[start + i]];
      }
      const ForwardPass pass = forward_pass(maps, batch_features);
      backward_pass(maps, batch_features, batch_labels, pass, grads.data(), input_dim,
                    hidden_dim, num_classes);
      for (std::size_t i = 0; i < params.size(); ++i) {
        params.data()[i] -= cfg.learning_rate * grads.data()[i];
      }
    }
  }

  stats.samples_seen = static_cast<std::size_t>(cfg.epochs) * n;
  stats.sim_train_ms = static_cast<double>(stats.samples_seen) * per_sample_cost_ms;
  return {MlpModel(input_dim, hidden_dim, num_classes, std::move(params)), stats};
}

EvalResult evaluate(const MlpModel& model, const LabeledDataset& data) {
  if (data.size() == 0) throw EmptyDataError("cannot evaluate on an empty dataset");
  check_features(model, data.features);

  constexpr Eigen::Index kChunk = 2048;
  std::size_t correct = 0;
  double loss_total = 0.0;
  const Eigen::Index n = data.features.rows();
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index count = std::min(kChunk, n - start);
    const Matrix probs = forward(model, data.features.middleRows(start, count));
    for (Eigen::Index i = 0; i < count; ++i) {
      int best = 0;
      for (int c = 1; c < model.num_classes(); ++c) {
        if (probs(i, c) > probs(i, best)) best = c;  // strict: ties keep the lowest index
      }
      const int label = data.labels[static_cast<std::size_t>(start + i)];
      if (best == label) correct++;
      loss_total += -std::log(std::max(probs(i, label), kProbFloor));
    }
  }
  return EvalResult{static_cast<double>(correct) / static_cast<double>(n),
                    loss_total / static_cast<double>(n)};
}

}  // namespace fedfleet
