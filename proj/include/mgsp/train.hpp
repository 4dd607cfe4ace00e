#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgsp/errors.hpp"
#include "mgsp/mgnn.hpp"

namespace mgsp {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(std::string_view name);

struct TrainConfig {
  LossKind loss = LossKind::mse;
  OptimizerKind optimizer = OptimizerKind::adam;
  double learning_rate = 1e-2;
  double lr_decay = 1.0;  // multiplies the learning rate after every epoch
  int epochs = 100;
  int batch_size = 16;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochRecord {
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

template <class Model>
struct TrainOutcome {
  Model model;  // best-validation snapshot
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 0 = initialization
};

// Mean loss of `model` over `data`.
template <class Model>
double evaluate_loss(const Model& model, std::span<const Sample> data, const LossFunction& loss) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : data) total += loss(model.predict(s.x), s.y).loss;
  return total / static_cast<double>(data.size());
}

// Sums the outputs of independently parameterized members; used for the
// per-graph baseline.
class Ensemble {
 public:
  struct Trace {
    std::vector<ForwardTrace> members;
    Matrix output;
  };

  Ensemble() = default;
  explicit Ensemble(std::vector<MgnnModel> members);

  const std::vector<MgnnModel>& members() const { return members_; }
  std::size_t parameter_count() const;
  std::size_t basis_word_count() const;

  std::vector<Matrix*> parameters();
  Trace forward(const Signal& x) const;
  Matrix predict(const Signal& x) const { return forward(x).output; }
  std::vector<Matrix> backward(const Trace& trace, const Matrix& grad_output) const;

 private:
  std::vector<MgnnModel> members_;
};

namespace detail {

class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const std::vector<Matrix*>& params);
  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, double lr);

 private:
  TrainConfig config_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  long steps_ = 0;
};

std::vector<Matrix> snapshot(const std::vector<Matrix*>& params);
void restore(const std::vector<Matrix*>& params, const std::vector<Matrix>& values);

}  // namespace detail

// Minibatch training on the mean loss; fully determined by config.seed.
// Keeps the parameters with the lowest validation loss (training loss when
// no validation set is given). Throws NumericalError naming the epoch when
// the loss stops being finite.
template <class Model>
TrainOutcome<Model> train(Model model, std::span<const Sample> train_set,
                          std::span<const Sample> validation_set, const TrainConfig& config,
                          const LossFunction& loss) {
  config.validate();
  if (train_set.empty() && config.epochs > 0) throw ValidationError("train: empty training set");
  TrainOutcome<Model> out;
  std::vector<Matrix*> params = model.parameters();
  detail::Optimizer optimizer(config, params);
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_params = detail::snapshot(params);
  double lr = config.learning_rate;
  std::vector<Sample> batch;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(train_set[order[k]]);
      LossAndGradients lg;
      try {
        lg = loss_and_gradients(model, std::span<const Sample>(batch), loss);
      } catch (const NumericalError&) {
        throw NumericalError("training diverged at epoch " + std::to_string(epoch));
      }
      epoch_loss += lg.loss * static_cast<double>(stop - start);
      optimizer.step(params, lg.gradients, lr);
    }
    EpochRecord rec;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.validation_loss = validation_set.empty() ? rec.train_loss
                                                 : evaluate_loss(model, validation_set, loss);
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.validation_loss))
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    out.history.push_back(rec);
    if (rec.validation_loss < best) {
      best = rec.validation_loss;
      best_params = detail::snapshot(params);
      out.best_epoch = epoch;
    }
    lr *= config.lr_decay;
  }
  detail::restore(params, best_params);
  out.model = std::move(model);
  return out;
}

}  // namespace mgsp
