#include "mgsp/train.hpp"

namespace mgsp {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ValidationError("unknown optimizer '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("learning_rate must be positive");
  if (!(lr_decay > 0.0) || lr_decay > 1.0) throw ValidationError("lr_decay must lie in (0, 1]");
  if (epochs < 0) throw ValidationError("epochs must be nonnegative");
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"loss", to_string(c.loss)},         {"optimizer", to_string(c.optimizer)},
          {"learning_rate", c.learning_rate},  {"lr_decay", c.lr_decay},
          {"epochs", c.epochs},                {"batch_size", c.batch_size},
          {"seed", c.seed},                    {"beta1", c.beta1},
          {"beta2", c.beta2},                  {"adam_epsilon", c.adam_epsilon}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.loss = loss_kind_from_string(j.at("loss").get<std::string>());
  c.optimizer = optimizer_from_string(j.at("optimizer").get<std::string>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.lr_decay = j.at("lr_decay").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.validate();
  return c;
}

Ensemble::Ensemble(std::vector<MgnnModel> members) : members_(std::move(members)) {
  if (members_.empty()) throw ValidationError("ensemble needs at least one member");
}

std::size_t Ensemble::parameter_count() const {
  std::size_t n = 0;
  for (const auto& m : members_) n += m.parameter_count();
  return n;
}

std::size_t Ensemble::basis_word_count() const {
  std::size_t n = 0;
  for (const auto& m : members_) n += m.basis_word_count();
  return n;
}

std::vector<Matrix*> Ensemble::parameters() {
  std::vector<Matrix*> p;
  for (auto& m : members_)
    for (auto* q : m.parameters()) p.push_back(q);
  return p;
}

Ensemble::Trace Ensemble::forward(const Signal& x) const {
  Trace t;
  for (const auto& m : members_) {
    t.members.push_back(m.forward(x));
    if (t.output.size() == 0) {
      t.output = t.members.back().output;
    } else {
      if (t.output.rows() != t.members.back().output.rows() ||
          t.output.cols() != t.members.back().output.cols())
        throw ValidationError("ensemble members disagree on the output shape");
      t.output += t.members.back().output;
    }
  }
  return t;
}

std::vector<Matrix> Ensemble::backward(const Trace& trace, const Matrix& grad_output) const {
  std::vector<Matrix> grads;
  for (std::size_t k = 0; k < members_.size(); ++k)
    for (auto& g : members_[k].backward(trace.members[k], grad_output)) grads.push_back(std::move(g));
  return grads;
}

namespace detail {

Optimizer::Optimizer(const TrainConfig& config, const std::vector<Matrix*>& params)
    : config_(config) {
  if (config_.optimizer == OptimizerKind::adam) {
    for (const auto* p : params) {
      first_.push_back(Matrix::Zero(p->rows(), p->cols()));
      second_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
}

void Optimizer::step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, double lr) {
  if (grads.size() != params.size()) throw Error("optimizer: gradient count mismatch");
  if (config_.optimizer == OptimizerKind::sgd) {
    for (std::size_t k = 0; k < params.size(); ++k) *params[k] -= lr * grads[k];
    return;
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    first_[k] = config_.beta1 * first_[k] + (1.0 - config_.beta1) * grads[k];
    second_[k] = config_.beta2 * second_[k] + (1.0 - config_.beta2) * grads[k].cwiseAbs2();
    *params[k] -= (lr * (first_[k] / c1).array() /
                   ((second_[k] / c2).array().sqrt() + config_.adam_epsilon))
                      .matrix();
  }
}

std::vector<Matrix> snapshot(const std::vector<Matrix*>& params) {
  std::vector<Matrix> s;
  s.reserve(params.size());
  for (const auto* p : params) s.push_back(*p);
  return s;
}

void restore(const std::vector<Matrix*>& params, const std::vector<Matrix>& values) {
  for (std::size_t k = 0; k < params.size(); ++k) *params[k] = values[k];
}

}  // namespace detail

}  // namespace mgsp
