#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgsp/errors.hpp"
#include "mgsp/filter.hpp"
#include "mgsp/sampling.hpp"

namespace mgsp {

enum class Nonlinearity { relu, tanh, identity };

std::string_view to_string(Nonlinearity s);
Nonlinearity nonlinearity_from_string(std::string_view name);

struct PerceptronLayer {
  MultigraphFilter filter;
  Nonlinearity sigma = Nonlinearity::relu;
};

// y = weight * h + bias; bias is a column.
struct DenseLayer {
  Matrix weight;
  Matrix bias;
};

// Activations kept for the backward pass.
struct LayerTrace {
  Signal input;                  // x_{l-1}
  Signal sampled;                // pooled / sampled input on N_l nodes
  std::vector<Signal> diffusions;  // S_w x~ per basis word
  Signal pre_activation;
  Signal output;                 // x_l
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  std::vector<Vector> readout_inputs;  // h_k fed to readout map k
  std::vector<Vector> readout_pre;     // W_k h_k + b_k
  Matrix output;
};

// Stack of multigraph perceptrons, optionally interleaved with selection
// sampling and pooling, followed by optional dense readout maps (relu
// between them, identity on the last).
//
// With a sampling plan the network runs in the plan's rank order: the input
// is relabeled by the plan permutation, layer l pools x_{l-1} onto the N_l
// top-ranked nodes over their multigraph neighborhoods and filters with the
// principal N_l x N_l blocks of the relabeled shifts. Without readout the
// output is x_L in that order.
class MgnnModel {
 public:
  MgnnModel() = default;
  MgnnModel(Multigraph graph, std::vector<PerceptronLayer> layers,
            std::vector<DenseLayer> readout = {}, std::optional<SamplingPlan> plan = std::nullopt);

  const Multigraph& multigraph() const { return graph_; }
  const std::vector<PerceptronLayer>& layers() const { return layers_; }
  std::vector<PerceptronLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& readout() const { return readout_; }
  const std::optional<SamplingPlan>& plan() const { return plan_; }

  int num_layers() const { return static_cast<int>(layers_.size()); }
  bool has_readout() const { return !readout_.empty(); }
  bool has_sampling() const { return plan_.has_value(); }
  int input_features() const { return layers_.front().filter.in_features(); }
  int layer_nodes(int layer) const;  // N_l, layer in 0..L
  const Multigraph& layer_graph(int layer) const;  // shifts used by layer l in 1..L
  const NodeSets& pooling_sets(int layer) const;
  std::size_t parameter_count() const;
  std::size_t basis_word_count() const;

  // Filter coefficient blocks layer by layer in word order, then
  // (weight, bias) for each readout map.
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;

  ForwardTrace forward(const Signal& x) const;
  Matrix predict(const Signal& x) const { return forward(x).output; }
  // Gradient of a scalar loss w.r.t. every parameter given dloss/doutput.
  std::vector<Matrix> backward(const ForwardTrace& trace, const Matrix& grad_output) const;

 private:
  void derive_layer_structure();

  Multigraph graph_;
  std::vector<PerceptronLayer> layers_;
  std::vector<DenseLayer> readout_;
  std::optional<SamplingPlan> plan_;
  std::optional<Permutation> relabeling_;
  std::vector<Multigraph> layer_graphs_;  // index l - 1
  std::vector<NodeSets> pooling_sets_;    // index l - 1
};

struct PlanConfig {
  std::vector<int> node_counts;  // N_0..N_L
  std::vector<int> radii;        // alpha_1..alpha_L
  Centrality centrality = Centrality::degree;
  Aggregation aggregation = Aggregation::max;
};

struct ArchitectureConfig {
  std::vector<int> features;  // F_0..F_L
  int depth = 2;              // K, maximum word length
  std::optional<double> prune_epsilon;
  Nonlinearity hidden_sigma = Nonlinearity::relu;
  Nonlinearity final_sigma = Nonlinearity::relu;
  std::vector<int> readout;  // dense output sizes; empty = no readout
  std::optional<PlanConfig> plan;
  std::size_t basis_cap = kDefaultBasisCap;
};

// Builds the basis (pruned on the input multigraph when prune_epsilon is set)
// and draws every weight uniformly in +-(fan_in * |words|)^(-1/2) for
// filters, +-(fan_in)^(-1/2) for readout weights; readout biases start at 0.
MgnnModel make_model(const Multigraph& g, const ArchitectureConfig& arch, std::uint64_t seed,
                     const NormOptions& options = {});

struct Sample {
  Signal x;
  Matrix y;
};

struct LossValue {
  double loss = 0.0;
  Matrix gradient;  // dJ/doutput
};

using LossFunction = std::function<LossValue(const Matrix& output, const Matrix& target)>;

enum class LossKind { mse, cross_entropy };
std::string_view to_string(LossKind k);
LossKind loss_kind_from_string(std::string_view name);

// J = sum of squared errors.
LossValue mse_loss(const Matrix& output, const Matrix& target);
// Softmax over all output entries against a one-hot (or distribution) target.
LossValue cross_entropy_loss(const Matrix& output, const Matrix& target);
LossFunction loss_function(LossKind kind);

struct LossAndGradients {
  double loss = 0.0;
  std::vector<Matrix> gradients;
};

// |T|^-1 sum J(y, model(x)) and its gradient, accumulated in sample order.
// Throws NumericalError on a non-finite loss.
template <class Model>
LossAndGradients loss_and_gradients(const Model& model, std::span<const Sample> batch,
                                    const LossFunction& loss);

struct EquivarianceReport {
  bool passed = false;
  double max_deviation = 0.0;
};

// Compares the model on (P^T S_i P, P^T x) against P^T model(x). Only
// defined for perceptron stacks without sampling or readout.
EquivarianceReport check_equivariance(const MgnnModel& model, const Signal& x,
                                      const Permutation& p, double tolerance);

// Versioned JSON checkpoint: multigraph, layers (words + row-major
// coefficient blocks in word order), readout, sampling plan and an opaque
// metadata object (training seed and config).
inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json model_to_json(const MgnnModel& model);
MgnnModel model_from_json(const nlohmann::json& doc);
void save_checkpoint(const MgnnModel& model, const std::string& path,
                     const nlohmann::json& metadata = nlohmann::json::object());
MgnnModel load_checkpoint(const std::string& path, nlohmann::json* metadata = nullptr);

// ---------------------------------------------------------------------------

template <class Model>
LossAndGradients loss_and_gradients(const Model& model, std::span<const Sample> batch,
                                    const LossFunction& loss) {
  if (batch.empty()) throw ValidationError("loss_and_gradients: empty batch");
  LossAndGradients out;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const Sample& s : batch) {
    const auto trace = model.forward(s.x);
    LossValue j = loss(trace.output, s.y);
    if (!std::isfinite(j.loss)) throw NumericalError("loss is not finite");
    out.loss += scale * j.loss;
    std::vector<Matrix> g = model.backward(trace, j.gradient);
    if (out.gradients.empty()) {
      for (auto& m : g) m *= scale;
      out.gradients = std::move(g);
    } else {
      for (std::size_t k = 0; k < g.size(); ++k) out.gradients[k] += scale * g[k];
    }
  }
  return out;
}

}  // namespace mgsp
