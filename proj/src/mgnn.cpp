#include "mgsp/mgnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "mgsp/errors.hpp"

namespace mgsp {

std::string_view to_string(Nonlinearity s) {
  switch (s) {
    case Nonlinearity::relu: return "relu";
    case Nonlinearity::tanh: return "tanh";
    case Nonlinearity::identity: return "identity";
  }
  return "identity";
}

Nonlinearity nonlinearity_from_string(std::string_view name) {
  for (auto s : {Nonlinearity::relu, Nonlinearity::tanh, Nonlinearity::identity})
    if (to_string(s) == name) return s;
  throw ValidationError("unknown nonlinearity '" + std::string(name) + "'");
}

std::string_view to_string(LossKind k) { return k == LossKind::mse ? "mse" : "cross_entropy"; }

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  if (name == "cross_entropy") return LossKind::cross_entropy;
  throw ValidationError("unknown loss '" + std::string(name) + "'");
}

namespace {

Signal activate(const Signal& z, Nonlinearity s) {
  switch (s) {
    case Nonlinearity::relu: return z.cwiseMax(0.0);
    case Nonlinearity::tanh: return z.array().tanh().matrix();
    case Nonlinearity::identity: return z;
  }
  return z;
}

// relu'(0) = 0.
Signal activation_backward(const Signal& z, const Signal& a, Nonlinearity s, const Signal& grad) {
  switch (s) {
    case Nonlinearity::relu: return (z.array() > 0.0).select(grad, 0.0);
    case Nonlinearity::tanh: return (grad.array() * (1.0 - a.array().square())).matrix();
    case Nonlinearity::identity: return grad;
  }
  return grad;
}

// Row-major flattening: node-major, features contiguous.
Vector flatten(const Signal& x) {
  Vector v(x.size());
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) v[k++] = x(r, c);
  return v;
}

Signal unflatten(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
  Signal x(rows, cols);
  Eigen::Index k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) x(r, c) = v[k++];
  return x;
}

}  // namespace

MgnnModel::MgnnModel(Multigraph graph, std::vector<PerceptronLayer> layers,
                     std::vector<DenseLayer> readout, std::optional<SamplingPlan> plan)
    : graph_(std::move(graph)),
      layers_(std::move(layers)),
      readout_(std::move(readout)),
      plan_(std::move(plan)) {
  if (layers_.empty()) throw ValidationError("model needs at least one perceptron layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& f = layers_[l].filter;
    if (f.basis().num_generators() != graph_.num_shifts()) {
      std::ostringstream msg;
      msg << "layer " << l + 1 << ": basis has " << f.basis().num_generators()
          << " generators, multigraph has " << graph_.num_shifts();
      throw ValidationError(msg.str());
    }
    if (l > 0 && layers_[l - 1].filter.out_features() != f.in_features()) {
      std::ostringstream msg;
      msg << "layer " << l + 1 << ": expects " << f.in_features() << " input features, layer " << l
          << " produces " << layers_[l - 1].filter.out_features();
      throw ValidationError(msg.str());
    }
  }
  if (plan_) {
    if (plan_->num_layers() != num_layers())
      throw ValidationError("sampling plan covers a different number of layers than the model");
    validate_plan(*plan_, graph_.num_nodes());
    relabeling_ = plan_relabeling(*plan_);
  }
  derive_layer_structure();

  Eigen::Index width = static_cast<Eigen::Index>(layer_nodes(num_layers())) *
                       layers_.back().filter.out_features();
  for (std::size_t k = 0; k < readout_.size(); ++k) {
    const auto& d = readout_[k];
    if (d.weight.cols() != width || d.bias.rows() != d.weight.rows() || d.bias.cols() != 1) {
      std::ostringstream msg;
      msg << "readout map " << k + 1 << ": expects input width " << width << ", got "
          << d.weight.rows() << "x" << d.weight.cols() << " weight and " << d.bias.rows() << "x"
          << d.bias.cols() << " bias";
      throw ValidationError(msg.str());
    }
    width = d.weight.rows();
  }
}

void MgnnModel::derive_layer_structure() {
  layer_graphs_.clear();
  pooling_sets_.clear();
  if (!plan_) {
    layer_graphs_.assign(layers_.size(), graph_);
    return;
  }
  const SamplingMatrices matrices = sampling_matrices(*plan_, graph_.num_nodes());
  Multigraph current = permute_multigraph(*relabeling_, graph_);
  for (int l = 1; l <= num_layers(); ++l) {
    std::vector<SparseShift> sampled;
    for (const auto& s : current.shifts()) sampled.push_back(sample_shift(matrices, l, s));
    current = Multigraph(std::move(sampled), graph_.names());
    layer_graphs_.push_back(current);

    std::vector<NodeSets> per_graph;
    for (int g = 0; g < graph_.num_shifts(); ++g)
      per_graph.push_back(neighborhoods(graph_, matrices, l, g, plan_->radii[static_cast<std::size_t>(l - 1)]));
    pooling_sets_.push_back(multigraph_neighborhood(per_graph));
  }
}

int MgnnModel::layer_nodes(int layer) const {
  if (plan_) return plan_->node_counts.at(static_cast<std::size_t>(layer));
  return graph_.num_nodes();
}

const Multigraph& MgnnModel::layer_graph(int layer) const {
  return layer_graphs_.at(static_cast<std::size_t>(layer - 1));
}

const NodeSets& MgnnModel::pooling_sets(int layer) const {
  if (!plan_) throw ValidationError("model has no sampling plan");
  return pooling_sets_.at(static_cast<std::size_t>(layer - 1));
}

std::size_t MgnnModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

std::size_t MgnnModel::basis_word_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.filter.basis().size();
  return n;
}

std::vector<Matrix*> MgnnModel::parameters() {
  std::vector<Matrix*> p;
  for (auto& l : layers_)
    for (auto& c : l.filter.coefficients()) p.push_back(&c);
  for (auto& d : readout_) {
    p.push_back(&d.weight);
    p.push_back(&d.bias);
  }
  return p;
}

std::vector<const Matrix*> MgnnModel::parameters() const {
  std::vector<const Matrix*> p;
  for (auto* q : const_cast<MgnnModel*>(this)->parameters()) p.push_back(q);
  return p;
}

ForwardTrace MgnnModel::forward(const Signal& x) const {
  if (x.rows() != graph_.num_nodes() || x.cols() != input_features()) {
    std::ostringstream msg;
    msg << "layer 1: input is " << x.rows() << "x" << x.cols() << ", expected "
        << graph_.num_nodes() << "x" << input_features();
    throw ValidationError(msg.str());
  }
  ForwardTrace trace;
  Signal current = relabeling_ ? permute_signal(*relabeling_, x) : x;
  for (int l = 1; l <= num_layers(); ++l) {
    const auto& layer = layers_[static_cast<std::size_t>(l - 1)];
    LayerTrace t;
    t.input = std::move(current);
    t.sampled = plan_ ? pool(t.input, pooling_sets_[static_cast<std::size_t>(l - 1)], plan_->aggregation)
                      : t.input;
    t.diffusions = diffuse(layer.filter.basis(), layer_graph(l), t.sampled);
    t.pre_activation = combine_diffusions(layer.filter, t.diffusions);
    t.output = activate(t.pre_activation, layer.sigma);
    current = t.output;
    trace.layers.push_back(std::move(t));
  }
  if (readout_.empty()) {
    trace.output = current;
    return trace;
  }
  Vector h = flatten(current);
  for (std::size_t k = 0; k < readout_.size(); ++k) {
    trace.readout_inputs.push_back(h);
    Vector a = readout_[k].weight * h + readout_[k].bias.col(0);
    trace.readout_pre.push_back(a);
    h = (k + 1 < readout_.size()) ? Vector(a.cwiseMax(0.0)) : a;
  }
  trace.output = h;
  return trace;
}

std::vector<Matrix> MgnnModel::backward(const ForwardTrace& trace, const Matrix& grad_output) const {
  if (grad_output.rows() != trace.output.rows() || grad_output.cols() != trace.output.cols())
    throw ValidationError("backward: gradient shape does not match the model output");

  std::vector<Matrix> readout_grads(2 * readout_.size());
  Signal grad_x;
  if (readout_.empty()) {
    grad_x = grad_output;
  } else {
    Vector g = grad_output.col(0);
    for (std::size_t k = readout_.size(); k-- > 0;) {
      readout_grads[2 * k] = g * trace.readout_inputs[k].transpose();
      readout_grads[2 * k + 1] = g;
      Vector gh = readout_[k].weight.transpose() * g;
      if (k > 0) {
        g = (trace.readout_pre[k - 1].array() > 0.0).select(gh, 0.0);
      } else {
        g = gh;
      }
    }
    const auto& last = trace.layers.back().output;
    grad_x = unflatten(g, last.rows(), last.cols());
  }

  std::vector<std::vector<Matrix>> filter_grads(layers_.size());
  for (int l = num_layers(); l >= 1; --l) {
    const auto& layer = layers_[static_cast<std::size_t>(l - 1)];
    const auto& t = trace.layers[static_cast<std::size_t>(l - 1)];
    const Signal grad_z = activation_backward(t.pre_activation, t.output, layer.sigma, grad_x);
    auto& fg = filter_grads[static_cast<std::size_t>(l - 1)];
    fg.reserve(t.diffusions.size());
    for (const auto& z : t.diffusions) fg.push_back(z.transpose() * grad_z);
    if (l == 1) break;  // no gradient w.r.t. the data itself
    Signal grad_sampled = filter_adjoint_apply(layer.filter, layer_graph(l), grad_z);
    grad_x = plan_ ? pool_backward(t.input, pooling_sets_[static_cast<std::size_t>(l - 1)],
                                   plan_->aggregation, grad_sampled)
                   : grad_sampled;
  }

  std::vector<Matrix> grads;
  for (auto& fg : filter_grads)
    for (auto& g : fg) grads.push_back(std::move(g));
  for (auto& g : readout_grads) grads.push_back(std::move(g));
  return grads;
}

MgnnModel make_model(const Multigraph& g, const ArchitectureConfig& arch, std::uint64_t seed,
                     const NormOptions& options) {
  if (arch.features.size() < 2)
    throw ValidationError("architecture needs at least input and one layer feature count");
  for (int f : arch.features)
    if (f < 1) throw ValidationError("feature counts must be positive");
  MonomialBasis basis = enumerate_monomials(g.num_shifts(), arch.depth, arch.basis_cap);
  if (arch.prune_epsilon) basis = prune_basis(basis, g.shifts(), *arch.prune_epsilon, options);

  std::mt19937_64 rng(seed);
  const std::size_t num_layers = arch.features.size() - 1;
  std::vector<PerceptronLayer> layers;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const int fin = arch.features[l];
    const int fout = arch.features[l + 1];
    MultigraphFilter filter(basis, fin, fout);
    const double a = 1.0 / std::sqrt(static_cast<double>(fin) * static_cast<double>(basis.size()));
    std::uniform_real_distribution<double> u(-a, a);
    for (auto& c : filter.coefficients())
      for (Eigen::Index j = 0; j < c.cols(); ++j)
        for (Eigen::Index i = 0; i < c.rows(); ++i) c(i, j) = u(rng);
    layers.push_back({std::move(filter), l + 1 == num_layers ? arch.final_sigma : arch.hidden_sigma});
  }

  std::optional<SamplingPlan> plan;
  int final_nodes = g.num_nodes();
  if (arch.plan) {
    plan = build_plan(g, arch.plan->node_counts, arch.plan->radii, arch.plan->centrality,
                      arch.plan->aggregation)
               .plan;
    final_nodes = plan->node_counts.back();
  }

  std::vector<DenseLayer> readout;
  int width = final_nodes * arch.features.back();
  for (int out : arch.readout) {
    if (out < 1) throw ValidationError("readout sizes must be positive");
    DenseLayer d{Matrix(out, width), Matrix::Zero(out, 1)};
    const double a = 1.0 / std::sqrt(static_cast<double>(width));
    std::uniform_real_distribution<double> u(-a, a);
    for (Eigen::Index j = 0; j < d.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < d.weight.rows(); ++i) d.weight(i, j) = u(rng);
    readout.push_back(std::move(d));
    width = out;
  }
  return MgnnModel(g, std::move(layers), std::move(readout), std::move(plan));
}

LossValue mse_loss(const Matrix& output, const Matrix& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols())
    throw ValidationError("mse: target shape does not match the model output");
  const Matrix diff = output - target;
  return {diff.squaredNorm(), 2.0 * diff};
}

LossValue cross_entropy_loss(const Matrix& output, const Matrix& target) {
  if (output.rows() != target.rows() || output.cols() != target.cols())
    throw ValidationError("cross_entropy: target shape does not match the model output");
  const double top = output.maxCoeff();
  const Matrix e = (output.array() - top).exp().matrix();
  const double z = e.sum();
  const Matrix log_p = (output.array() - top - std::log(z)).matrix();
  const double mass = target.sum();
  return {-(target.array() * log_p.array()).sum(), (e / z) * mass - target};
}

LossFunction loss_function(LossKind kind) {
  if (kind == LossKind::mse) return mse_loss;
  return cross_entropy_loss;
}

EquivarianceReport check_equivariance(const MgnnModel& model, const Signal& x,
                                      const Permutation& p, double tolerance) {
  if (model.has_sampling() || model.has_readout())
    throw ValidationError(
        "check_equivariance: only perceptron stacks without sampling or readout are covered");
  if (p.size() != model.multigraph().num_nodes())
    throw ValidationError("check_equivariance: permutation size mismatch");
  MgnnModel permuted(permute_multigraph(p, model.multigraph()), model.layers());
  const Signal expected = permute_signal(p, model.predict(x));
  const Signal got = permuted.predict(permute_signal(p, x));
  EquivarianceReport r;
  r.max_deviation = (got - expected).cwiseAbs().maxCoeff();
  r.passed = r.max_deviation <= tolerance;
  return r;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return flat;
}

Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
  const auto flat = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols)
    throw ValidationError("checkpoint: matrix has the wrong number of entries");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[k++];
  return m;
}

}  // namespace

nlohmann::json model_to_json(const MgnnModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers()) {
    const auto& f = l.filter;
    nlohmann::json words = nlohmann::json::array();
    nlohmann::json coefficients = nlohmann::json::array();
    for (std::size_t k = 0; k < f.basis().size(); ++k) {
      words.push_back(f.basis().word(k).letters());
      coefficients.push_back(matrix_to_json(f.coefficient(k)));
    }
    nlohmann::json pruned = nlohmann::json::array();
    for (const auto& p : f.basis().pruned_pairs()) pruned.push_back({p.i, p.j, p.epsilon});
    layers.push_back({{"nonlinearity", to_string(l.sigma)},
                      {"in_features", f.in_features()},
                      {"out_features", f.out_features()},
                      {"num_generators", f.basis().num_generators()},
                      {"depth", f.basis().depth()},
                      {"words", std::move(words)},
                      {"pruned_pairs", std::move(pruned)},
                      {"coefficients", std::move(coefficients)}});
  }
  nlohmann::json readout = nlohmann::json::array();
  for (const auto& d : model.readout())
    readout.push_back({{"rows", d.weight.rows()},
                       {"cols", d.weight.cols()},
                       {"weight", matrix_to_json(d.weight)},
                       {"bias", matrix_to_json(d.bias)}});
  nlohmann::json plan = nullptr;
  if (const auto& p = model.plan()) {
    plan = {{"node_counts", p->node_counts},
            {"radii", p->radii},
            {"selected", p->selected},
            {"relabeling", p->selected.front()},
            {"centrality", to_string(p->method)},
            {"aggregation", to_string(p->aggregation)}};
  }
  return {{"version", kCheckpointFormatVersion},
          {"multigraph", multigraph_to_json(model.multigraph())},
          {"layers", std::move(layers)},
          {"readout", std::move(readout)},
          {"sampling_plan", std::move(plan)}};
}

MgnnModel model_from_json(const nlohmann::json& doc) {
  try {
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointFormatVersion)
      throw ValidationError("unsupported checkpoint version " + std::to_string(version));
    Multigraph g = multigraph_from_json(doc.at("multigraph"));
    std::vector<PerceptronLayer> layers;
    for (const auto& l : doc.at("layers")) {
      std::vector<Word> words;
      for (const auto& w : l.at("words")) words.emplace_back(w.get<std::vector<int>>());
      std::vector<PrunedPair> pruned;
      for (const auto& p : l.at("pruned_pairs"))
        pruned.push_back({p[0].get<int>(), p[1].get<int>(), p[2].get<double>()});
      MonomialBasis basis(l.at("num_generators").get<int>(), l.at("depth").get<int>(),
                          std::move(words), std::move(pruned));
      const int fin = l.at("in_features").get<int>();
      const int fout = l.at("out_features").get<int>();
      std::vector<Matrix> coefficients;
      for (const auto& c : l.at("coefficients")) coefficients.push_back(matrix_from_json(c, fin, fout));
      layers.push_back({MultigraphFilter(std::move(basis), std::move(coefficients)),
                        nonlinearity_from_string(l.at("nonlinearity").get<std::string>())});
    }
    std::vector<DenseLayer> readout;
    for (const auto& d : doc.at("readout")) {
      const auto rows = d.at("rows").get<Eigen::Index>();
      const auto cols = d.at("cols").get<Eigen::Index>();
      readout.push_back({matrix_from_json(d.at("weight"), rows, cols),
                         matrix_from_json(d.at("bias"), rows, 1)});
    }
    std::optional<SamplingPlan> plan;
    if (const auto& p = doc.at("sampling_plan"); !p.is_null()) {
      SamplingPlan sp;
      sp.node_counts = p.at("node_counts").get<std::vector<int>>();
      sp.radii = p.at("radii").get<std::vector<int>>();
      sp.selected = p.at("selected").get<std::vector<std::vector<int>>>();
      sp.method = centrality_from_string(p.at("centrality").get<std::string>());
      sp.aggregation = aggregation_from_string(p.at("aggregation").get<std::string>());
      if (p.at("relabeling").get<std::vector<int>>() != sp.selected.front())
        throw ValidationError("checkpoint: relabeling disagrees with the layer-0 selection");
      plan = std::move(sp);
    }
    return MgnnModel(std::move(g), std::move(layers), std::move(readout), std::move(plan));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const MgnnModel& model, const std::string& path, const nlohmann::json& metadata) {
  nlohmann::json doc = model_to_json(model);
  doc["metadata"] = metadata;
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << doc.dump(1) << '\n';
}

MgnnModel load_checkpoint(const std::string& path, nlohmann::json* metadata) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  if (metadata) *metadata = doc.value("metadata", nlohmann::json::object());
  return model_from_json(doc);
}

}  // namespace mgsp
