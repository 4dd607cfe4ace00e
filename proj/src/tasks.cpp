#include "mgsp/tasks.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "mgsp/errors.hpp"

namespace mgsp {

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::source_localization: return "source_localization";
    case TaskKind::power_allocation: return "power_allocation";
    case TaskKind::planted_filter: return "planted_filter";
  }
  return "planted_filter";
}

TaskKind task_kind_from_string(std::string_view name) {
  for (auto k : {TaskKind::source_localization, TaskKind::power_allocation, TaskKind::planted_filter})
    if (to_string(k) == name) return k;
  throw ValidationError("unknown task '" + std::string(name) + "'");
}

void TaskSpec::validate() const {
  if (kind != TaskKind::power_allocation) graph.validate();
  if (graph.num_nodes < 1) throw ValidationError("num_nodes must be positive");
  if (train_size < 1 || validation_size < 0 || test_size < 1)
    throw ValidationError("dataset sizes must be positive");
  switch (kind) {
    case TaskKind::source_localization:
      if (min_steps < 0 || max_steps < min_steps)
        throw ValidationError("diffusion steps must satisfy 0 <= min_steps <= max_steps");
      break;
    case TaskKind::power_allocation:
      if (!(budget_mw > 0.0)) throw ValidationError("infeasible power budget (must be > 0 mW)");
      if (!(noise_mw > 0.0)) throw ValidationError("noise power must be positive");
      if (channel_radius.empty()) throw ValidationError("at least one channel is required");
      if (!(area > 0.0)) throw ValidationError("layout area must be positive");
      break;
    case TaskKind::planted_filter:
      if (planted.empty()) throw ValidationError("planted filter needs at least one term");
      if (noise_std < 0.0) throw ValidationError("noise_std must be nonnegative");
      if (features < 1) throw ValidationError("features must be positive");
      for (const auto& t : planted)
        for (int l : t.word.letters())
          if (l < 1 || l > static_cast<int>(graph.layers.size()))
            throw ValidationError("planted word " + t.word.to_string() + " uses a missing layer");
      break;
  }
}

nlohmann::json to_json(const TaskSpec& s) {
  nlohmann::json planted = nlohmann::json::array();
  for (const auto& t : s.planted) planted.push_back({{"word", t.word.letters()}, {"coefficient", t.coefficient}});
  return {{"kind", to_string(s.kind)},
          {"graph", to_json(s.graph)},
          {"train_size", s.train_size},
          {"validation_size", s.validation_size},
          {"test_size", s.test_size},
          {"seed", s.seed},
          {"min_steps", s.min_steps},
          {"max_steps", s.max_steps},
          {"budget_mw", s.budget_mw},
          {"noise_mw", s.noise_mw},
          {"area", s.area},
          {"channel_radius", s.channel_radius},
          {"pathloss_exponent", s.pathloss_exponent},
          {"planted", planted},
          {"noise_std", s.noise_std},
          {"features", s.features}};
}

TaskSpec task_spec_from_json(const nlohmann::json& j) {
  try {
    TaskSpec s;
    s.kind = task_kind_from_string(j.at("kind").get<std::string>());
    s.graph = graph_spec_from_json(j.at("graph"));
    s.train_size = j.at("train_size").get<int>();
    s.validation_size = j.at("validation_size").get<int>();
    s.test_size = j.at("test_size").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.min_steps = j.value("min_steps", s.min_steps);
    s.max_steps = j.value("max_steps", s.max_steps);
    s.budget_mw = j.value("budget_mw", s.budget_mw);
    s.noise_mw = j.value("noise_mw", s.noise_mw);
    s.area = j.value("area", s.area);
    s.channel_radius = j.value("channel_radius", s.channel_radius);
    s.pathloss_exponent = j.value("pathloss_exponent", s.pathloss_exponent);
    if (j.contains("planted")) {
      s.planted.clear();
      for (const auto& t : j.at("planted"))
        s.planted.push_back({Word(t.at("word").get<std::vector<int>>()), t.at("coefficient").get<double>()});
    }
    s.noise_std = j.value("noise_std", s.noise_std);
    s.features = j.value("features", s.features);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed task spec: ") + e.what());
  }
}

namespace {

void split_into(Dataset& d, std::vector<Sample> all, const TaskSpec& spec) {
  auto it = std::make_move_iterator(all.begin());
  d.train.assign(it, it + spec.train_size);
  d.validation.assign(it + spec.train_size, it + spec.train_size + spec.validation_size);
  d.test.assign(it + spec.train_size + spec.validation_size, std::make_move_iterator(all.end()));
}

int total_size(const TaskSpec& s) { return s.train_size + s.validation_size + s.test_size; }

Dataset source_localization(const TaskSpec& spec, const NormOptions& options) {
  Dataset d;
  d.graph = generate_multigraph(spec.graph, options);
  std::mt19937_64 rng(spec.seed);
  const int n = spec.graph.num_nodes;
  std::uniform_int_distribution<int> source(0, n - 1);
  std::uniform_int_distribution<int> steps(spec.min_steps, spec.max_steps);
  std::uniform_int_distribution<int> layer(0, d.graph.num_shifts() - 1);
  std::vector<Sample> all;
  for (int k = 0; k < total_size(spec); ++k) {
    const int s = source(rng);
    Signal x = Signal::Zero(n, 1);
    x(s, 0) = 1.0;
    const int t = steps(rng);
    for (int step = 0; step < t; ++step) x = d.graph.shift(layer(rng)).apply(x);
    Matrix y = Matrix::Zero(spec.graph.communities, 1);
    y(community_of(s, n, spec.graph.communities), 0) = 1.0;
    all.push_back({std::move(x), std::move(y)});
  }
  split_into(d, std::move(all), spec);
  return d;
}

Dataset planted_filter(const TaskSpec& spec, const NormOptions& options) {
  Dataset d;
  d.graph = generate_multigraph(spec.graph, options);
  const int m = d.graph.num_shifts();
  int depth = 0;
  for (const auto& t : spec.planted) depth = std::max(depth, static_cast<int>(t.word.length()));
  MultigraphFilter truth(enumerate_monomials(m, depth), spec.features, spec.features);
  for (const auto& t : spec.planted)
    truth.coefficient(t.word) += t.coefficient * Matrix::Identity(spec.features, spec.features);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss;
  const int n = spec.graph.num_nodes;
  std::vector<Sample> all;
  for (int k = 0; k < total_size(spec); ++k) {
    Signal x(n, spec.features);
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = gauss(rng);
    Matrix y = apply_filter(truth, d.graph, x);
    if (spec.noise_std > 0.0)
      for (Eigen::Index c = 0; c < y.cols(); ++c)
        for (Eigen::Index r = 0; r < y.rows(); ++r) y(r, c) += spec.noise_std * gauss(rng);
    all.push_back({std::move(x), std::move(y)});
  }
  split_into(d, std::move(all), spec);
  return d;
}

double pathloss(double distance, double exponent) {
  constexpr double kReference = 0.25;
  return 1.0 / (1.0 + std::pow(distance / kReference, exponent));
}

Dataset power_allocation(const TaskSpec& spec, const NormOptions& options) {
  Dataset d;
  const int n = spec.graph.num_nodes;
  const int m = static_cast<int>(spec.channel_radius.size());
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Transmitters uniform over the square; each receiver at a short random
  // offset from its transmitter.
  std::vector<double> tx(2 * static_cast<std::size_t>(n)), rx(2 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    tx[2 * i] = spec.area * unit(rng);
    tx[2 * i + 1] = spec.area * unit(rng);
    const double r = 0.1 + 0.3 * unit(rng);
    const double a = 2.0 * M_PI * unit(rng);
    rx[2 * i] = tx[2 * i] + r * std::cos(a);
    rx[2 * i + 1] = tx[2 * i + 1] + r * std::sin(a);
  }
  auto dist = [&](int j, int i) { return std::hypot(tx[2 * j] - rx[2 * i], tx[2 * j + 1] - rx[2 * i + 1]); };

  // Channel c interferes j -> i when transmitter j is within its radius of
  // receiver i. Shifts are the symmetrized interference patterns.
  std::vector<std::vector<std::pair<int, int>>> links(static_cast<std::size_t>(m));
  std::vector<EdgeList> layers;
  for (int c = 0; c < m; ++c) {
    std::vector<Triplet> edges;
    std::vector<std::vector<char>> linked(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (i == j || dist(j, i) >= spec.channel_radius[c]) continue;
        links[c].push_back({j, i});
        if (!linked[j][i]) {
          linked[j][i] = linked[i][j] = 1;
          edges.push_back({j, i, 1.0});
          edges.push_back({i, j, 1.0});
        }
      }
    if (edges.empty()) {
      // An isolated channel still needs a nonzero shift; self loops keep it
      // the identity.
      for (int i = 0; i < n; ++i) edges.push_back({i, i, 1.0});
    }
    layers.push_back({"channel" + std::to_string(c + 1), std::move(edges), spec.graph.shift});
  }
  d.graph = build_multigraph(n, layers, options);

  std::exponential_distribution<double> fading(1.0);
  std::vector<Sample> all;
  for (int k = 0; k < total_size(spec); ++k) {
    Matrix gains = Matrix::Zero(n, static_cast<Eigen::Index>(n) * m);
    for (int c = 0; c < m; ++c) {
      const Eigen::Index off = static_cast<Eigen::Index>(c) * n;
      for (int i = 0; i < n; ++i) gains(i, off + i) = pathloss(dist(i, i), spec.pathloss_exponent) * fading(rng);
      for (const auto& [j, i] : links[c]) gains(j, off + i) = pathloss(dist(j, i), spec.pathloss_exponent) * fading(rng);
    }
    // Per channel: log direct gain, log incoming and log outgoing interference.
    Signal x(n, 3 * m);
    for (int c = 0; c < m; ++c) {
      const Eigen::Index off = static_cast<Eigen::Index>(c) * n;
      for (int i = 0; i < n; ++i) {
        double in = 0.0, out = 0.0;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          in += gains(j, off + i);
          out += gains(i, off + j);
        }
        x(i, 3 * c) = std::log(gains(i, off + i));
        x(i, 3 * c + 1) = std::log(1e-3 + in);
        x(i, 3 * c + 2) = std::log(1e-3 + out);
      }
    }
    all.push_back({std::move(x), std::move(gains)});
  }
  split_into(d, std::move(all), spec);
  return d;
}

nlohmann::json matrix_json(const Matrix& m) {
  std::vector<double> flat;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

Matrix matrix_from(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) throw ValidationError("dataset: matrix size mismatch");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[k++];
  return m;
}

nlohmann::json samples_json(const std::vector<Sample>& s) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& x : s) a.push_back({{"x", matrix_json(x.x)}, {"y", matrix_json(x.y)}});
  return a;
}

std::vector<Sample> samples_from(const nlohmann::json& j) {
  std::vector<Sample> s;
  for (const auto& e : j) s.push_back({matrix_from(e.at("x")), matrix_from(e.at("y"))});
  return s;
}

}  // namespace

Dataset make_dataset(const TaskSpec& spec, const NormOptions& options) {
  spec.validate();
  Dataset d;
  switch (spec.kind) {
    case TaskKind::source_localization: d = source_localization(spec, options); break;
    case TaskKind::power_allocation: d = power_allocation(spec, options); break;
    case TaskKind::planted_filter: d = planted_filter(spec, options); break;
  }
  d.kind = spec.kind;
  d.spec = to_json(spec);
  return d;
}

nlohmann::json dataset_to_json(const Dataset& d) {
  return {{"version", kDatasetFormatVersion},
          {"task", to_string(d.kind)},
          {"spec", d.spec},
          {"multigraph", multigraph_to_json(d.graph)},
          {"train", samples_json(d.train)},
          {"validation", samples_json(d.validation)},
          {"test", samples_json(d.test)}};
}

Dataset dataset_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("version").get<int>();
    if (version != kDatasetFormatVersion)
      throw ValidationError("unsupported dataset version " + std::to_string(version));
    Dataset d;
    d.kind = task_kind_from_string(j.at("task").get<std::string>());
    d.spec = j.at("spec");
    d.graph = multigraph_from_json(j.at("multigraph"));
    d.train = samples_from(j.at("train"));
    d.validation = samples_from(j.at("validation"));
    d.test = samples_from(j.at("test"));
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed dataset: ") + e.what());
  }
}

void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << dataset_to_json(d).dump() << '\n';
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return dataset_from_json(j);
}

Matrix budget_projection(const Matrix& logits, double budget) {
  if (!(budget > 0.0)) throw ValidationError("infeasible power budget (must be > 0 mW)");
  const double top = logits.maxCoeff();
  Matrix e = (logits.array() - top).exp().matrix();
  return e * (budget / e.sum());
}

namespace {

void check_power_shapes(const Matrix& powers, const Matrix& gains) {
  const Eigen::Index n = powers.rows();
  if (gains.rows() != n || gains.cols() != n * powers.cols())
    throw ValidationError("power allocation: gains must be N x (N * channels)");
}

}  // namespace

double sum_rate(const Matrix& powers, const Matrix& gains, double noise) {
  check_power_shapes(powers, gains);
  const Eigen::Index n = powers.rows();
  double total = 0.0;
  for (Eigen::Index c = 0; c < powers.cols(); ++c) {
    const Eigen::Index off = c * n;
    for (Eigen::Index i = 0; i < n; ++i) {
      double interference = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) interference += gains(j, off + i) * powers(j, c);
      total += std::log1p(gains(i, off + i) * powers(i, c) / (noise + interference));
    }
  }
  return total;
}

Matrix sum_rate_gradient(const Matrix& powers, const Matrix& gains, double noise) {
  check_power_shapes(powers, gains);
  const Eigen::Index n = powers.rows();
  Matrix grad = Matrix::Zero(n, powers.cols());
  for (Eigen::Index c = 0; c < powers.cols(); ++c) {
    const Eigen::Index off = c * n;
    for (Eigen::Index i = 0; i < n; ++i) {
      double interference = 0.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) interference += gains(j, off + i) * powers(j, c);
      const double base = noise + interference;
      const double signal = gains(i, off + i) * powers(i, c);
      grad(i, c) += gains(i, off + i) / (base + signal);
      const double cross = signal / (base * (base + signal));
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) grad(j, c) -= gains(j, off + i) * cross;
    }
  }
  return grad;
}

LossFunction power_allocation_loss(double budget, double noise) {
  if (!(budget > 0.0)) throw ValidationError("infeasible power budget (must be > 0 mW)");
  return [budget, noise](const Matrix& logits, const Matrix& gains) -> LossValue {
    const Matrix p = budget_projection(logits, budget);
    const Matrix g = -sum_rate_gradient(p, gains, noise);  // dJ/dp
    // p = budget * s, ds_a/dz_b = s_a (delta_ab - s_b).
    const double weighted = (p.array() * g.array()).sum() / budget;
    Matrix dz = (p.array() * (g.array() - weighted)).matrix();
    return {-sum_rate(p, gains, noise), std::move(dz)};
  };
}

Matrix uniform_allocation(int num_nodes, int channels, double budget) {
  if (!(budget > 0.0)) throw ValidationError("infeasible power budget (must be > 0 mW)");
  return Matrix::Constant(num_nodes, channels, budget / (static_cast<double>(num_nodes) * channels));
}

double uniform_sum_rate(std::span<const Sample> data, int channels, double budget, double noise) {
  double total = 0.0;
  for (const auto& s : data)
    total += sum_rate(uniform_allocation(static_cast<int>(s.y.rows()), channels, budget), s.y, noise);
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

}  // namespace mgsp
