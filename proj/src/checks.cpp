#include "mgsp/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mgsp/errors.hpp"
#include "mgsp/generators.hpp"

namespace mgsp {

std::vector<Matrix> dense_shifts(const Multigraph& g) {
  std::vector<Matrix> out;
  for (const auto& s : g.shifts()) out.push_back(s.to_dense());
  return out;
}

Matrix dense_word(std::span<const Matrix> shifts, const Word& w) {
  const Eigen::Index n = shifts.front().rows();
  Matrix p = Matrix::Identity(n, n);
  for (int letter : w.letters()) p = p * shifts[static_cast<std::size_t>(letter - 1)];
  return p;
}

Signal dense_filter(const MultigraphFilter& h, std::span<const Matrix> shifts, const Signal& x) {
  Signal y = Signal::Zero(x.rows(), h.out_features());
  for (std::size_t k = 0; k < h.basis().size(); ++k) y += dense_word(shifts, h.basis().word(k)) * x * h.coefficient(k);
  return y;
}

double dense_spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

NodeSets dense_neighborhoods(const Multigraph& g, const SamplingMatrices& m, int layer, int graph, int radius) {
  const Matrix a = g.shift(graph).to_dense().cwiseAbs();
  const Matrix el = m.e[static_cast<std::size_t>(layer)].to_dense();
  const Matrix ep = m.e[static_cast<std::size_t>(layer - 1)].to_dense();
  Matrix power = Matrix::Identity(a.rows(), a.cols());
  Matrix reach = Matrix::Zero(el.rows(), ep.rows());
  for (int k = 0; k <= radius; ++k) {
    reach += el * power * ep.transpose();
    power = power * a;
  }
  NodeSets sets(static_cast<std::size_t>(reach.rows()));
  for (Eigen::Index i = 0; i < reach.rows(); ++i)
    for (Eigen::Index j = 0; j < reach.cols(); ++j)
      if (reach(i, j) != 0.0) sets[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
  return sets;
}

Multigraph random_multigraph(int n, int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<EdgeList> layers;
  for (int g = 0; g < m; ++g) {
    const double p = 0.2 + 0.4 * unit(rng);
    std::vector<Triplet> edges;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (unit(rng) < p) {
          const double w = 0.5 + unit(rng);
          edges.push_back({u, v, w});
          edges.push_back({v, u, w});
        }
    if (edges.empty()) edges.push_back({0, 0, 1.0});
    layers.push_back({"layer" + std::to_string(g + 1), std::move(edges), ShiftKind::normalized_adjacency});
  }
  return build_multigraph(n, layers);
}

Signal random_signal(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Signal x(rows, cols);
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = gauss(rng);
  return x;
}

namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

MultigraphFilter random_filter(const MonomialBasis& basis, int fin, int fout, std::mt19937_64& rng) {
  std::vector<Matrix> c;
  for (std::size_t k = 0; k < basis.size(); ++k) c.push_back(random_signal(fin, fout, rng));
  return MultigraphFilter(basis, std::move(c));
}

double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

SuiteResult finish(SuiteResult r) {
  r.passed = r.measured <= r.threshold;
  return r;
}

}  // namespace

SuiteResult basis_structure_suite() {
  SuiteResult r{"basis structure", false, 0.0, 0.0, 0, {}};
  std::ostringstream detail;
  int mismatches = 0;
  const MonomialBasis b = enumerate_monomials(3, 2);
  int by_length[3] = {0, 0, 0};
  for (const auto& w : b.words()) ++by_length[w.length()];
  mismatches += b.size() != 13;
  mismatches += by_length[0] != 1 || by_length[1] != 3 || by_length[2] != 9;
  detail << "(3,2): " << b.size() << " words [" << by_length[0] << ',' << by_length[1] << ',' << by_length[2] << ']';
  for (int k = 0; k <= 6; ++k) {
    const std::size_t size = enumerate_monomials(1, k).size();
    mismatches += size != static_cast<std::size_t>(k + 1);
    ++r.instances;
  }
  detail << "; (1,K) = K+1 for K = 0..6";
  r.instances += 1;
  r.measured = mismatches;
  r.detail = detail.str();
  return finish(r);
}

SuiteResult pruning_bound_suite(std::span<const double> epsilons, int trials, int num_nodes, int depth,
                                std::uint64_t seed) {
  SuiteResult r{"pruning bound", false, -1.0, 0.0, 0, {}};
  std::ostringstream detail;
  std::mt19937_64 rng(seed);
  double worst_slack = -1.0;
  for (double target : epsilons) {
    GraphSpec spec;
    spec.num_nodes = num_nodes;
    spec.layers = {EdgeModel::parse("er:0.3"), EdgeModel::parse("er:0.3")};
    spec.seed = rng();
    spec.near_commuting_epsilon = target;
    const Multigraph g = generate_multigraph(spec);
    const auto dense = dense_shifts(g);
    const double eps = dense_spectral_norm(dense[0] * dense[1] - dense[1] * dense[0]);
    const PruningBoundReport rep = check_pruning_bound(g.shifts(), 1, 2, trials, depth, rng());
    // Cross-check the worst pair against a dense SVD.
    const Matrix worst = dense_word(dense, rep.worst_left) * (dense[0] * dense[1] - dense[1] * dense[0]) *
                         dense_word(dense, rep.worst_right);
    const double worst_dense = dense_spectral_norm(worst);
    const double bound = std::max(rep.max_norm, worst_dense);
    worst_slack = std::max(worst_slack, bound - (eps + 1e-6));
    detail << "eps=" << eps << " max=" << bound << "; ";
    r.instances += rep.trials;
  }
  r.measured = worst_slack;
  r.threshold = 0.0;
  r.detail = detail.str() + "measured is max(norm) - (eps + 1e-6)";
  return finish(r);
}

SuiteResult equivariance_suite(int instances, std::uint64_t seed) {
  SuiteResult r{"permutation equivariance", false, 0.0, 1e-9, 0, {}};
  std::mt19937_64 rng(seed);
  for (int t = 0; t < instances; ++t) {
    const int n = uniform(rng, 2, 12);
    const int m = uniform(rng, 1, 3);
    const int layers = uniform(rng, 1, 3);
    const Multigraph g = random_multigraph(n, m, rng);
    ArchitectureConfig arch;
    for (int l = 0; l <= layers; ++l) arch.features.push_back(uniform(rng, 1, 3));
    arch.depth = uniform(rng, 0, 3);
    arch.hidden_sigma = arch.final_sigma = Nonlinearity::relu;
    const MgnnModel model = make_model(g, arch, rng());
    const Permutation p = Permutation::random(n, rng);
    const Signal x = random_signal(n, arch.features.front(), rng);
    const EquivarianceReport e = check_equivariance(model, x, p, r.threshold);
    r.measured = std::max(r.measured, e.max_deviation);
    ++r.instances;
  }
  r.detail = "max |model(P^T S P, P^T x) - P^T model(S, x)|";
  return finish(r);
}

SuiteResult filter_oracle_suite(int instances, std::uint64_t seed) {
  SuiteResult r{"filter vs dense oracle", false, 0.0, 1e-10, 0, {}};
  std::mt19937_64 rng(seed);
  for (int t = 0; t < instances; ++t) {
    const int n = uniform(rng, 1, 12);
    const int m = uniform(rng, 1, 3);
    const Multigraph g = random_multigraph(n, m, rng);
    const MonomialBasis basis = enumerate_monomials(m, uniform(rng, 0, 3));
    const MultigraphFilter h = random_filter(basis, uniform(rng, 1, 3), uniform(rng, 1, 3), rng);
    const Signal x = random_signal(n, h.in_features(), rng);
    const Signal want = dense_filter(h, dense_shifts(g), x);
    const Signal got = apply_filter(h, g, x);
    const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-300);
    r.measured = std::max(r.measured, (got - want).cwiseAbs().maxCoeff() / scale);
    ++r.instances;
  }
  r.detail = "max-abs error relative to max |oracle|";
  return finish(r);
}

SuiteResult filter_adjoint_suite(int instances, std::uint64_t seed) {
  SuiteResult r{"filter adjoint identity", false, 0.0, 1e-10, 0, {}};
  std::mt19937_64 rng(seed);
  for (int t = 0; t < instances; ++t) {
    const int n = uniform(rng, 1, 12);
    const int m = uniform(rng, 1, 3);
    const Multigraph g = random_multigraph(n, m, rng);
    const MonomialBasis basis = enumerate_monomials(m, uniform(rng, 0, 3));
    const MultigraphFilter h = random_filter(basis, uniform(rng, 1, 3), uniform(rng, 1, 3), rng);
    const Signal x = random_signal(n, h.in_features(), rng);
    const Signal u = random_signal(n, h.out_features(), rng);
    const Signal hx = apply_filter(h, g, x);
    const Signal hu = filter_adjoint_apply(h, g, u);
    const double scale = hx.norm() * u.norm() + x.norm() * hu.norm();
    r.measured = std::max(r.measured, std::abs(inner(hx, u) - inner(x, hu)) / std::max(scale, 1e-300));
    ++r.instances;
  }
  r.detail = "|<Hx,u> - <x,H*u>| / (|Hx||u| + |x||H*u|)";
  return finish(r);
}

SuiteResult gradient_suite(double step, std::uint64_t seed) {
  SuiteResult r{"gradient check", false, 0.0, 1e-5, 0, {}};
  std::mt19937_64 rng(seed);
  const Multigraph g = random_multigraph(8, 2, rng);
  ArchitectureConfig arch;
  arch.features = {2, 3, 2};
  arch.depth = 2;
  arch.hidden_sigma = arch.final_sigma = Nonlinearity::tanh;
  arch.readout = {5, 3};
  arch.plan = PlanConfig{{8, 6, 4}, {1, 1}, Centrality::degree, Aggregation::max};
  MgnnModel model = make_model(g, arch, rng());
  std::vector<Sample> batch;
  for (int k = 0; k < 3; ++k) batch.push_back({random_signal(8, 2, rng), random_signal(3, 1, rng)});
  const LossFunction loss = loss_function(LossKind::mse);
  const LossAndGradients analytic = loss_and_gradients(model, std::span<const Sample>(batch), loss);
  auto objective = [&] { return loss_and_gradients(model, std::span<const Sample>(batch), loss).loss; };

  // Per entry |a - n| / max(|a|, |n|, 1e-4); the floor keeps entries whose
  // gradient is pure round-off from dominating.
  std::vector<Matrix*> params = model.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& theta = *params[p];
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double saved = theta.data()[i];
      theta.data()[i] = saved + step;
      const double up = objective();
      theta.data()[i] = saved - step;
      const double down = objective();
      theta.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.gradients[p].data()[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-4});
      r.measured = std::max(r.measured, err);
      ++r.instances;
    }
  }
  r.detail = "2 layers, N 8 -> 6 -> 4, max pooling, readout; " + std::to_string(r.instances) + " parameters";
  return finish(r);
}

SuiteResult sampling_suite(int instances, std::uint64_t seed) {
  SuiteResult r{"sampling algebra", false, 0.0, 0.0, 0, {}};
  std::mt19937_64 rng(seed);
  int mismatches = 0;
  int comparisons = 0;
  for (int t = 0; t < instances; ++t) {
    const int n = uniform(rng, 2, 15);
    const int m = uniform(rng, 1, 3);
    const int layers = uniform(rng, 1, 3);
    const Multigraph g = random_multigraph(n, m, rng);
    std::vector<int> counts{n};
    std::vector<int> radii;
    for (int l = 0; l < layers; ++l) {
      counts.push_back(uniform(rng, 1, counts.back()));
      radii.push_back(uniform(rng, 0, 4));
    }
    const Centrality method = uniform(rng, 0, 1) ? Centrality::pagerank : Centrality::degree;
    const PlanBuild built = build_plan(g, counts, radii, method, Aggregation::mean);
    const SamplingMatrices& sm = built.matrices;
    for (int graph = 0; graph < m; ++graph) {
      const Matrix s = g.shift(graph).to_dense();
      const Matrix e0 = sm.e[0].to_dense();
      SparseShift previous = SparseShift::from_dense(e0 * s * e0.transpose());
      for (int l = 1; l <= layers; ++l) {
        const Matrix d = sm.d[static_cast<std::size_t>(l - 1)].to_dense();
        const Matrix want = d * previous.to_dense() * d.transpose();
        const SparseShift got = sample_shift(sm, l, previous);
        const Matrix el = sm.e[static_cast<std::size_t>(l)].to_dense();
        mismatches += got.to_dense() != want;
        mismatches += got.to_dense() != el * s * el.transpose();
        comparisons += 2;
        previous = got;
        for (int alpha = 0; alpha <= 4; ++alpha) {
          mismatches += neighborhoods(g, sm, l, graph, alpha) != dense_neighborhoods(g, sm, l, graph, alpha);
          ++comparisons;
        }
      }
    }
    ++r.instances;
  }
  r.measured = mismatches;
  r.detail = std::to_string(comparisons) + " exact comparisons (D S D^T, E S E^T, BFS vs E S^k E^T pattern)";
  return finish(r);
}

std::string format_result(const SuiteResult& r) {
  std::ostringstream out;
  out.precision(3);
  out << (r.passed ? "PASS" : "FAIL") << "  " << r.name << ": measured " << r.measured << " (limit "
      << r.threshold << ", " << r.instances << " instances) " << r.detail;
  return out.str();
}

}  // namespace mgsp
