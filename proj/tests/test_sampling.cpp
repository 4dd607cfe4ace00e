#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "mgsp/checks.hpp"
#include "mgsp/errors.hpp"
#include "mgsp/sampling.hpp"

using namespace mgsp;

namespace {

EdgeList edges(std::vector<std::tuple<int, int, double>> pairs) {
  EdgeList l;
  l.kind = ShiftKind::adjacency;
  for (auto [u, v, w] : pairs) {
    l.edges.push_back({u, v, w});
    if (u != v) l.edges.push_back({v, u, w});
  }
  return l;
}

Multigraph path5() {
  const EdgeList layers[] = {edges({{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 4, 1}})};
  return build_multigraph(5, layers);
}

}  // namespace

TEST_CASE("degree centrality") {
  const EdgeList star[] = {edges({{0, 1, 1}, {0, 2, 1}, {0, 3, 1}})};
  const auto s = compute_centrality(build_multigraph(4, star), Centrality::degree);
  CHECK(std::max_element(s.begin(), s.end()) - s.begin() == 0);

  const auto single = compute_centrality(path5(), Centrality::degree);
  const EdgeList twice[] = {edges({{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 4, 1}}),
                            edges({{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 4, 1}})};
  const auto doubled = compute_centrality(build_multigraph(5, twice), Centrality::degree);
  for (int i = 0; i < 5; ++i) CHECK(doubled[i] == 2 * single[i]);
}

TEST_CASE("pagerank against dense power iteration") {
  // Frozen output of tests/oracles/pagerank.py.
  const EdgeList layers[] = {edges({{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 4, 1}}),
                             edges({{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {0, 4, 2}, {2, 2, 1}})};
  const auto r = compute_centrality(build_multigraph(5, layers), Centrality::pagerank);
  const double want[] = {0.355276519639541, 0.241266072876924, 0.141529636991802,
                         0.141468669816916, 0.120459100674817};
  for (int i = 0; i < 5; ++i) CHECK(std::abs(r[i] - want[i]) < 1e-8);

  PageRankOptions tight;
  tight.max_iterations = 2;
  tight.tolerance = 1e-300;
  CHECK_THROWS_AS(compute_centrality(build_multigraph(5, layers), Centrality::pagerank, tight),
                  NumericalError);
}

TEST_CASE("build_plan selection") {
  // Weighted degrees are distinct.
  const EdgeList layers[] = {edges({{0, 1, 2.5}, {0, 2, 1.5}, {0, 3, 1}, {1, 2, 1}, {1, 4, 0.5}, {2, 3, 0.5}, {4, 5, 0.5}})};
  const Multigraph g = build_multigraph(6, layers);
  const auto deg = compute_centrality(g, Centrality::degree);
  REQUIRE(deg == std::vector<double>{5, 4, 3, 1.5, 1, 0.5});

  const PlanBuild b = build_plan(g, {6, 3, 1}, {1, 1}, Centrality::degree, Aggregation::max);
  CHECK(b.plan.selected[1] == std::vector<int>{0, 1, 2});
  CHECK(b.plan.selected[2] == std::vector<int>{0});
  CHECK(b.matrices.d[0].rows() == 3);
  CHECK(b.matrices.d[0].cols() == 6);
  CHECK(b.matrices.d[1].rows() == 1);
  CHECK(b.matrices.d[1].cols() == 3);
  for (const auto& d : b.matrices.d) {
    const Matrix dd = d.to_dense();
    CHECK(dd * dd.transpose() == Matrix::Identity(d.rows(), d.rows()));
    CHECK(dd.leftCols(d.rows()) == Matrix::Identity(d.rows(), d.rows()));
  }

  const PlanBuild full = build_plan(path5(), {5, 5}, {1}, Centrality::degree, Aggregation::mean);
  CHECK(full.matrices.d[0].to_dense() == Matrix::Identity(5, 5));
  // Path degrees 1 2 2 2 1: ties go to the lower index.
  CHECK(full.plan.selected[0] == std::vector<int>{1, 2, 3, 0, 4});

  CHECK(build_plan(path5(), {5, 2}, {1}, Centrality::degree, Aggregation::mean).plan ==
        build_plan(path5(), {5, 2}, {1}, Centrality::degree, Aggregation::mean).plan);

  CHECK_THROWS_AS(build_plan(path5(), {5, 2, 3}, {1, 1}, Centrality::degree, Aggregation::max),
                  ValidationError);
  CHECK_THROWS_AS(build_plan(path5(), {4, 2}, {1}, Centrality::degree, Aggregation::max),
                  ValidationError);
  CHECK_THROWS_AS(build_plan(path5(), {5, 0}, {1}, Centrality::degree, Aggregation::max),
                  ValidationError);
}

TEST_CASE("nesting on random plans") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const Multigraph g = random_multigraph(12, 2, rng);
    const PlanBuild b = build_plan(g, {12, 9, 5, 2}, {1, 2, 0},
                                   t % 2 ? Centrality::pagerank : Centrality::degree, Aggregation::mean);
    for (int l = 1; l < 3; ++l) {
      const std::set<int> outer(b.plan.selected[l].begin(), b.plan.selected[l].end());
      for (int v : b.plan.selected[l + 1]) CHECK(outer.count(v) == 1);
    }
    for (const auto& e : b.matrices.e) {
      const Matrix de = e.to_dense();
      CHECK(de * de.transpose() == Matrix::Identity(e.rows(), e.rows()));
    }
  }
}

TEST_CASE("sample_shift and sample_signal") {
  Matrix s(3, 3);
  s << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  SamplingMatrices m;
  m.d = {SelectionMatrix(3, {0, 2})};
  Matrix want(2, 2);
  want << 1, 3, 7, 9;
  CHECK(sample_shift(m, 1, SparseShift::from_dense(s)).to_dense() == want);

  SamplingMatrices id;
  id.d = {SelectionMatrix(3, {0, 1, 2})};
  CHECK(sample_shift(id, 1, SparseShift::from_dense(s)).to_dense() == s);

  Matrix x(3, 1);
  x << 10, 20, 30;
  CHECK(sample_signal(id, 1, x) == x);
  SamplingMatrices one;
  one.d = {SelectionMatrix(3, {1})};
  CHECK(sample_signal(one, 1, x)(0, 0) == 20);
  CHECK_THROWS_AS(sample_signal(one, 1, Matrix::Zero(4, 1)), ValidationError);
  CHECK_THROWS_AS(sample_shift(one, 1, SparseShift::identity(4)), ValidationError);

  std::mt19937_64 rng(19);
  for (int t = 0; t < 20; ++t) {
    const Multigraph g = random_multigraph(10, 2, rng);
    const PlanBuild b = build_plan(g, {10, 7, 3}, {1, 1}, Centrality::degree, Aggregation::max);
    SparseShift prev = permute_shift(b.relabeling, g.shift(0));
    Signal sig = testing::gaussian(10, 2, rng);
    for (int l = 1; l <= 2; ++l) {
      const Matrix d = b.matrices.d[l - 1].to_dense();
      const SparseShift next = sample_shift(b.matrices, l, prev);
      CHECK(next.to_dense() == d * prev.to_dense() * d.transpose());
      const Signal sampled = sample_signal(b.matrices, l, sig);
      CHECK(sampled.rows() == next.dimension());
      CHECK(sampled == d * sig);
      prev = next;
      sig = sampled;
    }
  }
}

TEST_CASE("neighborhoods") {
  const Multigraph p = path5();
  const PlanBuild full = build_plan(p, {5, 5}, {1}, Centrality::degree, Aggregation::mean);
  // Rank order is 1 2 3 0 4, so original node 2 is position 1.
  const NodeSets zero = neighborhoods(p, full.matrices, 1, 0, 0);
  for (int i = 0; i < 5; ++i) CHECK(zero[i] == std::vector<int>{i});
  const NodeSets one = neighborhoods(p, full.matrices, 1, 0, 1);
  std::vector<int> original;
  for (int j : one[1]) original.push_back(full.plan.selected[0][j]);
  std::sort(original.begin(), original.end());
  CHECK(original == std::vector<int>{1, 2, 3});

  std::mt19937_64 rng(23);
  for (int t = 0; t < 10; ++t) {
    const Multigraph g = random_multigraph(10, 2, rng);
    const PlanBuild b = build_plan(g, {10, 6, 3}, {2, 2}, Centrality::degree, Aggregation::max);
    for (int l = 1; l <= 2; ++l)
      for (int k = 0; k < 2; ++k)
        CHECK(neighborhoods(g, b.matrices, l, k, 2) == dense_neighborhoods(g, b.matrices, l, k, 2));
  }
  CHECK_THROWS_AS(neighborhoods(p, full.matrices, 1, 0, -1), ValidationError);
}

TEST_CASE("multigraph neighborhood union") {
  const NodeSets a{{1, 2}, {0}};
  const NodeSets b{{3}, {0}};
  const NodeSets one[] = {a};
  CHECK(multigraph_neighborhood(one) == a);
  const NodeSets both[] = {a, b};
  CHECK(multigraph_neighborhood(both) == NodeSets{{1, 2, 3}, {0}});
  const NodeSets same[] = {a, a};
  CHECK(multigraph_neighborhood(same) == a);
}

TEST_CASE("pool") {
  Matrix x(4, 2);
  x << 1, -1, 3, 5, 2, 0, 8, 4;
  const NodeSets self{{0}, {1}};
  CHECK(pool(x, self, Aggregation::max) == x.topRows(2));
  const NodeSets pair{{0, 1}};
  CHECK(pool(x, pair, Aggregation::mean)(0, 0) == 2.0);

  const NodeSets sets{{0, 1, 2, 3}, {1, 2, 3}};
  const Matrix mx = pool(x, sets, Aggregation::max);
  const Matrix md = pool(x, sets, Aggregation::median);
  CHECK(mx(0, 0) == 8);
  CHECK(mx(1, 1) == 5);
  CHECK(md(0, 0) == 2.5);  // 1 2 3 8
  CHECK(md(0, 1) == 2.0);  // -1 0 4 5
  CHECK(md(1, 0) == 3.0);

  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int t = 0; t < 20; ++t) {
    const Signal v = testing::gaussian(10, 3, rng);
    NodeSets s(6);
    for (int i = 0; i < 6; ++i) {
      s[i].push_back(i);
      for (int j = 0; j < 10; ++j)
        if (j != i && coin(rng)) s[i].push_back(j);
      std::sort(s[i].begin(), s[i].end());
    }
    for (auto agg : {Aggregation::mean, Aggregation::median, Aggregation::max}) {
      const Signal out = pool(v, s, agg);
      for (int i = 0; i < 6; ++i)
        for (int f = 0; f < 3; ++f) {
          std::vector<double> vals;
          for (int j : s[i]) vals.push_back(v(j, f));
          std::sort(vals.begin(), vals.end());
          double want = 0;
          if (agg == Aggregation::max) want = vals.back();
          if (agg == Aggregation::mean) {
            for (double d : vals) want += d;
            want /= static_cast<double>(vals.size());
          }
          if (agg == Aggregation::median) {
            const std::size_t h = vals.size() / 2;
            want = vals.size() % 2 ? vals[h] : (vals[h - 1] + vals[h]) / 2;
          }
          if (agg == Aggregation::mean) CHECK(out(i, f) == doctest::Approx(want).epsilon(1e-14));
          else CHECK(out(i, f) == want);
        }
    }
  }

  // Radius zero pooling is plain sampling.
  const Multigraph g = random_multigraph(9, 2, rng);
  const PlanBuild b = build_plan(g, {9, 4}, {0}, Centrality::degree, Aggregation::median);
  const NodeSets per[] = {neighborhoods(g, b.matrices, 1, 0, 0), neighborhoods(g, b.matrices, 1, 1, 0)};
  const Signal v = testing::gaussian(9, 2, rng);
  CHECK(pool(v, multigraph_neighborhood(per), Aggregation::median) == sample_signal(b.matrices, 1, v));
}

TEST_CASE("pool backward routing") {
  Matrix x(3, 1);
  x << 2, 5, 5;
  const NodeSets s{{0, 1, 2}};
  Matrix g(1, 1);
  g << 1.0;
  Matrix max_want(3, 1);
  max_want << 0, 1, 0;  // tie goes to the lower index
  CHECK(pool_backward(x, s, Aggregation::max, g) == max_want);
  const Matrix mean = pool_backward(x, s, Aggregation::mean, g);
  for (int i = 0; i < 3; ++i) CHECK(mean(i, 0) == doctest::Approx(1.0 / 3.0));
}
