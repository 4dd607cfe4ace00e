#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "helpers.hpp"
#include "mgsp/errors.hpp"
#include "mgsp/experiments.hpp"
#include "mgsp/generators.hpp"
#include "mgsp/tasks.hpp"

using namespace mgsp;

namespace {

Matrix literal_gains() {
  // g[c][j][i]: transmitter j to receiver i on channel c.
  const double g[2][3][3] = {{{0.9, 0.05, 0.0}, {0.1, 0.7, 0.2}, {0.0, 0.3, 1.2}},
                             {{0.4, 0.0, 0.15}, {0.25, 1.1, 0.0}, {0.05, 0.02, 0.6}}};
  Matrix out(3, 6);
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) out(j, c * 3 + i) = g[c][j][i];
  return out;
}

TaskSpec small_power_task() {
  TaskSpec t;
  t.kind = TaskKind::power_allocation;
  t.graph.num_nodes = 6;
  t.train_size = 12;
  t.validation_size = 4;
  t.test_size = 4;
  return t;
}

SweepConfig tiny_sweep() {
  SweepConfig c;
  c.task = small_power_task();
  c.sweep.parameter = "budget_mw";
  c.sweep.grid = {20.0};
  c.sweep.repetitions = 1;
  c.sweep.baselines = {Baseline::uniform, Baseline::single_graph};
  c.architecture.features = {0, 4, 0};
  c.architecture.final_sigma = Nonlinearity::identity;
  c.training.epochs = 3;
  c.master_seed = 42;
  return c;
}

}  // namespace

TEST_CASE("edge model parsing") {
  CHECK(EdgeModel::parse("er:0.25").p == 0.25);
  const EdgeModel s = EdgeModel::parse("sbm:0.6:0.1:mod2");
  CHECK(s.kind == EdgeModelKind::planted_partition);
  CHECK(s.merge_mod == 2);
  CHECK(EdgeModel::parse(s.to_string()) == s);
  CHECK(EdgeModel::parse("ring:2:0.1").k == 2);
  CHECK_THROWS_AS(EdgeModel::parse("er"), ValidationError);
  CHECK_THROWS_AS(EdgeModel::parse("er:1.5"), ValidationError);
  CHECK_THROWS_AS(EdgeModel::parse("lattice:3"), ValidationError);
}

TEST_CASE("multigraph generation") {
  GraphSpec spec;
  spec.num_nodes = 15;
  spec.layers = {EdgeModel::parse("er:0.3"), EdgeModel::parse("geo:0.4"), EdgeModel::parse("ring:1:0.1")};
  spec.seed = 7;
  const Multigraph a = generate_multigraph(spec);
  CHECK(a.num_shifts() == 3);
  CHECK(a == generate_multigraph(spec));
  spec.seed = 8;
  CHECK_FALSE(a == generate_multigraph(spec));
  CHECK(graph_spec_from_json(to_json(spec)).layers == spec.layers);

  GraphSpec sparse;
  sparse.num_nodes = 30;
  sparse.layers = {EdgeModel::parse("er:0.0")};
  sparse.require_connected = true;
  sparse.max_retries = 3;
  CHECK_THROWS_AS(generate_multigraph(sparse), NumericalError);

  for (double eps : {0.01, 0.05}) {
    GraphSpec near;
    near.num_nodes = 12;
    near.layers = {EdgeModel::parse("er:0.3"), EdgeModel::parse("er:0.3")};
    near.near_commuting_epsilon = eps;
    const Multigraph g = generate_multigraph(near);
    const Matrix s1 = g.shift(0).to_dense();
    const Matrix s2 = g.shift(1).to_dense();
    const double measured = testing::svd_norm(s1 * s2 - s2 * s1);
    CHECK(measured <= eps + 1e-6);
    CHECK(measured > 0.0);
  }

  CHECK(community_of(0, 20, 4) == 0);
  CHECK(community_of(19, 20, 4) == 3);
  CHECK(community_of(5, 20, 4) == 1);
}

TEST_CASE("budget projection and capacity") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const Matrix p = budget_projection(10.0 * testing::gaussian(5, 2, rng), 55.0);
    CHECK(std::abs(p.sum() - 55.0) <= 1e-9);
    CHECK(p.minCoeff() >= 0.0);
  }
  CHECK_THROWS_AS(budget_projection(Matrix::Zero(2, 1), 0.0), ValidationError);
  CHECK_THROWS_AS(budget_projection(Matrix::Zero(2, 1), -1.0), ValidationError);

  Matrix one(1, 1);
  one << 1.0;
  Matrix power(1, 1);
  power << 55.0;
  CHECK(sum_rate(power, one, 1e-3) == doctest::Approx(std::log(1.0 + 55.0 / 1e-3)).epsilon(1e-14));

  // Frozen output of tests/oracles/sum_rate.py.
  CHECK(sum_rate(uniform_allocation(3, 2, 6.0), literal_gains(), 0.01) ==
        doctest::Approx(11.216995673000541).epsilon(1e-13));
  CHECK_THROWS_AS(sum_rate(Matrix::Ones(3, 2), Matrix::Ones(3, 3), 0.01), ValidationError);
}

TEST_CASE("sum-rate gradients") {
  std::mt19937_64 rng(2);
  const Matrix gains = literal_gains();
  const Matrix p = budget_projection(testing::gaussian(3, 2, rng), 6.0);
  const Matrix grad = sum_rate_gradient(p, gains, 0.01);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 2; ++c) {
      Matrix up = p, down = p;
      up(i, c) += h;
      down(i, c) -= h;
      const double numeric = (sum_rate(up, gains, 0.01) - sum_rate(down, gains, 0.01)) / (2 * h);
      CHECK(std::abs(numeric - grad(i, c)) <= 1e-6 * std::max(1.0, std::abs(numeric)));
    }

  const LossFunction loss = power_allocation_loss(6.0, 0.01);
  const Matrix z = testing::gaussian(3, 2, rng);
  const LossValue v = loss(z, gains);
  CHECK(v.loss == doctest::Approx(-sum_rate(budget_projection(z, 6.0), gains, 0.01)));
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 2; ++c) {
      Matrix up = z, down = z;
      up(i, c) += h;
      down(i, c) -= h;
      const double numeric = (loss(up, gains).loss - loss(down, gains).loss) / (2 * h);
      CHECK(std::abs(numeric - v.gradient(i, c)) <= 1e-6 * std::max(1.0, std::abs(numeric)));
    }
}

TEST_CASE("datasets") {
  TaskSpec src;
  src.kind = TaskKind::source_localization;
  src.graph.num_nodes = 12;
  src.graph.layers = {EdgeModel::parse("sbm:0.6:0.05"), EdgeModel::parse("sbm:0.6:0.05")};
  src.min_steps = 0;
  src.max_steps = 0;
  src.train_size = 5;
  src.validation_size = 2;
  src.test_size = 3;
  const Dataset d = make_dataset(src);
  CHECK(d.train.size() == 5);
  CHECK(d.validation.size() == 2);
  CHECK(d.test.size() == 3);
  for (const auto& s : d.train) {
    // Zero diffusion steps leave the delta in place.
    CHECK(s.x.sum() == 1.0);
    CHECK(s.x.maxCoeff() == 1.0);
    Eigen::Index node = 0, col = 0;
    s.x.maxCoeff(&node, &col);
    CHECK(s.y.sum() == 1.0);
    CHECK(s.y(community_of(static_cast<int>(node), 12, 4), 0) == 1.0);
  }

  const Dataset again = make_dataset(src);
  for (std::size_t i = 0; i < d.train.size(); ++i) CHECK(again.train[i].x == d.train[i].x);

  const Dataset power = make_dataset(small_power_task());
  CHECK(power.graph.num_shifts() == 2);
  CHECK(power.train[0].x.cols() == 6);
  CHECK(power.train[0].y.rows() == 6);
  CHECK(power.train[0].y.cols() == 12);

  const std::string path = "test_tasks_dataset.json";
  save_dataset(power, path);
  const Dataset back = load_dataset(path);
  std::remove(path.c_str());
  CHECK(back.graph == power.graph);
  CHECK(back.test[3].y == power.test[3].y);
  CHECK(back.spec == power.spec);

  TaskSpec broke = small_power_task();
  broke.budget_mw = 0.0;
  CHECK_THROWS_AS(make_dataset(broke), ValidationError);
  TaskSpec letters;
  letters.planted = {{Word{3}, 1.0}};
  CHECK_THROWS_AS(make_dataset(letters), ValidationError);
}

TEST_CASE("baselines") {
  TaskSpec t;
  t.graph.num_nodes = 8;
  t.graph.layers = {EdgeModel::parse("er:0.4"), EdgeModel::parse("er:0.4")};
  const Dataset d = make_dataset(t);
  ArchitectureConfig a;
  a.features = {0, 0};
  a.final_sigma = Nonlinearity::identity;
  a = fit_architecture(a, d);
  const MgnnModel full = make_model(d.graph, a, 1);
  const MgnnModel single = single_graph_model(d, a, 1);
  CHECK(single.multigraph().num_shifts() == 1);
  CHECK(single.basis_word_count() < full.basis_word_count());
  const Ensemble per = per_graph_model(d, a, 1);
  CHECK(per.members().size() == 2);
}

TEST_CASE("sweep seeds") {
  const SweepRun a = sweep_seeds(1, 0, 0);
  CHECK(a.data_seed == sweep_seeds(1, 0, 0).data_seed);
  CHECK(a.data_seed != sweep_seeds(1, 0, 1).data_seed);
  CHECK(a.data_seed != sweep_seeds(1, 1, 0).data_seed);
  CHECK(a.data_seed != sweep_seeds(2, 0, 0).data_seed);
  CHECK(a.model_seed != a.train_seed);
}

TEST_CASE("sweep rows and replay") {
  const SweepConfig c = tiny_sweep();
  const SweepResult r = run_sweep(c);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].model == "mgnn");
  CHECK(r.rows[1].model == "uniform");
  CHECK(r.rows[2].model == "single_graph");
  for (const auto& row : r.rows) {
    CHECK(row.metric_name == "sum_rate_nats");
    CHECK(std::isfinite(row.metric_value));
    CHECK(row.wall_ms == 0.0);
  }
  const std::string csv = format_csv(r.rows);
  CHECK(csv.rfind(std::string(kSweepCsvHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  const SweepConfig replay = sweep_config_from_manifest(nlohmann::json::parse(r.manifest.dump()));
  CHECK(format_csv(run_sweep(replay).rows) == csv);

  nlohmann::json bad = r.manifest;
  bad["version"] = kSweepManifestVersion + 1;
  CHECK_THROWS_AS(sweep_config_from_manifest(bad), ValidationError);
}

TEST_CASE("sweep validation and failures") {
  SweepConfig c = tiny_sweep();
  c.sweep.grid = {};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.sweep.grid = {10, 10};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.sweep.grid = {10, 20};
  c.sweep.repetitions = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = tiny_sweep();
  c.sweep.grid = {0.0, 10.0};
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = tiny_sweep();
  c.sweep.parameter = "area";
  CHECK_THROWS_AS(c.validate(), ValidationError);

  c = tiny_sweep();
  c.sweep.baselines = {Baseline::uniform};
  c.training.optimizer = OptimizerKind::sgd;
  c.training.learning_rate = 1e300;
  const SweepResult r = run_sweep(c);
  REQUIRE(r.rows.size() == 2);
  CHECK(std::isnan(r.rows[0].metric_value));
  CHECK_FALSE(r.rows[0].error.empty());
  CHECK(std::isfinite(r.rows[1].metric_value));
  CHECK(format_csv(r.rows).find(",nan,") != std::string::npos);
}
