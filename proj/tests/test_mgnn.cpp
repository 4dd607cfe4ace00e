#include <doctest.h>

#include <cstdio>

#include "helpers.hpp"
#include "mgsp/checks.hpp"
#include "mgsp/errors.hpp"
#include "mgsp/mgnn.hpp"
#include "mgsp/tasks.hpp"
#include "mgsp/train.hpp"

using namespace mgsp;

namespace {

Matrix apply_sigma(Nonlinearity s, Matrix m) {
  if (s == Nonlinearity::relu) return m.cwiseMax(0.0);
  if (s == Nonlinearity::tanh) return m.array().tanh().matrix();
  return m;
}

// Literal reading of the layer equations on dense matrices, no sampling.
Matrix straight_line(const MgnnModel& model, const Signal& x) {
  const std::vector<Matrix> shifts = dense_shifts(model.multigraph());
  Matrix cur = x;
  for (const auto& layer : model.layers()) {
    Matrix pre = Matrix::Zero(cur.rows(), layer.filter.out_features());
    const auto& words = layer.filter.basis().words();
    for (std::size_t k = 0; k < words.size(); ++k)
      pre += dense_word(shifts, words[k]) * cur * layer.filter.coefficient(k);
    cur = apply_sigma(layer.sigma, pre);
  }
  if (!model.has_readout()) return cur;
  Matrix h(cur.size(), 1);
  for (Eigen::Index i = 0; i < cur.rows(); ++i)
    for (Eigen::Index f = 0; f < cur.cols(); ++f) h(i * cur.cols() + f, 0) = cur(i, f);
  const auto& ro = model.readout();
  for (std::size_t k = 0; k < ro.size(); ++k) {
    h = ro[k].weight * h + ro[k].bias;
    if (k + 1 < ro.size()) h = h.cwiseMax(0.0);
  }
  return h;
}

std::vector<Sample> regression_data(const MgnnModel& teacher, int count, int features, std::mt19937_64& rng) {
  std::vector<Sample> out;
  for (int i = 0; i < count; ++i) {
    Sample s;
    s.x = testing::gaussian(teacher.multigraph().num_nodes(), features, rng);
    s.y = teacher.predict(s.x);
    out.push_back(std::move(s));
  }
  return out;
}

ArchitectureConfig small_arch() {
  ArchitectureConfig a;
  a.features = {2, 3, 2};
  a.depth = 2;
  a.hidden_sigma = Nonlinearity::tanh;
  a.final_sigma = Nonlinearity::tanh;
  a.readout = {4, 2};
  return a;
}

}  // namespace

TEST_CASE("forward trivial cases") {
  std::mt19937_64 rng(1);
  const Multigraph g = random_multigraph(5, 2, rng);
  MultigraphFilter id(enumerate_monomials(2, 0), {Matrix::Identity(1, 1)});
  const MgnnModel ident(g, {PerceptronLayer{id, Nonlinearity::identity}});
  const Signal x = testing::gaussian(5, 1, rng);
  CHECK(ident.predict(x) == x);

  MultigraphFilter neg(enumerate_monomials(2, 0), {-Matrix::Identity(1, 1)});
  const MgnnModel killed(g, {PerceptronLayer{neg, Nonlinearity::relu}});
  CHECK(killed.predict(x.cwiseAbs()) == Matrix::Zero(5, 1));

  CHECK_THROWS_AS(ident.predict(Matrix::Zero(4, 1)), ValidationError);
  CHECK_THROWS_AS(ident.predict(Matrix::Zero(5, 2)), ValidationError);
}

TEST_CASE("forward matches straight-line evaluation") {
  std::mt19937_64 rng(2);
  const Multigraph g = random_multigraph(8, 2, rng);
  ArchitectureConfig a = small_arch();
  a.hidden_sigma = Nonlinearity::relu;
  a.readout = {6, 3};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MgnnModel m = make_model(g, a, seed);
    const Signal x = testing::gaussian(8, 2, rng);
    const Matrix got = m.predict(x);
    const Matrix want = straight_line(m, x);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("linearity of a single identity layer") {
  std::mt19937_64 rng(3);
  const Multigraph g = random_multigraph(7, 3, rng);
  ArchitectureConfig a;
  a.features = {2, 2};
  a.final_sigma = Nonlinearity::identity;
  const MgnnModel m = make_model(g, a, 4);
  const Signal x1 = testing::gaussian(7, 2, rng);
  const Signal x2 = testing::gaussian(7, 2, rng);
  const Matrix lhs = m.predict(1.5 * x1 - 0.5 * x2);
  const Matrix rhs = 1.5 * m.predict(x1) - 0.5 * m.predict(x2);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("initialization ranges") {
  std::mt19937_64 rng(4);
  const Multigraph g = random_multigraph(6, 2, rng);
  const MgnnModel m = make_model(g, small_arch(), 9);
  const auto& f = m.layers()[0].filter;
  const double bound = 1.0 / std::sqrt(2.0 * static_cast<double>(f.basis().size()));
  for (const auto& c : f.coefficients()) CHECK(c.cwiseAbs().maxCoeff() <= bound);
  CHECK(m.readout()[0].bias == Matrix::Zero(4, 1));
  CHECK(m.readout()[0].weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(12.0));
  CHECK(m.parameter_count() == 2 * 7 * 3 + 3 * 7 * 2 + 4 * 12 + 4 + 2 * 4 + 2);
}

TEST_CASE("losses") {
  const Matrix zeros = Matrix::Zero(4, 1);
  Matrix onehot = Matrix::Zero(4, 1);
  onehot(2, 0) = 1.0;
  const LossValue ce = cross_entropy_loss(zeros, onehot);
  CHECK(ce.loss == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(ce.gradient(2, 0) == doctest::Approx(0.25 - 1.0));
  CHECK(ce.gradient(0, 0) == doctest::Approx(0.25));

  Matrix big(2, 1);
  big << 1000, 0;
  Matrix first(2, 1);
  first << 1, 0;
  CHECK(cross_entropy_loss(big, first).loss == doctest::Approx(0.0));

  Matrix out(2, 1);
  out << 1, 3;
  Matrix y(2, 1);
  y << 0, 1;
  const LossValue se = mse_loss(out, y);
  CHECK(se.loss == 5.0);
  CHECK(se.gradient == 2 * (out - y));
  CHECK_THROWS_AS(mse_loss(out, Matrix::Zero(3, 1)), ValidationError);
}

TEST_CASE("zero learning signal gives zero gradients") {
  std::mt19937_64 rng(5);
  const Multigraph g = random_multigraph(6, 2, rng);
  const MgnnModel m = make_model(g, small_arch(), 1);
  const auto data = regression_data(m, 3, 2, rng);
  const auto lg = loss_and_gradients(m, std::span<const Sample>(data), mse_loss);
  CHECK(lg.loss == 0.0);
  for (const auto& gr : lg.gradients) CHECK(gr.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("closed-form gradient of a linear layer") {
  std::mt19937_64 rng(6);
  const Multigraph g = random_multigraph(6, 2, rng);
  ArchitectureConfig a;
  a.features = {1, 1};
  a.final_sigma = Nonlinearity::identity;
  const MgnnModel m = make_model(g, a, 2);
  Sample s{testing::gaussian(6, 1, rng), testing::gaussian(6, 1, rng)};
  const auto lg = loss_and_gradients(m, std::span<const Sample>(&s, 1), mse_loss);
  const Matrix residual = m.predict(s.x) - s.y;
  const auto shifts = dense_shifts(g);
  const auto& words = m.layers()[0].filter.basis().words();
  for (std::size_t k = 0; k < words.size(); ++k) {
    const Matrix want = 2.0 * (dense_word(shifts, words[k]) * s.x).transpose() * residual;
    CHECK(std::abs(lg.gradients[k](0, 0) - want(0, 0)) <= 1e-12 * std::max(1.0, std::abs(want(0, 0))));
  }
}

TEST_CASE("finite differences on a pooled 6-node model") {
  std::mt19937_64 rng(7);
  const Multigraph g = random_multigraph(6, 2, rng);
  for (auto agg : {Aggregation::mean, Aggregation::max}) {
    ArchitectureConfig a = small_arch();
    a.plan = PlanConfig{{6, 4, 3}, {1, 1}, Centrality::pagerank, agg};
    a.readout = {3};
    MgnnModel m = make_model(g, a, 11);
    std::vector<Sample> data;
    for (int i = 0; i < 2; ++i) data.push_back({testing::gaussian(6, 2, rng), testing::gaussian(3, 1, rng)});
    const auto lg = loss_and_gradients(m, std::span<const Sample>(data), mse_loss);
    const double h = 1e-5;
    double worst = 0.0;
    auto params = m.parameters();
    for (std::size_t p = 0; p < params.size(); ++p)
      for (Eigen::Index e = 0; e < params[p]->size(); ++e) {
        double& v = params[p]->data()[e];
        const double keep = v;
        v = keep + h;
        const double up = loss_and_gradients(m, std::span<const Sample>(data), mse_loss).loss;
        v = keep - h;
        const double down = loss_and_gradients(m, std::span<const Sample>(data), mse_loss).loss;
        v = keep;
        const double numeric = (up - down) / (2 * h);
        const double analytic = lg.gradients[p].data()[e];
        worst = std::max(worst, std::abs(numeric - analytic) /
                                    std::max({std::abs(numeric), std::abs(analytic), 1e-4}));
      }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("equivariance") {
  std::mt19937_64 rng(8);
  const Multigraph g = random_multigraph(10, 3, rng);
  ArchitectureConfig a;
  a.features = {2, 4, 4, 3};
  a.depth = 2;
  const MgnnModel m = make_model(g, a, 3);
  const Signal x = testing::gaussian(10, 2, rng);
  const auto same = check_equivariance(m, x, Permutation::identity(10), 1e-10);
  CHECK(same.passed);
  CHECK(same.max_deviation == 0.0);
  const auto moved = check_equivariance(m, x, Permutation::random(10, rng), 1e-10);
  CHECK(moved.passed);
  CHECK(moved.max_deviation <= 1e-10);

  a.readout = {2};
  CHECK_THROWS_AS(check_equivariance(make_model(g, a, 3), x, Permutation::identity(10), 1e-9),
                  ValidationError);
}

TEST_CASE("checkpoint round trip") {
  std::mt19937_64 rng(9);
  const Multigraph g = random_multigraph(8, 2, rng);
  ArchitectureConfig a = small_arch();
  a.plan = PlanConfig{{8, 5, 3}, {1, 2}, Centrality::degree, Aggregation::median};
  a.prune_epsilon = 0.2;
  const MgnnModel m = make_model(g, a, 5);
  const std::string path = "test_mgnn_checkpoint.json";
  nlohmann::json meta{{"seed", 5}};
  save_checkpoint(m, path, meta);
  nlohmann::json back_meta;
  const MgnnModel back = load_checkpoint(path, &back_meta);
  std::remove(path.c_str());
  CHECK(back_meta["seed"] == 5);
  const Signal x = testing::gaussian(8, 2, rng);
  CHECK(back.predict(x) == m.predict(x));
  CHECK(back.basis_word_count() == m.basis_word_count());
  CHECK(back.plan() == m.plan());

  nlohmann::json doc = model_to_json(m);
  doc["version"] = kCheckpointFormatVersion + 1;
  CHECK_THROWS_AS(model_from_json(doc), ValidationError);
  CHECK_THROWS_AS(load_checkpoint("does/not/exist.json"), ValidationError);
}

TEST_CASE("training basics") {
  std::mt19937_64 rng(10);
  const Multigraph g = random_multigraph(6, 2, rng);
  const MgnnModel teacher = make_model(g, small_arch(), 100);
  const auto data = regression_data(teacher, 40, 2, rng);
  const std::span<const Sample> all(data);

  TrainConfig c;
  c.epochs = 0;
  const MgnnModel init = make_model(g, small_arch(), 1);
  const auto none = train(init, all, {}, c, mse_loss);
  CHECK(none.history.empty());
  CHECK(none.best_epoch == 0);
  for (std::size_t p = 0; p < init.parameters().size(); ++p)
    CHECK(*none.model.parameters()[p] == *init.parameters()[p]);

  c.epochs = 15;
  c.seed = 3;
  const auto r1 = train(init, all.subspan(0, 30), all.subspan(30), c, mse_loss);
  const auto r2 = train(init, all.subspan(0, 30), all.subspan(30), c, mse_loss);
  REQUIRE(r1.history.size() == 15);
  for (std::size_t e = 0; e < r1.history.size(); ++e) {
    CHECK(r1.history[e].train_loss == r2.history[e].train_loss);
    CHECK(r1.history[e].validation_loss == r2.history[e].validation_loss);
  }
  for (std::size_t p = 0; p < init.parameters().size(); ++p)
    CHECK(*r1.model.parameters()[p] == *r2.model.parameters()[p]);
  CHECK(r1.history.back().train_loss < r1.history.front().train_loss);
  double best = r1.history[r1.best_epoch - 1].validation_loss;
  for (const auto& h : r1.history) CHECK(best <= h.validation_loss);
  CHECK(evaluate_loss(r1.model, all.subspan(30), mse_loss) == doctest::Approx(best).epsilon(1e-12));

  TrainConfig bad = c;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train(init, all, {}, bad, mse_loss), ValidationError);
  bad = c;
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(init, all, {}, bad, mse_loss), ValidationError);
}

TEST_CASE("divergence reports the epoch") {
  std::mt19937_64 rng(11);
  const Multigraph g = random_multigraph(6, 1, rng);
  ArchitectureConfig a;
  a.features = {1, 1};
  a.final_sigma = Nonlinearity::identity;
  const MgnnModel m = make_model(g, a, 1);
  std::vector<Sample> data;
  for (int i = 0; i < 8; ++i) data.push_back({1e3 * testing::gaussian(6, 1, rng), testing::gaussian(6, 1, rng)});
  TrainConfig c;
  c.optimizer = OptimizerKind::sgd;
  c.learning_rate = 1e3;
  c.epochs = 200;
  try {
    (void)train(m, std::span<const Sample>(data), {}, c, mse_loss);
    FAIL("training should diverge");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("planted coefficient recovery") {
  TaskSpec spec;
  spec.graph.num_nodes = 12;
  spec.graph.layers = {EdgeModel::parse("er:0.3"), EdgeModel::parse("er:0.3")};
  spec.graph.seed = 4;
  spec.train_size = 100;
  spec.validation_size = 20;
  spec.test_size = 20;
  const Dataset d = make_dataset(spec);
  ArchitectureConfig a;
  a.features = {1, 1};
  a.final_sigma = Nonlinearity::identity;
  TrainConfig c;
  c.epochs = 300;
  c.learning_rate = 0.02;
  c.lr_decay = 0.98;
  const auto out = train(make_model(d.graph, a, 1), std::span<const Sample>(d.train),
                         std::span<const Sample>(d.validation), c, mse_loss);
  const auto& f = out.model.layers()[0].filter;
  for (std::size_t k = 0; k < f.basis().size(); ++k) {
    const Word& w = f.basis().words()[k];
    const double truth = w == Word{1} ? 0.5 : w == Word{2, 1} ? 0.25 : 0.0;
    CHECK(std::abs(f.coefficient(k)(0, 0) - truth) <= 1e-3);
  }
  CHECK(out.history.back().train_loss < 1e-4 * out.history.front().train_loss);
}

TEST_CASE("ensemble sums its members") {
  std::mt19937_64 rng(12);
  const Multigraph g = random_multigraph(6, 2, rng);
  ArchitectureConfig a = small_arch();
  const MgnnModel m1 = make_model(g, a, 1);
  const MgnnModel m2 = make_model(g, a, 2);
  const Ensemble e({m1, m2});
  const Signal x = testing::gaussian(6, 2, rng);
  CHECK((e.predict(x) - m1.predict(x) - m2.predict(x)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(e.parameter_count() == 2 * m1.parameter_count());
  Sample s{x, Matrix::Zero(2, 1)};
  const auto ge = loss_and_gradients(e, std::span<const Sample>(&s, 1), mse_loss);
  CHECK(ge.gradients.size() == 2 * m1.parameters().size());
}
