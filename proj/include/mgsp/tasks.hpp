#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mgsp/generators.hpp"
#include "mgsp/mgnn.hpp"

namespace mgsp {

enum class TaskKind { source_localization, power_allocation, planted_filter };

std::string_view to_string(TaskKind k);
TaskKind task_kind_from_string(std::string_view name);

struct PlantedTerm {
  Word word;
  double coefficient = 0.0;
};

struct TaskSpec {
  TaskKind kind = TaskKind::planted_filter;
  GraphSpec graph;
  int train_size = 200;
  int validation_size = 50;
  int test_size = 100;
  std::uint64_t seed = 1;

  // source_localization: delta at a random node diffused a uniform number
  // of steps in [min_steps, max_steps], each through a random layer.
  int min_steps = 0;
  int max_steps = 8;

  // power_allocation: N transmitter/receiver pairs, one interference graph
  // per channel (geometric, radius per channel), Rayleigh fading per sample.
  double budget_mw = 55.0;
  double noise_mw = 1e-3;
  double area = 4.0;                  // side of the square layout
  std::vector<double> channel_radius{1.0, 1.6};
  double pathloss_exponent = 3.0;

  // planted_filter: y = sum c_w S_w x + noise_std * N(0, 1).
  std::vector<PlantedTerm> planted{{Word{1}, 0.5}, {Word{2, 1}, 0.25}};
  double noise_std = 0.0;
  int features = 1;

  void validate() const;
};

nlohmann::json to_json(const TaskSpec& spec);
TaskSpec task_spec_from_json(const nlohmann::json& j);

struct Dataset {
  TaskKind kind = TaskKind::planted_filter;
  nlohmann::json spec;  // TaskSpec that produced it
  Multigraph graph;
  std::vector<Sample> train;
  std::vector<Sample> validation;
  std::vector<Sample> test;
};

// Bit-reproducible from (spec, spec.seed).
Dataset make_dataset(const TaskSpec& spec, const NormOptions& options = {});

inline constexpr int kDatasetFormatVersion = 1;
nlohmann::json dataset_to_json(const Dataset& d);
Dataset dataset_from_json(const nlohmann::json& j);
void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

// ---- power allocation -----------------------------------------------------

// Per-sample target layout: gains is N x (N * m); block c holds G_c with
// G_c(i, i) the direct gain of pair i and G_c(j, i) the interference from
// transmitter j at receiver i (nonzero only along channel c's graph).

// budget * softmax over every entry of `logits` (N x m).
Matrix budget_projection(const Matrix& logits, double budget);

// sum_{i,c} log(1 + SINR_ic) in nats for powers N x m.
double sum_rate(const Matrix& powers, const Matrix& gains, double noise);

// d sum_rate / d powers.
Matrix sum_rate_gradient(const Matrix& powers, const Matrix& gains, double noise);

// J = -sum_rate(budget_projection(output)) with its gradient w.r.t. output.
LossFunction power_allocation_loss(double budget, double noise);

Matrix uniform_allocation(int num_nodes, int channels, double budget);

// Mean test-set sum-rate of the projected model outputs, and of the uniform
// allocation.
template <class Model>
double mean_sum_rate(const Model& model, std::span<const Sample> data, double budget, double noise) {
  double total = 0.0;
  for (const auto& s : data) total += sum_rate(budget_projection(model.predict(s.x), budget), s.y, noise);
  return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}
double uniform_sum_rate(std::span<const Sample> data, int channels, double budget, double noise);

// ---- classification --------------------------------------------------------

// Fraction of samples whose arg-max output matches the arg-max target.
template <class Model>
double accuracy(const Model& model, std::span<const Sample> data) {
  if (data.empty()) return 0.0;
  int hits = 0;
  for (const auto& s : data) {
    Eigen::Index pr = 0, pc = 0, tr = 0, tc = 0;
    model.predict(s.x).maxCoeff(&pr, &pc);
    s.y.maxCoeff(&tr, &tc);
    hits += pr == tr && pc == tc;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace mgsp
