#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mgsp/tasks.hpp"
#include "mgsp/train.hpp"

namespace mgsp {

nlohmann::json to_json(const ArchitectureConfig& arch);
ArchitectureConfig architecture_from_json(const nlohmann::json& j);

// Copy of `arch` with the input width, output width and readout fixed by the
// dataset: power allocation emits N x m logits, source localization reads
// out one score per community, planted filters map features to features.
ArchitectureConfig fit_architecture(ArchitectureConfig arch, const Dataset& data);

LossFunction task_loss(const Dataset& data);

// Natural metric of the task: sum-rate in nats (higher is better), accuracy,
// or mean squared error.
std::string_view task_metric_name(TaskKind kind);

template <class Model>
double task_metric(const Model& model, const Dataset& data, std::span<const Sample> split) {
  switch (data.kind) {
    case TaskKind::power_allocation:
      return mean_sum_rate(model, split, data.spec.at("budget_mw").get<double>(),
                           data.spec.at("noise_mw").get<double>());
    case TaskKind::source_localization: return accuracy(model, split);
    case TaskKind::planted_filter: return evaluate_loss(model, split, loss_function(LossKind::mse));
  }
  return 0.0;
}

enum class Baseline { uniform, single_graph, per_graph };
std::string_view to_string(Baseline b);
Baseline baseline_from_string(std::string_view name);

// MGNN restricted to layer 1's shift.
MgnnModel single_graph_model(const Dataset& data, const ArchitectureConfig& arch, std::uint64_t seed);
// One independent single-shift model per layer, outputs summed.
Ensemble per_graph_model(const Dataset& data, const ArchitectureConfig& arch, std::uint64_t seed);

// ---- sweeps ----------------------------------------------------------------

struct SweepSpec {
  std::string parameter = "budget_mw";  // budget_mw or noise_mw
  std::vector<double> grid;
  int repetitions = 1;
  std::vector<Baseline> baselines{Baseline::uniform};

  void validate() const;
};

nlohmann::json to_json(const SweepSpec& s);
SweepSpec sweep_spec_from_json(const nlohmann::json& j);

struct SweepConfig {
  TaskSpec task;
  SweepSpec sweep;
  ArchitectureConfig architecture;
  TrainConfig training;
  std::uint64_t master_seed = 1;
  // wall_ms is written as 0 unless enabled, so replays stay byte-identical.
  bool record_wall_time = false;

  void validate() const;
};

inline constexpr int kSweepManifestVersion = 1;
inline constexpr std::string_view kSweepCsvHeader =
    "sweep_param,value,rep,model,metric_name,metric_value,wall_ms";

struct SweepRow {
  std::string parameter;
  double value = 0.0;
  int rep = 0;
  std::string model;
  std::string metric_name;
  double metric_value = 0.0;  // nan for a failed run
  double wall_ms = 0.0;
  std::string error;          // set for failed runs, not written to CSV
};

struct SweepRun {
  std::uint64_t data_seed = 0;
  std::uint64_t model_seed = 0;
  std::uint64_t train_seed = 0;
};

// Seeds of grid point `point`, repetition `rep`.
SweepRun sweep_seeds(std::uint64_t master_seed, int point, int rep);

struct SweepResult {
  std::vector<SweepRow> rows;
  nlohmann::json manifest;
};

// Grid points and repetitions run in order; a diverging model yields a row
// with metric nan and the sweep continues.
SweepResult run_sweep(const SweepConfig& config, std::ostream* progress = nullptr);

std::string format_csv(const std::vector<SweepRow>& rows);
nlohmann::json sweep_manifest(const SweepConfig& config);
SweepConfig sweep_config_from_manifest(const nlohmann::json& manifest);

}  // namespace mgsp
