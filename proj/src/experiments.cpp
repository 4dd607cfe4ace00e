#include "mgsp/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mgsp/errors.hpp"

namespace mgsp {

nlohmann::json to_json(const ArchitectureConfig& a) {
  nlohmann::json plan = nullptr;
  if (a.plan) {
    plan = {{"node_counts", a.plan->node_counts},
            {"radii", a.plan->radii},
            {"centrality", to_string(a.plan->centrality)},
            {"aggregation", to_string(a.plan->aggregation)}};
  }
  return {{"features", a.features},
          {"depth", a.depth},
          {"prune_epsilon", a.prune_epsilon ? nlohmann::json(*a.prune_epsilon) : nlohmann::json(nullptr)},
          {"hidden_sigma", to_string(a.hidden_sigma)},
          {"final_sigma", to_string(a.final_sigma)},
          {"readout", a.readout},
          {"plan", plan},
          {"basis_cap", a.basis_cap}};
}

ArchitectureConfig architecture_from_json(const nlohmann::json& j) {
  try {
    ArchitectureConfig a;
    a.features = j.at("features").get<std::vector<int>>();
    a.depth = j.at("depth").get<int>();
    if (j.contains("prune_epsilon") && !j.at("prune_epsilon").is_null())
      a.prune_epsilon = j.at("prune_epsilon").get<double>();
    a.hidden_sigma = nonlinearity_from_string(j.value("hidden_sigma", std::string(to_string(a.hidden_sigma))));
    a.final_sigma = nonlinearity_from_string(j.value("final_sigma", std::string(to_string(a.final_sigma))));
    a.readout = j.value("readout", a.readout);
    if (j.contains("plan") && !j.at("plan").is_null()) {
      const auto& p = j.at("plan");
      PlanConfig plan;
      plan.node_counts = p.at("node_counts").get<std::vector<int>>();
      plan.radii = p.at("radii").get<std::vector<int>>();
      plan.centrality = centrality_from_string(p.value("centrality", std::string(to_string(plan.centrality))));
      plan.aggregation = aggregation_from_string(p.value("aggregation", std::string(to_string(plan.aggregation))));
      a.plan = plan;
    }
    a.basis_cap = j.value("basis_cap", a.basis_cap);
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed architecture: ") + e.what());
  }
}

ArchitectureConfig fit_architecture(ArchitectureConfig arch, const Dataset& data) {
  if (arch.features.size() < 2) throw ValidationError("architecture.features needs F_0 and at least one layer width");
  if (data.train.empty()) throw ValidationError("dataset has no training samples");
  const Sample& s = data.train.front();
  arch.features.front() = static_cast<int>(s.x.cols());
  switch (data.kind) {
    case TaskKind::power_allocation:
      arch.features.back() = static_cast<int>(s.y.cols() / s.y.rows());
      arch.readout.clear();
      arch.plan.reset();
      break;
    case TaskKind::source_localization:
      if (arch.readout.empty()) arch.readout.push_back(0);
      arch.readout.back() = static_cast<int>(s.y.size());
      break;
    case TaskKind::planted_filter:
      arch.features.back() = static_cast<int>(s.y.cols());
      arch.readout.clear();
      break;
  }
  if (arch.plan && !arch.plan->node_counts.empty()) arch.plan->node_counts.front() = data.graph.num_nodes();
  return arch;
}

LossFunction task_loss(const Dataset& data) {
  switch (data.kind) {
    case TaskKind::power_allocation:
      return power_allocation_loss(data.spec.at("budget_mw").get<double>(), data.spec.at("noise_mw").get<double>());
    case TaskKind::source_localization: return loss_function(LossKind::cross_entropy);
    case TaskKind::planted_filter: return loss_function(LossKind::mse);
  }
  return loss_function(LossKind::mse);
}

std::string_view task_metric_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::power_allocation: return "sum_rate_nats";
    case TaskKind::source_localization: return "accuracy";
    case TaskKind::planted_filter: return "mse";
  }
  return "mse";
}

std::string_view to_string(Baseline b) {
  switch (b) {
    case Baseline::uniform: return "uniform";
    case Baseline::single_graph: return "single_graph";
    case Baseline::per_graph: return "per_graph";
  }
  return "uniform";
}

Baseline baseline_from_string(std::string_view name) {
  for (auto b : {Baseline::uniform, Baseline::single_graph, Baseline::per_graph})
    if (to_string(b) == name) return b;
  throw ValidationError("unknown baseline '" + std::string(name) + "'");
}

MgnnModel single_graph_model(const Dataset& data, const ArchitectureConfig& arch, std::uint64_t seed) {
  const int first[] = {0};
  ArchitectureConfig a = arch;
  a.prune_epsilon.reset();
  return make_model(data.graph.restrict_to(first), a, seed);
}

Ensemble per_graph_model(const Dataset& data, const ArchitectureConfig& arch, std::uint64_t seed) {
  ArchitectureConfig a = arch;
  a.prune_epsilon.reset();
  std::vector<MgnnModel> members;
  for (int g = 0; g < data.graph.num_shifts(); ++g) {
    const int only[] = {g};
    members.push_back(make_model(data.graph.restrict_to(only), a, seed + static_cast<std::uint64_t>(g)));
  }
  return Ensemble(std::move(members));
}

void SweepSpec::validate() const {
  if (parameter != "budget_mw" && parameter != "noise_mw")
    throw ValidationError("sweep parameter must be budget_mw or noise_mw, got '" + parameter + "'");
  if (grid.empty()) throw ValidationError("sweep grid is empty");
  for (double v : grid)
    if (!std::isfinite(v)) throw ValidationError("sweep grid values must be finite");
  if (grid.size() > 1) {
    const bool up = grid[1] > grid[0];
    for (std::size_t k = 1; k < grid.size(); ++k)
      if (up ? !(grid[k] > grid[k - 1]) : !(grid[k] < grid[k - 1]))
        throw ValidationError("sweep grid must be strictly monotone");
  }
  if (repetitions < 1) throw ValidationError("sweep repetitions must be at least 1");
  for (std::size_t a = 0; a < baselines.size(); ++a)
    for (std::size_t b = a + 1; b < baselines.size(); ++b)
      if (baselines[a] == baselines[b]) throw ValidationError("duplicate baseline " + std::string(to_string(baselines[a])));
}

nlohmann::json to_json(const SweepSpec& s) {
  std::vector<std::string> baselines;
  for (auto b : s.baselines) baselines.emplace_back(to_string(b));
  return {{"parameter", s.parameter}, {"grid", s.grid}, {"repetitions", s.repetitions}, {"baselines", baselines}};
}

SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  try {
    SweepSpec s;
    s.parameter = j.at("parameter").get<std::string>();
    s.grid = j.at("grid").get<std::vector<double>>();
    s.repetitions = j.at("repetitions").get<int>();
    s.baselines.clear();
    for (const auto& b : j.at("baselines")) s.baselines.push_back(baseline_from_string(b.get<std::string>()));
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed sweep spec: ") + e.what());
  }
}

void SweepConfig::validate() const {
  sweep.validate();
  training.validate();
  if (task.kind != TaskKind::power_allocation)
    throw ValidationError("sweeps over " + sweep.parameter + " need the power_allocation task");
  for (double v : sweep.grid) {
    TaskSpec t = task;
    (sweep.parameter == "budget_mw" ? t.budget_mw : t.noise_mw) = v;
    t.validate();
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SweepRun sweep_seeds(std::uint64_t master_seed, int point, int rep) {
  std::uint64_t s = splitmix64(master_seed);
  s = splitmix64(s ^ static_cast<std::uint64_t>(point));
  s = splitmix64(s ^ (static_cast<std::uint64_t>(rep) << 32));
  return {s, splitmix64(s + 1), splitmix64(s + 2)};
}

nlohmann::json sweep_manifest(const SweepConfig& c) {
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t p = 0; p < c.sweep.grid.size(); ++p)
    for (int r = 0; r < c.sweep.repetitions; ++r) {
      const SweepRun s = sweep_seeds(c.master_seed, static_cast<int>(p), r);
      runs.push_back({{"point", p},
                      {"value", c.sweep.grid[p]},
                      {"rep", r},
                      {"data_seed", s.data_seed},
                      {"model_seed", s.model_seed},
                      {"train_seed", s.train_seed}});
    }
  return {{"version", kSweepManifestVersion},
          {"csv_header", kSweepCsvHeader},
          {"task", to_json(c.task)},
          {"sweep", to_json(c.sweep)},
          {"architecture", to_json(c.architecture)},
          {"training", to_json(c.training)},
          {"master_seed", c.master_seed},
          {"record_wall_time", c.record_wall_time},
          {"runs", runs}};
}

SweepConfig sweep_config_from_manifest(const nlohmann::json& m) {
  try {
    const int version = m.at("version").get<int>();
    if (version != kSweepManifestVersion)
      throw ValidationError("unsupported sweep manifest version " + std::to_string(version));
    SweepConfig c;
    c.task = task_spec_from_json(m.at("task"));
    c.sweep = sweep_spec_from_json(m.at("sweep"));
    c.architecture = architecture_from_json(m.at("architecture"));
    c.training = train_config_from_json(m.at("training"));
    c.master_seed = m.at("master_seed").get<std::uint64_t>();
    c.record_wall_time = m.value("record_wall_time", false);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed sweep manifest: ") + e.what());
  }
}

std::string format_csv(const std::vector<SweepRow>& rows) {
  std::string out(kSweepCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.parameter + ',' + number(r.value) + ',' + std::to_string(r.rep) + ',' + r.model + ',' +
           r.metric_name + ',' + number(r.metric_value) + ',' + number(r.wall_ms) + '\n';
  }
  return out;
}

SweepResult run_sweep(const SweepConfig& config, std::ostream* progress) {
  config.validate();
  SweepResult result;
  result.manifest = sweep_manifest(config);
  const std::string metric(task_metric_name(config.task.kind));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  using Clock = std::chrono::steady_clock;

  for (std::size_t p = 0; p < config.sweep.grid.size(); ++p) {
    const double value = config.sweep.grid[p];
    for (int rep = 0; rep < config.sweep.repetitions; ++rep) {
      const SweepRun seeds = sweep_seeds(config.master_seed, static_cast<int>(p), rep);
      TaskSpec task = config.task;
      (config.sweep.parameter == "budget_mw" ? task.budget_mw : task.noise_mw) = value;
      task.seed = seeds.data_seed;
      task.graph.seed = splitmix64(seeds.data_seed);
      TrainConfig training = config.training;
      training.seed = seeds.train_seed;

      auto row = [&](std::string model, double metric_value, double ms, std::string error = {}) {
        result.rows.push_back({config.sweep.parameter, value, rep, std::move(model), metric, metric_value,
                               config.record_wall_time ? ms : 0.0, std::move(error)});
        if (progress) {
          *progress << config.sweep.parameter << '=' << value << " rep " << rep << ' '
                    << result.rows.back().model << ' ' << metric << '=' << metric_value;
          if (!result.rows.back().error.empty()) *progress << " (" << result.rows.back().error << ')';
          *progress << '\n';
        }
      };
      auto timed = [&](const std::string& name, auto&& fn) {
        const auto start = Clock::now();
        try {
          const double v = fn();
          row(name, v, std::chrono::duration<double, std::milli>(Clock::now() - start).count());
        } catch (const NumericalError& e) {
          row(name, nan, std::chrono::duration<double, std::milli>(Clock::now() - start).count(), e.what());
        }
      };

      Dataset data;
      try {
        data = make_dataset(task);
      } catch (const NumericalError& e) {
        row("mgnn", nan, 0.0, e.what());
        for (auto b : config.sweep.baselines) row(std::string(to_string(b)), nan, 0.0, e.what());
        continue;
      }
      const ArchitectureConfig arch = fit_architecture(config.architecture, data);
      const LossFunction loss = task_loss(data);

      timed("mgnn", [&] {
        auto out = train(make_model(data.graph, arch, seeds.model_seed), data.train, data.validation, training, loss);
        return task_metric(out.model, data, data.test);
      });
      for (auto b : config.sweep.baselines) {
        switch (b) {
          case Baseline::uniform:
            timed("uniform", [&] {
              return uniform_sum_rate(data.test, arch.features.back(), task.budget_mw, task.noise_mw);
            });
            break;
          case Baseline::single_graph:
            timed("single_graph", [&] {
              auto out = train(single_graph_model(data, arch, seeds.model_seed), data.train, data.validation,
                               training, loss);
              return task_metric(out.model, data, data.test);
            });
            break;
          case Baseline::per_graph:
            timed("per_graph", [&] {
              auto out = train(per_graph_model(data, arch, seeds.model_seed), data.train, data.validation,
                               training, loss);
              return task_metric(out.model, data, data.test);
            });
            break;
        }
      }
    }
  }
  return result;
}

}  // namespace mgsp
