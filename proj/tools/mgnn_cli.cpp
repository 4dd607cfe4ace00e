// mgnn: generate data, train and evaluate multigraph networks, run sweeps and
// the built-in property checks.
//
// Exit codes: 0 success, 1 a property check failed, 2 invalid input,
// 3 runtime failure (divergence, disconnected graph, I/O).

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mgsp/checks.hpp"
#include "mgsp/errors.hpp"
#include "mgsp/experiments.hpp"

using namespace mgsp;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

const std::vector<std::string> kTaskNames{"source_localization", "power_allocation", "planted_filter"};
const std::vector<std::string> kShiftNames{"adjacency", "normalized_adjacency", "laplacian", "normalized_laplacian"};
const std::vector<std::string> kSigmaNames{"relu", "tanh", "identity"};

struct GraphOptions {
  int nodes = 20;
  std::vector<std::string> layers{"sbm:0.5:0.05", "sbm:0.5:0.05"};
  std::uint64_t seed = 1;
  int communities = 4;
  bool connected = false;
  int max_retries = 100;
  std::string shift = "normalized_adjacency";
  std::optional<double> near_commuting_eps;

  void add(CLI::App& app) {
    app.add_option("--nodes", nodes, "number of nodes N")->capture_default_str();
    app.add_option("--layer", layers, "edge model per layer: er:p, ring:k:p, geo:r, sbm:pin:pout[:divK|:modK]")
        ->capture_default_str();
    app.add_option("--graph-seed", seed, "multigraph seed")->capture_default_str();
    app.add_option("--communities", communities, "planted communities")->capture_default_str();
    app.add_flag("--connected", connected, "redraw each layer until connected");
    app.add_option("--max-retries", max_retries, "redraw cap for --connected")->capture_default_str();
    app.add_option("--shift", shift, "shift operator kind")->check(CLI::IsMember(kShiftNames))->capture_default_str();
    app.add_option("--near-commuting-eps", near_commuting_eps,
                   "replace layer 2 by a perturbation of layer 1 with commutator norm <= eps");
  }

  GraphSpec spec() const {
    GraphSpec g;
    g.num_nodes = nodes;
    g.layers.clear();
    for (const auto& l : layers) g.layers.push_back(EdgeModel::parse(l));
    g.seed = seed;
    g.communities = communities;
    g.require_connected = connected;
    g.max_retries = max_retries;
    g.shift = shift_kind_from_string(shift);
    g.near_commuting_epsilon = near_commuting_eps;
    return g;
  }
};

struct TaskOptions {
  std::string kind = "source_localization";
  int train = 200;
  int validation = 50;
  int test = 100;
  std::uint64_t seed = 1;
  int min_steps = 0;
  int max_steps = 8;
  double budget = 55.0;
  double noise = 1e-3;
  double area = 4.0;
  std::vector<double> channel_radius{1.0, 1.6};
  double pathloss = 3.0;
  std::vector<std::string> planted{"1:0.5", "2,1:0.25"};
  double noise_std = 0.0;
  int features = 1;

  void add(CLI::App& app, bool with_kind = true) {
    if (with_kind) app.add_option("--task", kind, "task kind")->check(CLI::IsMember(kTaskNames))->capture_default_str();
    app.add_option("--train-size", train)->capture_default_str();
    app.add_option("--validation-size", validation)->capture_default_str();
    app.add_option("--test-size", test)->capture_default_str();
    app.add_option("--data-seed", seed, "dataset seed")->capture_default_str();
    app.add_option("--min-steps", min_steps, "source localization: fewest diffusion steps")->capture_default_str();
    app.add_option("--max-steps", max_steps, "source localization: most diffusion steps")->capture_default_str();
    app.add_option("--budget", budget, "power budget P in mW")->capture_default_str();
    app.add_option("--noise", noise, "receiver noise power in mW")->capture_default_str();
    app.add_option("--area", area, "side of the square layout")->capture_default_str();
    app.add_option("--channel-radius", channel_radius, "interference radius per channel")->capture_default_str();
    app.add_option("--pathloss-exponent", pathloss)->capture_default_str();
    app.add_option("--planted", planted, "planted filter terms word:coefficient, e.g. 2,1:0.25")->capture_default_str();
    app.add_option("--noise-std", noise_std, "planted filter: target noise")->capture_default_str();
    app.add_option("--signal-features", features, "planted filter: features per node")->capture_default_str();
  }

  TaskSpec spec(const GraphSpec& graph) const {
    TaskSpec t;
    t.kind = task_kind_from_string(kind);
    t.graph = graph;
    t.train_size = train;
    t.validation_size = validation;
    t.test_size = test;
    t.seed = seed;
    t.min_steps = min_steps;
    t.max_steps = max_steps;
    t.budget_mw = budget;
    t.noise_mw = noise;
    t.area = area;
    t.channel_radius = channel_radius;
    t.pathloss_exponent = pathloss;
    t.planted.clear();
    for (const auto& term : planted) {
      const auto colon = term.find(':');
      if (colon == std::string::npos) throw ValidationError("--planted expects word:coefficient, got '" + term + "'");
      std::vector<int> letters;
      std::string word = term.substr(0, colon);
      std::size_t start = 0;
      while (start < word.size()) {
        const auto comma = word.find(',', start);
        const std::string piece = word.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
          letters.push_back(std::stoi(piece));
        } catch (const std::exception&) {
          throw ValidationError("--planted: bad word in '" + term + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      double c = 0.0;
      try {
        c = std::stod(term.substr(colon + 1));
      } catch (const std::exception&) {
        throw ValidationError("--planted: bad coefficient in '" + term + "'");
      }
      t.planted.push_back({Word(std::move(letters)), c});
    }
    t.noise_std = noise_std;
    t.features = features;
    t.validate();
    return t;
  }
};

struct ArchOptions {
  std::vector<int> features{16, 16};
  int depth = 2;
  std::optional<double> prune_eps;
  std::string hidden_sigma = "relu";
  std::string final_sigma = "auto";
  std::vector<int> readout;
  std::vector<int> plan_nodes;
  std::vector<int> plan_radii;
  std::string centrality = "degree";
  std::string aggregation = "max";

  void add(CLI::App& app) {
    app.add_option("--features", features, "layer widths F_1..F_L (F_0 comes from the data)")->capture_default_str();
    app.add_option("--depth", depth, "maximum word length K")->capture_default_str();
    app.add_option("--prune-eps", prune_eps, "prune words for generator pairs with commutator norm <= eps");
    app.add_option("--hidden-sigma", hidden_sigma)->check(CLI::IsMember(kSigmaNames))->capture_default_str();
    std::vector<std::string> finals = kSigmaNames;
    finals.push_back("auto");
    app.add_option("--final-sigma", final_sigma, "auto: identity for regression-style outputs, relu before a readout")
        ->check(CLI::IsMember(finals))
        ->capture_default_str();
    app.add_option("--readout", readout, "dense readout sizes (last one set by the task)");
    app.add_option("--plan-nodes", plan_nodes, "sampling plan node counts N_1..N_L");
    app.add_option("--plan-radii", plan_radii, "pooling radius per layer");
    app.add_option("--centrality", centrality)->check(CLI::IsMember({"degree", "pagerank"}))->capture_default_str();
    app.add_option("--aggregation", aggregation)->check(CLI::IsMember({"mean", "median", "max"}))->capture_default_str();
  }

  ArchitectureConfig config(TaskKind kind) const {
    ArchitectureConfig a;
    a.features = {0};
    a.features.insert(a.features.end(), features.begin(), features.end());
    a.depth = depth;
    a.prune_epsilon = prune_eps;
    a.hidden_sigma = nonlinearity_from_string(hidden_sigma);
    if (final_sigma == "auto") {
      a.final_sigma = kind == TaskKind::source_localization ? Nonlinearity::relu : Nonlinearity::identity;
    } else {
      a.final_sigma = nonlinearity_from_string(final_sigma);
    }
    a.readout = readout;
    if (!plan_nodes.empty() || !plan_radii.empty()) {
      if (plan_nodes.size() != features.size() || plan_radii.size() != features.size())
        throw ValidationError("--plan-nodes and --plan-radii need one entry per layer");
      PlanConfig p;
      p.node_counts = {0};
      p.node_counts.insert(p.node_counts.end(), plan_nodes.begin(), plan_nodes.end());
      p.radii = plan_radii;
      p.centrality = centrality_from_string(centrality);
      p.aggregation = aggregation_from_string(aggregation);
      a.plan = p;
    }
    return a;
  }
};

struct TrainOptions {
  std::string optimizer = "adam";
  double lr = 1e-2;
  double lr_decay = 1.0;
  int epochs = 100;
  int batch_size = 16;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void add(CLI::App& app) {
    app.add_option("--optimizer", optimizer)->check(CLI::IsMember({"sgd", "adam"}))->capture_default_str();
    app.add_option("--lr", lr, "learning rate")->capture_default_str();
    app.add_option("--lr-decay", lr_decay, "per-epoch learning rate factor")->capture_default_str();
    app.add_option("--epochs", epochs)->capture_default_str();
    app.add_option("--batch-size", batch_size)->capture_default_str();
    app.add_option("--train-seed", seed, "seed for shuffling")->capture_default_str();
    app.add_option("--beta1", beta1)->capture_default_str();
    app.add_option("--beta2", beta2)->capture_default_str();
    app.add_option("--adam-eps", adam_eps)->capture_default_str();
  }

  TrainConfig config(TaskKind kind) const {
    TrainConfig c;
    c.loss = kind == TaskKind::source_localization ? LossKind::cross_entropy : LossKind::mse;
    c.optimizer = optimizer_from_string(optimizer);
    c.learning_rate = lr;
    c.lr_decay = lr_decay;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.seed = seed;
    c.beta1 = beta1;
    c.beta2 = beta2;
    c.adam_epsilon = adam_eps;
    c.validate();
    return c;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
  if (!out) throw NumericalError("write failed: " + path);
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path);
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::span<const Sample> split_of(const Dataset& d, const std::string& name) {
  if (name == "train") return d.train;
  if (name == "validation") return d.validation;
  return d.test;
}

// CLI11 only reads config files attached to the root app, so a subcommand's
// --config file is expanded into flags here. Flags already on the command
// line win; section headers in the file are ignored.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (path.empty()) return args;
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::FileError&) {
    throw ValidationError("cannot read config file " + path);
  }
  auto given = [&](const std::string& flag) {
    for (const auto& a : kept)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--" || item.inputs.empty()) continue;
    const std::string flag = "--" + item.name;
    if (given(flag)) continue;
    if (item.inputs.size() == 1) {
      kept.push_back(flag + "=" + item.inputs.front());
    } else {
      kept.push_back(flag);
      kept.insert(kept.end(), item.inputs.begin(), item.inputs.end());
    }
  }
  return kept;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multigraph signal processing and multigraph neural networks"};
  app.require_subcommand(1);

  // generate ---------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "write a multigraph and, with --task, a dataset");
  gen->add_option("--config", "key = value file with any of the flags below");
  GraphOptions gen_graph;
  TaskOptions gen_task;
  std::string gen_graph_out, gen_dataset_out;
  gen_graph.add(*gen);
  gen_task.add(*gen);
  gen->add_option("--graph-out", gen_graph_out, "multigraph JSON path");
  gen->add_option("--dataset-out", gen_dataset_out, "dataset JSON path");

  // train ------------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "train a model on a dataset file");
  tr->add_option("--config", "key = value file with any of the flags below");
  std::string tr_dataset, tr_checkpoint, tr_history, tr_model = "mgnn";
  std::uint64_t tr_model_seed = 1;
  ArchOptions tr_arch;
  TrainOptions tr_train;
  tr->add_option("--dataset", tr_dataset, "dataset JSON from generate")->required();
  tr->add_option("--checkpoint", tr_checkpoint, "output checkpoint path")->required();
  tr->add_option("--history", tr_history, "per-epoch loss CSV");
  tr->add_option("--model", tr_model, "mgnn or the single_graph baseline")
      ->check(CLI::IsMember({"mgnn", "single_graph"}))
      ->capture_default_str();
  tr->add_option("--model-seed", tr_model_seed, "initialization seed")->capture_default_str();
  tr_arch.add(*tr);
  tr_train.add(*tr);

  // eval -------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  ev->add_option("--config", "key = value file with any of the flags below");
  std::string ev_dataset, ev_checkpoint, ev_split = "test";
  ev->add_option("--dataset", ev_dataset)->required();
  ev->add_option("--checkpoint", ev_checkpoint)->required();
  ev->add_option("--split", ev_split)->check(CLI::IsMember({"train", "validation", "test"}))->capture_default_str();

  // sweep ------------------------------------------------------------------
  auto* sw = app.add_subcommand("sweep", "power allocation sweep over budget or noise");
  sw->add_option("--config", "key = value file with any of the flags below");
  GraphOptions sw_graph;
  sw_graph.nodes = 12;
  TaskOptions sw_task;
  ArchOptions sw_arch;
  TrainOptions sw_train;
  sw_train.epochs = 30;
  std::string sw_param = "budget_mw", sw_out, sw_manifest_out, sw_replay;
  std::vector<double> sw_grid{10, 32.5, 55, 77.5, 100};
  std::vector<std::string> sw_baselines{"uniform"};
  int sw_reps = 3;
  std::uint64_t sw_master_seed = 1;
  bool sw_wall = false, sw_quiet = false;
  sw_graph.add(*sw);
  sw_task.add(*sw, false);
  sw_arch.add(*sw);
  sw_train.add(*sw);
  sw->add_option("--param", sw_param, "swept parameter")->check(CLI::IsMember({"budget_mw", "noise_mw"}))->capture_default_str();
  sw->add_option("--grid", sw_grid, "strictly monotone values")->capture_default_str();
  sw->add_option("--reps", sw_reps, "repetitions per grid point")->capture_default_str();
  sw->add_option("--baselines", sw_baselines, "uniform, single_graph, per_graph")->capture_default_str();
  sw->add_option("--master-seed", sw_master_seed)->capture_default_str();
  sw->add_flag("--wall-time", sw_wall, "record wall_ms (otherwise 0, keeping replays byte-identical)");
  sw->add_option("--out", sw_out, "results CSV")->required();
  sw->add_option("--manifest-out", sw_manifest_out, "replay manifest JSON");
  sw->add_option("--replay", sw_replay, "rerun a manifest; other sweep flags are ignored");
  sw->add_flag("--quiet", sw_quiet, "no per-row progress");

  // check ------------------------------------------------------------------
  auto* ck = app.add_subcommand("check", "run the property suites");
  std::uint64_t ck_seed = 20240601;
  ck->add_option("--seed", ck_seed)->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (gen->parsed()) {
      if (gen_graph_out.empty() && gen_dataset_out.empty())
        throw ValidationError("generate: give --graph-out and/or --dataset-out");
      const GraphSpec graph = gen_graph.spec();
      if (!gen_graph_out.empty()) {
        save_multigraph(generate_multigraph(graph), gen_graph_out);
        std::cout << "wrote " << gen_graph_out << '\n';
      }
      if (!gen_dataset_out.empty()) {
        const Dataset d = make_dataset(gen_task.spec(graph));
        save_dataset(d, gen_dataset_out);
        std::cout << "wrote " << gen_dataset_out << " (" << d.train.size() << '/' << d.validation.size() << '/'
                  << d.test.size() << " samples)\n";
      }
    } else if (tr->parsed()) {
      const Dataset d = load_dataset(tr_dataset);
      const ArchitectureConfig arch = fit_architecture(tr_arch.config(d.kind), d);
      const TrainConfig config = tr_train.config(d.kind);
      MgnnModel initial = tr_model == "mgnn" ? make_model(d.graph, arch, tr_model_seed)
                                             : single_graph_model(d, arch, tr_model_seed);
      const auto start = std::chrono::steady_clock::now();
      auto out = train(std::move(initial), d.train, d.validation, config, task_loss(d));
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      save_checkpoint(out.model, tr_checkpoint,
                      {{"model", tr_model},
                       {"model_seed", tr_model_seed},
                       {"task", d.spec},
                       {"architecture", to_json(arch)},
                       {"training", to_json(config)},
                       {"best_epoch", out.best_epoch}});
      if (!tr_history.empty()) {
        std::string csv = "epoch,train_loss,validation_loss\n";
        for (std::size_t k = 0; k < out.history.size(); ++k)
          csv += std::to_string(k + 1) + ',' + std::to_string(out.history[k].train_loss) + ',' +
                 std::to_string(out.history[k].validation_loss) + '\n';
        write_text(tr_history, csv);
      }
      std::cout << "parameters " << out.model.parameter_count() << "\nbasis_words " << out.model.basis_word_count()
                << "\nbest_epoch " << out.best_epoch << "\ntrain_seconds " << seconds << '\n'
                << task_metric_name(d.kind) << ' ' << task_metric(out.model, d, d.test) << '\n'
                << "wrote " << tr_checkpoint << '\n';
    } else if (ev->parsed()) {
      const Dataset d = load_dataset(ev_dataset);
      const MgnnModel model = load_checkpoint(ev_checkpoint);
      const auto split = split_of(d, ev_split);
      std::cout << "loss " << evaluate_loss(model, split, task_loss(d)) << '\n'
                << task_metric_name(d.kind) << ' ' << task_metric(model, d, split) << '\n';
      if (d.kind == TaskKind::power_allocation) {
        std::cout << "uniform_" << task_metric_name(d.kind) << ' '
                  << uniform_sum_rate(split, static_cast<int>(d.train.front().y.cols() / d.graph.num_nodes()),
                                      d.spec.at("budget_mw").get<double>(), d.spec.at("noise_mw").get<double>())
                  << '\n';
      }
    } else if (sw->parsed()) {
      SweepConfig config;
      if (!sw_replay.empty()) {
        config = sweep_config_from_manifest(read_json(sw_replay));
      } else {
        sw_task.kind = "power_allocation";
        config.task = sw_task.spec(sw_graph.spec());
        config.sweep.parameter = sw_param;
        config.sweep.grid = sw_grid;
        config.sweep.repetitions = sw_reps;
        config.sweep.baselines.clear();
        for (const auto& b : sw_baselines) config.sweep.baselines.push_back(baseline_from_string(b));
        config.architecture = sw_arch.config(TaskKind::power_allocation);
        config.training = sw_train.config(TaskKind::power_allocation);
        config.master_seed = sw_master_seed;
        config.record_wall_time = sw_wall;
      }
      const SweepResult result = run_sweep(config, sw_quiet ? nullptr : &std::cerr);
      write_text(sw_out, format_csv(result.rows));
      if (!sw_manifest_out.empty()) write_text(sw_manifest_out, result.manifest.dump(2) + '\n');
      int failed = 0;
      for (const auto& r : result.rows) failed += !r.error.empty();
      std::cout << "wrote " << sw_out << " (" << result.rows.size() << " rows, " << failed << " failed)\n";
    } else if (ck->parsed()) {
      const double eps[] = {0.01, 0.05, 0.1};
      std::vector<SuiteResult> results{
          basis_structure_suite(),
          pruning_bound_suite(eps, 500, 20, 3, ck_seed + 1),
          equivariance_suite(500, ck_seed + 2),
          filter_oracle_suite(100, ck_seed + 3),
          filter_adjoint_suite(100, ck_seed + 4),
          gradient_suite(1e-5, ck_seed + 5),
          sampling_suite(50, ck_seed + 6),
      };
      bool ok = true;
      for (const auto& r : results) {
        std::cout << format_result(r) << '\n';
        ok = ok && r.passed;
      }
      return ok ? 0 : kExitCheckFailed;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
