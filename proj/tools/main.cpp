// prunelab command line: train / prune / finetune / sweep / report.
//
// Data comes from an MNIST-style IDX directory (--data-dir or the
// PRUNELAB_DATA environment variable); without one, a deterministic synthetic
// Gaussian-mixture image set stands in so every subcommand works offline.

#include <CLI11.hpp>

#include "prunelab/checkpoint.hpp"
#include "prunelab/experiment.hpp"
#include "prunelab/metrics.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace prunelab;

struct DataOptions {
  std::string data_dir;  // empty -> synthetic fallback
  bool fast = false;
};

struct ResolvedData {
  Dataset train;
  Dataset val;
  Dataset test;
  std::vector<int> input_hidden_output;  // full layer widths
  bool synthetic = false;
};

std::string env_data_dir() {
  const char* env = std::getenv("PRUNELAB_DATA");
  return env ? std::string(env) : std::string();
}

// Synthetic stand-in: 10 well-separated Gaussian classes rendered as 12x12
// "images". Sized so the full pipeline runs in minutes on one core.
ResolvedData synthetic_data(bool fast) {
  ResolvedData data;
  data.synthetic = true;
  const Eigen::Index d = 144;
  Dataset all = synthetic_gaussian_mixture(fast ? 6000 : 12000, d, 10, 7, 4.5);
  all.name = "synthetic";
  auto [train, val] = split(all, SplitSpec{fast ? 1000 : 2000, 11});
  data.train = std::move(train);
  data.val = std::move(val);
  data.test = synthetic_gaussian_mixture(2000, d, 10, 8, 4.5);
  data.test.name = "synthetic-test";
  data.input_hidden_output = {static_cast<int>(d), 300, 100, 10};
  return data;
}

ResolvedData load_data(const DataOptions& opts) {
  std::string dir = opts.data_dir.empty() ? env_data_dir() : opts.data_dir;
  if (dir.empty()) return synthetic_data(opts.fast);

  namespace fs = std::filesystem;
  auto pick = [&](const char* a, const char* b) {
    if (fs::exists(fs::path(dir) / a)) return (fs::path(dir) / a).string();
    return (fs::path(dir) / b).string();
  };
  ResolvedData data;
  Dataset full = load_mnist_idx(pick("train-images-idx3-ubyte", "train-images.idx3-ubyte"),
                                pick("train-labels-idx1-ubyte", "train-labels.idx1-ubyte"));
  full.name = "mnist-train";
  auto [train, val] = split(full, SplitSpec{10000, 11});
  data.train = std::move(train);
  data.val = std::move(val);
  data.test = load_mnist_idx(pick("t10k-images-idx3-ubyte", "t10k-images.idx3-ubyte"),
                             pick("t10k-labels-idx1-ubyte", "t10k-labels.idx1-ubyte"));
  data.test.name = "mnist-test";
  data.input_hidden_output = {static_cast<int>(data.train.dim()), 300, 100,
                              data.train.num_classes};
  return data;
}

Network fresh_network(const ResolvedData& data, std::uint64_t seed) {
  const auto& dims = data.input_hidden_output;
  std::vector<int> layer_dims(dims.begin(), dims.end());
  std::vector<Activation> acts(layer_dims.size() - 1, Activation::Tanh);
  acts.back() = Activation::Identity;
  return Network::glorot_init(layer_dims, acts, seed);
}

TrainConfig default_train_config(bool fast, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.epochs = fast ? 50 : 400;
  cfg.lr = fast ? 0.03 : 0.01;
  cfg.seed = seed;
  return cfg;
}

SweepSpec load_spec(const std::string& config_path) {
  if (config_path.empty()) return SweepSpec{};
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config: " + config_path);
  std::stringstream buf;
  buf << in.rdbuf();
  return SweepSpec::from_json(buf.str());
}

void report_errors(const Network& net, const Mask& mask, const ResolvedData& data) {
  std::cout << "train error: " << error_rate(net, mask, data.train) << "%\n"
            << "val error:   " << error_rate(net, mask, data.val) << "%\n"
            << "test error:  " << error_rate(net, mask, data.test) << "%\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prunelab: loss-model-guided unstructured pruning"};
  app.require_subcommand(1);

  DataOptions data_opts;
  std::string config_path, out_path = "out";
  std::string criterion = "qm", schedule = "exponential";
  std::string checkpoint_in;
  double lambda = 0.0, kappa = 0.9885;
  int pi = 1, workers = 1, epochs = -1;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--data-dir", data_opts.data_dir,
                    "IDX data directory (default: $PRUNELAB_DATA, else synthetic)");
    cmd->add_option("--out", out_path, "output directory");
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_flag("--fast", data_opts.fast, "reduced-budget profile");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train a dense base network");
  add_common(train_cmd);
  train_cmd->add_option("--epochs", epochs, "override epoch count");

  CLI::App* prune_cmd = app.add_subcommand("prune", "prune a trained checkpoint");
  add_common(prune_cmd);
  prune_cmd->add_option("--checkpoint", checkpoint_in, "trained network")->required();
  prune_cmd->add_option("--criterion", criterion, "mp | obd | lm | qm")
      ->check(CLI::IsMember({"mp", "obd", "lm", "qm"}));
  prune_cmd->add_option("--lambda", lambda, "step-size penalty weight");
  prune_cmd->add_option("--pi", pi, "pruning iterations");
  prune_cmd->add_option("--schedule", schedule, "linear | exp")
      ->check(CLI::IsMember({"linear", "exp", "exponential"}));
  prune_cmd->add_option("--kappa", kappa, "target sparsity in [0, 1)");

  CLI::App* finetune_cmd = app.add_subcommand("finetune", "retrain a pruned checkpoint");
  add_common(finetune_cmd);
  finetune_cmd->add_option("--checkpoint", checkpoint_in, "pruned network")->required();
  finetune_cmd->add_option("--epochs", epochs, "override epoch count");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a criterion/lambda/seed grid");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--config", config_path, "sweep spec JSON");
  sweep_cmd->add_option("--workers", workers, "worker threads");

  std::string records_path, view = "fig1";
  CLI::App* report_cmd = app.add_subcommand("report", "render JSONL records to CSV");
  report_cmd->add_option("--records", records_path, "records.jsonl path")->required();
  report_cmd->add_option("--view", view, "fig1 | fig3");
  report_cmd->add_option("--out", out_path, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (report_cmd->parsed()) {
      emit_csv(read_records_jsonl(records_path), view, out_path);
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }

    const ResolvedData data = load_data(data_opts);
    std::filesystem::create_directories(out_path);
    if (data.synthetic)
      std::cout << "no data directory given: using the synthetic stand-in set\n";

    if (train_cmd->parsed()) {
      TrainConfig cfg = default_train_config(data_opts.fast, seed);
      if (epochs >= 0) cfg.epochs = epochs;
      cfg.validate();
      Network net = fresh_network(data, seed);
      const Mask full = Mask::ones(net.param_count());
      auto [trained, history] = train(std::move(net), full, data.train, data.val, cfg);
      save_checkpoint(trained, nullptr, out_path + "/base.ckpt");
      history.write_csv(out_path + "/curves.csv");
      report_errors(trained, full, data);
      std::cout << "wrote " << out_path << "/base.ckpt\n";
      return 0;
    }

    if (prune_cmd->parsed()) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_in);
      PruneConfig cfg;
      cfg.criterion = {criterion_from_string(criterion), lambda};
      cfg.kappa = kappa;
      cfg.pi = pi;
      cfg.schedule = schedule_from_string(schedule);
      cfg.seed = seed;
      cfg.validate();
      auto [mask, trace] = run_pruning(ckpt.net, data.train, cfg);
      save_checkpoint(ckpt.net, &mask, out_path + "/pruned.ckpt");
      trace.write_csv(out_path + "/trace.csv");
      std::cout << "sparsity: " << mask.sparsity() << "\n"
                << "delta train loss: " << trace.final_delta_loss << "\n";
      report_errors(ckpt.net, mask, data);
      std::cout << "wrote " << out_path << "/pruned.ckpt\n";
      return 0;
    }

    if (finetune_cmd->parsed()) {
      const Checkpoint ckpt = load_checkpoint(checkpoint_in);
      if (!ckpt.mask) throw std::runtime_error("checkpoint has no mask; prune first");
      TrainConfig cfg = default_train_config(data_opts.fast, seed);
      if (epochs >= 0) cfg.epochs = epochs;
      cfg.validate();
      auto [tuned, history] = train(ckpt.net, *ckpt.mask, data.train, data.val, cfg);
      save_checkpoint(tuned, &*ckpt.mask, out_path + "/finetuned.ckpt");
      history.write_csv(out_path + "/curves.csv");
      report_errors(tuned, *ckpt.mask, data);
      std::cout << "wrote " << out_path << "/finetuned.ckpt\n";
      return 0;
    }

    // sweep
    SweepSpec spec = load_spec(config_path);
    if (config_path.empty()) {
      spec.train = default_train_config(data_opts.fast, 0);
      spec.prune.trace_full_loss = false;
      std::vector<int> hidden(data.input_hidden_output.begin() + 1,
                              data.input_hidden_output.end() - 1);
      spec.hidden_dims = hidden;
      if (data_opts.fast) {
        spec.seeds = {0, 1};
        spec.finetune_override = spec.train;
        spec.finetune_override->epochs = 20;
      }
    }
    spec.train.validate();
    spec.prune.validate();
    ExperimentRunner runner(spec, data.train, data.val, out_path + "/cache");
    const auto records = runner.run_sweep(workers);
    const std::string records_out = out_path + "/records.jsonl";
    std::filesystem::remove(records_out);
    append_records_jsonl(records, records_out);
    emit_csv(records, "fig1", out_path + "/fig1.csv");
    emit_csv(records, "fig3", out_path + "/fig3.csv");
    std::cout << "wrote " << records.size() << " records to " << records_out << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
