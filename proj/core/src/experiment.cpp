#include "prunelab/experiment.hpp"

#include "prunelab/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

namespace prunelab {

namespace {

nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json j{{"epochs", c.epochs},         {"lr", c.lr},
                   {"momentum", c.momentum},     {"weight_decay", c.weight_decay},
                   {"batch_size", c.batch_size}, {"lr_drop_factor", c.lr_drop_factor},
                   {"seed", c.seed}};
  if (c.lr_drop_every) j["lr_drop_every"] = *c.lr_drop_every;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
  if (j.contains("lr")) c.lr = j["lr"].get<double>();
  if (j.contains("momentum")) c.momentum = j["momentum"].get<double>();
  if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<Eigen::Index>();
  if (j.contains("lr_drop_every")) c.lr_drop_every = j["lr_drop_every"].get<int>();
  if (j.contains("lr_drop_factor")) c.lr_drop_factor = j["lr_drop_factor"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  return c;
}

}  // namespace

std::string SweepSpec::to_json() const {
  nlohmann::json j;
  j["criteria"] = criteria;
  j["lambdas"] = lambdas;
  j["pis"] = pis;
  j["schedules"] = schedules;
  j["seeds"] = seeds;
  j["hidden_dims"] = hidden_dims;
  j["train"] = train_config_to_json(train);
  j["prune"] = {{"kappa", prune.kappa},
                {"saliency_sample_size", prune.saliency_sample_size},
                {"trace_full_loss", prune.trace_full_loss}};
  j["finetune"] = finetune;
  if (finetune_override) j["finetune_override"] = train_config_to_json(*finetune_override);
  return j.dump(2);
}

SweepSpec SweepSpec::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SweepSpec s;
  if (j.contains("criteria")) s.criteria = j["criteria"].get<std::vector<std::string>>();
  if (j.contains("lambdas")) s.lambdas = j["lambdas"].get<std::vector<double>>();
  if (j.contains("pis")) s.pis = j["pis"].get<std::vector<int>>();
  if (j.contains("schedules")) s.schedules = j["schedules"].get<std::vector<std::string>>();
  if (j.contains("seeds")) s.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("hidden_dims")) s.hidden_dims = j["hidden_dims"].get<std::vector<int>>();
  if (j.contains("train")) s.train = train_config_from_json(j["train"]);
  if (j.contains("prune")) {
    const auto& p = j["prune"];
    if (p.contains("kappa")) s.prune.kappa = p["kappa"].get<double>();
    if (p.contains("saliency_sample_size"))
      s.prune.saliency_sample_size = p["saliency_sample_size"].get<Eigen::Index>();
    if (p.contains("trace_full_loss")) s.prune.trace_full_loss = p["trace_full_loss"].get<bool>();
  }
  if (j.contains("finetune")) s.finetune = j["finetune"].get<bool>();
  if (j.contains("finetune_override"))
    s.finetune_override = train_config_from_json(j["finetune_override"]);
  return s;
}

std::vector<ExperimentPoint> enumerate_points(const SweepSpec& spec) {
  std::vector<ExperimentPoint> points;
  for (const auto& crit : spec.criteria)
    for (double lam : spec.lambdas)
      for (int pi : spec.pis)
        for (const auto& sched : spec.schedules)
          for (std::uint64_t seed : spec.seeds)
            points.push_back({crit, lam, pi, sched, seed});
  return points;
}

ExperimentRunner::ExperimentRunner(SweepSpec spec, Dataset train_ds, Dataset val_ds,
                                   std::string cache_dir)
    : spec_(std::move(spec)),
      train_ds_(std::move(train_ds)),
      val_ds_(std::move(val_ds)),
      cache_dir_(std::move(cache_dir)) {
  std::filesystem::create_directories(cache_dir_);
}

std::string ExperimentRunner::base_cache_path(std::uint64_t seed) const {
  std::ostringstream key;
  key << train_ds_.dim();
  for (int h : spec_.hidden_dims) key << "-" << h;
  key << "-" << train_ds_.num_classes << "|" << spec_.train.epochs << "," << spec_.train.lr << ","
      << spec_.train.momentum << "," << spec_.train.weight_decay << "," << spec_.train.batch_size
      << "," << (spec_.train.lr_drop_every ? *spec_.train.lr_drop_every : -1) << ","
      << spec_.train.lr_drop_factor << "|" << seed;
  const std::size_t h = std::hash<std::string>{}(key.str());
  std::ostringstream name;
  name << cache_dir_ << "/base_" << std::hex << h << ".ckpt";
  return name.str();
}

Network ExperimentRunner::base_network(std::uint64_t seed) const {
  const std::string path = base_cache_path(seed);
  if (std::filesystem::exists(path)) return load_checkpoint(path).net;

  std::vector<int> dims;
  dims.push_back(static_cast<int>(train_ds_.dim()));
  for (int h : spec_.hidden_dims) dims.push_back(h);
  dims.push_back(train_ds_.num_classes);
  std::vector<Activation> acts(dims.size() - 1, Activation::Tanh);
  acts.back() = Activation::Identity;

  Network net = Network::glorot_init(dims, acts, seed);
  const Mask full = Mask::ones(net.param_count());
  TrainConfig cfg = spec_.train;
  cfg.seed = seed;
  auto [trained, history] = train(std::move(net), full, train_ds_, val_ds_, cfg);
  const std::string tmp = path + ".tmp";
  save_checkpoint(trained, nullptr, tmp);
  std::filesystem::rename(tmp, path);
  return trained;
}

ExperimentRecord ExperimentRunner::run_experiment(const ExperimentPoint& point) const {
  ExperimentRecord rec;
  rec.seed = point.seed;
  rec.criterion = point.criterion;
  rec.lambda = point.lambda;
  rec.pi = point.pi;
  rec.schedule = point.schedule;
  rec.kappa = spec_.prune.kappa;

  const Network base = base_network(point.seed);
  const Mask full = Mask::ones(base.param_count());
  rec.val_error_before_prune = error_rate(base, full, val_ds_);

  Mask mask = full;
  if (spec_.prune.kappa <= 0.0) {
    rec.delta_loss = 0.0;  // no-op pruning
    rec.val_error_after_prune = rec.val_error_before_prune;
  } else if (point.criterion == "random") {
    mask = random_mask(base.param_count(), spec_.prune.kappa,
                       mix_seed(point.seed, 0x72616e64ULL));
    rec.delta_loss = delta_loss(base, full, mask, train_ds_);
    rec.val_error_after_prune = error_rate(base, mask, val_ds_);
  } else {
    PruneConfig pc = spec_.prune;
    pc.criterion = {criterion_from_string(point.criterion), point.lambda};
    pc.pi = point.pi;
    pc.schedule = schedule_from_string(point.schedule);
    pc.seed = point.seed;
    auto [pruned_mask, trace] = run_pruning(base, train_ds_, pc);
    mask = std::move(pruned_mask);
    rec.delta_loss = trace.final_delta_loss;
    rec.diverged = trace.diverged;
    rec.val_error_after_prune = error_rate(base, mask, val_ds_);
  }

  if (spec_.finetune && !rec.diverged && spec_.prune.kappa > 0.0) {
    TrainConfig ft = spec_.finetune_override ? *spec_.finetune_override : spec_.train;
    ft.seed = mix_seed(point.seed, 0x66696e65ULL);
    try {
      auto [ft_net, history] = train(base, mask, train_ds_, val_ds_, ft);
      rec.val_error_after_finetune = error_rate(ft_net, mask, val_ds_);
      rec.train_loss_after_finetune = dataset_loss(ft_net, mask, train_ds_);
      rec.finetuned = true;
    } catch (const divergence_error&) {
      rec.diverged = true;
    }
  } else if (spec_.prune.kappa <= 0.0) {
    rec.val_error_after_finetune = rec.val_error_before_prune;
    rec.finetuned = false;
  }
  return rec;
}

std::vector<ExperimentRecord> ExperimentRunner::run_sweep(int workers) const {
  const std::vector<ExperimentPoint> points = enumerate_points(spec_);
  // Train base networks up front so parallel points only read the cache.
  for (std::uint64_t seed : spec_.seeds) base_network(seed);

  std::vector<ExperimentRecord> records(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex fail_mutex;
  std::vector<std::string> failures;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      try {
        records[i] = run_experiment(points[i]);
      } catch (const std::exception& e) {
        ExperimentRecord rec;
        rec.seed = points[i].seed;
        rec.criterion = points[i].criterion;
        rec.lambda = points[i].lambda;
        rec.pi = points[i].pi;
        rec.schedule = points[i].schedule;
        rec.kappa = spec_.prune.kappa;
        rec.diverged = true;
        records[i] = rec;
        std::lock_guard<std::mutex> lock(fail_mutex);
        failures.push_back(e.what());
      }
    }
  };

  const int n_workers = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers - 1; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return records;
}

std::vector<SweepAggregate> aggregate(const std::vector<ExperimentRecord>& records) {
  std::vector<SweepAggregate> out;
  auto find = [&](const ExperimentRecord& r) -> SweepAggregate& {
    for (auto& a : out)
      if (a.criterion == r.criterion && a.lambda == r.lambda && a.pi == r.pi &&
          a.schedule == r.schedule)
        return a;
    out.push_back({r.criterion, r.lambda, r.pi, r.schedule, 0.0, 0.0, 0.0, 0});
    return out.back();
  };
  // two-pass mean/std per group
  for (const auto& r : records) {
    if (r.diverged) continue;
    SweepAggregate& a = find(r);
    a.mean_delta_loss += r.delta_loss;
    a.mean_gap_after_finetune += r.val_error_after_finetune - r.val_error_before_prune;
    a.n += 1;
  }
  for (auto& a : out) {
    if (a.n > 0) {
      a.mean_delta_loss /= a.n;
      a.mean_gap_after_finetune /= a.n;
    }
  }
  for (const auto& r : records) {
    if (r.diverged) continue;
    SweepAggregate& a = find(r);
    const double d = r.delta_loss - a.mean_delta_loss;
    a.std_delta_loss += d * d;
  }
  for (auto& a : out)
    a.std_delta_loss = a.n > 1 ? std::sqrt(a.std_delta_loss / (a.n - 1)) : 0.0;
  return out;
}

void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& view,
              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  if (view == "fig1") {
    out << "criterion,lambda,pi,schedule,mean_delta_loss,std_delta_loss,n\n";
    for (const auto& a : aggregate(records))
      out << a.criterion << "," << a.lambda << "," << a.pi << "," << a.schedule << ","
          << a.mean_delta_loss << "," << a.std_delta_loss << "," << a.n << "\n";
  } else if (view == "fig3") {
    out << "criterion,lambda,pi,schedule,seed,delta_loss,gap_after_finetune\n";
    std::vector<double> xs, ys;
    for (const auto& r : records) {
      if (r.diverged || !r.finetuned) continue;
      const double gap = r.val_error_after_finetune - r.val_error_before_prune;
      out << r.criterion << "," << r.lambda << "," << r.pi << "," << r.schedule << "," << r.seed
          << "," << r.delta_loss << "," << gap << "\n";
      xs.push_back(r.delta_loss);
      ys.push_back(gap);
    }
    if (xs.size() >= 2) {
      const auto rho = spearman(xs, ys);
      out << "rho,,,,,," << (rho ? std::to_string(*rho) : "nan") << "\n";
    }
  } else {
    throw std::invalid_argument("unknown CSV view: " + view);
  }
}

}  // namespace prunelab
