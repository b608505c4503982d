#include "prunelab/pruner.hpp"

#include "prunelab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace prunelab {

std::string to_string(Schedule s) {
  return s == Schedule::Linear ? "linear" : "exponential";
}

Schedule schedule_from_string(const std::string& s) {
  if (s == "linear") return Schedule::Linear;
  if (s == "exponential" || s == "exp") return Schedule::Exponential;
  throw std::invalid_argument("unknown schedule: " + s);
}

void PruneConfig::validate() const {
  if (kappa <= 0.0 || kappa >= 1.0) throw std::invalid_argument("kappa must be in (0, 1)");
  if (pi < 1) throw std::invalid_argument("pi must be >= 1");
  if (saliency_sample_size < 1)
    throw std::invalid_argument("saliency_sample_size must be >= 1");
  if (!(criterion.lambda >= 0.0) || !std::isfinite(criterion.lambda))
    throw std::invalid_argument("lambda must be finite and >= 0");
}

double PruneTrace::max_step_norm() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.step_norm);
  return m;
}

void PruneTrace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "iteration,kappa_i,step_norm,delta_loss\n";
  for (const auto& r : rows)
    out << r.iteration << "," << r.kappa_i << "," << r.step_norm << ","
        << r.delta_loss_cumulative << "\n";
}

double schedule_sparsity(Schedule mode, double kappa, int pi, int i) {
  if (i < 1 || i > pi) throw std::out_of_range("iteration " + std::to_string(i) +
                                               " out of range [1, " + std::to_string(pi) + "]");
  if (i == pi) return kappa;  // exact endpoint in both modes
  const double frac = static_cast<double>(i) / static_cast<double>(pi);
  if (mode == Schedule::Linear) return kappa * frac;
  return 1.0 - std::pow(1.0 - kappa, frac);
}

Mask prune_iteration(const Network& net, const Mask& mask, const PruneConfig& cfg, int iteration,
                     const LossModelStats& stats) {
  const double kappa_i = schedule_sparsity(cfg.schedule, cfg.kappa, cfg.pi, iteration);
  const std::ptrdiff_t d = net.param_count();
  const auto count = static_cast<std::ptrdiff_t>(std::floor(kappa_i * static_cast<double>(d) + 0.5));
  if (count < mask.pruned_count())
    throw std::logic_error("prune target " + std::to_string(count) +
                           " below already-pruned count " + std::to_string(mask.pruned_count()));

  const Eigen::VectorXd theta = effective_params(net, mask);
  const Eigen::VectorXd s = saliencies(cfg.criterion, theta, mask, stats);

  std::vector<std::ptrdiff_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::ptrdiff_t a, std::ptrdiff_t b) {
    if (s[a] != s[b]) return s[a] < s[b];
    return a < b;
  });

  Mask out = mask;
  for (std::ptrdiff_t r = 0; r < count; ++r) out.bits()[order[r]] = 0;
  return out;
}

std::pair<Mask, PruneTrace> run_pruning(const Network& net, const Dataset& train_ds,
                                        const PruneConfig& cfg) {
  cfg.validate();
  PruneTrace trace;
  Mask mask = Mask::ones(net.param_count());
  trace.base_loss = dataset_loss(net, mask, train_ds);

  Eigen::VectorXd theta_prev = effective_params(net, mask);
  const Eigen::Index sample_n = std::min<Eigen::Index>(cfg.saliency_sample_size, train_ds.size());

  for (int i = 1; i <= cfg.pi; ++i) {
    LossModelStats stats;
    if (cfg.criterion.needs_gradient() || cfg.criterion.needs_ggn()) {
      const Batch sample = sample_without_replacement(
          train_ds, sample_n, mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
      stats = estimate_stats(net, mask, sample, cfg.criterion.needs_ggn());
    }
    mask = prune_iteration(net, mask, cfg, i, stats);

    const Eigen::VectorXd theta_now = effective_params(net, mask);
    PruneTraceRow row;
    row.iteration = i;
    row.kappa_i = schedule_sparsity(cfg.schedule, cfg.kappa, cfg.pi, i);
    row.step_norm = (theta_now - theta_prev).norm();
    theta_prev = theta_now;

    if (cfg.trace_full_loss || i == cfg.pi) {
      row.train_loss_after = dataset_loss(net, mask, train_ds);
      row.delta_loss_cumulative = std::abs(row.train_loss_after - trace.base_loss);
    } else {
      row.train_loss_after = std::numeric_limits<double>::quiet_NaN();
      row.delta_loss_cumulative = std::numeric_limits<double>::quiet_NaN();
    }
    trace.rows.push_back(row);
  }

  trace.final_delta_loss = trace.rows.back().delta_loss_cumulative;
  trace.diverged = !std::isfinite(trace.final_delta_loss);
  return {std::move(mask), std::move(trace)};
}

Mask random_mask(std::ptrdiff_t d, double kappa, std::uint64_t seed) {
  const auto count = static_cast<std::ptrdiff_t>(std::floor(kappa * static_cast<double>(d) + 0.5));
  std::vector<std::ptrdiff_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  Mask m = Mask::ones(d);
  for (std::ptrdiff_t i = 0; i < count; ++i) m.bits()[order[i]] = 0;
  return m;
}

}  // namespace prunelab
