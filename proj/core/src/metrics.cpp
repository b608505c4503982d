#include "prunelab/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace prunelab {

namespace {

constexpr Eigen::Index kEvalChunk = 4096;

template <typename Fn>
void for_each_chunk(const Dataset& ds, Fn&& fn) {
  for (Eigen::Index from = 0; from < ds.size(); from += kEvalChunk) {
    const Eigen::Index count = std::min(kEvalChunk, ds.size() - from);
    RowMatrix chunk = ds.inputs.middleRows(from, count);
    fn(chunk, from, count);
  }
}

}  // namespace

double dataset_loss(const Network& net, const Mask& mask, const Dataset& ds, double prob_floor) {
  double total = 0.0;
  for_each_chunk(ds, [&](const RowMatrix& chunk, Eigen::Index from, Eigen::Index count) {
    Batch b;
    b.inputs = chunk;
    b.targets.assign(ds.labels.begin() + from, ds.labels.begin() + from + count);
    total += mean_loss(net, mask, b, prob_floor) * static_cast<double>(count);
  });
  return total / static_cast<double>(ds.size());
}

double error_rate(const Network& net, const Mask& mask, const Dataset& ds) {
  Eigen::Index wrong = 0;
  for_each_chunk(ds, [&](const RowMatrix& chunk, Eigen::Index from, Eigen::Index count) {
    const RowMatrix logits = forward_logits(net, mask, chunk);
    for (Eigen::Index i = 0; i < count; ++i) {
      Eigen::Index pred = 0;
      logits.row(i).maxCoeff(&pred);  // Eigen returns the first (lowest) max index
      wrong += (static_cast<int>(pred) != ds.labels[from + i]);
    }
  });
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(ds.size());
}

double delta_loss(const Network& net, const Mask& mask_before, const Mask& mask_after,
                  const Dataset& ds) {
  return std::abs(dataset_loss(net, mask_after, ds) - dataset_loss(net, mask_before, ds));
}

double empirical_kl(const Network& net_a, const Network& net_b, const Mask& mask_a,
                    const Mask& mask_b, const Dataset& ds, double prob_floor) {
  if (net_a.output_dim() != net_b.output_dim())
    throw shape_error("empirical_kl: output dimensions differ");
  double total = 0.0;
  for_each_chunk(ds, [&](const RowMatrix& chunk, Eigen::Index, Eigen::Index count) {
    const RowMatrix pa = softmax_rows(forward_logits(net_a, mask_a, chunk));
    const RowMatrix pb = softmax_rows(forward_logits(net_b, mask_b, chunk));
    for (Eigen::Index i = 0; i < count; ++i)
      for (Eigen::Index k = 0; k < pa.cols(); ++k)
        if (pa(i, k) > 0.0)
          total += pa(i, k) * std::log(pa(i, k) / std::max(pb(i, k), prob_floor));
  });
  return total / static_cast<double>(ds.size());
}

std::vector<double> midranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double mid = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("spearman: need two equally sized vectors, n >= 2");
  const std::vector<double> rx = midranks(xs);
  const std::vector<double> ry = midranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::string ExperimentRecord::to_json_line() const {
  nlohmann::json j{{"seed", seed},
                   {"criterion", criterion},
                   {"lambda", lambda},
                   {"pi", pi},
                   {"schedule", schedule},
                   {"kappa", kappa},
                   {"delta_loss", delta_loss},
                   {"val_error_before_prune", val_error_before_prune},
                   {"val_error_after_prune", val_error_after_prune},
                   {"val_error_after_finetune", val_error_after_finetune},
                   {"train_loss_after_finetune", train_loss_after_finetune},
                   {"finetuned", finetuned},
                   {"diverged", diverged}};
  return j.dump();
}

ExperimentRecord ExperimentRecord::from_json_line(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  ExperimentRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.criterion = j.at("criterion").get<std::string>();
  r.lambda = j.at("lambda").get<double>();
  r.pi = j.at("pi").get<int>();
  r.schedule = j.at("schedule").get<std::string>();
  r.kappa = j.at("kappa").get<double>();
  r.delta_loss = j.at("delta_loss").get<double>();
  r.val_error_before_prune = j.at("val_error_before_prune").get<double>();
  r.val_error_after_prune = j.at("val_error_after_prune").get<double>();
  r.val_error_after_finetune = j.at("val_error_after_finetune").get<double>();
  r.train_loss_after_finetune = j.at("train_loss_after_finetune").get<double>();
  r.finetuned = j.at("finetuned").get<bool>();
  r.diverged = j.at("diverged").get<bool>();
  return r;
}

void append_records_jsonl(const std::vector<ExperimentRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (const auto& r : records) out << r.to_json_line() << "\n";
}

std::vector<ExperimentRecord> read_records_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<ExperimentRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(ExperimentRecord::from_json_line(line));
  return out;
}

}  // namespace prunelab
