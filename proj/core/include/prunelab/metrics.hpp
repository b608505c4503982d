#pragma once

#include "prunelab/dataset.hpp"
#include "prunelab/network.hpp"

#include <optional>
#include <string>
#include <vector>

namespace prunelab {

/// Mean cross-entropy over a full dataset, evaluated in chunks.
double dataset_loss(const Network& net, const Mask& mask, const Dataset& ds,
                    double prob_floor = 1e-12);

/// Classification error in percent; argmax ties go to the lowest class index.
double error_rate(const Network& net, const Mask& mask, const Dataset& ds);

/// |L(theta (x) m_after) - L(theta (x) m_before)| over the dataset.
double delta_loss(const Network& net, const Mask& mask_before, const Mask& mask_after,
                  const Dataset& ds);

/// Mean over examples of KL(p_a || p_b) between the two networks' predictive
/// distributions; p_b is clamped below by the probability floor.
double empirical_kl(const Network& net_a, const Network& net_b, const Mask& mask_a,
                    const Mask& mask_b, const Dataset& ds, double prob_floor = 1e-12);

/// Spearman rank correlation with midrank tie handling. Empty when either
/// argument has zero rank variance.
std::optional<double> spearman(const std::vector<double>& xs, const std::vector<double>& ys);

/// Fractional (mid-)ranks, 1-based; ties receive the average of their ranks.
std::vector<double> midranks(const std::vector<double>& xs);

/// One sweep point's results. Divergence is recorded in-band via `diverged`.
struct ExperimentRecord {
  std::uint64_t seed = 0;
  std::string criterion;   // mp | obd | lm | qm | random
  double lambda = 0.0;
  int pi = 1;
  std::string schedule;    // linear | exponential
  double kappa = 0.0;
  double delta_loss = 0.0;
  double val_error_before_prune = 0.0;
  double val_error_after_prune = 0.0;
  double val_error_after_finetune = 0.0;
  double train_loss_after_finetune = 0.0;
  bool finetuned = false;
  bool diverged = false;

  std::string to_json_line() const;
  static ExperimentRecord from_json_line(const std::string& line);
};

void append_records_jsonl(const std::vector<ExperimentRecord>& records, const std::string& path);
std::vector<ExperimentRecord> read_records_jsonl(const std::string& path);

}  // namespace prunelab
