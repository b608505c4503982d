#pragma once

#include "prunelab/network.hpp"

#include <string>

namespace prunelab {

enum class CriterionKind { MP, OBD, LM, QM };

std::string to_string(CriterionKind k);
CriterionKind criterion_from_string(const std::string& s);

/// A saliency criterion plus the step-size penalty strength lambda: the term
/// (lambda/2) * theta_k^2 is added to every criterion's saliencies.
struct Criterion {
  CriterionKind kind = CriterionKind::MP;
  double lambda = 0.0;

  bool needs_gradient() const { return kind == CriterionKind::LM || kind == CriterionKind::QM; }
  bool needs_ggn() const { return kind == CriterionKind::OBD || kind == CriterionKind::QM; }
};

/// Local loss model estimated on a saliency sample: the mean gradient and the
/// diagonal of the Gauss-Newton curvature approximation.
struct LossModelStats {
  Eigen::VectorXd grad;      // dL/dtheta at theta (x) m; empty when not estimated
  Eigen::VectorXd ggn_diag;  // curvature diagonal; empty when not estimated
  Eigen::Index sample_size = 0;
};

/// Estimates the mean gradient over `sample` and, when `need_ggn` is set, the
/// exact Gauss-Newton diagonal: for each example and each output class, one
/// backward pass with cotangent = the corresponding column of the output
/// Hessian square root, squared and averaged coordinatewise (K backward
/// passes per example, batched over the sample).
LossModelStats estimate_stats(const Network& net, const Mask& mask, const Batch& sample,
                              bool need_ggn);

/// S = diag(sqrt(p)) - p * sqrt(p)^T, satisfying S S^T = diag(p) - p p^T,
/// the softmax cross-entropy Hessian with respect to the logits.
Eigen::MatrixXd output_hessian_sqrt(const Eigen::VectorXd& p);

/// Per-parameter saliencies. `theta` is the effective (masked) parameter
/// vector. Already-pruned coordinates receive the most-negative finite value
/// so they sort first and stay pruned; ties elsewhere are broken by index at
/// selection time.
Eigen::VectorXd saliencies(const Criterion& criterion, const Eigen::VectorXd& theta,
                           const Mask& mask, const LossModelStats& stats);

}  // namespace prunelab
