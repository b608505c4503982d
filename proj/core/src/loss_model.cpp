#include "prunelab/loss_model.hpp"

#include <cmath>
#include <limits>

namespace prunelab {

std::string to_string(CriterionKind k) {
  switch (k) {
    case CriterionKind::MP: return "mp";
    case CriterionKind::OBD: return "obd";
    case CriterionKind::LM: return "lm";
    case CriterionKind::QM: return "qm";
  }
  return "?";
}

CriterionKind criterion_from_string(const std::string& s) {
  if (s == "mp") return CriterionKind::MP;
  if (s == "obd") return CriterionKind::OBD;
  if (s == "lm") return CriterionKind::LM;
  if (s == "qm") return CriterionKind::QM;
  throw std::invalid_argument("unknown criterion: " + s);
}

Eigen::MatrixXd output_hessian_sqrt(const Eigen::VectorXd& p) {
  const Eigen::VectorXd sqrt_p = p.array().sqrt().matrix();
  Eigen::MatrixXd s = -(p * sqrt_p.transpose());
  s.diagonal() += sqrt_p;
  return s;
}

LossModelStats estimate_stats(const Network& net, const Mask& mask, const Batch& sample,
                              bool need_ggn) {
  if (sample.size() < 1) throw shape_error("estimate_stats: sample must be nonempty");
  LossModelStats stats;
  stats.sample_size = sample.size();
  stats.grad = gradient(net, mask, sample);
  if (!need_ggn) return stats;

  ForwardCache cache;
  const RowMatrix logits = forward_logits(net, mask, sample.inputs, &cache);
  const RowMatrix probs = softmax_rows(logits);
  const Eigen::VectorXd masked = effective_params(net, mask);
  const Eigen::Index n = sample.size();
  const Eigen::Index k = net.output_dim();

  Eigen::VectorXd ggn = Eigen::VectorXd::Zero(net.param_count());
  RowMatrix cot(n, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    // Row i is column a of S(p_i): sqrt(p_ia) * (e_a - p_i).
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sa = std::sqrt(probs(i, a));
      cot.row(i) = -sa * probs.row(i);
      cot(i, a) += sa;
    }
    backprop_accumulate(net, masked, cache, cot, /*squared=*/true, ggn);
  }
  ggn /= static_cast<double>(n);
  stats.ggn_diag = ggn.cwiseMax(0.0);  // PSD diagonal up to roundoff
  return stats;
}

Eigen::VectorXd saliencies(const Criterion& criterion, const Eigen::VectorXd& theta,
                           const Mask& mask, const LossModelStats& stats) {
  const Eigen::Index d = theta.size();
  if (mask.size() != d) throw shape_error("saliencies: mask length != theta length");
  if (criterion.needs_gradient() && stats.grad.size() != d)
    throw std::invalid_argument("criterion " + to_string(criterion.kind) +
                                " requires gradient estimates");
  if (criterion.needs_ggn() && stats.ggn_diag.size() != d)
    throw std::invalid_argument("criterion " + to_string(criterion.kind) +
                                " requires curvature estimates");

  Eigen::VectorXd s(d);
  const double lam = criterion.lambda;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double t = theta[i];
    double base = 0.0;
    switch (criterion.kind) {
      case CriterionKind::MP:
        base = t * t;
        break;
      case CriterionKind::OBD:
        base = 0.5 * stats.ggn_diag[i] * t * t;
        break;
      case CriterionKind::LM:
        base = std::abs(stats.grad[i] * t);
        break;
      case CriterionKind::QM:
        base = std::abs(-stats.grad[i] * t + 0.5 * stats.ggn_diag[i] * t * t);
        break;
    }
    s[i] = base + 0.5 * lam * t * t;
  }
  for (Eigen::Index i = 0; i < d; ++i)
    if (mask[i] == 0) s[i] = std::numeric_limits<double>::lowest();
  return s;
}

}  // namespace prunelab
