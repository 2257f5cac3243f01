#include "halp/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace halp {

namespace {
void check_tau(double tau) {
  if (tau <= 0.0) throw std::invalid_argument("tau must be > 0");
}
}  // namespace

LossGrad info_nce(const Eigen::VectorXd& z_q, const UnitVector& z_k,
                  const Eigen::MatrixXd& negatives, double tau) {
  check_tau(tau);
  if (z_q.size() != z_k.dim()) {
    throw DimMismatchError("query and key dims differ");
  }
  const Eigen::Index n = negatives.cols();
  if (n > 0 && negatives.rows() != z_q.size()) {
    throw DimMismatchError("negative dims do not match the query");
  }

  const double pos_logit = z_q.dot(z_k.coeffs()) / tau;
  Eigen::VectorXd neg_logits =
      n > 0 ? Eigen::VectorXd(negatives.transpose() * z_q / tau)
            : Eigen::VectorXd();

  double max_logit = pos_logit;
  for (Eigen::Index i = 0; i < n; ++i) max_logit = std::max(max_logit, neg_logits(i));

  const double pos_exp = std::exp(pos_logit - max_logit);
  Eigen::VectorXd neg_exp = (neg_logits.array() - max_logit).exp();
  const double z = pos_exp + neg_exp.sum();

  LossGrad out;
  out.loss = std::log(z) - (pos_logit - max_logit);
  // Softmax-weighted combination; the positive weight enters as (p_0 - 1).
  out.grad_z_q = ((pos_exp / z - 1.0) * z_k.coeffs());
  if (n > 0) out.grad_z_q += negatives * (neg_exp / z);
  out.grad_z_q /= tau;
  return out;
}

LossGrad info_nce(const Eigen::VectorXd& z_q, const UnitVector& z_k,
                  const std::vector<UnitVector>& negatives, double tau) {
  return info_nce(z_q, z_k, pack_columns(negatives), tau);
}

LossGrad halp_loss(const Eigen::VectorXd& z_q,
                   const std::vector<UnitVector>& positives, double tau) {
  check_tau(tau);
  LossGrad out;
  out.grad_z_q = Eigen::VectorXd::Zero(z_q.size());
  if (positives.empty()) return out;  // undefined mean; contributes nothing

  const double scale = 1.0 / (static_cast<double>(positives.size()) * tau);
  for (const UnitVector& p : positives) {
    if (p.dim() != z_q.size()) {
      throw DimMismatchError("positive dims do not match the query");
    }
    out.loss -= z_q.dot(p.coeffs()) * scale;
    out.grad_z_q -= p.coeffs() * scale;
  }
  return out;
}

LossBreakdown total_loss(double l_cl, double l_halp, std::size_t step,
                         const MuSchedule& schedule, double tau,
                         std::size_t num_filtered) {
  check_tau(tau);
  LossBreakdown bd;
  bd.l_cl = l_cl;
  bd.l_halp = l_halp;
  bd.mu = step < schedule.warmup_steps ? 0.0 : schedule.mu_after;
  bd.total = l_cl + bd.mu * l_halp;
  bd.tau = tau;
  bd.num_filtered = num_filtered;
  return bd;
}

}  // namespace halp
