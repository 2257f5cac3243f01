#pragma once

#include <cstddef>
#include <vector>

#include "halp/sphere_geom.hpp"

namespace halp {

// Per-step training-signal record.
struct LossBreakdown {
  double l_cl = 0.0;
  double l_halp = 0.0;
  double total = 0.0;
  double mu = 0.0;
  double tau = 0.07;
  std::size_t num_filtered = 0;
};

// mu is 0 before warmup_steps and mu_after from then on.
struct MuSchedule {
  std::size_t warmup_steps = 0;
  double mu_after = 1.0;
};

// Loss value and its gradient with respect to the query embedding. The
// gradient interface deliberately exposes no other direction: keys,
// negatives and hallucinated positives receive no gradient.
struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad_z_q;
};

// InfoNCE: -log[ exp(q.k/tau) / (exp(q.k/tau) + sum_i exp(q.n_i/tau)) ],
// stabilized by max-logit subtraction. With zero negatives the loss is 0.
// z_q is taken as a raw vector so the gradient is the plain ambient one;
// the caller is expected to pass a unit embedding.
LossGrad info_nce(const Eigen::VectorXd& z_q, const UnitVector& z_k,
                  const Eigen::MatrixXd& negatives, double tau);
LossGrad info_nce(const Eigen::VectorXd& z_q, const UnitVector& z_k,
                  const std::vector<UnitVector>& negatives, double tau);

// Mean negative similarity to the filtered positives over tau; an empty
// positive set contributes zero loss and zero gradient.
LossGrad halp_loss(const Eigen::VectorXd& z_q,
                   const std::vector<UnitVector>& positives, double tau);

// total = l_cl + mu * l_halp with mu taken from the schedule at `step`.
LossBreakdown total_loss(double l_cl, double l_halp, std::size_t step,
                         const MuSchedule& schedule, double tau = 0.07,
                         std::size_t num_filtered = 0);

}  // namespace halp
