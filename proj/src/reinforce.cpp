#include "moebius/reinforce.hpp"

#include <cmath>

#include "moebius/errors.hpp"

namespace moebius {

namespace {

void check_batch(const CoachBatch& batch) {
  if (batch.tasks.empty()) throw DomainError("reinforce: empty coach batch");
  if (batch.rewards.size() != static_cast<Eigen::Index>(batch.tasks.size())) {
    throw DomainError("reinforce: rewards and tasks differ in length");
  }
}

}  // namespace

Vector reinforce_gradient(const CoachPolicy& coach, const CoachBatch& batch, double entropy_coef,
                          double baseline) {
  check_batch(batch);
  Vector grad = Vector::Zero(coach.entropy_grad().size());
  for (std::size_t i = 0; i < batch.tasks.size(); ++i) {
    grad += (batch.rewards(static_cast<Eigen::Index>(i)) - baseline) * coach.logprob_grad(batch.tasks[i]);
  }
  grad /= static_cast<double>(batch.tasks.size());
  if (entropy_coef != 0.0) grad += entropy_coef * coach.entropy_grad();
  return grad;
}

double reinforce_surrogate(const CoachPolicy& coach, const CoachBatch& batch, double entropy_coef,
                           double baseline) {
  check_batch(batch);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.tasks.size(); ++i) {
    total += (batch.rewards(static_cast<Eigen::Index>(i)) - baseline) * coach.logprob(batch.tasks[i]);
  }
  return total / static_cast<double>(batch.tasks.size()) + entropy_coef * coach.entropy();
}

ReinforceStats reinforce_update(CoachPolicy& coach, const CoachBatch& batch, const ReinforceOptions& options) {
  ReinforceStats stats;
  stats.gradient = reinforce_gradient(coach, batch, options.entropy_coef, options.baseline);
  if (!stats.gradient.allFinite()) throw NumericError("reinforce: gradient is not finite");
  stats.objective = reinforce_surrogate(coach, batch, options.entropy_coef, options.baseline);
  stats.entropy = coach.entropy();
  coach.apply_step(stats.gradient, options.lr);
  return stats;
}

}  // namespace moebius
