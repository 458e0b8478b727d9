#pragma once

#include <vector>

#include "moebius/policy.hpp"
#include "moebius/types.hpp"

namespace moebius {

// Accepted instructions with their coach rewards.
struct CoachBatch {
  std::vector<TaskInstruction> tasks;
  Vector rewards;
};

struct ReinforceOptions {
  double lr = 0.05;
  double entropy_coef = 0.0;
  double baseline = 0.0;  // subtracted from every reward
};

struct ReinforceStats {
  double objective = 0.0;  // (1/m) sum (R_i - b) log pi(x_i) + c * H
  double entropy = 0.0;
  Vector gradient;
};

// (1/m) sum (R_i - b) grad log pi(x_i) + entropy_coef * grad H.
Vector reinforce_gradient(const CoachPolicy& coach, const CoachBatch& batch, double entropy_coef,
                          double baseline);
double reinforce_surrogate(const CoachPolicy& coach, const CoachBatch& batch, double entropy_coef,
                           double baseline);

// One ascent step. Empty batches throw DomainError, non-finite gradients
// NumericError (before any parameter changes).
ReinforceStats reinforce_update(CoachPolicy& coach, const CoachBatch& batch, const ReinforceOptions& options);

// Exponential moving average of past batch-mean coach rewards; starts at 0.
class RewardBaseline {
 public:
  explicit RewardBaseline(double decay = 0.9, double value = 0.0) : decay_(decay), value_(value) {}
  double value() const { return value_; }
  void observe(const Vector& rewards) {
    if (rewards.size() > 0) value_ = decay_ * value_ + (1.0 - decay_) * rewards.mean();
  }

 private:
  double decay_;
  double value_;
};

}  // namespace moebius
