#pragma once

#include <vector>

#include "moebius/policy.hpp"
#include "moebius/types.hpp"

namespace moebius {

// tasks[i] pairs with groups[i]; old_logprobs is m x n, copied from the
// sampler log-probabilities and held fixed across inner epochs.
struct GrpoBatch {
  std::vector<TaskInstruction> tasks;
  std::vector<RolloutGroup> groups;
  Matrix old_logprobs;
  PolicyParams reference;
};

GrpoBatch make_grpo_batch(std::vector<TaskInstruction> tasks, std::vector<RolloutGroup> groups,
                          PolicyParams reference);

struct GrpoOptions {
  GrpoConfig cfg;
  double lr = 0.05;
  double entropy_coef = 0.0;
  int workers = 1;
};

struct GrpoEvaluation {
  double objective = 0.0;
  double surrogate = 0.0;
  double kl = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double max_ratio_deviation = 0.0;  // max |ratio - 1| over the batch
  Vector gradient;
};

// One entry per inner epoch, each evaluated before that epoch's step.
struct GrpoStats {
  std::vector<GrpoEvaluation> epochs;
};

// (r - mean) / (population std + std_eps), or all zeros when the std is
// exactly zero. Requires at least two rewards.
Vector normalize_advantages(const Vector& rewards, double std_eps);

// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A); ratio must be positive.
double clipped_surrogate(double ratio, double advantage, double clip_eps);

// Mean clipped surrogate over all (i, j), minus kl_coef times the mean exact
// KL to the reference, plus entropy_coef times the mean entropy; gradient is
// analytic. Clipped terms contribute no gradient.
GrpoEvaluation grpo_objective(const PlayerPolicy& player, const GrpoBatch& batch, const GrpoConfig& cfg,
                              double entropy_coef, int workers = 1);

// cfg.inner_epochs ascent steps of lr * gradient. Throws NumericError if a
// gradient is not finite (the player is left at the last good step).
GrpoStats grpo_update(PlayerPolicy& player, const GrpoBatch& batch, const GrpoOptions& options);

}  // namespace moebius
