#include "moebius/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "moebius/errors.hpp"
#include "moebius/parallel.hpp"

namespace moebius {

GrpoBatch make_grpo_batch(std::vector<TaskInstruction> tasks, std::vector<RolloutGroup> groups,
                          PolicyParams reference) {
  if (tasks.size() != groups.size()) throw DomainError("grpo batch: tasks and groups differ in length");
  GrpoBatch batch;
  const Eigen::Index m = static_cast<Eigen::Index>(groups.size());
  const Eigen::Index n = groups.empty() ? 0 : static_cast<Eigen::Index>(groups.front().samples.size());
  batch.old_logprobs.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const RolloutGroup& g = groups[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(g.samples.size()) != n) throw DomainError("grpo batch: ragged rollout groups");
    for (Eigen::Index j = 0; j < n; ++j) {
      batch.old_logprobs(i, j) = g.samples[static_cast<std::size_t>(j)].sampler_logprob;
    }
  }
  batch.tasks = std::move(tasks);
  batch.groups = std::move(groups);
  batch.reference = std::move(reference);
  return batch;
}

Vector normalize_advantages(const Vector& rewards, double std_eps) {
  if (rewards.size() < 2) throw DomainError("normalize_advantages: need at least two rewards");
  const double mean = rewards.mean();
  const Vector centered = rewards.array() - mean;
  const double std = std::sqrt(centered.squaredNorm() / static_cast<double>(rewards.size()));
  if (std == 0.0) return Vector::Zero(rewards.size());
  return centered / (std + std_eps);
}

double clipped_surrogate(double ratio, double advantage, double clip_eps) {
  if (!(ratio > 0.0)) throw DomainError("clipped_surrogate: ratio must be positive");
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

namespace {

struct GroupTerms {
  double surrogate = 0.0;
  double kl = 0.0;
  double entropy = 0.0;
  int clipped = 0;
  double max_dev = 0.0;
  Vector surrogate_grad;
  Vector kl_grad;
  Vector entropy_grad;
};

}  // namespace

GrpoEvaluation grpo_objective(const PlayerPolicy& player, const GrpoBatch& batch, const GrpoConfig& cfg,
                              double entropy_coef, int workers) {
  const std::size_t m = batch.groups.size();
  if (m == 0 || batch.tasks.size() != m) throw DomainError("grpo_objective: empty or mismatched batch");
  const Eigen::Index n = batch.old_logprobs.cols();
  if (batch.old_logprobs.rows() != static_cast<Eigen::Index>(m)) {
    throw DomainError("grpo_objective: old_logprobs has the wrong number of rows");
  }
  if (!batch.old_logprobs.allFinite()) throw NumericError("grpo_objective: old log-probabilities not finite");

  std::vector<GroupTerms> terms(m);
  parallel_for(m, workers, [&](std::size_t i) {
    const RolloutGroup& group = batch.groups[i];
    const TaskInstruction& task = batch.tasks[i];
    if (static_cast<Eigen::Index>(group.samples.size()) != n || group.advantages.size() != n) {
      throw DomainError("grpo_objective: group " + group.instruction_id + " has the wrong size");
    }
    std::vector<std::string> answers;
    answers.reserve(group.samples.size());
    for (const AnswerSample& s : group.samples) answers.push_back(s.canonical_answer);

    const Vector logp = player.logprobs(task, answers);
    const Matrix grads = player.logprob_grads(task, answers);
    GroupTerms& t = terms[i];
    t.surrogate_grad = Vector::Zero(grads.rows());
    for (Eigen::Index j = 0; j < n; ++j) {
      const double ratio = std::exp(logp(j) - batch.old_logprobs(static_cast<Eigen::Index>(i), j));
      const double a = group.advantages(j);
      const double unclipped = ratio * a;
      const double value = clipped_surrogate(ratio, a, cfg.clip_eps);
      t.surrogate += value;
      t.max_dev = std::max(t.max_dev, std::abs(ratio - 1.0));
      if (value < unclipped) {
        ++t.clipped;
      } else {
        t.surrogate_grad += a * ratio * grads.col(j);
      }
    }
    t.kl = player.kl_to(batch.reference, task);
    t.kl_grad = player.kl_grad(batch.reference, task);
    t.entropy = player.entropy(task);
    t.entropy_grad = player.entropy_grad(task);
  });

  GrpoEvaluation out;
  const Eigen::Index dim = terms.front().surrogate_grad.size();
  Vector surrogate_grad = Vector::Zero(dim);
  Vector kl_grad = Vector::Zero(dim);
  Vector entropy_grad = Vector::Zero(dim);
  int clipped = 0;
  for (const GroupTerms& t : terms) {
    out.surrogate += t.surrogate;
    out.kl += t.kl;
    out.entropy += t.entropy;
    surrogate_grad += t.surrogate_grad;
    kl_grad += t.kl_grad;
    entropy_grad += t.entropy_grad;
    clipped += t.clipped;
    out.max_ratio_deviation = std::max(out.max_ratio_deviation, t.max_dev);
  }
  const double samples = static_cast<double>(m) * static_cast<double>(n);
  const double groups = static_cast<double>(m);
  out.surrogate /= samples;
  out.kl /= groups;
  out.entropy /= groups;
  out.clip_fraction = clipped / samples;
  out.objective = out.surrogate - cfg.kl_coef * out.kl + entropy_coef * out.entropy;
  out.gradient = surrogate_grad / samples - cfg.kl_coef * kl_grad / groups + entropy_coef * entropy_grad / groups;
  if (!std::isfinite(out.objective)) throw NumericError("grpo_objective: objective is not finite");
  return out;
}

GrpoStats grpo_update(PlayerPolicy& player, const GrpoBatch& batch, const GrpoOptions& options) {
  GrpoStats stats;
  for (int epoch = 0; epoch < options.cfg.inner_epochs; ++epoch) {
    GrpoEvaluation eval = grpo_objective(player, batch, options.cfg, options.entropy_coef, options.workers);
    if (!eval.gradient.allFinite()) throw NumericError("grpo_update: gradient is not finite");
    player.apply_step(eval.gradient, options.lr);
    stats.epochs.push_back(std::move(eval));
  }
  return stats;
}

}  // namespace moebius
