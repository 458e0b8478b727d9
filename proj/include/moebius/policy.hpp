#pragma once

// Behaviour contracts for the two roles. Read-only members may run
// concurrently against one instance; apply_step/restore/apply_* need
// exclusive access, and the orchestrator never overlaps the two.

#include <span>
#include <string>
#include <vector>

#include "moebius/random.hpp"
#include "moebius/types.hpp"

namespace moebius {

struct GrpoBatch;
struct GrpoOptions;
struct GrpoStats;
struct CoachBatch;
struct ReinforceOptions;
struct ReinforceStats;

class CoachPolicy {
 public:
  virtual ~CoachPolicy() = default;

  // key.instruction is the candidate index within the round.
  virtual TaskInstruction sample_task(const StreamKey& key) const = 0;
  virtual double logprob(const TaskInstruction& task) const = 0;
  virtual Vector logprob_grad(const TaskInstruction& task) const = 0;
  virtual double entropy() const = 0;
  virtual Vector entropy_grad() const = 0;

  // params += lr * gradient (ascent).
  virtual void apply_step(const Vector& gradient, double lr) = 0;
  virtual PolicyParams snapshot() const = 0;
  virtual void restore(const PolicyParams& params) = 0;

  // One REINFORCE step. Local policies run reinforce_update on themselves;
  // remote ones ship the batch to the backend.
  virtual ReinforceStats apply_reinforce(const CoachBatch& batch, const ReinforceOptions& options);
};

class PlayerPolicy {
 public:
  virtual ~PlayerPolicy() = default;

  // Sample j (1-based) draws from key.at(j), so groups are independent of
  // evaluation order.
  virtual std::vector<AnswerSample> sample_answers(const TaskInstruction& task, int n,
                                                   const StreamKey& key) const = 0;
  virtual Vector logprobs(const TaskInstruction& task, std::span<const std::string> answers) const = 0;
  // F x answers.size()
  virtual Matrix logprob_grads(const TaskInstruction& task, std::span<const std::string> answers) const = 0;
  virtual double kl_to(const PolicyParams& reference, const TaskInstruction& task) const = 0;
  virtual Vector kl_grad(const PolicyParams& reference, const TaskInstruction& task) const = 0;
  virtual double entropy(const TaskInstruction& task) const = 0;
  virtual Vector entropy_grad(const TaskInstruction& task) const = 0;

  virtual void apply_step(const Vector& gradient, double lr) = 0;
  virtual PolicyParams snapshot() const = 0;
  virtual void restore(const PolicyParams& params) = 0;
  virtual bool exactly_evaluable() const = 0;

  virtual GrpoStats apply_grpo(const GrpoBatch& batch, const GrpoOptions& options);
};

}  // namespace moebius
