#pragma once

#include "moebius/domain.hpp"
#include "moebius/policy.hpp"

namespace moebius {

// Coach over difficulty levels: d ~ softmax(psi), instance seed uniform.
class SoftmaxCoach final : public CoachPolicy {
 public:
  explicit SoftmaxCoach(DomainSpec spec);
  SoftmaxCoach(DomainSpec spec, Vector psi);

  TaskInstruction sample_task(const StreamKey& key) const override;
  double logprob(const TaskInstruction& task) const override;
  Vector logprob_grad(const TaskInstruction& task) const override;
  double entropy() const override;
  Vector entropy_grad() const override;

  void apply_step(const Vector& gradient, double lr) override;
  PolicyParams snapshot() const override;
  void restore(const PolicyParams& params) override;

  const Vector& psi() const { return psi_; }
  Vector probabilities() const;
  const DomainSpec& domain() const { return spec_; }

 private:
  DomainSpec spec_;
  Vector psi_;
  std::int64_t steps_ = 0;
};

// Log-linear player: logits(y) = theta . features(task, y) / temperature.
class SoftmaxPlayer final : public PlayerPolicy {
 public:
  SoftmaxPlayer(DomainSpec spec, double temperature, Vector theta);
  // Default initialization: truth_weight on the truth feature, zeros elsewhere.
  static SoftmaxPlayer initial(const DomainSpec& spec, double temperature, double truth_weight);

  std::vector<AnswerSample> sample_answers(const TaskInstruction& task, int n,
                                           const StreamKey& key) const override;
  Vector logprobs(const TaskInstruction& task, std::span<const std::string> answers) const override;
  Matrix logprob_grads(const TaskInstruction& task, std::span<const std::string> answers) const override;
  double kl_to(const PolicyParams& reference, const TaskInstruction& task) const override;
  Vector kl_grad(const PolicyParams& reference, const TaskInstruction& task) const override;
  double entropy(const TaskInstruction& task) const override;
  Vector entropy_grad(const TaskInstruction& task) const override;

  void apply_step(const Vector& gradient, double lr) override;
  PolicyParams snapshot() const override;
  void restore(const PolicyParams& params) override;
  bool exactly_evaluable() const override { return true; }

  // Full answer distribution for a task (log space, length K).
  Vector answer_logprobs(const TaskInstruction& task) const;
  const Vector& theta() const { return theta_; }
  double temperature() const { return temperature_; }
  const DomainSpec& domain() const { return spec_; }

 private:
  struct Evaluated {
    Matrix phi;     // K x F
    Vector log_p;   // K
  };
  Evaluated evaluate(const TaskInstruction& task, const Vector& theta) const;
  std::vector<int> indices(std::span<const std::string> answers) const;
  Vector reference_theta(const PolicyParams& reference) const;

  DomainSpec spec_;
  double temperature_;
  Vector theta_;
  std::int64_t steps_ = 0;
};

}  // namespace moebius
