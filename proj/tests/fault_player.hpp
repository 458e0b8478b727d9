#pragma once

#include "moebius/errors.hpp"
#include "moebius/grpo.hpp"
#include "moebius/softmax_policy.hpp"

namespace testing_support {

using namespace moebius;

// Delegates to a softmax player and fails GRPO on a chosen call, after it has
// already moved the weights.
class FlakyPlayer final : public PlayerPolicy {
 public:
  FlakyPlayer(SoftmaxPlayer inner, int fail_on_call) : inner_(std::move(inner)), fail_on_(fail_on_call) {}

  std::vector<AnswerSample> sample_answers(const TaskInstruction& t, int n, const StreamKey& k) const override {
    return inner_.sample_answers(t, n, k);
  }
  Vector logprobs(const TaskInstruction& t, std::span<const std::string> a) const override { return inner_.logprobs(t, a); }
  Matrix logprob_grads(const TaskInstruction& t, std::span<const std::string> a) const override {
    return inner_.logprob_grads(t, a);
  }
  double kl_to(const PolicyParams& r, const TaskInstruction& t) const override { return inner_.kl_to(r, t); }
  Vector kl_grad(const PolicyParams& r, const TaskInstruction& t) const override { return inner_.kl_grad(r, t); }
  double entropy(const TaskInstruction& t) const override { return inner_.entropy(t); }
  Vector entropy_grad(const TaskInstruction& t) const override { return inner_.entropy_grad(t); }
  void apply_step(const Vector& g, double lr) override { inner_.apply_step(g, lr); }
  PolicyParams snapshot() const override { return inner_.snapshot(); }
  void restore(const PolicyParams& p) override { inner_.restore(p); }
  bool exactly_evaluable() const override { return exact_; }
  GrpoStats apply_grpo(const GrpoBatch& batch, const GrpoOptions& options) override {
    GrpoStats stats = grpo_update(inner_, batch, options);
    if (++calls_ == fail_on_) throw NumericError("injected failure");
    return stats;
  }
  bool exact_ = true;

 private:
  SoftmaxPlayer inner_;
  int fail_on_;
  int calls_ = 0;
};

}  // namespace testing_support
