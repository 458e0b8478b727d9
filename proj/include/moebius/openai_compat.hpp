#pragma once

// Inference-only adapter for OpenAI-compatible chat-completions endpoints.

#include <chrono>
#include <string>
#include <vector>

#include "moebius/errors.hpp"
#include "moebius/policy.hpp"

namespace moebius {

// 401/403 from the endpoint.
class AuthError : public TransportError {
 public:
  using TransportError::TransportError;
};

struct ChatEndpoint {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string model;
  std::string bearer_token;  // defaults to $MOEBIUS_BEARER_TOKEN when empty
  std::chrono::milliseconds timeout{60000};
  int attempts = 3;
  std::chrono::milliseconds backoff{200};
};

struct DecodingParams {
  int n = 1;
  double temperature = 1.0;
  double top_p = 1.0;
  int max_tokens = 4096;
};

// POST {base_url}/chat/completions with a single user message; returns the n
// message contents. Transport failures, 5xx and 429 are retried with
// exponential backoff; auth failures are not.
std::vector<std::string> openai_compat_generate(const ChatEndpoint& endpoint, const std::string& prompt,
                                                const DecodingParams& decoding);

// Player that answers through a chat endpoint. Sampling and majority-vote
// analysis work; anything that needs log-probabilities or weight updates
// throws CapabilityError without contacting the endpoint.
class InferenceOnlyPlayer final : public PlayerPolicy {
 public:
  InferenceOnlyPlayer(ChatEndpoint endpoint, DecodingParams decoding, std::string answer_pattern = {});

  // Sampler log-probabilities are unavailable and reported as 0. The rng key
  // is not forwarded; remote sampling is not reproducible.
  std::vector<AnswerSample> sample_answers(const TaskInstruction& task, int n, const StreamKey& key) const override;
  Vector logprobs(const TaskInstruction& task, std::span<const std::string> answers) const override;
  Matrix logprob_grads(const TaskInstruction& task, std::span<const std::string> answers) const override;
  double kl_to(const PolicyParams& reference, const TaskInstruction& task) const override;
  Vector kl_grad(const PolicyParams& reference, const TaskInstruction& task) const override;
  double entropy(const TaskInstruction& task) const override;
  Vector entropy_grad(const TaskInstruction& task) const override;

  void apply_step(const Vector& gradient, double lr) override;
  // Identifies the endpoint; values are empty.
  PolicyParams snapshot() const override;
  void restore(const PolicyParams& params) override;
  bool exactly_evaluable() const override { return false; }
  GrpoStats apply_grpo(const GrpoBatch& batch, const GrpoOptions& options) override;

 private:
  ChatEndpoint endpoint_;
  DecodingParams decoding_;
  std::string answer_pattern_;
};

}  // namespace moebius
