#include "moebius/softmax_policy.hpp"

#include "moebius/errors.hpp"
#include "moebius/grpo.hpp"
#include "moebius/reinforce.hpp"
#include "moebius/softmax.hpp"

namespace moebius {

namespace {

void check_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string(what) + " is not finite");
}

void check_params(const PolicyParams& params, const std::string& kind, Eigen::Index size) {
  if (params.kind != kind) throw DomainError("expected " + kind + " parameters, got '" + params.kind + "'");
  if (params.values.size() != size) throw DomainError(kind + ": parameter length mismatch");
}

}  // namespace

// --- defaults shared by every backend ---------------------------------------

ReinforceStats CoachPolicy::apply_reinforce(const CoachBatch& batch, const ReinforceOptions& options) {
  return reinforce_update(*this, batch, options);
}

GrpoStats PlayerPolicy::apply_grpo(const GrpoBatch& batch, const GrpoOptions& options) {
  return grpo_update(*this, batch, options);
}

// --- SoftmaxCoach -----------------------------------------------------------

SoftmaxCoach::SoftmaxCoach(DomainSpec spec) : SoftmaxCoach(spec, Vector::Zero(spec.levels)) {}

SoftmaxCoach::SoftmaxCoach(DomainSpec spec, Vector psi) : spec_(spec), psi_(std::move(psi)) {
  if (psi_.size() != spec_.levels) throw DomainError("coach logits must have one entry per level");
}

Vector SoftmaxCoach::probabilities() const { return softmax(psi_); }

TaskInstruction SoftmaxCoach::sample_task(const StreamKey& key) const {
  check_finite(psi_, "coach logits");
  Rng rng = key.at(0);
  const auto action = static_cast<int>(sample_index(probabilities(), rng.uniform()));
  TaskInstruction task = generate_task(action + 1, rng.next(), spec_);
  task.id = "t" + std::to_string(key.round) + "-c" + std::to_string(key.instruction);
  task.round = key.round;
  task.coach_trace = action;
  return task;
}

double SoftmaxCoach::logprob(const TaskInstruction& task) const {
  if (task.difficulty < 1 || task.difficulty > spec_.levels || task.coach_trace != task.difficulty - 1) {
    throw DomainError("coach: task '" + task.id + "' has an invalid difficulty trace");
  }
  return log_softmax(psi_)(task.coach_trace);
}

Vector SoftmaxCoach::logprob_grad(const TaskInstruction& task) const {
  logprob(task);
  Vector grad = -probabilities();
  grad(task.coach_trace) += 1.0;
  return grad;
}

double SoftmaxCoach::entropy() const { return entropy_from_log(log_softmax(psi_)); }

Vector SoftmaxCoach::entropy_grad() const {
  const Vector log_p = log_softmax(psi_);
  const Vector p = log_p.array().exp();
  const double h = entropy_from_log(log_p);
  // dH/dpsi_k = -p_k (log p_k + H)
  return -(p.array() * (log_p.array() + h)).matrix();
}

void SoftmaxCoach::apply_step(const Vector& gradient, double lr) {
  if (gradient.size() != psi_.size()) throw DomainError("coach: gradient length mismatch");
  check_finite(gradient, "coach gradient");
  psi_ += lr * gradient;
  ++steps_;
}

PolicyParams SoftmaxCoach::snapshot() const {
  return {"softmax_coach", {static_cast<std::int64_t>(psi_.size())}, psi_, steps_};
}

void SoftmaxCoach::restore(const PolicyParams& params) {
  check_params(params, "softmax_coach", psi_.size());
  psi_ = params.values;
  steps_ = params.step_count;
}

// --- SoftmaxPlayer ----------------------------------------------------------

SoftmaxPlayer::SoftmaxPlayer(DomainSpec spec, double temperature, Vector theta)
    : spec_(spec), temperature_(temperature), theta_(std::move(theta)) {
  if (!(temperature_ > 0.0)) throw DomainError("player temperature must be positive");
  if (theta_.size() != spec_.feature_count()) throw DomainError("player weights must have F entries");
}

SoftmaxPlayer SoftmaxPlayer::initial(const DomainSpec& spec, double temperature, double truth_weight) {
  Vector theta = Vector::Zero(spec.feature_count());
  theta(kTruthFeature) = truth_weight;
  return SoftmaxPlayer(spec, temperature, theta);
}

SoftmaxPlayer::Evaluated SoftmaxPlayer::evaluate(const TaskInstruction& task, const Vector& theta) const {
  Evaluated e;
  e.phi = feature_matrix(task_facts(task, spec_), spec_);
  const Vector logits = e.phi * theta / temperature_;
  check_finite(logits, "player logits");
  e.log_p = log_softmax(logits);
  return e;
}

std::vector<int> SoftmaxPlayer::indices(std::span<const std::string> answers) const {
  std::vector<int> out;
  out.reserve(answers.size());
  for (const std::string& a : answers) {
    const int y = answer_index(a, spec_);
    if (y < 0) throw DomainError("answer '" + a + "' is outside the player's support");
    out.push_back(y);
  }
  return out;
}

Vector SoftmaxPlayer::reference_theta(const PolicyParams& reference) const {
  if (reference.kind != "softmax_player" || reference.values.size() != theta_.size()) {
    throw DomainError("reference policy does not share the player's answer support");
  }
  return reference.values;
}

Vector SoftmaxPlayer::answer_logprobs(const TaskInstruction& task) const { return evaluate(task, theta_).log_p; }

std::vector<AnswerSample> SoftmaxPlayer::sample_answers(const TaskInstruction& task, int n,
                                                        const StreamKey& key) const {
  if (n < 1) throw DomainError("sample_answers: n must be >= 1");
  const Vector log_p = answer_logprobs(task);
  const Vector p = log_p.array().exp();
  std::vector<AnswerSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    Rng rng = key.at(j);
    const Eigen::Index y = sample_index(p, rng.uniform());
    out.push_back({std::to_string(y), log_p(y), j});
  }
  return out;
}

Vector SoftmaxPlayer::logprobs(const TaskInstruction& task, std::span<const std::string> answers) const {
  const std::vector<int> ys = indices(answers);
  const Vector log_p = answer_logprobs(task);
  Vector out(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t j = 0; j < ys.size(); ++j) out(static_cast<Eigen::Index>(j)) = log_p(ys[j]);
  return out;
}

Matrix SoftmaxPlayer::logprob_grads(const TaskInstruction& task, std::span<const std::string> answers) const {
  const std::vector<int> ys = indices(answers);
  const Evaluated e = evaluate(task, theta_);
  const Vector p = e.log_p.array().exp();
  const Vector mean_phi = e.phi.transpose() * p;
  Matrix grads(theta_.size(), static_cast<Eigen::Index>(ys.size()));
  for (std::size_t j = 0; j < ys.size(); ++j) {
    grads.col(static_cast<Eigen::Index>(j)) = (e.phi.row(ys[j]).transpose() - mean_phi) / temperature_;
  }
  return grads;
}

double SoftmaxPlayer::kl_to(const PolicyParams& reference, const TaskInstruction& task) const {
  const Evaluated e = evaluate(task, theta_);
  const Vector log_q = log_softmax((e.phi * reference_theta(reference) / temperature_).eval());
  return kl_from_log(e.log_p, log_q);
}

Vector SoftmaxPlayer::kl_grad(const PolicyParams& reference, const TaskInstruction& task) const {
  const Evaluated e = evaluate(task, theta_);
  const Vector log_q = log_softmax((e.phi * reference_theta(reference) / temperature_).eval());
  const Vector p = e.log_p.array().exp();
  const Vector mean_phi = e.phi.transpose() * p;
  // sum_y p(y) grad log p(y) (log p(y) - log q(y)); the +1 term has zero mean.
  const Vector weights = (p.array() * (e.log_p - log_q).array()).matrix();
  return (e.phi.transpose() * weights - mean_phi * weights.sum()) / temperature_;
}

double SoftmaxPlayer::entropy(const TaskInstruction& task) const { return entropy_from_log(answer_logprobs(task)); }

Vector SoftmaxPlayer::entropy_grad(const TaskInstruction& task) const {
  const Evaluated e = evaluate(task, theta_);
  const Vector p = e.log_p.array().exp();
  const Vector mean_phi = e.phi.transpose() * p;
  const Vector weights = (p.array() * e.log_p.array()).matrix();
  return -(e.phi.transpose() * weights - mean_phi * weights.sum()) / temperature_;
}

void SoftmaxPlayer::apply_step(const Vector& gradient, double lr) {
  if (gradient.size() != theta_.size()) throw DomainError("player: gradient length mismatch");
  check_finite(gradient, "player gradient");
  theta_ += lr * gradient;
  ++steps_;
}

PolicyParams SoftmaxPlayer::snapshot() const {
  return {"softmax_player", {static_cast<std::int64_t>(theta_.size())}, theta_, steps_};
}

void SoftmaxPlayer::restore(const PolicyParams& params) {
  check_params(params, "softmax_player", theta_.size());
  theta_ = params.values;
  steps_ = params.step_count;
}

}  // namespace moebius
