#include <thread>

#include "moebius/canonical.hpp"
#include "moebius/errors.hpp"
#include "moebius/grpo.hpp"
#include "moebius/reinforce.hpp"
#include "moebius/service.hpp"
#include "moebius/softmax.hpp"

// After Eigen: the system networking headers define macros that clash with it.
#include <httplib.h>

namespace moebius {

namespace {

// Server-side failure that is worth another attempt.
struct Retryable {
  std::string message;
};

[[noreturn]] void raise_remote(int status, const std::string& body) {
  wire::ErrorResponse error{"http_" + std::to_string(status), body};
  try {
    error = wire::decode_error_response(Json::parse(body));
  } catch (const std::exception&) {
  }
  const std::string message = "remote " + error.code + ": " + error.message;
  if (error.code == "bad_request") throw ConfigError("remote", error.message);
  if (error.code == "domain_error") throw DomainError(message);
  if (error.code == "numeric_error") throw NumericError(message);
  if (error.code == "unsupported") throw CapabilityError(message);
  throw TransportError(message);
}

void check_echo(const std::string& sent, const std::string& received) {
  if (sent != received) throw TransportError("response echoed idempotency key '" + received + "', sent '" + sent + "'");
}

}  // namespace

RemoteConnection::RemoteConnection(ClientOptions options) : options_(std::move(options)) {
  if (options_.attempts < 1) throw ConfigError("attempts", "must be >= 1");
}

std::string RemoteConnection::next_key(const std::string& what) {
  return options_.run_id + ":" + what + ":" + std::to_string(sequence_.fetch_add(1));
}

void RemoteConnection::note_round(std::int64_t round) {
  std::int64_t seen = round_.load();
  while (round > seen && !round_.compare_exchange_weak(seen, round)) {
  }
}

Json RemoteConnection::send(const std::function<Json()>& attempt) const {
  std::chrono::milliseconds delay = options_.backoff;
  std::string last_error;
  for (int i = 0; i < options_.attempts; ++i) {
    if (i > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    try {
      return attempt();
    } catch (const Retryable& e) {
      last_error = e.message;
    }
  }
  throw TransportError(options_.base_url + ": " + last_error + " (after " + std::to_string(options_.attempts) +
                       " attempts)");
}

namespace {

httplib::Client make_client(const ClientOptions& options) {
  httplib::Client client(options.base_url);
  client.set_connection_timeout(options.timeout);
  client.set_read_timeout(options.timeout);
  client.set_write_timeout(options.timeout);
  if (!options.bearer_token.empty()) client.set_bearer_token_auth(options.bearer_token);
  return client;
}

Json finish(const httplib::Result& result) {
  if (!result) throw Retryable{httplib::to_string(result.error())};
  if (result->status >= 500 && result->status != 501) throw Retryable{"HTTP " + std::to_string(result->status)};
  if (result->status != 200) raise_remote(result->status, result->body);
  try {
    return Json::parse(result->body);
  } catch (const Json::exception& e) {
    throw TransportError(std::string("undecodable response: ") + e.what());
  }
}

}  // namespace

Json RemoteConnection::post(const std::string& path, const Json& body) const {
  const std::string text = body.dump();
  return send([&] {
    httplib::Client client = make_client(options_);
    return finish(client.Post(path, text, "application/json"));
  });
}

Json RemoteConnection::get(const std::string& path) const {
  return send([&] {
    httplib::Client client = make_client(options_);
    return finish(client.Get(path));
  });
}

// --- RemoteCoach --------------------------------------------------------------

RemoteCoach::RemoteCoach(std::shared_ptr<RemoteConnection> connection) : connection_(std::move(connection)) {}

TaskInstruction RemoteCoach::sample_task(const StreamKey& key) const {
  connection_->note_round(key.round);
  wire::SampleRequest request;
  request.run_id = connection_->options().run_id;
  request.round = key.round;
  request.idempotency_key = connection_->next_key("sample");
  request.role = wire::Role::kCoach;
  request.n = 1;
  request.rng = key;
  const auto response = wire::decode_sample_response(connection_->post("/v1/sample", wire::encode(request)));
  check_echo(request.idempotency_key, response.idempotency_key);
  if (response.answers.size() != 1 || !response.answers.front().task) {
    throw TransportError("coach sample response must carry exactly one task");
  }
  return *response.answers.front().task;
}

double RemoteCoach::logprob(const TaskInstruction& task) const {
  wire::LogprobRequest request;
  request.run_id = connection_->options().run_id;
  request.round = connection_->round();
  request.idempotency_key = connection_->next_key("logprob");
  request.role = wire::Role::kCoach;
  request.task = task;
  const auto response = wire::decode_logprob_response(connection_->post("/v1/logprob", wire::encode(request)));
  check_echo(request.idempotency_key, response.idempotency_key);
  if (response.logprobs.size() != 1) throw TransportError("coach logprob response must hold one value");
  return response.logprobs.front();
}

Vector RemoteCoach::logprob_grad(const TaskInstruction&) const {
  throw CapabilityError("remote coach: gradients are computed by the backend");
}

double RemoteCoach::entropy() const {
  const PolicyParams params = snapshot();
  if (params.kind != "softmax_coach") throw CapabilityError("remote coach: entropy needs softmax_coach parameters");
  return entropy_from_log(log_softmax(params.values));
}

Vector RemoteCoach::entropy_grad() const {
  throw CapabilityError("remote coach: gradients are computed by the backend");
}

void RemoteCoach::apply_step(const Vector& gradient, double lr) {
  wire::UpdateRequest request{connection_->options().run_id, connection_->round(), connection_->next_key("update"),
                              wire::Role::kCoach, lr, wire::GradientPayload{gradient}};
  const auto response = wire::decode_update_response(connection_->post("/v1/update", wire::encode(request)));
  check_echo(request.idempotency_key, response.idempotency_key);
}

PolicyParams RemoteCoach::snapshot() const {
  return wire::decode_snapshot_response(connection_->get("/v1/snapshot?role=coach")).params;
}

void RemoteCoach::restore(const PolicyParams& params) {
  wire::UpdateRequest request{connection_->options().run_id, connection_->round(), connection_->next_key("update"),
                              wire::Role::kCoach, 0.0, wire::ParamsPayload{params}};
  const auto response = wire::decode_update_response(connection_->post("/v1/update", wire::encode(request)));
  check_echo(request.idempotency_key, response.idempotency_key);
}

ReinforceStats RemoteCoach::apply_reinforce(const CoachBatch& batch, const ReinforceOptions& options) {
  const std::int64_t round = batch.tasks.empty() ? connection_->round() : batch.tasks.front().round;
  wire::UpdateRequest request{connection_->options().run_id, round, connection_->next_key("update"),
                              wire::Role::kCoach, options.lr,
                              wire::ReinforcePayload{batch, options.entropy_coef, options.baseline}};
  const auto response = wire::decode_update_response(connection_->post("/v1/update", wire::encode(request)));
  check_echo(request.idempotency_key, response.idempotency_key);
  if (!response.reinforce_stats) throw TransportError("update response is missing reinforce_stats");
  return *response.reinforce_stats;
}

// --- RemotePlayer -------------------------------------------------------------

RemotePlayer::RemotePlayer(std::shared_ptr<RemoteConnection> connection, double temperature, int kl_samples)
    : connection_(std::move(connection)), temperature_(temperature), kl_samples_(kl_samples) {
  if (kl_samples_ < 1) throw ConfigError("kl_samples", "must be >= 1");
}

std::vector<AnswerSample> RemotePlayer::sample_answers(const TaskInstruction& task, int n,
                                                       const StreamKey& key) const {
  connection_->note_round(key.round);
  wire::SampleRequest request;
  request.run_id = connection_->options().run_id;
  request.round = key.round;
  request.idempotency_key = connection_->next_key("sample");
  request.role = wire::Role::kPlayer;
  request.task = task;
  request.n = n;
  request.temperature = temperature_;
  request.rng = key;
  const auto response = wire::decode_sample_response(connection_->post("/v1/sample", wire::encode(request)));
  check_echo(request.idempotency_key, response.idempotency_key);
  if (response.answers.size() != static_cast<std::size_t>(n)) throw TransportError("sample response size mismatch");
  std::vector<AnswerSample> samples;
  samples.reserve(response.answers.size());
  for (std::size_t j = 0; j < response.answers.size(); ++j) {
    samples.push_back({canonicalize_answer(response.answers[j].text), response.answers[j].logprob,
                       static_cast<int>(j + 1)});
  }
  return samples;
}

namespace {

Vector remote_logprobs(RemoteConnection& connection, const TaskInstruction& task, std::span<const std::string> answers,
                       std::optional<PolicyParams> params) {
  wire::LogprobRequest request;
  request.run_id = connection.options().run_id;
  request.round = connection.round();
  request.idempotency_key = connection.next_key("logprob");
  request.role = wire::Role::kPlayer;
  request.task = task;
  request.answers.assign(answers.begin(), answers.end());
  request.params = std::move(params);
  const auto response = wire::decode_logprob_response(connection.post("/v1/logprob", wire::encode(request)));
  check_echo(request.idempotency_key, response.idempotency_key);
  if (response.logprobs.size() != answers.size()) throw TransportError("logprob response size mismatch");
  return Eigen::Map<const Vector>(response.logprobs.data(), static_cast<Eigen::Index>(response.logprobs.size()));
}

}  // namespace

Vector RemotePlayer::logprobs(const TaskInstruction& task, std::span<const std::string> answers) const {
  return remote_logprobs(*connection_, task, answers, std::nullopt);
}

Matrix RemotePlayer::logprob_grads(const TaskInstruction&, std::span<const std::string>) const {
  throw CapabilityError("remote player: gradients are computed by the backend");
}

double RemotePlayer::kl_to(const PolicyParams& reference, const TaskInstruction& task) const {
  const StreamKey key{reference.hash(), task.round, 0, Stream::kKlEstimate};
  const std::vector<AnswerSample> draws = sample_answers(task, kl_samples_, key);
  std::vector<std::string> answers;
  Vector log_p(static_cast<Eigen::Index>(draws.size()));
  for (std::size_t j = 0; j < draws.size(); ++j) {
    answers.push_back(draws[j].canonical_answer);
    log_p(static_cast<Eigen::Index>(j)) = draws[j].sampler_logprob;
  }
  const Vector log_q = remote_logprobs(*connection_, task, answers, reference);
  return (log_p - log_q).mean();
}

Vector RemotePlayer::kl_grad(const PolicyParams&, const TaskInstruction&) const {
  throw CapabilityError("remote player: gradients are computed by the backend");
}

double RemotePlayer::entropy(const TaskInstruction&) const {
  throw CapabilityError("remote player: entropy is computed by the backend");
}

Vector RemotePlayer::entropy_grad(const TaskInstruction&) const {
  throw CapabilityError("remote player: gradients are computed by the backend");
}

wire::UpdateResponse RemotePlayer::send_update(wire::UpdatePayload payload, double lr, std::int64_t round) const {
  wire::UpdateRequest request{connection_->options().run_id, round, connection_->next_key("update"),
                              wire::Role::kPlayer, lr, std::move(payload)};
  auto response = wire::decode_update_response(connection_->post("/v1/update", wire::encode(request)));
  check_echo(request.idempotency_key, response.idempotency_key);
  return response;
}

void RemotePlayer::apply_step(const Vector& gradient, double lr) {
  send_update(wire::GradientPayload{gradient}, lr, connection_->round());
}

PolicyParams RemotePlayer::snapshot() const {
  return wire::decode_snapshot_response(connection_->get("/v1/snapshot?role=player")).params;
}

void RemotePlayer::restore(const PolicyParams& params) {
  send_update(wire::ParamsPayload{params}, 0.0, connection_->round());
}

bool RemotePlayer::exactly_evaluable() const {
  return wire::decode_snapshot_response(connection_->get("/v1/snapshot?role=player")).exactly_evaluable;
}

GrpoStats RemotePlayer::apply_grpo(const GrpoBatch& batch, const GrpoOptions& options) {
  const std::int64_t round = batch.tasks.empty() ? connection_->round() : batch.tasks.front().round;
  auto response =
      send_update(wire::GrpoPayload{batch, options.cfg, options.entropy_coef, options.workers}, options.lr, round);
  if (!response.grpo_stats) throw TransportError("update response is missing grpo_stats");
  return *response.grpo_stats;
}

}  // namespace moebius
