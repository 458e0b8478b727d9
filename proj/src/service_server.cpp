#include <cmath>

#include "moebius/errors.hpp"
#include "moebius/service.hpp"

// After Eigen: the system networking headers define macros that clash with it.
#include <httplib.h>

namespace moebius {

namespace {

PolicyService::Reply error_reply(int status, const std::string& code, const std::string& message) {
  return {status, wire::encode(wire::ErrorResponse{code, message}).dump()};
}

}  // namespace

PolicyService::PolicyService(CoachPolicy& coach, PlayerPolicy& player, ServerOptions options)
    : coach_(coach), player_(player), options_(std::move(options)) {}

std::int64_t PolicyService::version(wire::Role role) const {
  std::shared_lock lock(policy_mutex_);
  return role == wire::Role::kCoach ? coach_version_ : player_version_;
}

void PolicyService::evict_before(std::int64_t round) {
  for (auto it = cache_.begin(); it != cache_.end();) {
    it = it->second.round < round ? cache_.erase(it) : std::next(it);
  }
}

PolicyService::Reply PolicyService::handle_post(const std::string& endpoint, const std::string& body) {
  Json json;
  try {
    json = Json::parse(body);
  } catch (const Json::exception& e) {
    return error_reply(400, "bad_request", std::string("malformed JSON: ") + e.what());
  }
  if (!json.is_object() || !json.contains("idempotency_key") || !json["idempotency_key"].is_string()) {
    return error_reply(400, "bad_request", "idempotency_key: missing required field");
  }
  const std::string cache_key = endpoint + "\n" + json["idempotency_key"].get<std::string>();
  const std::int64_t round = json.contains("round") && json["round"].is_number_integer() ? json["round"].get<std::int64_t>() : 0;
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(cache_key); it != cache_.end()) {
      if (it->second.request_body != body) {
        return error_reply(409, "idempotency_conflict", "key reused with a different request body");
      }
      return it->second.reply;
    }
  }

  Reply reply;
  try {
    Json response;
    if (endpoint == "sample") {
      response = sample(wire::decode_sample_request(json));
    } else if (endpoint == "logprob") {
      response = logprob(wire::decode_logprob_request(json));
    } else if (endpoint == "update") {
      response = update(wire::decode_update_request(json));
    } else {
      return error_reply(404, "not_found", "unknown endpoint " + endpoint);
    }
    reply = {200, response.dump()};
  } catch (const ConfigError& e) {
    reply = error_reply(400, "bad_request", e.what());
  } catch (const CapabilityError& e) {
    reply = error_reply(501, "unsupported", e.what());
  } catch (const NumericError& e) {
    reply = error_reply(422, "numeric_error", e.what());
  } catch (const DomainError& e) {
    reply = error_reply(422, "domain_error", e.what());
  } catch (const std::exception& e) {
    reply = error_reply(500, "internal_error", e.what());
  }
  if (reply.status == 500) return reply;

  std::lock_guard lock(cache_mutex_);
  if (round > latest_round_) {
    latest_round_ = round;
    evict_before(round - 1);
  }
  // A concurrent duplicate may have landed first; keep the earlier reply.
  auto [it, inserted] = cache_.try_emplace(cache_key, CacheEntry{body, reply, round});
  return it->second.reply;
}

PolicyService::Reply PolicyService::handle_snapshot(const std::string& role_name) {
  try {
    const wire::Role role = wire::role_from_string(role_name);
    std::shared_lock lock(policy_mutex_);
    wire::SnapshotResponse response;
    response.role = role;
    if (role == wire::Role::kCoach) {
      response.params = coach_.snapshot();
      response.version = coach_version_;
    } else {
      response.params = player_.snapshot();
      response.version = player_version_;
      response.exactly_evaluable = player_.exactly_evaluable();
    }
    return {200, wire::encode(response).dump()};
  } catch (const ConfigError& e) {
    return error_reply(400, "bad_request", e.what());
  }
}

Json PolicyService::sample(const wire::SampleRequest& request) {
  std::shared_lock lock(policy_mutex_);
  wire::SampleResponse response;
  response.idempotency_key = request.idempotency_key;
  if (request.role == wire::Role::kCoach) {
    for (int i = 0; i < request.n; ++i) {
      StreamKey key = request.rng;
      key.instruction += i;
      TaskInstruction task = coach_.sample_task(key);
      response.answers.push_back({task.prompt, coach_.logprob(task), task});
    }
    response.snapshot_version = coach_version_;
  } else {
    if (!request.task) throw ConfigError("task", "required for the player role");
    if (options_.player_temperature && *options_.player_temperature != request.temperature) {
      throw CapabilityError("player temperature is fixed by the backend");
    }
    for (const AnswerSample& s : player_.sample_answers(*request.task, request.n, request.rng)) {
      response.answers.push_back({s.canonical_answer, s.sampler_logprob, std::nullopt});
    }
    response.snapshot_version = player_version_;
  }
  return wire::encode(response);
}

Json PolicyService::logprob(const wire::LogprobRequest& request) {
  std::shared_lock lock(policy_mutex_);
  wire::LogprobResponse response;
  response.idempotency_key = request.idempotency_key;
  if (request.role == wire::Role::kCoach) {
    if (request.params) throw CapabilityError("coach scoring under foreign params is not supported");
    response.logprobs = {coach_.logprob(request.task)};
    response.snapshot_version = coach_version_;
  } else {
    const PlayerPolicy* scorer = &player_;
    std::unique_ptr<PlayerPolicy> temporary;
    if (request.params) {
      if (!options_.player_factory) throw CapabilityError("scoring under foreign params is not supported");
      temporary = options_.player_factory(*request.params);
      scorer = temporary.get();
    }
    const Vector lp = scorer->logprobs(request.task, request.answers);
    response.logprobs.assign(lp.data(), lp.data() + lp.size());
    response.snapshot_version = player_version_;
  }
  return wire::encode(response);
}

Json PolicyService::update(const wire::UpdateRequest& request) {
  if (!std::isfinite(request.lr)) throw ConfigError("lr", "must be finite");
  std::unique_lock lock(policy_mutex_);
  wire::UpdateResponse response;
  response.idempotency_key = request.idempotency_key;
  const bool coach = request.role == wire::Role::kCoach;
  std::visit(
      [&](const auto& payload) {
        using P = std::decay_t<decltype(payload)>;
        if constexpr (std::is_same_v<P, wire::GradientPayload>) {
          if (coach) {
            coach_.apply_step(payload.values, request.lr);
          } else {
            player_.apply_step(payload.values, request.lr);
          }
        } else if constexpr (std::is_same_v<P, wire::ParamsPayload>) {
          if (coach) {
            coach_.restore(payload.params);
          } else {
            player_.restore(payload.params);
          }
        } else if constexpr (std::is_same_v<P, wire::GrpoPayload>) {
          if (coach) throw ConfigError("batch.kind", "grpo batches target the player");
          response.grpo_stats =
              player_.apply_grpo(payload.batch, {payload.cfg, request.lr, payload.entropy_coef, payload.workers});
        } else {
          if (!coach) throw ConfigError("batch.kind", "reinforce batches target the coach");
          response.reinforce_stats =
              coach_.apply_reinforce(payload.batch, {request.lr, payload.entropy_coef, payload.baseline});
        }
      },
      request.payload);
  response.snapshot_version = coach ? ++coach_version_ : ++player_version_;
  return wire::encode(response);
}

PolicyServer::PolicyServer(CoachPolicy& coach, PlayerPolicy& player, ServerOptions options)
    : service_(coach, player, std::move(options)), http_(std::make_unique<httplib::Server>()) {
  const int threads = std::max(1, service_.options().threads);
  http_->new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
  auto authorized = [this](const httplib::Request& req, httplib::Response& res) {
    const std::string& token = service_.options().bearer_token;
    if (token.empty() || req.get_header_value("Authorization") == "Bearer " + token) return true;
    res.status = 401;
    res.set_content(wire::encode(wire::ErrorResponse{"unauthorized", "missing or wrong bearer token"}).dump(),
                    "application/json");
    return false;
  };
  for (const std::string endpoint : {"sample", "logprob", "update"}) {
    http_->Post("/v1/" + endpoint, [this, endpoint, authorized](const httplib::Request& req, httplib::Response& res) {
      if (!authorized(req, res)) return;
      const PolicyService::Reply reply = service_.handle_post(endpoint, req.body);
      res.status = reply.status;
      res.set_content(reply.body, "application/json");
    });
  }
  http_->Get("/v1/snapshot", [this, authorized](const httplib::Request& req, httplib::Response& res) {
    if (!authorized(req, res)) return;
    const PolicyService::Reply reply = service_.handle_snapshot(req.get_param_value("role"));
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
}

PolicyServer::~PolicyServer() { stop(); }

int PolicyServer::bind(const std::string& host, int port) {
  if (port == 0) {
    port_ = http_->bind_to_any_port(host);
  } else {
    port_ = http_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port));
  return port_;
}

void PolicyServer::start() {
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
}

void PolicyServer::listen() { http_->listen_after_bind(); }

void PolicyServer::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace moebius
