#pragma once

// HTTP policy service: a reference server over in-process policies and
// client classes that implement the policy contracts against it.

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include "moebius/policy.hpp"
#include "moebius/wire.hpp"

namespace httplib {
class Server;
}

namespace moebius {

struct ServerOptions {
  // When set, the sample temperature must match (in-process players fix it
  // at construction).
  std::optional<double> player_temperature;
  // Builds a scoring-only player for logprob requests that carry params.
  std::function<std::unique_ptr<PlayerPolicy>(const PolicyParams&)> player_factory;
  // When non-empty, requests must send "Authorization: Bearer <token>".
  std::string bearer_token;
  int threads = 8;
};

// Endpoint logic, independent of HTTP so it can be driven directly.
class PolicyService {
 public:
  PolicyService(CoachPolicy& coach, PlayerPolicy& player, ServerOptions options = {});

  struct Reply {
    int status = 200;
    std::string body;
  };
  // endpoint is "sample", "logprob" or "update"; body is the raw request.
  Reply handle_post(const std::string& endpoint, const std::string& body);
  Reply handle_snapshot(const std::string& role);

  std::int64_t version(wire::Role role) const;
  const ServerOptions& options() const { return options_; }

 private:
  Json sample(const wire::SampleRequest& request);
  Json logprob(const wire::LogprobRequest& request);
  Json update(const wire::UpdateRequest& request);
  void evict_before(std::int64_t round);

  struct CacheEntry {
    std::string request_body;
    Reply reply;
    std::int64_t round = 0;
  };

  CoachPolicy& coach_;
  PlayerPolicy& player_;
  ServerOptions options_;
  mutable std::shared_mutex policy_mutex_;
  std::int64_t coach_version_ = 0;
  std::int64_t player_version_ = 0;

  std::mutex cache_mutex_;
  std::map<std::string, CacheEntry> cache_;
  std::int64_t latest_round_ = 0;
};

// PolicyService behind cpp-httplib.
class PolicyServer {
 public:
  PolicyServer(CoachPolicy& coach, PlayerPolicy& player, ServerOptions options = {});
  ~PolicyServer();
  PolicyServer(const PolicyServer&) = delete;
  PolicyServer& operator=(const PolicyServer&) = delete;

  // port 0 picks a free port; returns the bound port.
  int bind(const std::string& host, int port);
  // Serves on a background thread until stop().
  void start();
  // Serves on the calling thread.
  void listen();
  void stop();

  PolicyService& service() { return service_; }
  int port() const { return port_; }

 private:
  PolicyService service_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  int port_ = -1;
};

struct ClientOptions {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  std::string run_id = "run";
  std::chrono::milliseconds timeout{10000};
  int attempts = 3;
  std::chrono::milliseconds backoff{50};  // doubled after every failed attempt
  std::string bearer_token;
};

// Shared transport for the remote policies. Transport failures (after all
// attempts) raise TransportError; server-reported errors map back onto the
// library's error types.
class RemoteConnection {
 public:
  explicit RemoteConnection(ClientOptions options);

  Json post(const std::string& path, const Json& body) const;
  Json get(const std::string& path) const;

  std::string next_key(const std::string& what);
  void note_round(std::int64_t round);
  std::int64_t round() const { return round_.load(); }
  const ClientOptions& options() const { return options_; }

 private:
  Json send(const std::function<Json()>& attempt) const;

  ClientOptions options_;
  std::atomic<std::int64_t> sequence_{0};
  std::atomic<std::int64_t> round_{0};
};

class RemoteCoach final : public CoachPolicy {
 public:
  explicit RemoteCoach(std::shared_ptr<RemoteConnection> connection);

  TaskInstruction sample_task(const StreamKey& key) const override;
  double logprob(const TaskInstruction& task) const override;
  // Gradients live on the server.
  Vector logprob_grad(const TaskInstruction& task) const override;
  // Computed from the fetched snapshot (softmax_coach parameters only).
  double entropy() const override;
  Vector entropy_grad() const override;

  void apply_step(const Vector& gradient, double lr) override;
  PolicyParams snapshot() const override;
  void restore(const PolicyParams& params) override;
  ReinforceStats apply_reinforce(const CoachBatch& batch, const ReinforceOptions& options) override;

 private:
  std::shared_ptr<RemoteConnection> connection_;
};

class RemotePlayer final : public PlayerPolicy {
 public:
  RemotePlayer(std::shared_ptr<RemoteConnection> connection, double temperature = 1.0, int kl_samples = 64);

  std::vector<AnswerSample> sample_answers(const TaskInstruction& task, int n, const StreamKey& key) const override;
  Vector logprobs(const TaskInstruction& task, std::span<const std::string> answers) const override;
  Matrix logprob_grads(const TaskInstruction& task, std::span<const std::string> answers) const override;
  // Sample-based estimate: mean over kl_samples draws y ~ pi of
  // log pi(y) - log pi_ref(y), with draws on the kKlEstimate stream.
  double kl_to(const PolicyParams& reference, const TaskInstruction& task) const override;
  Vector kl_grad(const PolicyParams& reference, const TaskInstruction& task) const override;
  double entropy(const TaskInstruction& task) const override;
  Vector entropy_grad(const TaskInstruction& task) const override;

  void apply_step(const Vector& gradient, double lr) override;
  PolicyParams snapshot() const override;
  void restore(const PolicyParams& params) override;
  bool exactly_evaluable() const override;
  GrpoStats apply_grpo(const GrpoBatch& batch, const GrpoOptions& options) override;

 private:
  wire::UpdateResponse send_update(wire::UpdatePayload payload, double lr, std::int64_t round) const;

  std::shared_ptr<RemoteConnection> connection_;
  double temperature_;
  int kl_samples_;
};

}  // namespace moebius
