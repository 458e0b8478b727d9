#pragma once

// An in-process reference server on an ephemeral port, and a helper that runs
// the same configuration locally and through it.

#include <memory>
#include <string>

#include "moebius/metrics.hpp"
#include "moebius/orchestrator.hpp"
#include "moebius/service.hpp"
#include "moebius/softmax_policy.hpp"

namespace testing_support {

using namespace moebius;

inline ServerOptions server_options(const RunConfig& cfg) {
  ServerOptions options;
  options.player_temperature = cfg.player_temperature;
  options.player_factory = [cfg](const PolicyParams& params) -> std::unique_ptr<PlayerPolicy> {
    auto scorer = std::make_unique<SoftmaxPlayer>(SoftmaxPlayer::initial(cfg.domain, cfg.player_temperature, 0.0));
    scorer->restore(params);
    return scorer;
  };
  return options;
}

struct LocalServer {
  LocalServer(CoachPolicy& coach, PlayerPolicy& player, ServerOptions options)
      : server(coach, player, std::move(options)) {
    server.bind("127.0.0.1", 0);
    server.start();
  }
  ~LocalServer() { server.stop(); }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(server.port()); }

  PolicyServer server;
};

inline std::shared_ptr<RemoteConnection> connect(const std::string& url, int attempts = 3) {
  ClientOptions options;
  options.base_url = url;
  options.attempts = attempts;
  options.backoff = std::chrono::milliseconds(5);
  options.timeout = std::chrono::milliseconds(5000);
  return std::make_shared<RemoteConnection>(options);
}

inline std::string metrics_text(const std::vector<RoundRecord>& records) {
  std::string text;
  for (const RoundRecord& r : records) text += encode_record_line(r);
  return text;
}

inline std::string inprocess_metrics(const RunConfig& cfg) {
  SoftmaxCoach coach(cfg.domain);
  SoftmaxPlayer player = SoftmaxPlayer::initial(cfg.domain, cfg.player_temperature, cfg.player_init_truth_weight);
  return metrics_text(run(cfg, coach, player).records);
}

// The server starts from arbitrary weights; the client pushes the run's
// initial parameters before training, as cmd_train does.
inline std::string remote_metrics(const RunConfig& cfg) {
  SoftmaxCoach server_coach(cfg.domain, Vector::Constant(cfg.domain.levels, 0.3));
  SoftmaxPlayer server_player = SoftmaxPlayer::initial(cfg.domain, cfg.player_temperature, 2.0);
  LocalServer local(server_coach, server_player, server_options(cfg));
  auto connection = connect(local.url());
  RemoteCoach coach(connection);
  RemotePlayer player(connection, cfg.player_temperature);
  coach.restore(SoftmaxCoach(cfg.domain).snapshot());
  player.restore(SoftmaxPlayer::initial(cfg.domain, cfg.player_temperature, cfg.player_init_truth_weight).snapshot());
  return metrics_text(run(cfg, coach, player).records);
}

}  // namespace testing_support
