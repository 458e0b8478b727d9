#include "moebius/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>

#include "moebius/config.hpp"
#include "moebius/errors.hpp"
#include "moebius/metrics.hpp"
#include "moebius/orchestrator.hpp"
#include "moebius/service.hpp"
#include "moebius/softmax_policy.hpp"

namespace moebius {

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

std::pair<double, double> parse_band(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("band", "expected LO:HI");
  try {
    std::size_t used_lo = 0, used_hi = 0;
    const std::string lo = text.substr(0, colon), hi = text.substr(colon + 1);
    const double a = std::stod(lo, &used_lo);
    const double b = std::stod(hi, &used_hi);
    if (used_lo != lo.size() || used_hi != hi.size()) throw std::invalid_argument("trailing characters");
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError("band", "expected LO:HI, got '" + text + "'");
  }
}

RunConfig load_config(const std::optional<std::filesystem::path>& path, std::string* text_out) {
  std::string text = "{}";
  if (path) {
    try {
      text = read_file(*path);
    } catch (const std::exception& e) {
      throw ConfigError("config", e.what());
    }
  }
  RunConfig cfg = config_from_text(text);
  if (text_out) *text_out = std::move(text);
  return cfg;
}

Json state_json(std::int64_t round, const CoevolutionState& state) {
  return {{"round", round},
          {"completed_rounds", state.completed_rounds},
          {"acc_pre", state.acc_pre},
          {"baseline", state.baseline.value()},
          {"reference", to_json(state.reference)}};
}

}  // namespace

RunConfig resolve_config(const TrainOptions& options, std::string* config_text) {
  RunConfig cfg = load_config(options.config_path, config_text);
  if (options.rounds) cfg.T = *options.rounds;
  if (options.batch_size) cfg.m = *options.batch_size;
  if (options.rollouts) cfg.n = *options.rollouts;
  if (options.band) std::tie(cfg.band_lo, cfg.band_hi) = *options.band;
  if (options.seed) cfg.seed = *options.seed;
  if (options.ablation) cfg.ablation = ablation_from_name(*options.ablation);
  if (options.workers) cfg.workers = *options.workers;
  validate(cfg);
  return cfg;
}

void cmd_train(const TrainOptions& options, std::ostream& log) {
  std::string config_text;
  const RunConfig cfg = resolve_config(options, &config_text);
  const std::string started = utc_timestamp();

  std::filesystem::create_directories(options.out_dir);
  write_file_atomic(options.out_dir / "config_snapshot.json", config_text);

  std::unique_ptr<CoachPolicy> coach;
  std::unique_ptr<PlayerPolicy> player;
  SoftmaxCoach initial_coach(cfg.domain);
  SoftmaxPlayer initial_player = SoftmaxPlayer::initial(cfg.domain, cfg.player_temperature, cfg.player_init_truth_weight);
  if (options.backend == "inprocess") {
    coach = std::make_unique<SoftmaxCoach>(initial_coach);
    player = std::make_unique<SoftmaxPlayer>(initial_player);
  } else {
    ClientOptions client;
    client.base_url = options.backend;
    client.run_id = cfg.run_id;
    if (const char* token = std::getenv("MOEBIUS_BEARER_TOKEN")) client.bearer_token = token;
    auto connection = std::make_shared<RemoteConnection>(client);
    coach = std::make_unique<RemoteCoach>(connection);
    player = std::make_unique<RemotePlayer>(connection, cfg.player_temperature);
    // The run config owns the starting point, not whatever the server holds.
    coach->restore(initial_coach.snapshot());
    player->restore(initial_player.snapshot());
  }

  const std::filesystem::path metrics_path = options.out_dir / "metrics.jsonl";
  MetricsWriter writer(metrics_path);
  RunHooks hooks;
  hooks.on_record = [&](const RoundRecord& record) {
    writer.write(record);
    if (record.kind == "round" && (record.round % 25 == 0 || record.round == cfg.T)) {
      log << "round " << record.round << " acc " << record.acc_post << " delta " << record.delta << "\n";
    }
  };
  hooks.on_checkpoint = [&](std::int64_t round, const CoevolutionState& state) {
    write_checkpoint(options.out_dir, round, state.coach->snapshot(), state.player->snapshot(),
                     state_json(round, state));
  };
  const RunResult result = run(cfg, *coach, *player, hooks);

  Json manifest = {
      {"version", kVersion},
      {"run_id", cfg.run_id},
      {"started_at", started},
      {"finished_at", utc_timestamp()},
      {"config_snapshot", config_text},
      {"effective_config", to_json(cfg)},
      {"seeds", {{"seed", cfg.seed}, {"validation_seed", cfg.validation_seed}, {"eval_seed", cfg.eval_protocol.seed}}},
      {"ablation", ablation_name(cfg.ablation)},
      {"backend", options.backend},
      {"status", result.error ? "aborted" : "completed"},
      {"summary",
       {{"initial_accuracy", result.initial_accuracy},
        {"final_accuracy", result.final_accuracy},
        {"rounds_completed", result.rounds_completed}}},
      {"metrics_digest", file_digest(metrics_path)},
  };
  if (result.error) {
    try {
      std::rethrow_exception(result.error);
    } catch (const std::exception& e) {
      manifest["error"] = e.what();
    }
  }
  write_file_atomic(options.out_dir / "manifest.json", manifest.dump(2) + "\n");
  if (result.error) std::rethrow_exception(result.error);
  log << "initial " << result.initial_accuracy << " final " << result.final_accuracy << " rounds "
      << result.rounds_completed << "\n";
}

void cmd_eval(const EvalOptions& options, std::ostream& out) {
  RunConfig cfg = load_config(options.config_path, nullptr);
  if (options.protocol) {
    if (*options.protocol == "exact") {
      cfg.eval_protocol.kind = EvalProtocol::Kind::kExact;
    } else if (*options.protocol == "sampled") {
      cfg.eval_protocol.kind = EvalProtocol::Kind::kSampled;
      if (cfg.eval_protocol.k < 1) cfg.eval_protocol.k = 16;
    } else {
      throw ConfigError("protocol", "expected exact or sampled");
    }
  }
  if (options.k) cfg.eval_protocol.k = *options.k;
  if (options.eval_seed) cfg.eval_protocol.seed = *options.eval_seed;
  validate(cfg);

  std::filesystem::path path = options.checkpoint;
  if (std::filesystem::is_directory(path)) path /= "player.json";
  const PolicyParams params = load_params(path);
  SoftmaxPlayer player = SoftmaxPlayer::initial(cfg.domain, cfg.player_temperature, 0.0);
  try {
    player.restore(params);
  } catch (const DomainError& e) {
    throw ConfigError("params", e.what());
  }
  const ValidationSet validation = build_validation_set(cfg.domain, cfg.validation_seed);
  const EvalReport report = evaluate_report(player, validation, cfg.eval_protocol, cfg.workers);

  Json levels = Json::array();
  for (std::size_t d = 0; d < report.per_level.size(); ++d) {
    levels.push_back({{"difficulty", d + 1}, {"accuracy", report.per_level[d]}, {"tasks", report.level_counts[d]}});
  }
  const Json protocol = cfg.eval_protocol.kind == EvalProtocol::Kind::kExact
                            ? Json{{"kind", "exact"}}
                            : Json{{"kind", "sampled"}, {"k", cfg.eval_protocol.k}, {"seed", cfg.eval_protocol.seed}};
  out << Json{{"checkpoint", path.string()}, {"protocol", protocol}, {"overall", report.overall}, {"per_level", levels}}
             .dump(2)
      << "\n";
}

std::size_t cmd_replay(const std::filesystem::path& metrics, std::ostream& out) {
  const std::vector<RoundRecord> records = read_metrics_file(metrics);
  const std::vector<Violation> violations = replay_audit(records);
  Json list = Json::array();
  for (const Violation& v : violations) {
    list.push_back({{"round", v.round}, {"line", v.line}, {"kind", v.kind}, {"message", v.message}});
  }
  out << Json{{"metrics", metrics.string()}, {"records", records.size()}, {"violations", list}}.dump(2) << "\n";
  return violations.size();
}

void cmd_export_csv(const std::filesystem::path& metrics, std::ostream& out) {
  export_csv(read_metrics_file(metrics), out);
}

void cmd_serve(const ServeOptions& options, std::ostream& log) {
  const RunConfig cfg = load_config(options.config_path, nullptr);
  SoftmaxCoach coach(cfg.domain);
  SoftmaxPlayer player = SoftmaxPlayer::initial(cfg.domain, cfg.player_temperature, cfg.player_init_truth_weight);
  ServerOptions server_options;
  server_options.player_temperature = cfg.player_temperature;
  server_options.bearer_token = options.bearer_token;
  server_options.player_factory = [cfg](const PolicyParams& params) -> std::unique_ptr<PlayerPolicy> {
    auto scorer = std::make_unique<SoftmaxPlayer>(SoftmaxPlayer::initial(cfg.domain, cfg.player_temperature, 0.0));
    scorer->restore(params);
    return scorer;
  };
  PolicyServer server(coach, player, server_options);
  const int port = server.bind(options.host, options.port);
  log << "listening on " << options.host << ":" << port << "\n" << std::flush;
  server.listen();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coach-Player co-evolution trainer", "moebius"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  TrainOptions train;
  std::string band, out_dir = train.out_dir.string(), config;
  CLI::App* train_cmd = app.add_subcommand("train", "run the co-evolution loop");
  train_cmd->add_option("--config", config, "JSON run configuration");
  train_cmd->add_option("--rounds", train.rounds, "number of rounds T");
  train_cmd->add_option("--batch-size", train.batch_size, "instructions per round m");
  train_cmd->add_option("--rollouts", train.rollouts, "rollouts per instruction n");
  train_cmd->add_option("--band", band, "acceptance band LO:HI on acc");
  train_cmd->add_option("--seed", train.seed, "run seed");
  train_cmd->add_option("--ablation", train.ablation, "none | no-coach-update | no-filter | no-coach-update+no-filter");
  train_cmd->add_option("--backend", train.backend, "inprocess or a policy service URL");
  train_cmd->add_option("--out", out_dir, "output directory");
  train_cmd->add_option("--workers", train.workers, "parallel rollout workers");

  EvalOptions eval;
  std::string checkpoint, eval_config;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a player checkpoint");
  eval_cmd->add_option("checkpoint", checkpoint, "player.json or round_<t> directory")->required();
  eval_cmd->add_option("--config", eval_config, "run configuration (domain, validation seed)");
  eval_cmd->add_option("--protocol", eval.protocol, "exact | sampled");
  eval_cmd->add_option("-k", eval.k, "samples per task for the sampled protocol");
  eval_cmd->add_option("--eval-seed", eval.eval_seed, "seed for the sampled protocol");

  std::string metrics;
  CLI::App* replay_cmd = app.add_subcommand("replay", "audit a metrics file");
  replay_cmd->add_option("metrics", metrics, "metrics.jsonl")->required();

  std::string csv_metrics, csv_out;
  CLI::App* csv_cmd = app.add_subcommand("export-csv", "convert a metrics file to CSV");
  csv_cmd->add_option("metrics", csv_metrics, "metrics.jsonl")->required();
  csv_cmd->add_option("--output", csv_out, "destination (default stdout)");

  ServeOptions serve;
  std::string serve_config;
  CLI::App* serve_cmd = app.add_subcommand("serve", "run the reference policy service");
  serve_cmd->add_option("--config", serve_config, "run configuration");
  serve_cmd->add_option("--host", serve.host, "bind address");
  serve_cmd->add_option("--port", serve.port, "port (0 picks one)");
  serve_cmd->add_option("--token", serve.bearer_token, "required bearer token");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) {
      if (!config.empty()) train.config_path = config;
      if (!band.empty()) train.band = parse_band(band);
      train.out_dir = out_dir;
      cmd_train(train, err);
    } else if (*eval_cmd) {
      eval.checkpoint = checkpoint;
      if (!eval_config.empty()) eval.config_path = eval_config;
      cmd_eval(eval, out);
    } else if (*replay_cmd) {
      return cmd_replay(metrics, out) == 0 ? kExitOk : kExitFailure;
    } else if (*csv_cmd) {
      if (csv_out.empty()) {
        cmd_export_csv(csv_metrics, out);
      } else {
        std::ofstream file(csv_out);
        if (!file) throw ConfigError("output", "cannot open " + csv_out);
        cmd_export_csv(csv_metrics, file);
      }
    } else if (*serve_cmd) {
      if (!serve_config.empty()) serve.config_path = serve_config;
      cmd_serve(serve, err);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const TransportError& e) {
    err << "transport failure: " << e.what() << "\n";
    return kExitTransport;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace moebius
