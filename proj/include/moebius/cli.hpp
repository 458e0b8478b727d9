#pragma once

// Command implementations behind the `moebius` executable.
//
// Exit codes: 0 success, 1 replay found violations or another failure,
// 2 configuration error, 3 numeric failure, 4 transport failure.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "moebius/types.hpp"

namespace moebius {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitTransport = 4,
};

struct TrainOptions {
  std::optional<std::filesystem::path> config_path;
  std::optional<int> rounds;
  std::optional<int> batch_size;
  std::optional<int> rollouts;
  std::optional<std::pair<double, double>> band;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> ablation;
  std::optional<int> workers;
  std::string backend = "inprocess";  // or the base URL of a policy service
  std::filesystem::path out_dir = "runs/latest";
};

// Loads the config (or defaults) and applies the command-line overrides.
RunConfig resolve_config(const TrainOptions& options, std::string* config_text = nullptr);

// Writes metrics.jsonl, round_<t>/ checkpoints, config_snapshot.json and
// manifest.json under out_dir. Library errors propagate to the caller.
void cmd_train(const TrainOptions& options, std::ostream& log);

struct EvalOptions {
  std::filesystem::path checkpoint;  // player.json or a round_<t> directory
  std::optional<std::filesystem::path> config_path;
  std::optional<std::string> protocol;  // "exact" | "sampled"
  std::optional<int> k;
  std::optional<std::uint64_t> eval_seed;
};
void cmd_eval(const EvalOptions& options, std::ostream& out);

// Prints a JSON report; returns the number of violations.
std::size_t cmd_replay(const std::filesystem::path& metrics, std::ostream& out);

void cmd_export_csv(const std::filesystem::path& metrics, std::ostream& out);

struct ServeOptions {
  std::optional<std::filesystem::path> config_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string bearer_token;
};
void cmd_serve(const ServeOptions& options, std::ostream& log);

// Parses argv, dispatches, and maps library errors onto exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace moebius
