#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "moebius/cli.hpp"
#include "moebius/metrics.hpp"
#include "moebius/random.hpp"
#include "moebius/softmax_policy.hpp"

using namespace moebius;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("moebius_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path path = dir / "config.json";
  std::ofstream(path) << text;
  return path;
}

const char* kSmall = R"({"m": 4, "n": 8, "T": 3, "player_lr": 0.5, "coach_lr": 100})";

struct Invocation {
  int code;
  std::string out, err;
};

Invocation cli(std::vector<std::string> args) {
  args.insert(args.begin(), "moebius");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

Json read_json(const fs::path& path) { return Json::parse(read_file(path)); }

}  // namespace

TEST(Cli, ZeroRoundsWritesInitialArtifacts) {
  const fs::path dir = fresh_dir("zero");
  const Invocation r = cli({"train", "--rounds", "0", "--out", (dir / "run").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_metrics_file(dir / "run" / "metrics.jsonl").size(), 1u);
  const Json manifest = read_json(dir / "run" / "manifest.json");
  EXPECT_EQ(manifest.at("status"), "completed");
  EXPECT_EQ(manifest.at("summary").at("rounds_completed"), 0);
  EXPECT_EQ(manifest.at("config_snapshot"), "{}");
  EXPECT_EQ(manifest.at("effective_config").at("T"), 0);
  EXPECT_EQ(manifest.at("metrics_digest"), file_digest(dir / "run" / "metrics.jsonl"));
  EXPECT_EQ(read_file(dir / "run" / "config_snapshot.json"), "{}");
  EXPECT_TRUE(fs::exists(dir / "run" / "round_0" / "player.json"));
  EXPECT_TRUE(fs::exists(dir / "run" / "round_0" / "state.json"));
}

TEST(Cli, ConfigSnapshotIsVerbatim) {
  const fs::path dir = fresh_dir("snapshot");
  const std::string text = std::string(kSmall) + "\n\n";
  const fs::path config = write_config(dir, text);
  ASSERT_EQ(cli({"train", "--config", config.string(), "--out", (dir / "run").string()}).code, 0);
  EXPECT_EQ(read_file(dir / "run" / "config_snapshot.json"), text);
  const Json manifest = read_json(dir / "run" / "manifest.json");
  EXPECT_EQ(manifest.at("summary").at("rounds_completed"), 3);
  EXPECT_TRUE(fs::exists(dir / "run" / "round_3" / "coach.json"));
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const fs::path dir = fresh_dir("repeat");
  const fs::path config = write_config(dir, kSmall);
  ASSERT_EQ(cli({"train", "--config", config.string(), "--out", (dir / "a").string()}).code, 0);
  ASSERT_EQ(cli({"train", "--config", config.string(), "--out", (dir / "b").string(), "--workers", "8"}).code, 0);
  EXPECT_EQ(read_file(dir / "a" / "metrics.jsonl"), read_file(dir / "b" / "metrics.jsonl"));
  EXPECT_EQ(read_json(dir / "a" / "manifest.json").at("metrics_digest"),
            read_json(dir / "b" / "manifest.json").at("metrics_digest"));
  ASSERT_EQ(cli({"train", "--config", config.string(), "--out", (dir / "c").string(), "--seed", "1"}).code, 0);
  EXPECT_NE(read_file(dir / "a" / "metrics.jsonl"), read_file(dir / "c" / "metrics.jsonl"));
}

TEST(Cli, FrozenCoachCheckpointUnchanged) {
  const fs::path dir = fresh_dir("frozen");
  const fs::path config = write_config(dir, kSmall);
  const fs::path out = dir / "run";
  ASSERT_EQ(cli({"train", "--config", config.string(), "--out", out.string(), "--ablation", "no-coach-update"}).code, 0);
  EXPECT_EQ(read_file(out / "round_0" / "coach.json"), read_file(out / "round_3" / "coach.json"));
  EXPECT_NE(read_file(out / "round_0" / "player.json"), read_file(out / "round_3" / "player.json"));
  EXPECT_EQ(read_json(out / "manifest.json").at("ablation"), "no-coach-update");
}

TEST(Cli, EvalUniformCheckpoint) {
  const fs::path dir = fresh_dir("eval");
  const DomainSpec spec;
  const SoftmaxPlayer uniform = SoftmaxPlayer::initial(spec, 1.0, 0.0);
  write_file_atomic(dir / "player.json", to_json(uniform.snapshot()).dump());
  const Invocation r = cli({"eval", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json report = Json::parse(r.out);
  EXPECT_NEAR(report.at("overall").get<double>(), 0.1, 1e-12);
  double weighted = 0;
  int tasks = 0;
  for (const Json& level : report.at("per_level")) {
    weighted += level.at("accuracy").get<double>() * level.at("tasks").get<int>();
    tasks += level.at("tasks").get<int>();
  }
  EXPECT_NEAR(weighted / tasks, report.at("overall").get<double>(), 1e-12);

  const Invocation sampled = cli({"eval", (dir / "player.json").string(), "--protocol", "sampled", "-k", "8"});
  ASSERT_EQ(sampled.code, 0) << sampled.err;
  EXPECT_EQ(Json::parse(sampled.out).at("protocol").at("k"), 8);
}

TEST(Cli, ReplayAndCsvOnTrainOutput) {
  const fs::path dir = fresh_dir("replay");
  const fs::path config = write_config(dir, kSmall);
  ASSERT_EQ(cli({"train", "--config", config.string(), "--out", (dir / "run").string()}).code, 0);
  const fs::path metrics = dir / "run" / "metrics.jsonl";
  const Invocation ok = cli({"replay", metrics.string()});
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_TRUE(Json::parse(ok.out).at("violations").empty());
  EXPECT_EQ(Json::parse(ok.out).at("records"), 4);

  std::vector<RoundRecord> records = read_metrics_file(metrics);
  records[2].acc_post += 0.25;
  std::string text;
  for (const RoundRecord& rec : records) text += encode_record_line(rec);
  write_file_atomic(dir / "bad.jsonl", text);
  const Invocation bad = cli({"replay", (dir / "bad.jsonl").string()});
  EXPECT_EQ(bad.code, 1);
  const Json violations = Json::parse(bad.out).at("violations");
  ASSERT_EQ(violations.size(), 1u);
  EXPECT_EQ(violations[0].at("kind"), "acc_post");
  EXPECT_EQ(violations[0].at("round"), 2);

  ASSERT_EQ(cli({"export-csv", metrics.string(), "--output", (dir / "m.csv").string()}).code, 0);
  const std::string csv = read_file(dir / "m.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = fresh_dir("codes");
  EXPECT_EQ(cli({}).code, kExitConfig);
  EXPECT_EQ(cli({"--version"}).code, kExitOk);
  EXPECT_EQ(cli({"train", "--bogus"}).code, kExitConfig);
  const fs::path config = write_config(dir, R"({"m": 4, "nope": 1})");
  const Invocation unknown = cli({"train", "--config", config.string(), "--out", (dir / "x").string()});
  EXPECT_EQ(unknown.code, kExitConfig);
  EXPECT_NE(unknown.err.find("nope"), std::string::npos) << unknown.err;
  EXPECT_EQ(cli({"train", "--band", "0.9:0.1", "--out", (dir / "x").string()}).code, kExitConfig);
  EXPECT_EQ(cli({"train", "--band", "abc", "--out", (dir / "x").string()}).code, kExitConfig);
  EXPECT_EQ(cli({"train", "--ablation", "half", "--out", (dir / "x").string()}).code, kExitConfig);
  EXPECT_EQ(cli({"eval", (dir / "missing.json").string()}).code, kExitConfig);
  write_file_atomic(dir / "coach.json", to_json(SoftmaxCoach(DomainSpec{}).snapshot()).dump());
  EXPECT_EQ(cli({"eval", (dir / "coach.json").string()}).code, kExitConfig);
  EXPECT_EQ(cli({"replay", (dir / "missing.jsonl").string()}).code, kExitConfig);
  const Invocation down = cli({"train", "--rounds", "1", "--backend", "http://127.0.0.1:9", "--out", (dir / "y").string()});
  EXPECT_EQ(down.code, kExitTransport) << down.err;
  const fs::path overflow = write_config(dir, R"({"m": 2, "n": 4, "T": 2, "player_temperature": 1e-308})");
  const Invocation numeric = cli({"train", "--config", overflow.string(), "--out", (dir / "z").string()});
  EXPECT_EQ(numeric.code, kExitNumeric) << numeric.err;
  EXPECT_EQ(read_json(dir / "z" / "manifest.json").at("status"), "aborted");
}

TEST(Cli, ReplayAcceptsAnyTrainOutput) {
  const fs::path dir = fresh_dir("closure");
  Rng rng(77);
  const char* ablations[] = {"none", "no-coach-update", "no-filter", "no-coach-update+no-filter"};
  for (int trial = 0; trial < 24; ++trial) {
    Json cfg = {{"m", 1 + rng.below(4)},
                {"n", 2 + rng.below(7)},
                {"T", rng.below(6)},
                {"band_lo", 0.1 * rng.below(4)},
                {"band_hi", 0.5 + 0.1 * rng.below(6)},
                {"max_filter_attempts", 8 + rng.below(40)},
                {"player_lr", 2 * rng.uniform()},
                {"coach_lr", 1000 * rng.uniform()},
                {"baseline_mode", rng.below(2) ? "ema" : "none"},
                {"regenerate_training_rollouts", rng.below(2) == 1},
                {"grpo", {{"inner_epochs", 1 + rng.below(2)}, {"ref_refresh_interval", rng.below(3)}}},
                {"domain", {{"D", 2 + rng.below(5)}, {"K", 2 + rng.below(9)}, {"val_tasks_per_level", 1 + rng.below(4)}}},
                {"seed", rng.next()}};
    const fs::path config = write_config(dir, cfg.dump());
    const fs::path out = dir / ("run" + std::to_string(trial));
    const Invocation train = cli({"train", "--config", config.string(), "--out", out.string(), "--ablation",
                                  ablations[rng.below(4)], "--workers", std::to_string(1 + rng.below(4))});
    ASSERT_EQ(train.code, 0) << cfg.dump() << "\n" << train.err;
    const Invocation replay = cli({"replay", (out / "metrics.jsonl").string()});
    EXPECT_EQ(replay.code, 0) << cfg.dump() << "\n" << replay.out;
  }
}
