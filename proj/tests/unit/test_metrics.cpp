#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "moebius/errors.hpp"
#include "moebius/metrics.hpp"
#include "moebius/orchestrator.hpp"
#include "moebius/softmax_policy.hpp"

using namespace moebius;

namespace {

std::vector<RoundRecord> sample_run(int rounds = 6) {
  RunConfig cfg;
  cfg.m = 4;
  cfg.n = 8;
  cfg.T = rounds;
  cfg.player_lr = 0.5;
  cfg.coach_lr = 100;
  SoftmaxCoach coach(cfg.domain);
  SoftmaxPlayer player = SoftmaxPlayer::initial(cfg.domain, 1.0, 0.5);
  return run(cfg, coach, player).records;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("moebius_metrics_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<Violation> audit_single_fault(std::vector<RoundRecord> records, std::size_t index,
                                          void (*edit)(RoundRecord&)) {
  edit(records[index]);
  return replay_audit(records);
}

}  // namespace

TEST(Metrics, JsonlRoundTripIsLossless) {
  const std::vector<RoundRecord> records = sample_run();
  std::string text;
  for (const RoundRecord& r : records) text += encode_record_line(r);
  std::istringstream in(text);
  const std::vector<RoundRecord> back = read_metrics(in);
  ASSERT_EQ(back.size(), records.size());
  std::string again;
  for (const RoundRecord& r : back) again += encode_record_line(r);
  EXPECT_EQ(again, text);
}

TEST(Metrics, WriterFlushesEachLine) {
  const auto dir = temp_dir("writer");
  const std::vector<RoundRecord> records = sample_run(2);
  MetricsWriter writer(dir / "metrics.jsonl");
  writer.write(records[0]);
  EXPECT_EQ(read_metrics_file(dir / "metrics.jsonl").size(), 1u);
  writer.write(records[1]);
  EXPECT_EQ(read_metrics_file(dir / "metrics.jsonl").size(), 2u);
}

TEST(Metrics, MalformedLineIsNamed) {
  const std::vector<RoundRecord> records = sample_run(2);
  std::string text = encode_record_line(records[0]) + encode_record_line(records[1]) + "{\"kind\": \n";
  std::istringstream in(text);
  try {
    read_metrics(in);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::istringstream unknown(encode_record_line(records[0]).insert(1, "\"extra\":1,"));
  EXPECT_THROW(read_metrics(unknown), ConfigError);
}

TEST(Replay, CleanRunHasNoViolations) { EXPECT_TRUE(replay_audit(sample_run(10)).empty()); }

TEST(Replay, EditedAccPostIsOneViolation) {
  const auto v = audit_single_fault(sample_run(), 3, [](RoundRecord& r) { r.acc_post += 0.01; });
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, "acc_post");
  EXPECT_EQ(v[0].round, 3);
  EXPECT_EQ(v[0].line, 4u);
}

TEST(Replay, EditedFinalAccPostIsOneViolation) {
  const auto records = sample_run();
  const auto v = audit_single_fault(records, records.size() - 1, [](RoundRecord& r) { r.acc_post += 0.01; });
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, "acc_post");
}

TEST(Replay, EditedCoachRewardIsOneViolation) {
  const auto v = audit_single_fault(sample_run(), 2, [](RoundRecord& r) { r.coach_rewards[1] += 1e-6; });
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, "coach_reward");
  EXPECT_EQ(v[0].round, 2);
}

TEST(Replay, EditedAccPreIsOneViolation) {
  const auto v = audit_single_fault(sample_run(), 4, [](RoundRecord& r) { r.acc_pre -= 0.01; });
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, "acc_pre_chain");
  EXPECT_EQ(v[0].round, 4);
  const auto first = audit_single_fault(sample_run(), 0, [](RoundRecord& r) { r.acc_pre -= 0.01; });
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first[0].kind, "acc_pre");
}

TEST(Replay, EditedDeltaIsOneViolation) {
  auto records = sample_run();
  std::size_t index = 1;
  while (index < records.size() && records[index].delta == 0) ++index;
  ASSERT_LT(index, records.size());
  const auto v = audit_single_fault(records, index, [](RoundRecord& r) { r.delta *= 2; });
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, "delta");
}

TEST(Replay, OtherIdentities) {
  auto records = sample_run();
  records[2].filter_stats.candidates_sampled += 1;
  records[3].round = 7;
  records[4].difficulties.pop_back();
  std::vector<std::string> kinds;
  for (const Violation& v : replay_audit(records)) kinds.push_back(v.kind);
  EXPECT_NE(std::find(kinds.begin(), kinds.end(), "filter_bookkeeping"), kinds.end());
  EXPECT_NE(std::find(kinds.begin(), kinds.end(), "round_sequence"), kinds.end());
  EXPECT_NE(std::find(kinds.begin(), kinds.end(), "batch_shape"), kinds.end());
}

TEST(Replay, AbortedRecordsAreSkipped) {
  auto records = sample_run(3);
  RoundRecord aborted = records.back();
  aborted.kind = "aborted";
  aborted.round += 1;
  aborted.acc_post = 0.123;  // would break every identity if audited
  records.push_back(aborted);
  EXPECT_TRUE(replay_audit(records).empty());
}

TEST(Csv, OneRowPerRecord) {
  const auto records = sample_run(3);
  std::ostringstream out;
  export_csv(records, out);
  std::istringstream in(out.str());
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("kind,round,m,acc_pre,acc_post,delta,", 0), 0u);
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), std::count(header.begin(), header.end(), ','));
    ++rows;
  }
  EXPECT_EQ(rows, 4);
}

TEST(Files, DigestAndAtomicWrite) {
  const auto dir = temp_dir("files");
  write_file_atomic(dir / "a.txt", "");
  EXPECT_EQ(file_digest(dir / "a.txt"), "cbf29ce484222325");
  write_file_atomic(dir / "a.txt", "a");
  EXPECT_EQ(file_digest(dir / "a.txt"), "af63dc4c8601ec8c");
  EXPECT_FALSE(std::filesystem::exists(dir / "a.txt.tmp"));
  EXPECT_EQ(read_file(dir / "a.txt"), "a");
  EXPECT_THROW(read_file(dir / "missing"), ConfigError);
}

TEST(Files, CheckpointLayout) {
  const auto dir = temp_dir("ckpt");
  const SoftmaxCoach coach{DomainSpec{}};
  const SoftmaxPlayer player = SoftmaxPlayer::initial(DomainSpec{}, 1.0, 0.5);
  write_checkpoint(dir, 3, coach.snapshot(), player.snapshot(), Json{{"round", 3}});
  EXPECT_EQ(load_params(dir / "round_3" / "player.json").hash(), player.snapshot().hash());
  EXPECT_EQ(load_params(dir / "round_3" / "coach.json").hash(), coach.snapshot().hash());
  EXPECT_TRUE(std::filesystem::exists(dir / "round_3" / "state.json"));
}
