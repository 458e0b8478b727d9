#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "moebius/records.hpp"
#include "moebius/types.hpp"

namespace moebius {

// Append-only JSONL writer; every record is flushed as soon as it is written.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::filesystem::path& path);
  void write(const RoundRecord& record);

 private:
  std::ofstream out_;
};

std::string encode_record_line(const RoundRecord& record);

// Parses a metrics stream; malformed lines throw ConfigError naming
// "line N".
std::vector<RoundRecord> read_metrics(std::istream& in);
std::vector<RoundRecord> read_metrics_file(const std::filesystem::path& path);

struct Violation {
  std::int64_t round = 0;
  std::size_t line = 0;  // 1-based line in the metrics file
  std::string kind;      // see replay_audit
  std::string message;
};

// Re-derives the bookkeeping identities from recorded fields:
//   delta == acc_post - acc_pre, acc_pre[t+1] == acc_post[t],
//   coach_rewards[i] == player_rewards[i] * delta,
//   candidates_sampled == m + rejected_too_easy + rejected_too_hard,
//   |coach_rewards| == |player_rewards| == |instruction_ids|,
//   consecutive round numbers.
// Primitive failures that share one edited field are merged so that a single
// edit produces a single violation: "acc_post" (delta identity and outgoing
// chain both broken), "acc_pre_chain" (incoming chain and delta identity
// broken), "acc_pre" (first record), "delta", "coach_reward", "chain", "filter_bookkeeping",
// "batch_shape", "round_sequence".
std::vector<Violation> replay_audit(const std::vector<RoundRecord>& records);

// Flattens the scalar fields of every record into CSV.
void export_csv(const std::vector<RoundRecord>& records, std::ostream& out);

// FNV-1a 64 digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

// Writes text to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

PolicyParams load_params(const std::filesystem::path& path);

}  // namespace moebius

namespace moebius {

// <out>/round_<t>/{coach,player,state}.json
void write_checkpoint(const std::filesystem::path& out_dir, std::int64_t round, const PolicyParams& coach,
                      const PolicyParams& player, const Json& state);

}  // namespace moebius
