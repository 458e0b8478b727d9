#include "moebius/metrics.hpp"

#include <cstdio>
#include <iterator>
#include <sstream>

#include "moebius/errors.hpp"

namespace moebius {

MetricsWriter::MetricsWriter(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw ConfigError(path.string(), "cannot open metrics file for writing");
}

std::string encode_record_line(const RoundRecord& record) { return to_json(record).dump() + "\n"; }

void MetricsWriter::write(const RoundRecord& record) {
  out_ << encode_record_line(record);
  out_.flush();
}

std::vector<RoundRecord> read_metrics(std::istream& in) {
  std::vector<RoundRecord> records;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(number);
    try {
      records.push_back(round_record_from_json(Json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(where, std::string("malformed JSON: ") + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(where, e.what());
    }
  }
  return records;
}

std::vector<RoundRecord> read_metrics_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open metrics file");
  return read_metrics(in);
}

namespace {

bool products_hold(const RoundRecord& r, double delta) {
  if (r.coach_rewards.size() != r.player_rewards.size()) return false;
  for (std::size_t i = 0; i < r.coach_rewards.size(); ++i) {
    if (r.coach_rewards[i] != r.player_rewards[i] * delta) return false;
  }
  return true;
}

}  // namespace

std::vector<Violation> replay_audit(const std::vector<RoundRecord>& records) {
  std::vector<Violation> out;
  auto report = [&](std::size_t index, std::string kind, std::string message) {
    out.push_back({records[index].round, index + 1, std::move(kind), std::move(message)});
  };

  // Positions of records that take part in the accuracy chain.
  std::vector<std::size_t> seq;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RoundRecord& r = records[i];
    const std::size_t m = r.instruction_ids.size();
    if (r.kind == "aborted") continue;
    seq.push_back(i);
    if (r.coach_rewards.size() != m || r.player_rewards.size() != m || r.difficulties.size() != m ||
        (r.kind == "round" && m == 0)) {
      report(i, "batch_shape", "per-instruction field lengths disagree");
    }
    const FilterStats& f = r.filter_stats;
    if (r.kind == "round" &&
        f.candidates_sampled != static_cast<int>(m) + f.rejected_too_easy + f.rejected_too_hard) {
      report(i, "filter_bookkeeping", "candidates_sampled != m + rejected_too_easy + rejected_too_hard");
    }
  }

  std::vector<bool> delta_ok(seq.size());
  std::vector<bool> explained(seq.size(), false);
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const RoundRecord& r = records[seq[k]];
    delta_ok[k] = r.delta == r.acc_post - r.acc_pre;
    const std::int64_t expected = k == 0 ? 0 : records[seq[k - 1]].round + 1;
    if (r.round != expected) {
      report(seq[k], "round_sequence", "expected round " + std::to_string(expected));
    }
  }

  for (std::size_t k = 1; k < seq.size(); ++k) {
    const RoundRecord& prev = records[seq[k - 1]];
    const RoundRecord& cur = records[seq[k]];
    if (cur.acc_pre == prev.acc_post) continue;
    if (!delta_ok[k - 1] && !explained[k - 1]) {
      explained[k - 1] = true;
      report(seq[k - 1], "acc_post",
             "acc_post disagrees with both delta and the next round's acc_pre (chained bookkeeping)");
    } else if (!delta_ok[k]) {
      explained[k] = true;
      report(seq[k], "acc_pre_chain", "acc_pre disagrees with both delta and the previous round's acc_post");
    } else {
      report(seq[k], "chain", "acc_pre != previous acc_post");
    }
  }

  for (std::size_t k = 0; k < seq.size(); ++k) {
    const RoundRecord& r = records[seq[k]];
    double reference = r.delta;
    if (!delta_ok[k] && !explained[k]) {
      const double recomputed = r.acc_post - r.acc_pre;
      if (!r.coach_rewards.empty() && !products_hold(r, r.delta) && products_hold(r, recomputed)) {
        report(seq[k], "delta", "delta != acc_post - acc_pre");
        reference = recomputed;
      } else if (k + 1 == seq.size() && k > 0) {
        report(seq[k], "acc_post", "acc_post disagrees with delta");
      } else if (k == 0) {
        report(seq[k], "acc_pre", "acc_pre disagrees with delta");
      } else {
        report(seq[k], "delta", "delta != acc_post - acc_pre");
      }
    }
    const std::size_t count = std::min(r.coach_rewards.size(), r.player_rewards.size());
    for (std::size_t i = 0; i < count; ++i) {
      if (r.coach_rewards[i] != r.player_rewards[i] * reference) {
        report(seq[k], "coach_reward",
               "coach_rewards[" + std::to_string(i) + "] != player_rewards[" + std::to_string(i) + "] * delta");
      }
    }
  }
  return out;
}

void export_csv(const std::vector<RoundRecord>& records, std::ostream& out) {
  out << "kind,round,m,acc_pre,acc_post,delta,mean_player_reward,mean_coach_reward,candidates_sampled,"
         "rejected_too_easy,rejected_too_hard,fallback_filled,fallback_used,zero_variance_groups,"
         "player_surrogate,kl,player_entropy,player_objective,clip_fraction,coach_objective,coach_entropy\n";
  auto num = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  for (const RoundRecord& r : records) {
    const FilterStats& f = r.filter_stats;
    const LossStats& l = r.loss_stats;
    out << r.kind << ',' << r.round << ',' << r.instruction_ids.size() << ',' << num(r.acc_pre) << ','
        << num(r.acc_post) << ',' << num(r.delta) << ',' << num(mean(r.player_rewards)) << ','
        << num(mean(r.coach_rewards)) << ',' << f.candidates_sampled << ',' << f.rejected_too_easy << ','
        << f.rejected_too_hard << ',' << f.fallback_filled << ',' << (f.fallback_used ? 1 : 0) << ','
        << f.zero_variance_groups << ',' << num(l.player_surrogate) << ',' << num(l.kl) << ','
        << num(l.player_entropy) << ',' << num(l.player_objective) << ',' << num(l.clip_fraction) << ','
        << num(l.coach_objective) << ',' << num(l.coach_entropy) << '\n';
  }
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string file_digest(const std::filesystem::path& path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : read_file(path)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(path.string(), "cannot open for writing");
    out << text;
    if (!out.flush()) throw ConfigError(path.string(), "write failed");
  }
  std::filesystem::rename(tmp, path);
}

PolicyParams load_params(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string(), std::string("malformed JSON: ") + e.what());
  }
  return params_from_json(j);
}

void write_checkpoint(const std::filesystem::path& out_dir, std::int64_t round, const PolicyParams& coach,
                      const PolicyParams& player, const Json& state) {
  const std::filesystem::path dir = out_dir / ("round_" + std::to_string(round));
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "coach.json", to_json(coach).dump(2) + "\n");
  write_file_atomic(dir / "player.json", to_json(player).dump(2) + "\n");
  write_file_atomic(dir / "state.json", state.dump(2) + "\n");
}

}  // namespace moebius
