#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace moebius {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Skill-ladder task family parameters. Difficulty d in [1, levels] sums d
// operands modulo `answers`.
struct DomainSpec {
  int levels = 8;     // D
  int answers = 10;   // K
  int operand_lo = 0;
  int operand_hi = 9;
  int val_tasks_per_level = 8;

  // truth, parity, bias, then one intercept per level.
  int feature_count() const { return 3 + levels; }
};

struct TaskInstruction {
  std::string id;
  std::string prompt;
  int difficulty = 1;
  std::uint64_t instance_seed = 0;
  int coach_trace = 0;  // sampled action index (difficulty - 1)
  std::int64_t round = 0;
};

struct AnswerSample {
  std::string canonical_answer;
  double sampler_logprob = 0.0;
  int sample_index = 1;  // 1-based
};

struct RolloutGroup {
  std::string instruction_id;
  std::vector<AnswerSample> samples;
  std::string pseudo_label;
  Vector rewards;
  Vector advantages;
  double acc = 0.0;
  double player_reward = 0.0;
  bool tie_broken = false;

  bool zero_variance() const { return (rewards.array() == rewards(0)).all(); }
};

struct GrpoConfig {
  double clip_eps = 0.2;
  double kl_coef = 1e-3;
  double std_eps = 1e-8;
  int inner_epochs = 1;
  int ref_refresh_interval = 0;  // rounds; 0 keeps the initial reference
};

struct EvalProtocol {
  enum class Kind { kExact, kSampled };
  Kind kind = Kind::kExact;
  int k = 0;
  std::uint64_t seed = 0;
};

struct AblationMode {
  bool coach_update_enabled = true;
  bool instruction_filter_enabled = true;
};

enum class BaselineMode { kNone, kEma };

struct RunConfig {
  int m = 16;
  int n = 16;
  int T = 300;
  double band_lo = 0.2;
  double band_hi = 0.8;
  std::optional<int> max_filter_attempts;  // defaults to 64 * m
  GrpoConfig grpo;
  double coach_lr = 0.05;
  double player_lr = 0.05;
  double coach_entropy_coef = 1e-2;
  double player_entropy_coef = -1e-2;
  std::uint64_t seed = 0;
  EvalProtocol eval_protocol;

  DomainSpec domain;
  AblationMode ablation;
  bool regenerate_training_rollouts = false;
  BaselineMode baseline_mode = BaselineMode::kNone;
  double baseline_decay = 0.9;
  double player_temperature = 1.0;
  double player_init_truth_weight = 0.5;
  std::uint64_t validation_seed = 0;
  int workers = 1;
  int checkpoint_interval = 0;
  std::string run_id = "run";

  int filter_attempts() const { return max_filter_attempts.value_or(64 * m); }
};

// Flat parameter vector with enough metadata to rebuild the policy.
struct PolicyParams {
  std::string kind;  // "softmax_coach" | "softmax_player"
  std::vector<std::int64_t> dims;
  Vector values;
  std::int64_t step_count = 0;

  // FNV-1a over kind, dims and raw value bytes. The step counter is
  // excluded, so a zero-lr step leaves the identity unchanged.
  std::uint64_t hash() const;
};

struct FilterStats {
  int candidates_sampled = 0;
  int rejected_too_easy = 0;
  int rejected_too_hard = 0;
  int fallback_filled = 0;
  bool fallback_used = false;
  int zero_variance_groups = 0;
};

struct LossStats {
  double player_surrogate = 0.0;
  double kl = 0.0;
  double player_entropy = 0.0;
  double player_objective = 0.0;
  double clip_fraction = 0.0;
  double coach_objective = 0.0;
  double coach_entropy = 0.0;
};

// One line of the metrics stream. `kind` is "initial" for the evaluation
// before round 1, "round" for completed rounds and "aborted" for failures.
struct RoundRecord {
  std::string kind = "round";
  std::int64_t round = 0;
  std::vector<std::string> instruction_ids;
  std::vector<int> difficulties;
  double acc_pre = 0.0;
  double acc_post = 0.0;
  double delta = 0.0;
  std::vector<double> player_rewards;
  std::vector<double> coach_rewards;
  FilterStats filter_stats;
  LossStats loss_stats;
  std::string error;
};

}  // namespace moebius
