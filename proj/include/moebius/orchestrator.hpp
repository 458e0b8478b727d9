#pragma once

#include <exception>
#include <functional>
#include <vector>

#include "moebius/domain.hpp"
#include "moebius/grpo.hpp"
#include "moebius/policy.hpp"
#include "moebius/reinforce.hpp"
#include "moebius/types.hpp"

namespace moebius {

// Majority vote, {0,1} rewards, acc and normalized advantages for one
// instruction's rollouts.
RolloutGroup build_rollout_group(std::string instruction_id, std::vector<AnswerSample> samples,
                                 double std_eps);

struct FilteredBatch {
  std::vector<TaskInstruction> tasks;
  std::vector<RolloutGroup> groups;
  FilterStats stats;
};

// Samples candidates until m fall inside [band_lo, band_hi] (inclusive). If
// max_filter_attempts runs out first, the remaining slots are filled with the
// rejected candidates nearest the band midpoint. With the filter disabled the
// first m candidates are taken as is. Candidate c uses the coach stream
// (seed, round, c) and rollout streams (seed, round, c, j); candidates are
// evaluated in parallel but accepted in index order, so the batch does not
// depend on cfg.workers.
FilteredBatch propose_filtered_batch(const CoachPolicy& coach, const PlayerPolicy& player, const RunConfig& cfg,
                                     std::int64_t round);

struct EvalReport {
  double overall = 0.0;
  std::vector<double> per_level;  // index d - 1
  std::vector<int> level_counts;
};

// Exact: mean probability of the ground-truth answer. Sampled: mean@k with
// streams keyed by (protocol.seed, task index).
EvalReport evaluate_report(const PlayerPolicy& player, const ValidationSet& validation,
                           const EvalProtocol& protocol, int workers = 1);
double evaluate_player(const PlayerPolicy& player, const ValidationSet& validation, const EvalProtocol& protocol,
                       int workers = 1);

GrpoStats execute_player_training(PlayerPolicy& player, const FilteredBatch& batch, const PolicyParams& reference,
                                  const RunConfig& cfg);

struct CoevolutionState {
  CoachPolicy* coach = nullptr;
  PlayerPolicy* player = nullptr;
  ValidationSet validation;
  PolicyParams reference;
  double acc_pre = 0.0;
  RewardBaseline baseline;
  std::int64_t completed_rounds = 0;
};

// Validation set, reference snapshot and initial accuracy.
CoevolutionState initialize_state(const RunConfig& cfg, CoachPolicy& coach, PlayerPolicy& player);

struct RoundOutcome {
  RoundRecord record;
  std::exception_ptr error;  // set iff record.kind == "aborted"
};

// One full loop iteration. On any failure both policies are restored to their
// round-start snapshots and an "aborted" record is returned with the error.
RoundOutcome run_round(CoevolutionState& state, const RunConfig& cfg);

struct RunHooks {
  std::function<void(const RoundRecord&)> on_record;
  // Called after round 0 (initial), every checkpoint_interval rounds and
  // after the final round.
  std::function<void(std::int64_t round, const CoevolutionState&)> on_checkpoint;
};

struct RunResult {
  std::vector<RoundRecord> records;
  double initial_accuracy = 0.0;
  double final_accuracy = 0.0;
  std::int64_t rounds_completed = 0;
  std::exception_ptr error;
};

// Initial evaluation followed by cfg.T rounds. Stops at the first aborted
// round; the error is returned, not thrown, so callers can flush output.
RunResult run(const RunConfig& cfg, CoachPolicy& coach, PlayerPolicy& player, const RunHooks& hooks = {});

}  // namespace moebius
