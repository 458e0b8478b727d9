#include "moebius/orchestrator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "moebius/errors.hpp"
#include "moebius/parallel.hpp"
#include "moebius/rewards.hpp"

namespace moebius {

RolloutGroup build_rollout_group(std::string instruction_id, std::vector<AnswerSample> samples, double std_eps) {
  std::vector<std::string> answers;
  answers.reserve(samples.size());
  for (const AnswerSample& s : samples) answers.push_back(s.canonical_answer);
  VoteResult vote = majority_vote(answers);

  RolloutGroup group;
  group.instruction_id = std::move(instruction_id);
  group.pseudo_label = vote.pseudo_label;
  group.tie_broken = vote.tie_broken;
  group.rewards.resize(static_cast<Eigen::Index>(answers.size()));
  for (std::size_t j = 0; j < answers.size(); ++j) {
    group.rewards(static_cast<Eigen::Index>(j)) = verify(answers[j], vote.pseudo_label);
  }
  group.acc = group_accuracy(group.rewards);
  group.player_reward = player_instruction_reward(group.rewards);
  group.advantages = normalize_advantages(group.rewards, std_eps);
  group.samples = std::move(samples);
  return group;
}

namespace {

struct Candidate {
  TaskInstruction task;
  RolloutGroup group;
};

Candidate make_candidate(const CoachPolicy& coach, const PlayerPolicy& player, const RunConfig& cfg,
                         std::int64_t round, std::int64_t index) {
  Candidate c;
  c.task = coach.sample_task({cfg.seed, round, index, Stream::kCoach});
  std::vector<AnswerSample> samples = player.sample_answers(c.task, cfg.n, {cfg.seed, round, index, Stream::kRollout});
  c.group = build_rollout_group(c.task.id, std::move(samples), cfg.grpo.std_eps);
  return c;
}

}  // namespace

FilteredBatch propose_filtered_batch(const CoachPolicy& coach, const PlayerPolicy& player, const RunConfig& cfg,
                                     std::int64_t round) {
  FilteredBatch batch;
  FilterStats& stats = batch.stats;
  const bool filter = cfg.ablation.instruction_filter_enabled;
  const std::size_t m = static_cast<std::size_t>(cfg.m);
  const std::int64_t limit = filter ? cfg.filter_attempts() : cfg.m;
  const std::int64_t chunk = cfg.workers <= 1 ? 1 : 2 * cfg.workers;

  std::vector<Candidate> rejected;
  std::vector<std::size_t> rejected_index;
  std::int64_t next = 0;
  while (batch.tasks.size() < m && next < limit) {
    const std::int64_t count = std::min(chunk, limit - next);
    std::vector<Candidate> wave(static_cast<std::size_t>(count));
    parallel_for(wave.size(), cfg.workers, [&](std::size_t k) {
      wave[k] = make_candidate(coach, player, cfg, round, next + static_cast<std::int64_t>(k));
    });
    for (Candidate& c : wave) {
      if (batch.tasks.size() == m) break;  // later wave members are discarded unseen
      ++stats.candidates_sampled;
      const double acc = c.group.acc;
      if (!filter || (acc >= cfg.band_lo && acc <= cfg.band_hi)) {
        batch.tasks.push_back(std::move(c.task));
        batch.groups.push_back(std::move(c.group));
      } else {
        if (acc > cfg.band_hi) {
          ++stats.rejected_too_easy;
        } else {
          ++stats.rejected_too_hard;
        }
        rejected.push_back(std::move(c));
      }
    }
    next += count;
  }

  if (batch.tasks.size() < m) {
    const double mid = 0.5 * (cfg.band_lo + cfg.band_hi);
    std::vector<std::size_t> order(rejected.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(rejected[a].group.acc - mid) < std::abs(rejected[b].group.acc - mid);
    });
    stats.fallback_used = true;
    for (std::size_t k = 0; k < order.size() && batch.tasks.size() < m; ++k) {
      Candidate& c = rejected[order[k]];
      if (c.group.acc > cfg.band_hi) {
        --stats.rejected_too_easy;
      } else {
        --stats.rejected_too_hard;
      }
      ++stats.fallback_filled;
      batch.tasks.push_back(std::move(c.task));
      batch.groups.push_back(std::move(c.group));
    }
  }
  if (batch.tasks.size() < m) throw DomainError("propose_filtered_batch: not enough candidates");

  if (cfg.regenerate_training_rollouts) {
    parallel_for(m, cfg.workers, [&](std::size_t i) {
      const TaskInstruction& task = batch.tasks[i];
      const auto index = std::stoll(task.id.substr(task.id.find("-c") + 2));
      std::vector<AnswerSample> samples =
          player.sample_answers(task, cfg.n, {cfg.seed, round, index, Stream::kTrainingRollout});
      batch.groups[i] = build_rollout_group(task.id, std::move(samples), cfg.grpo.std_eps);
    });
  }
  for (const RolloutGroup& g : batch.groups) stats.zero_variance_groups += g.zero_variance() ? 1 : 0;
  return batch;
}

EvalReport evaluate_report(const PlayerPolicy& player, const ValidationSet& validation,
                           const EvalProtocol& protocol, int workers) {
  if (validation.tasks.empty()) throw DomainError("evaluate_player: empty validation set");
  if (protocol.kind == EvalProtocol::Kind::kExact && !player.exactly_evaluable()) {
    throw CapabilityError("evaluate_player: exact protocol needs an exactly evaluable policy");
  }
  std::vector<double> scores(validation.tasks.size());
  parallel_for(scores.size(), workers, [&](std::size_t v) {
    const TaskInstruction& task = validation.tasks[v];
    const std::string& truth = validation.ground_truth[v];
    if (protocol.kind == EvalProtocol::Kind::kExact) {
      const std::string answers[] = {truth};
      scores[v] = std::exp(player.logprobs(task, answers)(0));
    } else {
      const auto samples =
          player.sample_answers(task, protocol.k, {protocol.seed, 0, static_cast<std::int64_t>(v), Stream::kEvaluation});
      const auto hits = std::count_if(samples.begin(), samples.end(),
                                      [&](const AnswerSample& s) { return s.canonical_answer == truth; });
      scores[v] = static_cast<double>(hits) / static_cast<double>(protocol.k);
    }
  });

  EvalReport report;
  const std::size_t levels = validation.level_counts.size();
  report.per_level.assign(levels, 0.0);
  report.level_counts.assign(levels, 0);
  double total = 0.0;
  for (std::size_t v = 0; v < scores.size(); ++v) {
    total += scores[v];
    const auto level = static_cast<std::size_t>(validation.tasks[v].difficulty - 1);
    if (level < levels) {
      report.per_level[level] += scores[v];
      ++report.level_counts[level];
    }
  }
  for (std::size_t l = 0; l < levels; ++l) {
    if (report.level_counts[l] > 0) report.per_level[l] /= report.level_counts[l];
  }
  report.overall = total / static_cast<double>(scores.size());
  return report;
}

double evaluate_player(const PlayerPolicy& player, const ValidationSet& validation, const EvalProtocol& protocol,
                       int workers) {
  return evaluate_report(player, validation, protocol, workers).overall;
}

GrpoStats execute_player_training(PlayerPolicy& player, const FilteredBatch& batch, const PolicyParams& reference,
                                  const RunConfig& cfg) {
  const GrpoBatch grpo = make_grpo_batch(batch.tasks, batch.groups, reference);
  return player.apply_grpo(grpo, {cfg.grpo, cfg.player_lr, cfg.player_entropy_coef, cfg.workers});
}

CoevolutionState initialize_state(const RunConfig& cfg, CoachPolicy& coach, PlayerPolicy& player) {
  CoevolutionState state;
  state.coach = &coach;
  state.player = &player;
  state.validation = build_validation_set(cfg.domain, cfg.validation_seed);
  state.reference = player.snapshot();
  state.acc_pre = evaluate_player(player, state.validation, cfg.eval_protocol, cfg.workers);
  state.baseline = RewardBaseline(cfg.baseline_decay);
  return state;
}

RoundOutcome run_round(CoevolutionState& state, const RunConfig& cfg) {
  CoachPolicy& coach = *state.coach;
  PlayerPolicy& player = *state.player;
  const std::int64_t round = state.completed_rounds + 1;

  RoundOutcome outcome;
  RoundRecord& record = outcome.record;
  record.round = round;
  record.acc_pre = state.acc_pre;

  // Nothing has moved until both snapshots exist.
  std::optional<PolicyParams> coach_start, player_start;
  const PolicyParams reference_start = state.reference;
  try {
    coach_start = coach.snapshot();
    player_start = player.snapshot();
    if (cfg.grpo.ref_refresh_interval > 0 && round > 1 && (round - 1) % cfg.grpo.ref_refresh_interval == 0) {
      state.reference = *player_start;
    }

    const FilteredBatch batch = propose_filtered_batch(coach, player, cfg, round);
    record.filter_stats = batch.stats;
    for (std::size_t i = 0; i < batch.tasks.size(); ++i) {
      record.instruction_ids.push_back(batch.tasks[i].id);
      record.difficulties.push_back(batch.tasks[i].difficulty);
      record.player_rewards.push_back(batch.groups[i].player_reward);
    }

    const GrpoStats grpo = execute_player_training(player, batch, state.reference, cfg);
    const GrpoEvaluation& last = grpo.epochs.back();
    record.loss_stats.player_surrogate = last.surrogate;
    record.loss_stats.kl = last.kl;
    record.loss_stats.player_entropy = last.entropy;
    record.loss_stats.player_objective = last.objective;
    record.loss_stats.clip_fraction = last.clip_fraction;

    record.acc_post = evaluate_player(player, state.validation, cfg.eval_protocol, cfg.workers);
    record.delta = progress_delta(record.acc_post, record.acc_pre);

    CoachBatch coach_batch;
    coach_batch.tasks = batch.tasks;
    coach_batch.rewards.resize(static_cast<Eigen::Index>(batch.tasks.size()));
    for (std::size_t i = 0; i < batch.tasks.size(); ++i) {
      const double r = coach_reward(batch.groups[i].player_reward, record.delta);
      coach_batch.rewards(static_cast<Eigen::Index>(i)) = r;
      record.coach_rewards.push_back(r);
    }

    const double baseline = cfg.baseline_mode == BaselineMode::kEma ? state.baseline.value() : 0.0;
    if (cfg.ablation.coach_update_enabled) {
      const ReinforceStats stats = coach.apply_reinforce(coach_batch, {cfg.coach_lr, cfg.coach_entropy_coef, baseline});
      record.loss_stats.coach_objective = stats.objective;
      record.loss_stats.coach_entropy = stats.entropy;
    } else {
      record.loss_stats.coach_objective = reinforce_surrogate(coach, coach_batch, cfg.coach_entropy_coef, baseline);
      record.loss_stats.coach_entropy = coach.entropy();
    }
    if (cfg.baseline_mode == BaselineMode::kEma) state.baseline.observe(coach_batch.rewards);
  } catch (const std::exception& e) {
    outcome.error = std::current_exception();
    std::string message = e.what();
    state.reference = reference_start;
    try {
      if (coach_start) coach.restore(*coach_start);
      if (player_start) player.restore(*player_start);
    } catch (const std::exception& restore_error) {
      message += std::string("; restore failed: ") + restore_error.what();
    }
    RoundRecord aborted;
    aborted.kind = "aborted";
    aborted.round = round;
    aborted.acc_pre = state.acc_pre;
    aborted.acc_post = state.acc_pre;
    aborted.error = message;
    record = std::move(aborted);
    return outcome;
  }

  state.acc_pre = record.acc_post;
  state.completed_rounds = round;
  return outcome;
}

RunResult run(const RunConfig& cfg, CoachPolicy& coach, PlayerPolicy& player, const RunHooks& hooks) {
  RunResult result;
  auto emit = [&](const RoundRecord& r) {
    result.records.push_back(r);
    if (hooks.on_record) hooks.on_record(r);
  };

  CoevolutionState state;
  try {
    state = initialize_state(cfg, coach, player);
  } catch (...) {
    result.error = std::current_exception();
    return result;
  }
  RoundRecord initial;
  initial.kind = "initial";
  initial.round = 0;
  initial.acc_pre = state.acc_pre;
  initial.acc_post = state.acc_pre;
  emit(initial);
  result.initial_accuracy = state.acc_pre;
  result.final_accuracy = state.acc_pre;
  if (hooks.on_checkpoint) hooks.on_checkpoint(0, state);

  for (int t = 1; t <= cfg.T; ++t) {
    RoundOutcome outcome = run_round(state, cfg);
    emit(outcome.record);
    if (outcome.error) {
      result.error = outcome.error;
      break;
    }
    result.final_accuracy = state.acc_pre;
    result.rounds_completed = state.completed_rounds;
    const bool periodic = cfg.checkpoint_interval > 0 && t % cfg.checkpoint_interval == 0;
    if (hooks.on_checkpoint && (periodic || t == cfg.T)) hooks.on_checkpoint(t, state);
  }
  return result;
}

}  // namespace moebius
