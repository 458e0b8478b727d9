#pragma once

// Randomized small problem instances shared by the unit and acceptance suites,
// each paired with an oracle objective built from oracles.hpp.

#include <algorithm>
#include <cmath>

#include "moebius/domain.hpp"
#include "moebius/grpo.hpp"
#include "moebius/orchestrator.hpp"
#include "moebius/reinforce.hpp"
#include "moebius/softmax_policy.hpp"
#include "oracles.hpp"

namespace instances {

using namespace moebius;

inline Vector random_vector(Rng& rng, Eigen::Index size, double scale) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

inline double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

struct GrpoInstance {
  DomainSpec spec;
  double temperature = 1.0;
  Vector theta;
  GrpoBatch batch;
  GrpoConfig cfg;
  double entropy_coef = 0.0;

  SoftmaxPlayer player(const Vector& weights) const { return SoftmaxPlayer(spec, temperature, weights); }
  SoftmaxPlayer player() const { return player(theta); }

  long double oracle_objective(const Vector& weights) const {
    const Vector& ref = batch.reference.values;
    long double surrogate = 0, kl = 0, entropy = 0;
    std::size_t samples = 0;
    for (std::size_t i = 0; i < batch.groups.size(); ++i) {
      const oracle::ParsedTask parsed = oracle::parse_prompt(batch.tasks[i].prompt);
      const auto z = oracle::player_logits(parsed, weights, spec.levels, temperature);
      const auto lp = oracle::log_probs(z);
      const RolloutGroup& g = batch.groups[i];
      for (std::size_t j = 0; j < g.samples.size(); ++j) {
        const int y = std::stoi(g.samples[j].canonical_answer);
        const long double ratio = std::exp(lp[y] - batch.old_logprobs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        const long double a = g.advantages(static_cast<Eigen::Index>(j));
        const long double clipped = std::clamp<long double>(ratio, 1 - cfg.clip_eps, 1 + cfg.clip_eps);
        surrogate += std::min(ratio * a, clipped * a);
        ++samples;
      }
      kl += oracle::kl(z, oracle::player_logits(parsed, ref, spec.levels, temperature));
      entropy += oracle::entropy(z);
    }
    const long double m = static_cast<long double>(batch.groups.size());
    return surrogate / samples - cfg.kl_coef * kl / m + entropy_coef * entropy / m;
  }

  // Distance of the closest ratio to a clip boundary (where the objective
  // has a kink and finite differences are meaningless).
  double kink_distance() const {
    const SoftmaxPlayer p = player();
    double best = 1e9;
    for (std::size_t i = 0; i < batch.groups.size(); ++i) {
      std::vector<std::string> answers;
      for (const AnswerSample& s : batch.groups[i].samples) answers.push_back(s.canonical_answer);
      const Vector lp = p.logprobs(batch.tasks[i], answers);
      for (Eigen::Index j = 0; j < lp.size(); ++j) {
        const double ratio = std::exp(lp(j) - batch.old_logprobs(static_cast<Eigen::Index>(i), j));
        best = std::min({best, std::abs(ratio - 1 + cfg.clip_eps), std::abs(ratio - 1 - cfg.clip_eps)});
      }
    }
    return best;
  }
};

// F <= 8, K <= 6, D <= 4, n <= 8, m <= 4. Sampler log-probabilities are
// jittered so that ratios move off 1 and some terms clip.
inline GrpoInstance random_grpo_instance(Rng& rng) {
  while (true) {
    GrpoInstance inst;
    inst.spec.levels = 2 + static_cast<int>(rng.below(3));
    inst.spec.answers = 2 + static_cast<int>(rng.below(5));
    inst.temperature = 0.5 + rng.uniform();
    inst.theta = random_vector(rng, inst.spec.feature_count(), 1.5);
    inst.cfg.clip_eps = 0.1 + 0.2 * rng.uniform();
    inst.cfg.kl_coef = 0.1 * rng.uniform();
    inst.entropy_coef = 0.1 * (rng.uniform() - 0.5);
    const SoftmaxPlayer player = inst.player();
    const int m = 1 + static_cast<int>(rng.below(4));
    const int n = 2 + static_cast<int>(rng.below(7));
    std::vector<TaskInstruction> tasks;
    std::vector<RolloutGroup> groups;
    for (int i = 0; i < m; ++i) {
      const int d = 1 + static_cast<int>(rng.below(inst.spec.levels));
      TaskInstruction task = generate_task(d, rng.next(), inst.spec);
      task.id = "fd-" + std::to_string(i);
      std::vector<AnswerSample> samples = player.sample_answers(task, n, {rng.next(), 0, i, Stream::kRollout});
      for (AnswerSample& s : samples) s.sampler_logprob += 0.3 * gaussian(rng);
      groups.push_back(build_rollout_group(task.id, samples, inst.cfg.std_eps));
      tasks.push_back(task);
    }
    const Vector ref = random_vector(rng, inst.spec.feature_count(), 1.5);
    inst.batch = make_grpo_batch(tasks, groups,
                                 {"softmax_player", {inst.spec.feature_count()}, ref, 0});
    if (inst.kink_distance() > 1e-4) return inst;
  }
}

struct ReinforceInstance {
  DomainSpec spec;
  Vector psi;
  CoachBatch batch;
  double entropy_coef = 0.0;
  double baseline = 0.0;

  long double oracle_objective(const Vector& weights) const {
    std::vector<long double> z(weights.data(), weights.data() + weights.size());
    const auto lp = oracle::log_probs(z);
    long double s = 0;
    for (std::size_t i = 0; i < batch.tasks.size(); ++i) {
      s += (batch.rewards(static_cast<Eigen::Index>(i)) - baseline) * lp[batch.tasks[i].difficulty - 1];
    }
    return s / batch.tasks.size() + entropy_coef * oracle::entropy(z);
  }
};

inline ReinforceInstance random_reinforce_instance(Rng& rng) {
  ReinforceInstance inst;
  inst.spec.levels = 2 + static_cast<int>(rng.below(3));
  inst.psi = random_vector(rng, inst.spec.levels, 2.0);
  inst.entropy_coef = 0.1 * rng.uniform();
  inst.baseline = rng.uniform() - 0.5;
  const SoftmaxCoach coach(inst.spec, inst.psi);
  const int m = 1 + static_cast<int>(rng.below(4));
  inst.batch.rewards.resize(m);
  for (int i = 0; i < m; ++i) {
    inst.batch.tasks.push_back(coach.sample_task({rng.next(), 1, i, Stream::kCoach}));
    inst.batch.rewards(i) = 2.0 * rng.uniform() - 1.0;
  }
  return inst;
}

}  // namespace instances
