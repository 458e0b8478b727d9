#include "moebius/rewards.hpp"

#include <cmath>

#include "moebius/canonical.hpp"
#include "moebius/errors.hpp"

namespace moebius {

VoteResult majority_vote(std::span<const std::string> answers) {
  if (answers.empty()) throw DomainError("majority_vote: empty rollout group");
  VoteResult result;
  for (const std::string& a : answers) ++result.vote_counts[a];

  int best = 0;
  int winners = 0;
  // std::map iterates in lexicographic order, so the first maximum is the
  // smallest string among the tied answers.
  for (const auto& [answer, count] : result.vote_counts) {
    if (count > best) {
      best = count;
      winners = 1;
      result.pseudo_label = answer;
    } else if (count == best) {
      ++winners;
    }
  }
  result.tie_broken = winners > 1;
  return result;
}

double verify(const std::string& answer, const std::string& label) {
  return canonicalize_answer(answer) == canonicalize_answer(label) ? 1.0 : 0.0;
}

double group_accuracy(const Vector& rewards) {
  if (rewards.size() == 0) throw DomainError("group_accuracy: empty reward vector");
  return rewards.mean();
}

double player_instruction_reward(const Vector& rewards) {
  const double r = group_accuracy(rewards);
  if (r == 0.0) throw DomainError("player_instruction_reward: all-zero rewards cannot target a majority label");
  return r;
}

double progress_delta(double acc_post, double acc_pre) {
  auto in_unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
  if (!in_unit(acc_post) || !in_unit(acc_pre)) throw DomainError("progress_delta: accuracies must lie in [0, 1]");
  return acc_post - acc_pre;
}

double coach_reward(double player_reward, double delta) {
  if (!(player_reward >= 0.0 && player_reward <= 1.0)) {
    throw DomainError("coach_reward: player reward must lie in [0, 1]");
  }
  return player_reward * delta;
}

}  // namespace moebius
