#pragma once

#include <map>
#include <span>
#include <string>

#include "moebius/types.hpp"

namespace moebius {

struct VoteResult {
  std::string pseudo_label;
  std::map<std::string, int> vote_counts;
  bool tie_broken = false;
};

// Most frequent answer; ties go to the lexicographically smallest string.
// Throws DomainError on an empty list.
VoteResult majority_vote(std::span<const std::string> answers);

// 1 iff the canonical forms are equal.
double verify(const std::string& answer, const std::string& label);

// Mean of {0,1} rewards against the group's pseudo-label.
double group_accuracy(const Vector& rewards);

// Same number as group_accuracy; an all-zero vector cannot come from a
// majority pseudo-label and is rejected.
double player_instruction_reward(const Vector& rewards);

// acc_post - acc_pre; both must lie in [0, 1].
double progress_delta(double acc_post, double acc_pre);

// R_player * delta.
double coach_reward(double player_reward, double delta);

}  // namespace moebius
