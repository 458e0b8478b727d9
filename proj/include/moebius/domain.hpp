#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "moebius/types.hpp"

namespace moebius {

// Feature indices of the skill-ladder player model.
inline constexpr int kTruthFeature = 0;
inline constexpr int kParityFeature = 1;
inline constexpr int kBiasFeature = 2;
inline constexpr int kLevelFeature0 = 3;

std::vector<int> task_operands(int difficulty, std::uint64_t instance_seed, const DomainSpec& spec);
std::string render_prompt(std::span<const int> operands, int answers);
int sum_mod(std::span<const int> operands, int answers);

// Task "compute (a_1 + ... + a_d) mod K". id/round/coach_trace are left for
// the caller; coach_trace defaults to d - 1.
TaskInstruction generate_task(int difficulty, std::uint64_t instance_seed, const DomainSpec& spec);

// What the player model needs from a task, recovered once per call.
struct TaskFacts {
  int difficulty = 1;
  int truth = 0;
  int first_operand = 0;
};

// Regenerates the task from (difficulty, seed) and checks the prompt, so a
// task this domain did not produce throws DomainError.
TaskFacts task_facts(const TaskInstruction& task, const DomainSpec& spec);
std::string ground_truth(const TaskInstruction& task, const DomainSpec& spec);

Vector features(const TaskFacts& facts, int answer, const DomainSpec& spec);
// K x F, one row per candidate answer.
Matrix feature_matrix(const TaskFacts& facts, const DomainSpec& spec);

// Parses a canonical answer into its index in [0, K); -1 when outside.
int answer_index(const std::string& canonical, const DomainSpec& spec);

struct ValidationSet {
  std::vector<TaskInstruction> tasks;
  std::vector<std::string> ground_truth;
  std::vector<int> level_counts;  // index d - 1
};

ValidationSet build_validation_set(const DomainSpec& spec, std::uint64_t seed);

}  // namespace moebius
