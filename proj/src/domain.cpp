#include "moebius/domain.hpp"

#include <charconv>

#include "moebius/errors.hpp"
#include "moebius/random.hpp"

namespace moebius {

namespace {

void check_difficulty(int difficulty, const DomainSpec& spec) {
  if (difficulty < 1 || difficulty > spec.levels) {
    throw DomainError("difficulty " + std::to_string(difficulty) + " outside [1, " +
                      std::to_string(spec.levels) + "]");
  }
}

}  // namespace

std::vector<int> task_operands(int difficulty, std::uint64_t instance_seed, const DomainSpec& spec) {
  check_difficulty(difficulty, spec);
  Rng rng = derive_rng(instance_seed, 0, 0, 0, Stream::kInstance);
  const auto width = static_cast<std::uint64_t>(spec.operand_hi - spec.operand_lo + 1);
  std::vector<int> operands(static_cast<std::size_t>(difficulty));
  for (int& a : operands) a = spec.operand_lo + static_cast<int>(rng.below(width));
  return operands;
}

std::string render_prompt(std::span<const int> operands, int answers) {
  std::string out = "compute (";
  for (std::size_t i = 0; i < operands.size(); ++i) {
    if (i) out += " + ";
    out += std::to_string(operands[i]);
  }
  out += ") mod " + std::to_string(answers);
  return out;
}

int sum_mod(std::span<const int> operands, int answers) {
  long long total = 0;
  for (int a : operands) total += a;
  const long long r = total % answers;
  return static_cast<int>(r < 0 ? r + answers : r);
}

TaskInstruction generate_task(int difficulty, std::uint64_t instance_seed, const DomainSpec& spec) {
  const std::vector<int> operands = task_operands(difficulty, instance_seed, spec);
  TaskInstruction task;
  task.prompt = render_prompt(operands, spec.answers);
  task.difficulty = difficulty;
  task.instance_seed = instance_seed;
  task.coach_trace = difficulty - 1;
  return task;
}

TaskFacts task_facts(const TaskInstruction& task, const DomainSpec& spec) {
  const std::vector<int> operands = task_operands(task.difficulty, task.instance_seed, spec);
  if (render_prompt(operands, spec.answers) != task.prompt) {
    throw DomainError("task '" + task.id + "' was not generated by this domain");
  }
  return {task.difficulty, sum_mod(operands, spec.answers), operands.front()};
}

std::string ground_truth(const TaskInstruction& task, const DomainSpec& spec) {
  return std::to_string(task_facts(task, spec).truth);
}

Vector features(const TaskFacts& facts, int answer, const DomainSpec& spec) {
  if (answer < 0 || answer >= spec.answers) {
    throw DomainError("answer " + std::to_string(answer) + " outside the support");
  }
  Vector f = Vector::Zero(spec.feature_count());
  f(kTruthFeature) = answer == facts.truth ? 1.0 / facts.difficulty : 0.0;
  f(kParityFeature) = (answer % 2) == (((facts.first_operand % 2) + 2) % 2) ? 1.0 : 0.0;
  f(kBiasFeature) = 1.0;
  f(kLevelFeature0 + facts.difficulty - 1) = 1.0;
  return f;
}

Matrix feature_matrix(const TaskFacts& facts, const DomainSpec& spec) {
  Matrix phi(spec.answers, spec.feature_count());
  for (int y = 0; y < spec.answers; ++y) phi.row(y) = features(facts, y, spec).transpose();
  return phi;
}

int answer_index(const std::string& canonical, const DomainSpec& spec) {
  int value = -1;
  const char* end = canonical.data() + canonical.size();
  const auto [ptr, ec] = std::from_chars(canonical.data(), end, value);
  if (ec != std::errc() || ptr != end || canonical.empty()) return -1;
  if (std::to_string(value) != canonical) return -1;
  return value >= 0 && value < spec.answers ? value : -1;
}

ValidationSet build_validation_set(const DomainSpec& spec, std::uint64_t seed) {
  ValidationSet set;
  set.level_counts.assign(static_cast<std::size_t>(spec.levels), 0);
  for (int d = 1; d <= spec.levels; ++d) {
    for (int k = 0; k < spec.val_tasks_per_level; ++k) {
      Rng rng = derive_rng(seed, 0, d, k, Stream::kValidation);
      TaskInstruction task = generate_task(d, rng.next(), spec);
      task.id = "val-" + std::to_string(d) + "-" + std::to_string(k);
      set.ground_truth.push_back(ground_truth(task, spec));
      set.tasks.push_back(std::move(task));
      ++set.level_counts[static_cast<std::size_t>(d - 1)];
    }
  }
  return set;
}

}  // namespace moebius
