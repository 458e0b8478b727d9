#pragma once

// Message schemas for the policy service:
//   POST /v1/sample   POST /v1/logprob   POST /v1/update   GET /v1/snapshot?role=
// Every request carries run_id, round and an idempotency key that the
// response echoes. Decoders are strict (unknown keys rejected).

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "moebius/grpo.hpp"
#include "moebius/records.hpp"
#include "moebius/reinforce.hpp"

namespace moebius::wire {

enum class Role { kCoach, kPlayer };
std::string to_string(Role role);
Role role_from_string(const std::string& s, const std::string& path = "role");

struct SampleRequest {
  std::string run_id;
  std::int64_t round = 0;
  std::string idempotency_key;
  Role role = Role::kPlayer;
  std::optional<TaskInstruction> task;  // required for the player
  int n = 1;
  double temperature = 1.0;
  StreamKey rng;  // derivation the server must use
};

struct SampledAnswer {
  std::string text;
  double logprob = 0.0;
  std::optional<TaskInstruction> task;  // set for coach samples
};

struct SampleResponse {
  std::string idempotency_key;
  std::vector<SampledAnswer> answers;
  std::int64_t snapshot_version = 0;
};

struct LogprobRequest {
  std::string run_id;
  std::int64_t round = 0;
  std::string idempotency_key;
  Role role = Role::kPlayer;
  TaskInstruction task;
  std::vector<std::string> answers;    // ignored for the coach
  std::optional<PolicyParams> params;  // score under this snapshot instead
};

struct LogprobResponse {
  std::string idempotency_key;
  std::vector<double> logprobs;
  std::int64_t snapshot_version = 0;
};

struct GradientPayload {
  Vector values;
};
struct GrpoPayload {
  GrpoBatch batch;
  GrpoConfig cfg;
  double entropy_coef = 0.0;
  int workers = 1;
};
struct ReinforcePayload {
  CoachBatch batch;
  double entropy_coef = 0.0;
  double baseline = 0.0;
};
struct ParamsPayload {
  PolicyParams params;
};
using UpdatePayload = std::variant<GradientPayload, GrpoPayload, ReinforcePayload, ParamsPayload>;

struct UpdateRequest {
  std::string run_id;
  std::int64_t round = 0;
  std::string idempotency_key;
  Role role = Role::kPlayer;
  double lr = 0.0;
  UpdatePayload payload;
};

struct UpdateResponse {
  std::string idempotency_key;
  std::int64_t snapshot_version = 0;
  std::optional<GrpoStats> grpo_stats;
  std::optional<ReinforceStats> reinforce_stats;
};

struct SnapshotResponse {
  Role role = Role::kPlayer;
  PolicyParams params;
  std::int64_t version = 0;
  bool exactly_evaluable = false;
};

struct ErrorResponse {
  std::string code;
  std::string message;
};

Json encode(const SampleRequest& m);
Json encode(const SampleResponse& m);
Json encode(const LogprobRequest& m);
Json encode(const LogprobResponse& m);
Json encode(const UpdateRequest& m);
Json encode(const UpdateResponse& m);
Json encode(const SnapshotResponse& m);
Json encode(const ErrorResponse& m);

SampleRequest decode_sample_request(const Json& j);
SampleResponse decode_sample_response(const Json& j);
LogprobRequest decode_logprob_request(const Json& j);
LogprobResponse decode_logprob_response(const Json& j);
UpdateRequest decode_update_request(const Json& j);
UpdateResponse decode_update_response(const Json& j);
SnapshotResponse decode_snapshot_response(const Json& j);
ErrorResponse decode_error_response(const Json& j);

Json encode(const GrpoStats& s);
GrpoStats decode_grpo_stats(const Json& j, const std::string& path);
Json encode(const ReinforceStats& s);
ReinforceStats decode_reinforce_stats(const Json& j, const std::string& path);

}  // namespace moebius::wire
