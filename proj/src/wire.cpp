#include "moebius/wire.hpp"

namespace moebius::wire {

namespace {

const std::pair<Stream, const char*> kStreamNames[] = {
    {Stream::kRollout, "rollout"},       {Stream::kCoach, "coach"},
    {Stream::kValidation, "validation"}, {Stream::kInstance, "instance"},
    {Stream::kEvaluation, "evaluation"}, {Stream::kTrainingRollout, "training_rollout"},
    {Stream::kKlEstimate, "kl_estimate"},
};

Json encode_key(const StreamKey& k) {
  std::string name;
  for (const auto& [s, n] : kStreamNames) {
    if (s == k.stream) name = n;
  }
  return {{"seed", k.seed}, {"round", k.round}, {"instruction", k.instruction}, {"stream", name}};
}

StreamKey decode_key(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  StreamKey k;
  r.required("seed", k.seed);
  r.required("round", k.round);
  r.required("instruction", k.instruction);
  std::string name;
  r.required("stream", name);
  bool found = false;
  for (const auto& [s, n] : kStreamNames) {
    if (name == n) {
      k.stream = s;
      found = true;
    }
  }
  if (!found) throw ConfigError(r.path("stream"), "unknown stream '" + name + "'");
  r.finish();
  return k;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of rows");
  if (j.empty()) return Matrix(0, 0);
  std::vector<Vector> rows;
  for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(vector_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw ConfigError(path, "ragged matrix");
    m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return m;
}

template <typename T, typename F>
std::vector<T> decode_array(ObjectReader& r, const std::string& key, F&& decode_one) {
  if (!r.has(key)) throw ConfigError(r.path(key), "missing required field");
  const Json& arr = r.at(key);
  if (!arr.is_array()) throw ConfigError(r.path(key), "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(decode_one(arr[i], r.path(key) + "[" + std::to_string(i) + "]"));
  return out;
}

Json encode_tasks(const std::vector<TaskInstruction>& tasks) {
  Json arr = Json::array();
  for (const TaskInstruction& t : tasks) arr.push_back(to_json(t));
  return arr;
}

void read_header(ObjectReader& r, std::string& run_id, std::int64_t& round, std::string& key) {
  r.required("run_id", run_id);
  r.required("round", round);
  r.required("idempotency_key", key);
}

Json encode_payload(const UpdatePayload& payload) {
  return std::visit(
      [](const auto& p) -> Json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GradientPayload>) {
          return {{"gradient", {{"values", vector_to_json(p.values)}}}};
        } else if constexpr (std::is_same_v<P, GrpoPayload>) {
          Json groups = Json::array();
          for (const RolloutGroup& g : p.batch.groups) groups.push_back(to_json(g));
          return {{"batch",
                   {{"kind", "grpo"},
                    {"tasks", encode_tasks(p.batch.tasks)},
                    {"groups", groups},
                    {"old_logprobs", matrix_to_json(p.batch.old_logprobs)},
                    {"reference", to_json(p.batch.reference)},
                    {"grpo", to_json(p.cfg)},
                    {"entropy_coef", p.entropy_coef},
                    {"workers", p.workers}}}};
        } else if constexpr (std::is_same_v<P, ReinforcePayload>) {
          return {{"batch",
                   {{"kind", "reinforce"},
                    {"tasks", encode_tasks(p.batch.tasks)},
                    {"rewards", vector_to_json(p.batch.rewards)},
                    {"entropy_coef", p.entropy_coef},
                    {"baseline", p.baseline}}}};
        } else {
          return {{"params", to_json(p.params)}};
        }
      },
      payload);
}

}  // namespace

std::string to_string(Role role) { return role == Role::kCoach ? "coach" : "player"; }

Role role_from_string(const std::string& s, const std::string& path) {
  if (s == "coach") return Role::kCoach;
  if (s == "player") return Role::kPlayer;
  throw ConfigError(path, "expected \"coach\" or \"player\"");
}

Json encode(const SampleRequest& m) {
  Json j = {{"run_id", m.run_id},         {"round", m.round},
            {"idempotency_key", m.idempotency_key}, {"role", to_string(m.role)},
            {"n", m.n},                   {"temperature", m.temperature},
            {"rng", encode_key(m.rng)}};
  if (m.task) j["task"] = to_json(*m.task);
  return j;
}

SampleRequest decode_sample_request(const Json& j) {
  ObjectReader r(j, "");
  SampleRequest m;
  read_header(r, m.run_id, m.round, m.idempotency_key);
  std::string role;
  r.required("role", role);
  m.role = role_from_string(role);
  if (r.has("task")) m.task = task_from_json(r.at("task"), "task");
  r.required("n", m.n);
  if (m.n < 1) throw ConfigError("n", "must be >= 1");
  r.required("temperature", m.temperature);
  if (!r.has("rng")) throw ConfigError("rng", "missing required field");
  m.rng = decode_key(r.at("rng"), "rng");
  r.finish();
  return m;
}

Json encode(const SampleResponse& m) {
  Json answers = Json::array();
  for (const SampledAnswer& a : m.answers) {
    Json item = {{"text", a.text}, {"logprob", a.logprob}};
    if (a.task) item["task"] = to_json(*a.task);
    answers.push_back(item);
  }
  return {{"idempotency_key", m.idempotency_key}, {"answers", answers}, {"snapshot_version", m.snapshot_version}};
}

SampleResponse decode_sample_response(const Json& j) {
  ObjectReader r(j, "");
  SampleResponse m;
  r.required("idempotency_key", m.idempotency_key);
  m.answers = decode_array<SampledAnswer>(r, "answers", [](const Json& a, const std::string& path) {
    ObjectReader ar(a, path);
    SampledAnswer out;
    ar.required("text", out.text);
    ar.required("logprob", out.logprob);
    if (ar.has("task")) out.task = task_from_json(ar.at("task"), ar.path("task"));
    ar.finish();
    return out;
  });
  r.required("snapshot_version", m.snapshot_version);
  r.finish();
  return m;
}

Json encode(const LogprobRequest& m) {
  Json j = {{"run_id", m.run_id},
            {"round", m.round},
            {"idempotency_key", m.idempotency_key},
            {"role", to_string(m.role)},
            {"task", to_json(m.task)},
            {"answers", m.answers}};
  if (m.params) j["params"] = to_json(*m.params);
  return j;
}

LogprobRequest decode_logprob_request(const Json& j) {
  ObjectReader r(j, "");
  LogprobRequest m;
  read_header(r, m.run_id, m.round, m.idempotency_key);
  std::string role;
  r.required("role", role);
  m.role = role_from_string(role);
  if (!r.has("task")) throw ConfigError("task", "missing required field");
  m.task = task_from_json(r.at("task"), "task");
  r.required("answers", m.answers);
  if (r.has("params")) m.params = params_from_json(r.at("params"), "params");
  r.finish();
  return m;
}

Json encode(const LogprobResponse& m) {
  return {{"idempotency_key", m.idempotency_key}, {"logprobs", m.logprobs}, {"snapshot_version", m.snapshot_version}};
}

LogprobResponse decode_logprob_response(const Json& j) {
  ObjectReader r(j, "");
  LogprobResponse m;
  r.required("idempotency_key", m.idempotency_key);
  if (!r.has("logprobs")) throw ConfigError("logprobs", "missing required field");
  const Vector v = vector_from_json(r.at("logprobs"), "logprobs");
  m.logprobs.assign(v.data(), v.data() + v.size());
  r.required("snapshot_version", m.snapshot_version);
  r.finish();
  return m;
}

Json encode(const UpdateRequest& m) {
  Json j = {{"run_id", m.run_id},
            {"round", m.round},
            {"idempotency_key", m.idempotency_key},
            {"role", to_string(m.role)},
            {"lr", m.lr}};
  j.update(encode_payload(m.payload));
  return j;
}

UpdateRequest decode_update_request(const Json& j) {
  ObjectReader r(j, "");
  UpdateRequest m;
  read_header(r, m.run_id, m.round, m.idempotency_key);
  std::string role;
  r.required("role", role);
  m.role = role_from_string(role);
  r.required("lr", m.lr);
  const int variants = int(r.has("gradient")) + int(r.has("batch")) + int(r.has("params"));
  if (variants != 1) throw ConfigError("payload", "exactly one of gradient, batch or params is required");
  if (r.has("gradient")) {
    ObjectReader g(r.at("gradient"), "gradient");
    if (!g.has("values")) throw ConfigError("gradient.values", "missing required field");
    m.payload = GradientPayload{vector_from_json(g.at("values"), "gradient.values")};
    g.finish();
  } else if (r.has("params")) {
    m.payload = ParamsPayload{params_from_json(r.at("params"), "params")};
  } else {
    ObjectReader b(r.at("batch"), "batch");
    std::string kind;
    b.required("kind", kind);
    if (kind == "grpo") {
      GrpoPayload p;
      p.batch.tasks = decode_array<TaskInstruction>(b, "tasks", [](const Json& t, const std::string& path) {
        return task_from_json(t, path);
      });
      p.batch.groups = decode_array<RolloutGroup>(b, "groups", [](const Json& g, const std::string& path) {
        return rollout_group_from_json(g, path);
      });
      if (!b.has("old_logprobs")) throw ConfigError("batch.old_logprobs", "missing required field");
      p.batch.old_logprobs = matrix_from_json(b.at("old_logprobs"), "batch.old_logprobs");
      if (!b.has("reference")) throw ConfigError("batch.reference", "missing required field");
      p.batch.reference = params_from_json(b.at("reference"), "batch.reference");
      if (!b.has("grpo")) throw ConfigError("batch.grpo", "missing required field");
      p.cfg = grpo_config_from_json(b.at("grpo"), "batch.grpo");
      b.required("entropy_coef", p.entropy_coef);
      b.optional("workers", p.workers);
      m.payload = std::move(p);
    } else if (kind == "reinforce") {
      ReinforcePayload p;
      p.batch.tasks = decode_array<TaskInstruction>(b, "tasks", [](const Json& t, const std::string& path) {
        return task_from_json(t, path);
      });
      if (!b.has("rewards")) throw ConfigError("batch.rewards", "missing required field");
      p.batch.rewards = vector_from_json(b.at("rewards"), "batch.rewards");
      b.required("entropy_coef", p.entropy_coef);
      b.required("baseline", p.baseline);
      m.payload = std::move(p);
    } else {
      throw ConfigError("batch.kind", "expected grpo or reinforce");
    }
    b.finish();
  }
  r.finish();
  return m;
}

Json encode(const GrpoStats& s) {
  Json epochs = Json::array();
  for (const GrpoEvaluation& e : s.epochs) {
    epochs.push_back({{"objective", e.objective},
                      {"surrogate", e.surrogate},
                      {"kl", e.kl},
                      {"entropy", e.entropy},
                      {"clip_fraction", e.clip_fraction},
                      {"max_ratio_deviation", e.max_ratio_deviation},
                      {"gradient", vector_to_json(e.gradient)}});
  }
  return {{"epochs", epochs}};
}

GrpoStats decode_grpo_stats(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  GrpoStats s;
  s.epochs = decode_array<GrpoEvaluation>(r, "epochs", [](const Json& e, const std::string& p) {
    ObjectReader er(e, p);
    GrpoEvaluation out;
    er.required("objective", out.objective);
    er.required("surrogate", out.surrogate);
    er.required("kl", out.kl);
    er.required("entropy", out.entropy);
    er.required("clip_fraction", out.clip_fraction);
    er.required("max_ratio_deviation", out.max_ratio_deviation);
    if (!er.has("gradient")) throw ConfigError(er.path("gradient"), "missing required field");
    out.gradient = vector_from_json(er.at("gradient"), er.path("gradient"));
    er.finish();
    return out;
  });
  r.finish();
  return s;
}

Json encode(const ReinforceStats& s) {
  return {{"objective", s.objective}, {"entropy", s.entropy}, {"gradient", vector_to_json(s.gradient)}};
}

ReinforceStats decode_reinforce_stats(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  ReinforceStats s;
  r.required("objective", s.objective);
  r.required("entropy", s.entropy);
  if (!r.has("gradient")) throw ConfigError(r.path("gradient"), "missing required field");
  s.gradient = vector_from_json(r.at("gradient"), r.path("gradient"));
  r.finish();
  return s;
}

Json encode(const UpdateResponse& m) {
  Json j = {{"idempotency_key", m.idempotency_key}, {"snapshot_version", m.snapshot_version}};
  if (m.grpo_stats) j["grpo_stats"] = encode(*m.grpo_stats);
  if (m.reinforce_stats) j["reinforce_stats"] = encode(*m.reinforce_stats);
  return j;
}

UpdateResponse decode_update_response(const Json& j) {
  ObjectReader r(j, "");
  UpdateResponse m;
  r.required("idempotency_key", m.idempotency_key);
  r.required("snapshot_version", m.snapshot_version);
  if (r.has("grpo_stats")) m.grpo_stats = decode_grpo_stats(r.at("grpo_stats"), "grpo_stats");
  if (r.has("reinforce_stats")) m.reinforce_stats = decode_reinforce_stats(r.at("reinforce_stats"), "reinforce_stats");
  r.finish();
  return m;
}

Json encode(const SnapshotResponse& m) {
  return {{"role", to_string(m.role)},
          {"params", to_json(m.params)},
          {"version", m.version},
          {"exactly_evaluable", m.exactly_evaluable}};
}

SnapshotResponse decode_snapshot_response(const Json& j) {
  ObjectReader r(j, "");
  SnapshotResponse m;
  std::string role;
  r.required("role", role);
  m.role = role_from_string(role);
  if (!r.has("params")) throw ConfigError("params", "missing required field");
  m.params = params_from_json(r.at("params"), "params");
  r.required("version", m.version);
  r.required("exactly_evaluable", m.exactly_evaluable);
  r.finish();
  return m;
}

Json encode(const ErrorResponse& m) { return {{"error", {{"code", m.code}, {"message", m.message}}}}; }

ErrorResponse decode_error_response(const Json& j) {
  ObjectReader r(j, "");
  if (!r.has("error")) throw ConfigError("error", "missing required field");
  ObjectReader e(r.at("error"), "error");
  ErrorResponse m;
  e.required("code", m.code);
  e.required("message", m.message);
  e.finish();
  r.finish();
  return m;
}

}  // namespace moebius::wire
