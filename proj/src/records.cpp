#include "moebius/records.hpp"

#include <cstring>

namespace moebius {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= kFnvPrime;
  }
}

Json filter_stats_to_json(const FilterStats& s) {
  return {{"candidates_sampled", s.candidates_sampled},
          {"rejected_too_easy", s.rejected_too_easy},
          {"rejected_too_hard", s.rejected_too_hard},
          {"fallback_filled", s.fallback_filled},
          {"fallback_used", s.fallback_used},
          {"zero_variance_groups", s.zero_variance_groups}};
}

FilterStats filter_stats_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  FilterStats s;
  r.required("candidates_sampled", s.candidates_sampled);
  r.required("rejected_too_easy", s.rejected_too_easy);
  r.required("rejected_too_hard", s.rejected_too_hard);
  r.required("fallback_filled", s.fallback_filled);
  r.required("fallback_used", s.fallback_used);
  r.required("zero_variance_groups", s.zero_variance_groups);
  r.finish();
  return s;
}

Json loss_stats_to_json(const LossStats& s) {
  return {{"player_surrogate", s.player_surrogate}, {"kl", s.kl},
          {"player_entropy", s.player_entropy},     {"player_objective", s.player_objective},
          {"clip_fraction", s.clip_fraction},       {"coach_objective", s.coach_objective},
          {"coach_entropy", s.coach_entropy}};
}

LossStats loss_stats_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  LossStats s;
  r.required("player_surrogate", s.player_surrogate);
  r.required("kl", s.kl);
  r.required("player_entropy", s.player_entropy);
  r.required("player_objective", s.player_objective);
  r.required("clip_fraction", s.clip_fraction);
  r.required("coach_objective", s.coach_objective);
  r.required("coach_entropy", s.coach_entropy);
  r.finish();
  return s;
}

}  // namespace

std::uint64_t PolicyParams::hash() const {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, kind.data(), kind.size());
  for (std::int64_t d : dims) fnv_mix(h, &d, sizeof d);
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double v = values(i);
    fnv_mix(h, &v, sizeof v);
  }
  return h;
}

ObjectReader::ObjectReader(const Json& object, std::string path)
    : object_(object), path_(std::move(path)) {
  if (!object_.is_object()) {
    throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
  }
}

const Json& ObjectReader::at(const std::string& key) {
  seen_.insert(key);
  return object_.at(key);
}

void ObjectReader::finish() const {
  for (const auto& item : object_.items()) {
    if (!seen_.count(item.key())) throw ConfigError(path(item.key()), "unknown field");
  }
}

Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vector_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Json to_json(const TaskInstruction& task) {
  return {{"id", task.id},
          {"prompt", task.prompt},
          {"difficulty", task.difficulty},
          {"instance_seed", task.instance_seed},
          {"coach_trace", task.coach_trace},
          {"round", task.round}};
}

TaskInstruction task_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  TaskInstruction t;
  r.required("id", t.id);
  r.required("prompt", t.prompt);
  r.required("difficulty", t.difficulty);
  r.required("instance_seed", t.instance_seed);
  r.required("coach_trace", t.coach_trace);
  r.required("round", t.round);
  r.finish();
  return t;
}

Json to_json(const PolicyParams& params) {
  return {{"kind", params.kind},
          {"dims", params.dims},
          {"values", vector_to_json(params.values)},
          {"step_count", params.step_count}};
}

PolicyParams params_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  PolicyParams p;
  r.required("kind", p.kind);
  if (!r.has("dims")) throw ConfigError(r.path("dims"), "missing required field");
  const Json& dims = r.at("dims");
  if (!dims.is_array()) throw ConfigError(r.path("dims"), "expected an array of integers");
  std::int64_t total = 1;
  for (const Json& d : dims) {
    if (!d.is_number_integer() || d.get<std::int64_t>() <= 0) {
      throw ConfigError(r.path("dims"), "expected positive integers");
    }
    p.dims.push_back(d.get<std::int64_t>());
    total *= p.dims.back();
  }
  if (!r.has("values")) throw ConfigError(r.path("values"), "missing required field");
  p.values = vector_from_json(r.at("values"), r.path("values"));
  if (p.dims.empty()) total = 0;  // opaque policies carry no weights
  if (p.values.size() != total) throw ConfigError(r.path("values"), "length does not match dims");
  r.required("step_count", p.step_count);
  r.finish();
  return p;
}

Json to_json(const GrpoConfig& cfg) {
  return {{"clip_eps", cfg.clip_eps},
          {"kl_coef", cfg.kl_coef},
          {"std_eps", cfg.std_eps},
          {"inner_epochs", cfg.inner_epochs},
          {"ref_refresh_interval", cfg.ref_refresh_interval}};
}

GrpoConfig grpo_config_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  GrpoConfig cfg;
  r.optional("clip_eps", cfg.clip_eps);
  r.optional("kl_coef", cfg.kl_coef);
  r.optional("std_eps", cfg.std_eps);
  r.optional("inner_epochs", cfg.inner_epochs);
  r.optional("ref_refresh_interval", cfg.ref_refresh_interval);
  r.finish();
  return cfg;
}

Json to_json(const RolloutGroup& group) {
  Json samples = Json::array();
  for (const AnswerSample& s : group.samples) {
    samples.push_back({{"canonical_answer", s.canonical_answer},
                       {"sampler_logprob", s.sampler_logprob},
                       {"sample_index", s.sample_index}});
  }
  return {{"instruction_id", group.instruction_id},
          {"samples", samples},
          {"pseudo_label", group.pseudo_label},
          {"rewards", vector_to_json(group.rewards)},
          {"advantages", vector_to_json(group.advantages)},
          {"acc", group.acc},
          {"player_reward", group.player_reward},
          {"tie_broken", group.tie_broken}};
}

RolloutGroup rollout_group_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  RolloutGroup g;
  r.required("instruction_id", g.instruction_id);
  if (!r.has("samples")) throw ConfigError(r.path("samples"), "missing required field");
  const Json& samples = r.at("samples");
  if (!samples.is_array()) throw ConfigError(r.path("samples"), "expected an array");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ObjectReader sr(samples[i], r.path("samples") + "[" + std::to_string(i) + "]");
    AnswerSample s;
    sr.required("canonical_answer", s.canonical_answer);
    sr.required("sampler_logprob", s.sampler_logprob);
    sr.required("sample_index", s.sample_index);
    sr.finish();
    g.samples.push_back(std::move(s));
  }
  r.required("pseudo_label", g.pseudo_label);
  if (!r.has("rewards")) throw ConfigError(r.path("rewards"), "missing required field");
  g.rewards = vector_from_json(r.at("rewards"), r.path("rewards"));
  if (!r.has("advantages")) throw ConfigError(r.path("advantages"), "missing required field");
  g.advantages = vector_from_json(r.at("advantages"), r.path("advantages"));
  r.required("acc", g.acc);
  r.required("player_reward", g.player_reward);
  r.required("tie_broken", g.tie_broken);
  r.finish();
  return g;
}

Json to_json(const RoundRecord& record) {
  Json j = {{"kind", record.kind},
            {"round", record.round},
            {"instruction_ids", record.instruction_ids},
            {"difficulties", record.difficulties},
            {"acc_pre", record.acc_pre},
            {"acc_post", record.acc_post},
            {"delta", record.delta},
            {"player_rewards", record.player_rewards},
            {"coach_rewards", record.coach_rewards},
            {"filter_stats", filter_stats_to_json(record.filter_stats)},
            {"loss_stats", loss_stats_to_json(record.loss_stats)}};
  if (!record.error.empty()) j["error"] = record.error;
  return j;
}

RoundRecord round_record_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  RoundRecord rec;
  r.required("kind", rec.kind);
  if (rec.kind != "initial" && rec.kind != "round" && rec.kind != "aborted") {
    throw ConfigError(r.path("kind"), "expected initial, round or aborted");
  }
  r.required("round", rec.round);
  r.required("instruction_ids", rec.instruction_ids);
  r.required("difficulties", rec.difficulties);
  r.required("acc_pre", rec.acc_pre);
  r.required("acc_post", rec.acc_post);
  r.required("delta", rec.delta);
  if (!r.has("player_rewards")) throw ConfigError(r.path("player_rewards"), "missing required field");
  const Vector pr = vector_from_json(r.at("player_rewards"), r.path("player_rewards"));
  rec.player_rewards.assign(pr.data(), pr.data() + pr.size());
  if (!r.has("coach_rewards")) throw ConfigError(r.path("coach_rewards"), "missing required field");
  const Vector cr = vector_from_json(r.at("coach_rewards"), r.path("coach_rewards"));
  rec.coach_rewards.assign(cr.data(), cr.data() + cr.size());
  if (!r.has("filter_stats")) throw ConfigError(r.path("filter_stats"), "missing required field");
  rec.filter_stats = filter_stats_from_json(r.at("filter_stats"), r.path("filter_stats"));
  if (!r.has("loss_stats")) throw ConfigError(r.path("loss_stats"), "missing required field");
  rec.loss_stats = loss_stats_from_json(r.at("loss_stats"), r.path("loss_stats"));
  r.optional("error", rec.error);
  r.finish();
  return rec;
}

}  // namespace moebius
