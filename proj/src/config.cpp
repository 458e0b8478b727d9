#include "moebius/config.hpp"

#include <cmath>

namespace moebius {

namespace {

EvalProtocol eval_protocol_from_json(const Json& j) {
  EvalProtocol p;
  if (j.is_string()) {
    if (j.get<std::string>() != "exact") throw ConfigError("eval_protocol", "expected \"exact\" or an object");
    return p;
  }
  ObjectReader r(j, "eval_protocol");
  std::string kind;
  r.required("kind", kind);
  if (kind == "exact") {
    p.kind = EvalProtocol::Kind::kExact;
  } else if (kind == "sampled") {
    p.kind = EvalProtocol::Kind::kSampled;
    r.required("k", p.k);
    r.optional("seed", p.seed);
  } else {
    throw ConfigError("eval_protocol.kind", "expected exact or sampled");
  }
  r.finish();
  return p;
}

Json to_json(const EvalProtocol& p) {
  if (p.kind == EvalProtocol::Kind::kExact) return {{"kind", "exact"}};
  return {{"kind", "sampled"}, {"k", p.k}, {"seed", p.seed}};
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

Json to_json(const DomainSpec& spec) {
  return {{"D", spec.levels},
          {"K", spec.answers},
          {"operand_range", {spec.operand_lo, spec.operand_hi}},
          {"signal_decay", "inverse_difficulty"},
          {"val_tasks_per_level", spec.val_tasks_per_level}};
}

DomainSpec domain_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  DomainSpec spec;
  r.optional("D", spec.levels);
  r.optional("K", spec.answers);
  if (r.has("operand_range")) {
    std::vector<int> range;
    r.required("operand_range", range);
    if (range.size() != 2) throw ConfigError(r.path("operand_range"), "expected [lo, hi]");
    spec.operand_lo = range[0];
    spec.operand_hi = range[1];
  }
  std::string decay = "inverse_difficulty";
  r.optional("signal_decay", decay);
  if (decay != "inverse_difficulty") throw ConfigError(r.path("signal_decay"), "only inverse_difficulty is supported");
  r.optional("val_tasks_per_level", spec.val_tasks_per_level);
  r.finish();
  return spec;
}

std::string to_string(BaselineMode mode) { return mode == BaselineMode::kEma ? "ema" : "none"; }

std::string ablation_name(const AblationMode& mode) {
  if (mode.coach_update_enabled && mode.instruction_filter_enabled) return "none";
  if (!mode.coach_update_enabled && mode.instruction_filter_enabled) return "no-coach-update";
  if (mode.coach_update_enabled && !mode.instruction_filter_enabled) return "no-filter";
  return "no-coach-update+no-filter";
}

AblationMode ablation_from_name(const std::string& name) {
  if (name == "none") return {true, true};
  if (name == "no-coach-update") return {false, true};
  if (name == "no-filter") return {true, false};
  if (name == "no-coach-update+no-filter") return {false, false};
  throw ConfigError("ablation", "unknown mode '" + name + "'");
}

RunConfig config_from_json(const Json& j) {
  ObjectReader r(j, "");
  RunConfig cfg;
  r.optional("m", cfg.m);
  r.optional("n", cfg.n);
  r.optional("T", cfg.T);
  r.optional("band_lo", cfg.band_lo);
  r.optional("band_hi", cfg.band_hi);
  if (r.has("max_filter_attempts")) {
    int attempts = 0;
    r.required("max_filter_attempts", attempts);
    cfg.max_filter_attempts = attempts;
  }
  if (r.has("grpo")) cfg.grpo = grpo_config_from_json(r.at("grpo"));
  r.optional("coach_lr", cfg.coach_lr);
  r.optional("player_lr", cfg.player_lr);
  r.optional("coach_entropy_coef", cfg.coach_entropy_coef);
  r.optional("player_entropy_coef", cfg.player_entropy_coef);
  r.optional("seed", cfg.seed);
  if (r.has("eval_protocol")) cfg.eval_protocol = eval_protocol_from_json(r.at("eval_protocol"));
  if (r.has("domain")) cfg.domain = domain_from_json(r.at("domain"));
  if (r.has("ablation")) {
    ObjectReader a(r.at("ablation"), "ablation");
    a.optional("coach_update_enabled", cfg.ablation.coach_update_enabled);
    a.optional("instruction_filter_enabled", cfg.ablation.instruction_filter_enabled);
    a.finish();
  }
  r.optional("regenerate_training_rollouts", cfg.regenerate_training_rollouts);
  if (r.has("baseline_mode")) {
    std::string mode;
    r.required("baseline_mode", mode);
    if (mode == "none") {
      cfg.baseline_mode = BaselineMode::kNone;
    } else if (mode == "ema") {
      cfg.baseline_mode = BaselineMode::kEma;
    } else {
      throw ConfigError("baseline_mode", "expected none or ema");
    }
  }
  r.optional("baseline_decay", cfg.baseline_decay);
  r.optional("player_temperature", cfg.player_temperature);
  r.optional("player_init_truth_weight", cfg.player_init_truth_weight);
  r.optional("validation_seed", cfg.validation_seed);
  r.optional("workers", cfg.workers);
  r.optional("checkpoint_interval", cfg.checkpoint_interval);
  r.optional("run_id", cfg.run_id);
  r.finish();
  validate(cfg);
  return cfg;
}

RunConfig config_from_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

Json to_json(const RunConfig& cfg) {
  Json j = {{"m", cfg.m},
            {"n", cfg.n},
            {"T", cfg.T},
            {"band_lo", cfg.band_lo},
            {"band_hi", cfg.band_hi},
            {"max_filter_attempts", cfg.filter_attempts()},
            {"grpo", to_json(cfg.grpo)},
            {"coach_lr", cfg.coach_lr},
            {"player_lr", cfg.player_lr},
            {"coach_entropy_coef", cfg.coach_entropy_coef},
            {"player_entropy_coef", cfg.player_entropy_coef},
            {"seed", cfg.seed},
            {"eval_protocol", to_json(cfg.eval_protocol)},
            {"domain", to_json(cfg.domain)},
            {"ablation",
             {{"coach_update_enabled", cfg.ablation.coach_update_enabled},
              {"instruction_filter_enabled", cfg.ablation.instruction_filter_enabled}}},
            {"regenerate_training_rollouts", cfg.regenerate_training_rollouts},
            {"baseline_mode", to_string(cfg.baseline_mode)},
            {"baseline_decay", cfg.baseline_decay},
            {"player_temperature", cfg.player_temperature},
            {"player_init_truth_weight", cfg.player_init_truth_weight},
            {"validation_seed", cfg.validation_seed},
            {"workers", cfg.workers},
            {"checkpoint_interval", cfg.checkpoint_interval},
            {"run_id", cfg.run_id}};
  return j;
}

void validate(const RunConfig& cfg) {
  require(cfg.m >= 1, "m", "must be >= 1");
  require(cfg.n >= 2, "n", "must be >= 2");
  require(cfg.T >= 0, "T", "must be >= 0");
  require(finite(cfg.band_lo) && cfg.band_lo >= 0.0, "band_lo", "must be in [0, 1]");
  require(finite(cfg.band_hi) && cfg.band_hi <= 1.0, "band_hi", "must be in [0, 1]");
  require(cfg.band_lo <= cfg.band_hi, "band_lo", "must not exceed band_hi");
  require(cfg.filter_attempts() >= cfg.m, "max_filter_attempts", "must be >= m");
  require(finite(cfg.grpo.clip_eps) && cfg.grpo.clip_eps > 0.0, "grpo.clip_eps", "must be > 0");
  require(finite(cfg.grpo.kl_coef) && cfg.grpo.kl_coef >= 0.0, "grpo.kl_coef", "must be >= 0");
  require(finite(cfg.grpo.std_eps) && cfg.grpo.std_eps > 0.0, "grpo.std_eps", "must be > 0");
  require(cfg.grpo.inner_epochs >= 1, "grpo.inner_epochs", "must be >= 1");
  require(cfg.grpo.ref_refresh_interval >= 0, "grpo.ref_refresh_interval", "must be >= 0");
  require(finite(cfg.coach_lr) && cfg.coach_lr >= 0.0, "coach_lr", "must be finite and >= 0");
  require(finite(cfg.player_lr) && cfg.player_lr >= 0.0, "player_lr", "must be finite and >= 0");
  require(finite(cfg.coach_entropy_coef), "coach_entropy_coef", "must be finite");
  require(finite(cfg.player_entropy_coef), "player_entropy_coef", "must be finite");
  if (cfg.eval_protocol.kind == EvalProtocol::Kind::kSampled) {
    require(cfg.eval_protocol.k >= 1, "eval_protocol.k", "must be >= 1");
  }
  require(cfg.domain.levels >= 2, "domain.D", "must be >= 2");
  require(cfg.domain.answers >= 2, "domain.K", "must be >= 2");
  require(cfg.domain.operand_lo <= cfg.domain.operand_hi, "domain.operand_range", "lo must not exceed hi");
  require(cfg.domain.val_tasks_per_level >= 1, "domain.val_tasks_per_level", "must be >= 1");
  require(cfg.baseline_decay >= 0.0 && cfg.baseline_decay < 1.0, "baseline_decay", "must be in [0, 1)");
  require(finite(cfg.player_temperature) && cfg.player_temperature > 0.0, "player_temperature", "must be > 0");
  require(finite(cfg.player_init_truth_weight), "player_init_truth_weight", "must be finite");
  require(cfg.workers >= 1, "workers", "must be >= 1");
  require(cfg.checkpoint_interval >= 0, "checkpoint_interval", "must be >= 0");
}

}  // namespace moebius
