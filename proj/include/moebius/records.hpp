#pragma once

// JSON encodings for the shared records. Decoders are strict: unknown keys,
// missing required keys and type mismatches raise ConfigError naming the
// dotted path of the offending field.

#include <json.hpp>

#include <set>
#include <string>

#include "moebius/errors.hpp"
#include "moebius/types.hpp"

namespace moebius {

using Json = nlohmann::json;

// Field-by-field reader over one JSON object.
class ObjectReader {
 public:
  ObjectReader(const Json& object, std::string path);

  bool has(const std::string& key) const { return object_.contains(key); }
  const Json& at(const std::string& key);
  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void required(const std::string& key, T& out) {
    if (!has(key)) throw ConfigError(path(key), "missing required field");
    read(key, out);
  }
  template <typename T>
  void optional(const std::string& key, T& out) {
    if (has(key)) read(key, out);
  }
  // Throws on any key that was never consumed.
  void finish() const;

 private:
  template <typename T>
  void read(const std::string& key, T& out) {
    const Json& value = at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!value.is_number()) throw ConfigError(path(key), "expected a number");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!value.is_boolean()) throw ConfigError(path(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!value.is_number_integer()) throw ConfigError(path(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (value.is_number_integer() && !value.is_number_unsigned() && value.get<std::int64_t>() < 0) {
            throw ConfigError(path(key), "expected a non-negative integer");
          }
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!value.is_string()) throw ConfigError(path(key), "expected a string");
      }
      out = value.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path(key), e.what());
    }
  }

  const Json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& path);

Json to_json(const TaskInstruction& task);
TaskInstruction task_from_json(const Json& j, const std::string& path = "task");

Json to_json(const PolicyParams& params);
PolicyParams params_from_json(const Json& j, const std::string& path = "params");

Json to_json(const GrpoConfig& cfg);
GrpoConfig grpo_config_from_json(const Json& j, const std::string& path = "grpo");

Json to_json(const RolloutGroup& group);
RolloutGroup rollout_group_from_json(const Json& j, const std::string& path = "group");

Json to_json(const RoundRecord& record);
RoundRecord round_record_from_json(const Json& j, const std::string& path = "");

}  // namespace moebius
