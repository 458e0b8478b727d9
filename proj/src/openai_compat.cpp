#include "moebius/openai_compat.hpp"

#include <json.hpp>

#include <cstdlib>
#include <regex>
#include <thread>

#include "moebius/canonical.hpp"
#include "moebius/grpo.hpp"

// After Eigen: the system networking headers define macros that clash with it.
#include <httplib.h>

namespace moebius {

namespace {

using Json = nlohmann::json;

struct Retry {
  std::string message;
};

std::vector<std::string> parse_choices(const std::string& body, int n) {
  std::vector<std::string> texts;
  try {
    const Json json = Json::parse(body);
    for (const Json& choice : json.at("choices")) texts.push_back(choice.at("message").at("content").get<std::string>());
  } catch (const Json::exception& e) {
    throw TransportError(std::string("undecodable chat completion: ") + e.what());
  }
  if (texts.size() != static_cast<std::size_t>(n)) {
    throw TransportError("chat completion returned " + std::to_string(texts.size()) + " choices, expected " +
                         std::to_string(n));
  }
  return texts;
}

}  // namespace

std::vector<std::string> openai_compat_generate(const ChatEndpoint& endpoint, const std::string& prompt,
                                                const DecodingParams& decoding) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch match;
  if (!std::regex_match(endpoint.base_url, match, kUrl)) throw ConfigError("base_url", "expected http(s)://host[:port][/path]");
  if (decoding.n < 1) throw ConfigError("n", "must be >= 1");
  if (endpoint.attempts < 1) throw ConfigError("attempts", "must be >= 1");
  const std::string host = match[1].str();
  std::string prefix = match[2].matched ? match[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  std::string token = endpoint.bearer_token;
  if (token.empty()) {
    if (const char* env = std::getenv("MOEBIUS_BEARER_TOKEN")) token = env;
  }

  const Json request = {{"model", endpoint.model},
                        {"messages", Json::array({{{"role", "user"}, {"content", prompt}}})},
                        {"n", decoding.n},
                        {"temperature", decoding.temperature},
                        {"top_p", decoding.top_p},
                        {"max_tokens", decoding.max_tokens}};
  const std::string body = request.dump();

  std::chrono::milliseconds delay = endpoint.backoff;
  std::string last_error;
  for (int attempt = 0; attempt < endpoint.attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Client client(host);
    client.set_connection_timeout(endpoint.timeout);
    client.set_read_timeout(endpoint.timeout);
    if (!token.empty()) client.set_bearer_token_auth(token);
    const httplib::Result result = client.Post(prefix + "/chat/completions", body, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;
    }
    if (result->status == 401 || result->status == 403) {
      throw AuthError("chat endpoint rejected credentials (HTTP " + std::to_string(result->status) + ")");
    }
    if (result->status == 429 || result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      throw TransportError("chat endpoint returned HTTP " + std::to_string(result->status) + ": " + result->body);
    }
    return parse_choices(result->body, decoding.n);
  }
  throw TransportError(endpoint.base_url + ": " + last_error + " (after " + std::to_string(endpoint.attempts) +
                       " attempts)");
}

InferenceOnlyPlayer::InferenceOnlyPlayer(ChatEndpoint endpoint, DecodingParams decoding, std::string answer_pattern)
    : endpoint_(std::move(endpoint)), decoding_(decoding), answer_pattern_(std::move(answer_pattern)) {}

std::vector<AnswerSample> InferenceOnlyPlayer::sample_answers(const TaskInstruction& task, int n,
                                                              const StreamKey&) const {
  DecodingParams decoding = decoding_;
  decoding.n = n;
  const std::vector<std::string> texts = openai_compat_generate(endpoint_, task.prompt, decoding);
  std::vector<AnswerSample> samples;
  for (std::size_t j = 0; j < texts.size(); ++j) {
    // Unparseable completions vote for the empty answer.
    samples.push_back({extract_answer(texts[j], answer_pattern_).value_or(""), 0.0, static_cast<int>(j + 1)});
  }
  return samples;
}

namespace {

[[noreturn]] void unsupported(const std::string& what) {
  throw CapabilityError("inference-only chat endpoint: " + what + " is not supported");
}

}  // namespace

Vector InferenceOnlyPlayer::logprobs(const TaskInstruction&, std::span<const std::string>) const {
  unsupported("log-probabilities");
}
Matrix InferenceOnlyPlayer::logprob_grads(const TaskInstruction&, std::span<const std::string>) const {
  unsupported("gradients");
}
double InferenceOnlyPlayer::kl_to(const PolicyParams&, const TaskInstruction&) const { unsupported("KL"); }
Vector InferenceOnlyPlayer::kl_grad(const PolicyParams&, const TaskInstruction&) const { unsupported("gradients"); }
double InferenceOnlyPlayer::entropy(const TaskInstruction&) const { unsupported("entropy"); }
Vector InferenceOnlyPlayer::entropy_grad(const TaskInstruction&) const { unsupported("gradients"); }
void InferenceOnlyPlayer::apply_step(const Vector&, double) { unsupported("weight updates"); }
GrpoStats InferenceOnlyPlayer::apply_grpo(const GrpoBatch&, const GrpoOptions&) { unsupported("weight updates"); }

PolicyParams InferenceOnlyPlayer::snapshot() const {
  PolicyParams params;
  params.kind = "chat:" + endpoint_.model;
  return params;
}

void InferenceOnlyPlayer::restore(const PolicyParams& params) {
  if (params.kind != snapshot().kind || params.values.size() != 0) unsupported("loading weights");
}

}  // namespace moebius
