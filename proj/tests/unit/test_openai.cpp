#include <gtest/gtest.h>

#include <json.hpp>

#include <atomic>
#include <thread>

#include "moebius/grpo.hpp"
#include "moebius/openai_compat.hpp"
#include "moebius/orchestrator.hpp"
#include "moebius/rewards.hpp"

// After Eigen: the system networking headers define macros that clash with it.
#include <httplib.h>

using namespace moebius;
using Json = nlohmann::json;

namespace {

// Minimal chat-completions stub. `failures` leading requests get `fail_status`.
class StubEndpoint {
 public:
  StubEndpoint() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits;
      last_request = Json::parse(req.body);
      last_auth = req.get_header_value("Authorization");
      if (failures > 0) {
        --failures;
        res.status = fail_status;
        return;
      }
      Json choices = Json::array();
      const int n = last_request.at("n").get<int>() + choice_skew;
      for (int i = 0; i < n; ++i) {
        const std::string content = i % 4 == 3 ? "I am not sure." : "Let me think... The answer is 11";
        choices.push_back({{"index", i}, {"message", {{"role", "assistant"}, {"content", content}}}});
      }
      res.set_content(Json{{"choices", choices}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubEndpoint() {
    server_.stop();
    thread_.join();
  }

  ChatEndpoint endpoint() const {
    ChatEndpoint e;
    e.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    e.model = "stub-model";
    e.bearer_token = "tok";
    e.backoff = std::chrono::milliseconds(1);
    return e;
  }

  std::atomic<int> hits{0};
  std::atomic<int> failures{0};
  int fail_status = 503;
  int choice_skew = 0;
  Json last_request;
  std::string last_auth;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TaskInstruction some_task() {
  TaskInstruction t;
  t.id = "t1-c0";
  t.prompt = "compute (5 + 6) mod 20";
  return t;
}

}  // namespace

TEST(OpenAiCompat, RequestShapeAndExtraction) {
  StubEndpoint stub;
  InferenceOnlyPlayer player(stub.endpoint(), {1, 0.7, 0.95, 512});
  const auto samples = player.sample_answers(some_task(), 16, {});
  ASSERT_EQ(samples.size(), 16u);
  for (std::size_t j = 0; j < samples.size(); ++j) {
    EXPECT_EQ(samples[j].canonical_answer, j % 4 == 3 ? "" : "11");
    EXPECT_EQ(samples[j].sample_index, static_cast<int>(j + 1));
  }
  EXPECT_EQ(stub.hits, 1);
  EXPECT_EQ(stub.last_request.at("n"), 16);
  EXPECT_EQ(stub.last_request.at("model"), "stub-model");
  EXPECT_EQ(stub.last_request.at("temperature"), 0.7);
  EXPECT_EQ(stub.last_request.at("top_p"), 0.95);
  EXPECT_EQ(stub.last_request.at("max_tokens"), 512);
  EXPECT_EQ(stub.last_request.at("messages")[0].at("content"), some_task().prompt);
  EXPECT_EQ(stub.last_auth, "Bearer tok");
  // The vote still works on extracted answers.
  std::vector<std::string> answers;
  for (const auto& s : samples) answers.push_back(s.canonical_answer);
  EXPECT_EQ(majority_vote(answers).pseudo_label, "11");
}

TEST(OpenAiCompat, RetriesServerErrors) {
  StubEndpoint stub;
  stub.failures = 2;
  const auto texts = openai_compat_generate(stub.endpoint(), "q", {3});
  EXPECT_EQ(texts.size(), 3u);
  EXPECT_EQ(stub.hits, 3);

  stub.failures = 5;
  stub.hits = 0;
  stub.fail_status = 429;
  EXPECT_THROW(openai_compat_generate(stub.endpoint(), "q", {1}), TransportError);
  EXPECT_EQ(stub.hits, 3);
}

TEST(OpenAiCompat, AuthFailureIsNotRetried) {
  StubEndpoint stub;
  stub.failures = 5;
  stub.fail_status = 401;
  EXPECT_THROW(openai_compat_generate(stub.endpoint(), "q", {1}), AuthError);
  EXPECT_EQ(stub.hits, 1);
}

TEST(OpenAiCompat, WrongChoiceCountRejected) {
  StubEndpoint stub;
  stub.choice_skew = -1;
  EXPECT_THROW(openai_compat_generate(stub.endpoint(), "q", {4}), TransportError);
}

TEST(OpenAiCompat, UnreachableEndpoint) {
  ChatEndpoint e;
  {
    StubEndpoint stub;
    e = stub.endpoint();
  }
  e.attempts = 2;
  EXPECT_THROW(openai_compat_generate(e, "q", {1}), TransportError);
  e.base_url = "localhost:80";
  EXPECT_THROW(openai_compat_generate(e, "q", {1}), ConfigError);
}

TEST(OpenAiCompat, UnsupportedOperationsSendNothing) {
  StubEndpoint stub;
  InferenceOnlyPlayer player(stub.endpoint(), {});
  const std::vector<std::string> answers{"1"};
  const TaskInstruction task = some_task();
  EXPECT_THROW(player.logprobs(task, answers), CapabilityError);
  EXPECT_THROW(player.logprob_grads(task, answers), CapabilityError);
  EXPECT_THROW(player.kl_to({}, task), CapabilityError);
  EXPECT_THROW(player.entropy(task), CapabilityError);
  EXPECT_THROW(player.apply_step(Vector::Zero(1), 0.1), CapabilityError);
  EXPECT_THROW(player.apply_grpo(GrpoBatch{}, GrpoOptions{}), CapabilityError);
  EXPECT_FALSE(player.exactly_evaluable());
  EXPECT_EQ(player.snapshot().kind, "chat:stub-model");
  player.restore(player.snapshot());
  EXPECT_EQ(stub.hits, 0);
  // Exact evaluation refuses up front.
  EXPECT_THROW(evaluate_player(player, build_validation_set(DomainSpec{}, 0), {}), CapabilityError);
  EXPECT_EQ(stub.hits, 0);
}
