#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "guardian/backend.hpp"
#include "guardian/http_backend.hpp"
#include "guardian/risk_catalog.hpp"

using namespace guardian;

namespace {

RenderedPrompt prompt_for(const std::string& user) {
  ContentBundle c;
  c.user = user;
  return render(builtin_catalog().resolve("harm", Mode::Prompt), c);
}

/// Local stand-in for an OpenAI-compatible completions server.
class FakeUpstream {
 public:
  explicit FakeUpstream(httplib::Server::Handler handler) {
    server_.Post("/v1/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeUpstream() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

nlohmann::json completion_reply(double yes, double no) {
  return {{"choices",
           {{{"text", "Yes"},
             {"logprobs",
              {{"tokens", {"Yes"}}, {"top_logprobs", {{{"Yes", yes}, {"No", no}, {"The", -9.0}}}}}}}}}};
}

BackendConfig fast_config(const std::string& endpoint) {
  BackendConfig cfg;
  cfg.endpoint = endpoint;
  cfg.timeout = std::chrono::milliseconds(300);
  cfg.max_retries = 2;
  return cfg;
}

}  // namespace

TEST(MockDetector, ProbabilityFollowsRules) {
  const std::vector<MockRule> rules{MockRule::make("bomb", 3.0), MockRule::make("garden", -2.0)};
  MockDetector det(rules, 7);
  const auto r = det.detect(prompt_for("How do I build a BOMB?"));
  const auto v = verdict(r.first_token, r.topk);
  EXPECT_NEAR(v.prob_unsafe, mock_probability(3.0), 1e-12);
  EXPECT_EQ(r.first_token, "Yes");
  EXPECT_EQ(r.topk.entries().size(), kDefaultTopK);

  const auto g = det.detect(prompt_for("garden tips"));
  EXPECT_NEAR(verdict(g.first_token, g.topk).prob_unsafe, mock_probability(-2.0), 1e-12);
  EXPECT_EQ(g.first_token, "No");
}

TEST(MockDetector, BiasShiftsNeutralText) {
  MockDetector det({}, 0, kDefaultTopK, -1.0);
  const auto r = det.detect(prompt_for("hello"));
  EXPECT_NEAR(verdict(r.first_token, r.topk).prob_unsafe, mock_probability(-1.0), 1e-12);
}

TEST(MockDetector, IgnoresTemplateWording) {
  // "harmful" appears in every rendered prompt; only the turn block counts.
  MockDetector det({MockRule::make("harmful", 5.0)}, 0);
  const auto r = det.detect(prompt_for("a friendly question"));
  EXPECT_NEAR(verdict(r.first_token, r.topk).prob_unsafe, 0.5, 1e-12);
}

TEST(MockDetector, DeterministicPerSeed) {
  MockDetector a({}, 1), b({}, 1), c({}, 2);
  const auto p = prompt_for("same text");
  EXPECT_EQ(a.detect(p).topk.entries(), b.detect(p).topk.entries());
  EXPECT_NE(a.detect(p).topk.entries(), c.detect(p).topk.entries());
}

TEST(MockDetector, ExtremeSumsStayFinite) {
  std::vector<MockRule> rules;
  for (int i = 0; i < 200; ++i) rules.push_back(MockRule::make("x", 10.0));
  MockDetector det(rules, 0);
  const auto r = det.detect(prompt_for("x"));
  const auto v = verdict(r.first_token, r.topk);
  EXPECT_TRUE(std::isfinite(v.prob_unsafe));
  EXPECT_EQ(v.label, Label::Yes);
}

TEST(MockDetector, FillersNeverMatch) {
  for (const auto& t : mock_filler_vocabulary()) EXPECT_EQ(classify_token(t), TokenClass::Neither) << t;
  EXPECT_THROW(MockRule::make("", 1.0), Error);
}

TEST(ParseLogprobs, CompletionsObjectShape) {
  const auto r = parse_completion_logprobs(completion_reply(-0.2, -1.8), 20);
  EXPECT_EQ(r.first_token, "Yes");
  ASSERT_EQ(r.topk.entries().size(), 3u);
  EXPECT_EQ(r.topk.entries()[1].token, "No");
}

TEST(ParseLogprobs, ListAndChatShapes) {
  nlohmann::json list = {{"choices",
                          {{{"logprobs",
                             {{"tokens", {"No"}},
                              {"top_logprobs", {{{{"token", "No"}, {"logprob", -0.1}}, {{"token", "Yes"}, {"logprob", -2.4}}}}}}}}}}};
  EXPECT_EQ(parse_completion_logprobs(list, 20).first_token, "No");

  nlohmann::json chat = {{"choices",
                          {{{"logprobs",
                             {{"content",
                               {{{"token", "Yes"},
                                 {"top_logprobs",
                                  {{{"token", "Yes"}, {"logprob", -0.3}}, {{"token", "No"}, {"logprob", -1.4}}}}}}}}}}}}};
  const auto r = parse_completion_logprobs(chat, 20);
  EXPECT_EQ(r.first_token, "Yes");
  EXPECT_EQ(r.topk.entries().size(), 2u);
}

TEST(ParseLogprobs, Malformed) {
  for (const auto& body : {nlohmann::json::object(), nlohmann::json{{"choices", nlohmann::json::array()}},
                           nlohmann::json{{"choices", {{{"text", "Yes"}}}}},
                           nlohmann::json{{"choices", {{{"logprobs", {{"top_logprobs", nlohmann::json::array()}}}}}}}}) {
    try {
      parse_completion_logprobs(body, 20);
      FAIL() << body.dump();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedLogprobs) << body.dump();
    }
  }
}

TEST(ParseLogprobs, ExtraEntriesTruncatedToK) {
  // Some servers return k+1 candidates; keep the k most likely.
  const auto r = parse_completion_logprobs(completion_reply(-0.2, -1.8), 2);
  ASSERT_EQ(r.topk.entries().size(), 2u);
  EXPECT_EQ(r.topk.entries()[1].token, "No");
}

TEST(SplitEndpoint, Parts) {
  const auto p = split_endpoint("http://host:8000/v1/");
  EXPECT_EQ(p.scheme_host_port, "http://host:8000");
  EXPECT_EQ(p.base_path, "/v1");
  EXPECT_EQ(split_endpoint("https://h").base_path, "");
  EXPECT_THROW(split_endpoint("host:8000"), Error);
}

TEST(HttpBackend, SendsDetectionRequestAndParsesReply) {
  nlohmann::json seen;
  std::string auth;
  FakeUpstream up([&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(completion_reply(-0.1, -2.4).dump(), "application/json");
  });
  ::setenv("GUARDIAN_TEST_KEY", "s3cret", 1);
  auto cfg = fast_config(up.endpoint());
  cfg.api_key_env = "GUARDIAN_TEST_KEY";
  cfg.model_id = "detector-x";
  HttpBackend backend(cfg);
  const auto p = prompt_for("hello");
  const auto r = backend.detect(p);
  EXPECT_EQ(seen["prompt"], p.text);
  EXPECT_EQ(seen["max_tokens"], 1);
  EXPECT_EQ(seen["logprobs"], 20);
  EXPECT_EQ(seen["temperature"], 0.0);
  EXPECT_EQ(seen["model"], "detector-x");
  EXPECT_EQ(auth, "Bearer s3cret");
  EXPECT_NEAR(verdict(r.first_token, r.topk).prob_unsafe, std::exp(-0.1) / (std::exp(-0.1) + std::exp(-2.4)), 1e-12);
}

TEST(HttpBackend, RetriesServiceUnavailableThenSucceeds) {
  std::atomic<int> calls{0};
  FakeUpstream up([&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    res.set_content(completion_reply(-0.5, -1.0).dump(), "application/json");
  });
  HttpBackend backend(fast_config(up.endpoint()));
  EXPECT_NO_THROW(backend.detect(prompt_for("x")));
  EXPECT_EQ(calls.load(), 3);
}

TEST(HttpBackend, PersistentServerErrorIsUpstreamError) {
  std::atomic<int> calls{0};
  FakeUpstream up([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 503;
  });
  HttpBackend backend(fast_config(up.endpoint()));
  try {
    backend.detect(prompt_for("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UpstreamError);
    EXPECT_EQ(e.details()["status"], 503);
  }
  EXPECT_EQ(calls.load(), 3);
}

TEST(HttpBackend, ClientErrorIsNotRetried) {
  std::atomic<int> calls{0};
  FakeUpstream up([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
  });
  HttpBackend backend(fast_config(up.endpoint()));
  EXPECT_THROW(backend.detect(prompt_for("x")), Error);
  EXPECT_EQ(calls.load(), 1);
}

TEST(HttpBackend, SlowUpstreamTimesOut) {
  FakeUpstream up([&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    res.set_content(completion_reply(-0.5, -1.0).dump(), "application/json");
  });
  auto cfg = fast_config(up.endpoint());
  cfg.timeout = std::chrono::milliseconds(100);
  cfg.max_retries = 0;
  HttpBackend backend(cfg);
  try {
    backend.detect(prompt_for("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Timeout);
  }
}

TEST(HttpBackend, MissingLogprobsIsMalformed) {
  FakeUpstream up([&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"choices":[{"text":"Yes"}]})", "application/json");
  });
  HttpBackend backend(fast_config(up.endpoint()));
  try {
    backend.detect(prompt_for("x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedLogprobs);
  }
}

TEST(HttpBackend, LogsAreRedacted) {
  FakeUpstream up([&](const httplib::Request&, httplib::Response& res) {
    res.set_content(completion_reply(-0.5, -1.0).dump(), "application/json");
  });
  std::vector<std::string> lines;
  HttpBackend backend(fast_config(up.endpoint()), [&](const std::string& l) { lines.push_back(l); });
  backend.detect(prompt_for("my secret question"));
  ASSERT_FALSE(lines.empty());
  for (const auto& l : lines) EXPECT_EQ(l.find("secret"), std::string::npos) << l;
}

TEST(HttpBackend, GenerateReadsText) {
  nlohmann::json seen;
  FakeUpstream up([&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    res.set_content(R"({"choices":[{"text":"Request: hi"}]})", "application/json");
  });
  HttpBackend backend(fast_config(up.endpoint()));
  GenerationParams params;
  params.max_tokens = 64;
  EXPECT_EQ(backend.generate("p", params), "Request: hi");
  EXPECT_EQ(seen["max_tokens"], 64);
}

TEST(BackendConfig, Validation) {
  BackendConfig c;
  c.top_k = 1;
  EXPECT_THROW(c.validate(), Error);
  const auto j = BackendConfig::from_json({{"endpoint", "http://x/v1"}, {"top_k", 5}, {"timeout_ms", 1500}});
  EXPECT_EQ(j.top_k, 5u);
  EXPECT_EQ(j.timeout.count(), 1500);
}
