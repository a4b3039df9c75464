#include <atomic>
#include <chrono>
#include <mutex>

#include <gtest/gtest.h>

#include "opinion/error.hpp"
#include "opinion/remote_backend.hpp"
#include "support/stub_server.hpp"

namespace opinion {
namespace {

using namespace std::chrono_literals;
using testing::StubServer;

RemoteBackendConfig config_for(const std::string& url) {
  RemoteBackendConfig c;
  c.endpoint.url = url;
  c.endpoint.timeout = 2000ms;
  c.endpoint.backoff = 20ms;
  return c;
}

const RenderedPrompt kPrompt = render_inference(BiasId::american, "Give two examples of reputable TV news channels");

TEST(RemoteBackend, PlainProtocol) {
  std::mutex mu;
  nlohmann::json seen_body;
  std::string seen_auth;
  StubServer stub([&](httplib::Server& s) {
    s.Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu);
      seen_body = nlohmann::json::parse(req.body);
      seen_auth = req.get_header_value("Authorization");
      res.set_content(R"({"text":"CNN and NPR\n--- x"})", "application/json");
    });
  });
  auto cfg = config_for(stub.url("/generate"));
  cfg.endpoint.token = "s3cret";
  RemoteBackend backend(cfg);
  auto c = backend.generate(kPrompt, GenerationParams{});
  EXPECT_EQ(c.text, "CNN and NPR");
  EXPECT_EQ(c.backend, BackendKind::remote);
  std::lock_guard lock(mu);
  EXPECT_EQ(seen_auth, "Bearer s3cret");
  EXPECT_EQ(seen_body["prompt"], kPrompt.text);
  EXPECT_EQ(seen_body["max_tokens"], 256);
  EXPECT_DOUBLE_EQ(seen_body["temperature"].get<double>(), 0.7);
  EXPECT_EQ(seen_body["stop"], nlohmann::json::array({"---"}));
  EXPECT_FALSE(seen_body.contains("model"));
}

TEST(RemoteBackend, OpenAiCompatibleProtocol) {
  std::mutex mu;
  nlohmann::json seen_body;
  StubServer stub([&](httplib::Server& s) {
    s.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mu);
      seen_body = nlohmann::json::parse(req.body);
      res.set_content(R"({"choices":[{"text":" Fox News</s>junk"}]})", "application/json");
    });
  });
  auto cfg = config_for(stub.url("/v1/completions"));
  cfg.openai_compat = true;
  cfg.model = "opinion-gpt";
  cfg.end_sentinel = "</s>";
  RemoteBackend backend(cfg);
  EXPECT_EQ(backend.generate(kPrompt, {}).text, "Fox News");
  std::lock_guard lock(mu);
  EXPECT_EQ(seen_body["model"], "opinion-gpt");
  EXPECT_EQ(seen_body["stop"], nlohmann::json::array({"---", "</s>"}));
}

TEST(RemoteBackend, EndpointDownIsUnavailable) {
  RemoteBackend backend(config_for("http://127.0.0.1:" + std::to_string(testing::closed_port()) + "/g"));
  EXPECT_THROW(backend.generate(kPrompt, {}), BackendUnavailable);
}

TEST(RemoteBackend, ClientErrorIsProtocolErrorWithoutRetry) {
  std::atomic<int> calls{0};
  StubServer stub([&](httplib::Server& s) {
    s.Post("/g", [&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 401;
    });
  });
  RemoteBackend backend(config_for(stub.url("/g")));
  try {
    backend.generate(kPrompt, {});
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.status(), 401);
  }
  EXPECT_EQ(calls.load(), 1);
}

TEST(RemoteBackend, ServerErrorsAreRetried) {
  std::atomic<int> calls{0};
  StubServer stub([&](httplib::Server& s) {
    s.Post("/g", [&](const httplib::Request&, httplib::Response& res) {
      if (++calls < 3) {
        res.status = 503;
        return;
      }
      res.set_content(R"({"text":"third time"})", "application/json");
    });
  });
  RemoteBackend backend(config_for(stub.url("/g")));
  EXPECT_EQ(backend.generate(kPrompt, {}).text, "third time");
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteBackend, PersistentServerErrorIsProtocolError) {
  std::atomic<int> calls{0};
  StubServer stub([&](httplib::Server& s) {
    s.Post("/g", [&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 500;
    });
  });
  RemoteBackend backend(config_for(stub.url("/g")));
  EXPECT_THROW(backend.generate(kPrompt, {}), ProtocolError);
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteBackend, MalformedReplies) {
  StubServer stub([&](httplib::Server& s) {
    s.Post("/notjson", [](const httplib::Request&, httplib::Response& res) { res.set_content("<html>", "text/html"); });
    s.Post("/notext", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"completion":"x"})", "application/json");
    });
  });
  EXPECT_THROW(RemoteBackend(config_for(stub.url("/notjson"))).generate(kPrompt, {}), ProtocolError);
  EXPECT_THROW(RemoteBackend(config_for(stub.url("/notext"))).generate(kPrompt, {}), ProtocolError);
}

TEST(RemoteBackend, TimeoutBoundsTheWholeCall) {
  StubServer stub([&](httplib::Server& s) {
    s.Post("/slow", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(1500ms);
      res.set_content(R"({"text":"late"})", "application/json");
    });
  });
  auto cfg = config_for(stub.url("/slow"));
  cfg.endpoint.timeout = 300ms;
  RemoteBackend backend(cfg);
  auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(backend.generate(kPrompt, {}), BackendUnavailable);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 1000ms);
}

TEST(RemoteBackend, InvalidParamsAndUrls) {
  GenerationParams bad;
  bad.max_tokens = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = {};
  bad.temperature = -1;
  EXPECT_THROW(bad.validate(), ValidationError);
  EXPECT_THROW(parse_url("ftp://host/x"), ValidationError);
  EXPECT_THROW(parse_url("localhost:8000"), ValidationError);
  auto u = parse_url("https://example.org:8443/v1/completions");
  EXPECT_EQ(u.base, "https://example.org:8443");
  EXPECT_EQ(u.path, "/v1/completions");
  EXPECT_EQ(parse_url("http://h").path, "/");
  EXPECT_EQ(parse_backend_kind("remote"), BackendKind::remote);
  EXPECT_THROW(parse_backend_kind("gpt"), ValidationError);
}

}  // namespace
}  // namespace opinion
