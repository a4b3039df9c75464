#include <gtest/gtest.h>

#include "opinion/config.hpp"
#include "opinion/error.hpp"

namespace opinion {
namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](std::string_view name) -> std::optional<std::string> {
    auto it = vars.find(std::string(name));
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

TEST(Config, ParsesSectionsCommentsAndQuotes) {
  auto v = parse_config_text(
      "# comment\n"
      "scale = 0.5\n"
      "\n"
      "[backend]\n"
      "kind = remote\n"
      "endpoint_url = \"http://localhost:9000/gen\"\n"
      "; another comment\n"
      "[serve]\n"
      "port=9090\n");
  EXPECT_EQ(v.at("scale"), "0.5");
  EXPECT_EQ(v.at("backend.kind"), "remote");
  EXPECT_EQ(v.at("backend.endpoint_url"), "http://localhost:9000/gen");
  EXPECT_EQ(v.at("serve.port"), "9090");
}

TEST(Config, RejectsUnknownKeysWithLocation) {
  try {
    parse_config_text("scale = 1\n[serve]\nprot = 80\n", "my.conf");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("my.conf:3"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("serve.prot"), std::string::npos);
  }
  EXPECT_THROW(parse_config_text("just words\n"), ValidationError);
  EXPECT_THROW(parse_config_text("[serve\n"), ValidationError);
}

TEST(Config, DefaultsWhenNothingIsSet) {
  auto c = resolve_config({}, env_of({}), {});
  EXPECT_EQ(c.backend, BackendKind::retrieval);
  EXPECT_DOUBLE_EQ(c.scale, 1.0);
  EXPECT_EQ(c.port, 8080);
  EXPECT_EQ(c.params.max_tokens, 256);
  EXPECT_DOUBLE_EQ(c.params.temperature, 0.7);
  EXPECT_EQ(c.gateway.parallelism, 4u);
  EXPECT_EQ(c.gateway.bias_timeout, std::chrono::milliseconds(30000));
  EXPECT_EQ(c.remote.endpoint.retries, 2);
  EXPECT_EQ(c.remote.endpoint.backoff, std::chrono::milliseconds(250));
  EXPECT_EQ(c.remote.endpoint.max_in_flight, 8u);
  for (const auto& k : config_keys()) EXPECT_EQ(c.origins.at(std::string(k.key)), "default") << k.key;
}

TEST(Config, PrecedenceFlagEnvFileDefault) {
  ConfigValues file{{"serve.port", "1111"}, {"serve.host", "0.0.0.0"}, {"scale", "0.5"}, {"backend.model", "m-file"}};
  auto env = env_of({{"OPINION_PORT", "2222"}, {"OPINION_SCALE", "0.25"}, {"OPINION_MODEL", "m-env"}});
  ConfigValues flags{{"serve.port", "3333"}};
  auto c = resolve_config(file, env, flags);
  EXPECT_EQ(c.port, 3333);
  EXPECT_EQ(c.origins.at("serve.port"), "flag");
  EXPECT_DOUBLE_EQ(c.scale, 0.25);
  EXPECT_EQ(c.origins.at("scale"), "env");
  EXPECT_EQ(c.remote.model, "m-env");
  EXPECT_EQ(c.host, "0.0.0.0");
  EXPECT_EQ(c.origins.at("serve.host"), "file");
  EXPECT_EQ(c.origins.at("serve.data_dir"), "default");

  // Each key resolves independently: drop the flag and env wins, drop env and file wins.
  EXPECT_EQ(resolve_config(file, env, {}).port, 2222);
  EXPECT_EQ(resolve_config(file, env_of({}), {}).port, 1111);
}

TEST(Config, EveryKeyHasAnEnvName) {
  for (const auto& k : config_keys()) {
    EXPECT_EQ(k.env.rfind("OPINION_", 0), 0u) << k.key;
    EXPECT_FALSE(k.help.empty());
  }
  auto c = resolve_config({}, env_of({{"OPINION_ENDPOINT_TOKEN", "tok"}, {"OPINION_BACKEND", "remote"}}), {});
  EXPECT_EQ(c.remote.endpoint.token, "tok");
  EXPECT_EQ(c.backend, BackendKind::remote);
}

TEST(Config, RejectsBadValues) {
  EXPECT_THROW(resolve_config({{"scale", "0"}}, env_of({}), {}), ValidationError);
  EXPECT_THROW(resolve_config({{"scale", "1.01"}}, env_of({}), {}), ValidationError);
  EXPECT_THROW(resolve_config({}, env_of({{"OPINION_PORT", "eighty"}}), {}), ValidationError);
  EXPECT_THROW(resolve_config({}, env_of({}), {{"serve.port", "70000"}}), ValidationError);
  EXPECT_THROW(resolve_config({}, env_of({}), {{"backend.kind", "gpt"}}), ValidationError);
  EXPECT_THROW(resolve_config({}, env_of({}), {{"strict", "maybe"}}), ValidationError);
  EXPECT_THROW(resolve_config({}, env_of({}), {{"serve.parallelism", "0"}}), ValidationError);
  EXPECT_THROW(resolve_config({}, env_of({}), {{"eval.classifier", "vibes"}}), ValidationError);
  EXPECT_THROW(resolve_config({}, env_of({}), {{"nonsense", "1"}}), ValidationError);
}

}  // namespace
}  // namespace opinion
