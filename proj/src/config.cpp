#include "opinion/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "opinion/error.hpp"
#include "opinion/text.hpp"

namespace opinion {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys{
      {"dump_dir", "OPINION_DUMP_DIR", "", "directory holding <Subreddit>_{submissions,comments}.ndjson[.zst|.gz]"},
      {"corpus_path", "OPINION_CORPUS", "", "instruction corpus (ndjson)"},
      {"scale", "OPINION_SCALE", "1.0", "quota scale factor in (0, 1]"},
      {"strict", "OPINION_STRICT", "false", "abort ingestion on the first malformed dump line"},
      {"backend.kind", "OPINION_BACKEND", "retrieval", "remote | retrieval"},
      {"backend.endpoint_url", "OPINION_ENDPOINT_URL", "", "completion endpoint for the remote backend"},
      {"backend.token", "OPINION_ENDPOINT_TOKEN", "", "bearer token for the completion endpoint"},
      {"backend.openai_compat", "OPINION_OPENAI_COMPAT", "false", "use the OpenAI completions request shape"},
      {"backend.model", "OPINION_MODEL", "", "model name sent in OpenAI-compatible mode"},
      {"backend.stop_sentinel", "OPINION_STOP_SENTINEL", "", "extra end-of-text stop sequence"},
      {"backend.timeout_ms", "OPINION_BACKEND_TIMEOUT_MS", "30000", "per-call deadline for the remote endpoint"},
      {"backend.retries", "OPINION_BACKEND_RETRIES", "2", "retries after a failed remote call"},
      {"backend.backoff_ms", "OPINION_BACKEND_BACKOFF_MS", "250", "first retry delay, doubled per retry"},
      {"backend.max_in_flight", "OPINION_BACKEND_MAX_IN_FLIGHT", "8", "concurrent remote requests"},
      {"backend.max_tokens", "OPINION_MAX_TOKENS", "256", "generation length cap"},
      {"backend.temperature", "OPINION_TEMPERATURE", "0.7", "sampling temperature (remote only)"},
      {"serve.host", "OPINION_HOST", "127.0.0.1", "listen address"},
      {"serve.port", "OPINION_PORT", "8080", "listen port"},
      {"serve.data_dir", "OPINION_DATA_DIR", "opinion-data", "conversation log directory"},
      {"serve.web_root", "OPINION_WEB_ROOT", "", "static files served at / (optional)"},
      {"serve.parallelism", "OPINION_PARALLELISM", "4", "concurrent generations per ask"},
      {"serve.bias_timeout_ms", "OPINION_BIAS_TIMEOUT_MS", "30000", "time budget per bias answer"},
      {"eval.classifier", "OPINION_CLASSIFIER", "lexicon", "lexicon | remote"},
      {"eval.lexicon", "OPINION_LEXICON", "", "lexicon JSON for the lexicon classifier"},
      {"eval.regard_url", "OPINION_REGARD_URL", "", "regard classifier endpoint"},
      {"eval.sentiment_url", "OPINION_SENTIMENT_URL", "", "sentiment classifier endpoint"},
      {"eval.parallelism", "OPINION_EVAL_PARALLELISM", "4", "concurrent eval samples"},
  };
  return keys;
}

EnvLookup process_env() {
  return [](std::string_view name) -> std::optional<std::string> {
    if (const char* v = std::getenv(std::string(name).c_str())) return std::string(v);
    return std::nullopt;
  };
}

namespace {

bool known_key(std::string_view key) {
  for (const auto& k : config_keys()) {
    if (k.key == key) return true;
  }
  return false;
}

std::string unquote(std::string_view v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    return std::string(v.substr(1, v.size() - 2));
  }
  return std::string(v);
}

}  // namespace

ConfigValues parse_config_text(std::string_view text_in, std::string_view origin) {
  ConfigValues values;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text_in)};
  std::string raw;
  auto fail = [&](const std::string& what) {
    throw ValidationError(std::string(origin) + ":" + std::to_string(line_no) + ": " + what, {"config"});
  };
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    auto key = std::string(text::trim(line.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    if (!known_key(key)) fail("unknown key '" + key + "'");
    values[key] = unquote(text::trim(line.substr(eq + 1)));
  }
  return values;
}

ConfigValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ValidationError("config " + key + ": '" + v + "' is not a valid number", {key});
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("config " + key + ": '" + v + "' is not a boolean", {key});
}

}  // namespace

Config resolve_config(const ConfigValues& file, const EnvLookup& env, const ConfigValues& flags) {
  Config c;
  for (const auto& k : config_keys()) {
    const std::string key(k.key);
    if (auto it = flags.find(k.key); it != flags.end()) {
      c.values[key] = it->second;
      c.origins[key] = "flag";
    } else if (auto e = env ? env(k.env) : std::nullopt) {
      c.values[key] = *e;
      c.origins[key] = "env";
    } else if (auto f = file.find(k.key); f != file.end()) {
      c.values[key] = f->second;
      c.origins[key] = "file";
    } else {
      c.values[key] = std::string(k.fallback);
      c.origins[key] = "default";
    }
  }
  for (const auto& [key, _] : flags) {
    if (!known_key(key)) throw ValidationError("unknown config key '" + key + "'", {key});
  }

  auto get = [&](std::string_view key) -> const std::string& { return c.values.find(key)->second; };
  auto num_u = [&](std::string_view key) { return parse_number<unsigned>(std::string(key), get(key)); };
  auto num_i = [&](std::string_view key) { return parse_number<int>(std::string(key), get(key)); };
  auto ms = [&](std::string_view key) { return std::chrono::milliseconds(parse_number<long>(std::string(key), get(key))); };

  c.dump_dir = get("dump_dir");
  c.corpus_path = get("corpus_path");
  c.scale = parse_number<double>("scale", get("scale"));
  validate_scale(c.scale);
  c.strict = parse_bool("strict", get("strict"));

  c.backend = parse_backend_kind(get("backend.kind"));
  c.remote.endpoint.url = get("backend.endpoint_url");
  c.remote.endpoint.token = get("backend.token");
  c.remote.endpoint.timeout = ms("backend.timeout_ms");
  c.remote.endpoint.retries = num_i("backend.retries");
  c.remote.endpoint.backoff = ms("backend.backoff_ms");
  c.remote.endpoint.max_in_flight = num_u("backend.max_in_flight");
  c.remote.openai_compat = parse_bool("backend.openai_compat", get("backend.openai_compat"));
  c.remote.model = get("backend.model");
  if (!get("backend.stop_sentinel").empty()) c.remote.end_sentinel = get("backend.stop_sentinel");
  c.params.max_tokens = num_i("backend.max_tokens");
  c.params.temperature = parse_number<double>("backend.temperature", get("backend.temperature"));
  c.params.validate();
  if (c.remote.endpoint.retries < 0) throw ValidationError("backend.retries must be >= 0", {"backend.retries"});
  if (c.remote.endpoint.timeout.count() <= 0) {
    throw ValidationError("backend.timeout_ms must be positive", {"backend.timeout_ms"});
  }

  c.host = get("serve.host");
  c.port = num_i("serve.port");
  if (c.port < 0 || c.port > 65535) throw ValidationError("serve.port out of range", {"serve.port"});
  c.data_dir = get("serve.data_dir");
  c.web_root = get("serve.web_root");
  c.gateway.parallelism = num_u("serve.parallelism");
  c.gateway.bias_timeout = ms("serve.bias_timeout_ms");
  if (c.gateway.parallelism == 0) throw ValidationError("serve.parallelism must be >= 1", {"serve.parallelism"});
  if (c.gateway.bias_timeout.count() <= 0) {
    throw ValidationError("serve.bias_timeout_ms must be positive", {"serve.bias_timeout_ms"});
  }

  c.classifier = get("eval.classifier");
  if (c.classifier != "lexicon" && c.classifier != "remote") {
    throw ValidationError("eval.classifier must be lexicon or remote", {"eval.classifier"});
  }
  c.lexicon_path = get("eval.lexicon");
  for (auto* ep : {&c.regard_endpoint, &c.sentiment_endpoint}) {
    ep->timeout = c.remote.endpoint.timeout;
    ep->retries = c.remote.endpoint.retries;
    ep->backoff = c.remote.endpoint.backoff;
    ep->max_in_flight = c.remote.endpoint.max_in_flight;
  }
  c.regard_endpoint.url = get("eval.regard_url");
  c.sentiment_endpoint.url = get("eval.sentiment_url");
  c.eval_parallelism = num_u("eval.parallelism");
  return c;
}

}  // namespace opinion
