#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opinion/backend.hpp"
#include "opinion/gateway.hpp"
#include "opinion/remote_backend.hpp"

namespace opinion {

// One recognized configuration key.
struct ConfigKey {
  std::string_view key;      // dotted name used in files and flags
  std::string_view env;      // environment variable consulted
  std::string_view fallback; // built-in default ("" = unset)
  std::string_view help;
};

const std::vector<ConfigKey>& config_keys();

using ConfigValues = std::map<std::string, std::string, std::less<>>;
using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;

EnvLookup process_env();

// Flat "key = value" text. "[section]" lines prefix following keys with
// "section."; '#' and ';' start comments. Unknown keys are rejected.
ConfigValues parse_config_text(std::string_view text, std::string_view origin = "config");
ConfigValues read_config_file(const std::filesystem::path& path);

struct Config {
  std::filesystem::path dump_dir;
  std::filesystem::path corpus_path;
  double scale = 1.0;
  bool strict = false;

  BackendKind backend = BackendKind::retrieval;
  RemoteBackendConfig remote;
  GenerationParams params;

  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir;
  std::filesystem::path web_root;
  GatewayConfig gateway;

  std::string classifier = "lexicon";
  std::filesystem::path lexicon_path;
  EndpointConfig regard_endpoint;
  EndpointConfig sentiment_endpoint;
  unsigned eval_parallelism = 4;

  // Raw winning value per key and where it came from: flag, env, file or
  // default.
  ConfigValues values;
  std::map<std::string, std::string, std::less<>> origins;
};

// Per key: flags, then environment, then file, then built-in default.
// Throws ValidationError for unparseable values or scale outside (0, 1].
Config resolve_config(const ConfigValues& file, const EnvLookup& env, const ConfigValues& flags);

}  // namespace opinion
