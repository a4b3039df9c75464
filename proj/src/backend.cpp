#include "opinion/backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "opinion/error.hpp"
#include "opinion/remote_backend.hpp"

namespace opinion {

void GenerationParams::validate() const {
  if (max_tokens < 1) throw ValidationError("max_tokens must be >= 1", {"params.max_tokens"});
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw ValidationError("temperature must be >= 0", {"params.temperature"});
  }
}

std::string_view to_string(BackendKind kind) noexcept {
  return kind == BackendKind::remote ? "remote" : "retrieval";
}

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "remote") return BackendKind::remote;
  if (name == "retrieval") return BackendKind::retrieval;
  throw ValidationError("unknown backend '" + std::string(name) + "' (expected remote or retrieval)", {"backend"});
}

RemoteBackend::RemoteBackend(RemoteBackendConfig config)
    : config_(std::move(config)), endpoint_(config_.endpoint) {}

nlohmann::json RemoteBackend::request_body(const RenderedPrompt& prompt, const GenerationParams& params) const {
  auto stops = params.stop;
  if (config_.end_sentinel && std::find(stops.begin(), stops.end(), *config_.end_sentinel) == stops.end()) {
    stops.push_back(*config_.end_sentinel);
  }
  nlohmann::json body{{"prompt", prompt.text},
                      {"max_tokens", params.max_tokens},
                      {"temperature", params.temperature},
                      {"stop", stops}};
  if (config_.openai_compat && !config_.model.empty()) body["model"] = config_.model;
  return body;
}

Completion RemoteBackend::generate(const RenderedPrompt& prompt, const GenerationParams& params) {
  params.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto reply = endpoint_.post(request_body(prompt, params));

  const nlohmann::json* text = nullptr;
  if (config_.openai_compat) {
    if (reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty() &&
        reply["choices"][0].contains("text")) {
      text = &reply["choices"][0]["text"];
    }
  } else if (reply.is_object() && reply.contains("text")) {
    text = &reply["text"];
  }
  if (!text || !text->is_string()) throw ProtocolError("completion reply lacks a text field", 200);

  auto stops = params.stop;
  if (config_.end_sentinel) stops.push_back(*config_.end_sentinel);

  Completion c;
  c.text = apply_stop_sequences(text->get<std::string>(), stops);
  c.backend = BackendKind::remote;
  c.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return c;
}

}  // namespace opinion
