#pragma once

#include <optional>
#include <string>

#include "opinion/backend.hpp"
#include "opinion/json_endpoint.hpp"

namespace opinion {

struct RemoteBackendConfig {
  EndpointConfig endpoint;
  // Speak the OpenAI-style completions shape ({model, prompt, ...} ->
  // {choices: [{text}]}) instead of the plain {prompt, ...} -> {text}.
  bool openai_compat = false;
  std::string model;
  std::optional<std::string> end_sentinel;
};

// Client for a completion endpoint serving a tuned model elsewhere.
class RemoteBackend final : public GenerationBackend {
 public:
  explicit RemoteBackend(RemoteBackendConfig config);

  Completion generate(const RenderedPrompt& prompt, const GenerationParams& params) override;
  BackendKind kind() const noexcept override { return BackendKind::remote; }

  nlohmann::json request_body(const RenderedPrompt& prompt, const GenerationParams& params) const;

 private:
  RemoteBackendConfig config_;
  JsonEndpoint endpoint_;
};

}  // namespace opinion
