#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "opinion/prompt.hpp"

namespace opinion {

struct GenerationParams {
  int max_tokens = 256;
  double temperature = 0.7;
  std::vector<std::string> stop = completion_stop_sequences();

  // Throws ValidationError on max_tokens < 1 or a negative temperature.
  void validate() const;
};

enum class BackendKind { remote, retrieval };

std::string_view to_string(BackendKind kind) noexcept;
BackendKind parse_backend_kind(std::string_view name);

struct Completion {
  std::string text;  // stop sequences applied, trimmed
  BackendKind backend = BackendKind::retrieval;
  std::int64_t latency_ms = 0;
};

// Produces one completion for a rendered prompt. Implementations must be
// safe for concurrent generate() calls.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;

  virtual Completion generate(const RenderedPrompt& prompt, const GenerationParams& params) = 0;
  virtual BackendKind kind() const noexcept = 0;
};

using BackendPtr = std::shared_ptr<GenerationBackend>;

}  // namespace opinion
