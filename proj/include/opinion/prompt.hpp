#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opinion/bias_registry.hpp"
#include "opinion/corpus.hpp"

namespace opinion {

// Prompt conditioning a completion on one subreddit's voice. `bias` is set
// when the subreddit belongs to the registry.
struct RenderedPrompt {
  std::optional<BiasId> bias;
  std::string subreddit;
  std::string instruction;
  std::string text;

  friend bool operator==(const RenderedPrompt&, const RenderedPrompt&) = default;
};

// Turn delimiter that frames both header lines of the template.
inline constexpr std::string_view kTurnDelimiter = "---";

// "--- S S S\n\nInstruction: I\n\n\n--- S S S Response:" with no trailing
// newline. Throws ValidationError on an empty instruction, one with
// surrounding whitespace, or a subreddit that is empty or contains spaces.
RenderedPrompt render_inference(std::string_view subreddit, std::string_view instruction);

// Same, using the bias's serving subreddit.
RenderedPrompt render_inference(BiasId bias, std::string_view instruction);

// Inference prompt followed by one space and the response.
std::string render_training(std::string_view subreddit, std::string_view instruction,
                            std::string_view response);

// "---" plus an optional backend-specific end-of-text marker.
std::vector<std::string> completion_stop_sequences(std::optional<std::string> end_sentinel = std::nullopt);

// Cuts `text` at the earliest stop sequence, then trims whitespace.
std::string apply_stop_sequences(std::string_view text, const std::vector<std::string>& stops);

// One {"text": ...} JSON line per corpus record, in corpus order.
void write_training_file(const std::vector<InstructionPair>& pairs, const std::filesystem::path& path);

}  // namespace opinion
