#include "opinion/prompt.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "opinion/error.hpp"
#include "opinion/text.hpp"

namespace opinion {

namespace {

std::string header(std::string_view subreddit) {
  std::string h(kTurnDelimiter);
  for (int i = 0; i < 3; ++i) {
    h += ' ';
    h += subreddit;
  }
  return h;
}

}  // namespace

RenderedPrompt render_inference(std::string_view subreddit, std::string_view instruction) {
  if (subreddit.empty() || std::any_of(subreddit.begin(), subreddit.end(), text::is_space)) {
    throw ValidationError("invalid subreddit name '" + std::string(subreddit) + "'", {"subreddit"});
  }
  if (text::trim(instruction).empty()) throw ValidationError("instruction is empty", {"instruction"});
  if (text::trim(instruction).size() != instruction.size()) {
    throw ValidationError("instruction has leading or trailing whitespace", {"instruction"});
  }

  const std::string h = header(subreddit);
  RenderedPrompt p;
  if (auto src = source_for_subreddit(subreddit)) p.bias = src->bias;
  p.subreddit = std::string(subreddit);
  p.instruction = std::string(instruction);
  p.text.reserve(2 * h.size() + instruction.size() + 32);
  p.text += h;
  p.text += "\n\nInstruction: ";
  p.text += instruction;
  p.text += "\n\n\n";
  p.text += h;
  p.text += " Response:";
  return p;
}

RenderedPrompt render_inference(BiasId bias, std::string_view instruction) {
  auto p = render_inference(serving_subreddit(bias), instruction);
  p.bias = bias;
  return p;
}

std::string render_training(std::string_view subreddit, std::string_view instruction,
                            std::string_view response) {
  if (text::trim(response).empty()) throw ValidationError("response is empty", {"response"});
  auto out = render_inference(subreddit, instruction).text;
  out += ' ';
  out += response;
  return out;
}

std::vector<std::string> completion_stop_sequences(std::optional<std::string> end_sentinel) {
  std::vector<std::string> stops{std::string(kTurnDelimiter)};
  if (end_sentinel && !end_sentinel->empty()) stops.push_back(std::move(*end_sentinel));
  return stops;
}

std::string apply_stop_sequences(std::string_view text, const std::vector<std::string>& stops) {
  std::size_t cut = text.size();
  for (const auto& stop : stops) {
    if (stop.empty()) continue;
    cut = std::min(cut, text.find(stop));
  }
  return std::string(text::trim(text.substr(0, cut)));
}

void write_training_file(const std::vector<InstructionPair>& pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& p : pairs) {
    out << nlohmann::json{{"text", render_training(p.subreddit, p.instruction, p.response)}}.dump() << '\n';
  }
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

}  // namespace opinion
