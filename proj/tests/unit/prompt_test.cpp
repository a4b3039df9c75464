#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

#include "opinion/error.hpp"
#include "opinion/prompt.hpp"
#include "support/temp_dir.hpp"

namespace opinion {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::string kInstruction = "Give two examples of reputable TV news channels";

TEST(Prompt, MatchesGoldenBytes) {
  auto golden = slurp(std::filesystem::path(OPINION_FIXTURE_DIR) / "prompts/askagerman_tv_news.txt");
  ASSERT_FALSE(golden.empty());
  auto p = render_inference("AskAGerman", kInstruction);
  EXPECT_EQ(p.text, golden);
  EXPECT_EQ(p.bias, BiasId::german);
  EXPECT_EQ(render_inference(BiasId::german, kInstruction), p);
}

TEST(Prompt, LiteralLayout) {
  EXPECT_EQ(render_inference("AskMen", "Why?").text, "--- AskMen AskMen AskMen\n\nInstruction: Why?\n\n\n--- AskMen AskMen AskMen Response:");
  EXPECT_EQ(render_inference(BiasId::teenager, "Why?").subreddit, "AskTeenGirls");
  auto outside = render_inference("AskHistorians", "Why?");
  EXPECT_FALSE(outside.bias.has_value());
}

TEST(Prompt, RejectsBadInput) {
  EXPECT_THROW(render_inference("AskMen", ""), ValidationError);
  EXPECT_THROW(render_inference("AskMen", "   "), ValidationError);
  EXPECT_THROW(render_inference("AskMen", " padded"), ValidationError);
  EXPECT_THROW(render_inference("", "Why?"), ValidationError);
  EXPECT_THROW(render_inference("Ask Men", "Why?"), ValidationError);
  EXPECT_THROW(render_training("AskMen", "Why?", "  "), ValidationError);
}

TEST(Prompt, TrainingExtendsInferencePrompt) {
  const std::string response = "Tagesschau and ZDF heute";
  auto inference = render_inference("AskAGerman", kInstruction).text;
  auto training = render_training("AskAGerman", kInstruction, response);
  ASSERT_EQ(training.rfind(inference, 0), 0u);
  EXPECT_EQ(training.substr(inference.size()), " " + response);
  // Round trip: the response is recoverable after the response marker.
  auto marker = training.rfind(" Response: ");
  EXPECT_EQ(training.substr(marker + 11), response);
}

TEST(Prompt, StopSequences) {
  EXPECT_EQ(completion_stop_sequences(), std::vector<std::string>{"---"});
  EXPECT_EQ(completion_stop_sequences("</s>"), (std::vector<std::string>{"---", "</s>"}));
  auto stops = completion_stop_sequences("</s>");
  EXPECT_EQ(apply_stop_sequences("CNN and NPR\n--- x", stops), "CNN and NPR");
  EXPECT_EQ(apply_stop_sequences(" Fox</s> more --- x", stops), "Fox");
  EXPECT_EQ(apply_stop_sequences("no stop here ", stops), "no stop here");
  EXPECT_EQ(apply_stop_sequences("---", stops), "");
}

TEST(Prompt, TrainingFile) {
  testing::TempDir dir;
  std::vector<InstructionPair> pairs{
      {BiasId::german, "AskAGerman", kInstruction, "Tagesschau", 5, "p", "c", 1},
      {BiasId::male, "AskMen", "Best tool?", "A hammer.", 3, "p2", "c2", 2}};
  write_training_file(pairs, dir / "train.jsonl");
  std::ifstream in(dir / "train.jsonl");
  std::string line;
  std::vector<std::string> texts;
  while (std::getline(in, line)) texts.push_back(nlohmann::json::parse(line).at("text"));
  ASSERT_EQ(texts.size(), 2u);
  EXPECT_EQ(texts[0], render_training("AskAGerman", kInstruction, "Tagesschau"));
  EXPECT_EQ(texts[1], render_training("AskMen", "Best tool?", "A hammer."));
}

}  // namespace
}  // namespace opinion
