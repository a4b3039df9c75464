#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "opinion/backend.hpp"
#include "opinion/bias_registry.hpp"
#include "opinion/json_endpoint.hpp"

namespace opinion {

enum class EvalDomain { gender, race, religious_ideologies, political_ideologies, professions };
enum class Metric { regard, sentiment };
enum class Label { positive, neutral, negative, other };

std::string_view to_string(EvalDomain d) noexcept;
std::string_view to_string(Metric m) noexcept;
std::string_view to_string(Label l) noexcept;
EvalDomain parse_domain(std::string_view s);
Metric parse_metric(std::string_view s);
Label parse_label(std::string_view s);

// Demographic subgroups (gender, race) are scored by regard; ideologies
// and professions by plain sentiment.
constexpr Metric decide_metric(EvalDomain domain) noexcept {
  return domain == EvalDomain::gender || domain == EvalDomain::race ? Metric::regard : Metric::sentiment;
}

// Labels a metric can produce: sentiment never yields `other`.
std::vector<Label> labels_for(Metric metric);

struct EvalPrompt {
  EvalDomain domain{};
  std::string subgroup;
  std::string prompt_text;

  friend bool operator==(const EvalPrompt&, const EvalPrompt&) = default;
};

nlohmann::json to_json(const EvalPrompt& p);
EvalPrompt eval_prompt_from_json(const nlohmann::json& j);

// Newline-delimited {domain, subgroup, prompt_text}. Throws ValidationError
// naming the line.
std::vector<EvalPrompt> read_eval_prompts(const std::filesystem::path& path);
void write_eval_prompts(const std::vector<EvalPrompt>& prompts, const std::filesystem::path& path);

// Converts a BOLD release ("<domain>_prompt.json" files mapping subgroup ->
// entity -> [prompts]) into EvalPrompts. Subgroup names are mapped to the
// short column labels (American_actors -> Male, African_Americans -> Black,
// left-wing -> Left-wing, ...).
std::vector<EvalPrompt> import_bold(const std::filesystem::path& dir);
std::string bold_subgroup_label(EvalDomain domain, std::string_view raw);

class TextClassifier {
 public:
  virtual ~TextClassifier() = default;
  virtual Label classify(std::string_view text) = 0;
};

using ClassifierPtr = std::shared_ptr<TextClassifier>;

enum class Polarity { positive, negative };
using Lexicon = std::map<std::string, Polarity, std::less<>>;

// Majority vote of lexicon hits over text::tokenize() tokens; no hits or a
// tie gives neutral.
Label lexicon_classify(std::string_view text, const Lexicon& lexicon);

// Reads {"token": "positive" | "negative", ...}.
Lexicon load_lexicon(const std::filesystem::path& path);

class LexiconClassifier final : public TextClassifier {
 public:
  explicit LexiconClassifier(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}
  Label classify(std::string_view text) override { return lexicon_classify(text, lexicon_); }

 private:
  Lexicon lexicon_;
};

// POSTs {"text": ...} and expects {"label": "positive"|"neutral"|"negative"|"other"}.
class RemoteClassifier final : public TextClassifier {
 public:
  explicit RemoteClassifier(EndpointConfig config) : endpoint_(std::move(config)) {}
  Label classify(std::string_view text) override;

 private:
  JsonEndpoint endpoint_;
};

struct ClassifierSet {
  ClassifierPtr regard;
  ClassifierPtr sentiment;

  TextClassifier& for_metric(Metric m) const { return m == Metric::regard ? *regard : *sentiment; }
};

// Proportion of one label among the completions of one bias for one
// subgroup: proportion == count / n.
struct EvalCell {
  BiasId bias{};
  std::string subgroup;
  Metric metric{};
  Label label{};
  double proportion = 0.0;
  std::uint64_t count = 0;
  std::uint64_t n = 0;

  friend bool operator==(const EvalCell&, const EvalCell&) = default;
};

nlohmann::json to_json(const EvalCell& c);
EvalCell eval_cell_from_json(const nlohmann::json& j);

// One (bias, prompt) attempt. `label` is empty when generation or
// classification failed; `error` then says why.
struct EvalSample {
  BiasId bias{};
  EvalDomain domain{};
  std::string subgroup;
  Metric metric{};
  std::string prompt_text;
  std::string completion;
  std::optional<Label> label;
  std::string error;
};

nlohmann::json to_json(const EvalSample& s);

struct EvalOptions {
  GenerationParams params;
  unsigned parallelism = 4;
  double degraded_above = 0.10;  // skipped share that marks a run degraded
};

struct EvalRun {
  std::vector<EvalCell> cells;
  std::vector<EvalSample> log;  // bias-major, prompt order
  std::size_t skipped = 0;
  bool degraded = false;
};

// Renders each prompt for each bias's serving subreddit, generates, and
// classifies with the domain's metric. Throws ValidationError on an empty
// prompt or bias set or a missing classifier.
EvalRun run_eval(const std::vector<BiasId>& biases, const std::vector<EvalPrompt>& prompts,
                 GenerationBackend& backend, const ClassifierSet& classifiers, const EvalOptions& options = {});

// Folds labeled samples into cells, ordered by bias, then subgroup in order
// of first appearance, then label. Failed samples are not counted.
std::vector<EvalCell> aggregate(const std::vector<EvalSample>& log);

enum class ReportFormat { csv, markdown };
ReportFormat parse_report_format(std::string_view s);

// Markdown: one block per sentiment (positive, then negative), a row per
// bias and a column per subgroup, three decimals, every column maximum of a
// block in bold. CSV: every cell, unrounded. Throws ValidationError listing
// missing cells when the bias x subgroup grid is incomplete.
std::string render_report(const std::vector<EvalCell>& cells, ReportFormat format);

nlohmann::json eval_run_json(const EvalRun& run);
std::vector<EvalCell> cells_from_json(const nlohmann::json& j);

}  // namespace opinion
