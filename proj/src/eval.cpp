#include "opinion/eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "opinion/error.hpp"
#include "opinion/prompt.hpp"
#include "opinion/text.hpp"

namespace opinion {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<EvalDomain, std::string_view>, 5> kDomains{{
    {EvalDomain::gender, "gender"},
    {EvalDomain::race, "race"},
    {EvalDomain::religious_ideologies, "religious_ideologies"},
    {EvalDomain::political_ideologies, "political_ideologies"},
    {EvalDomain::professions, "professions"},
}};

constexpr std::array<std::string_view, 4> kLabels{"positive", "neutral", "negative", "other"};

}  // namespace

std::string_view to_string(EvalDomain d) noexcept {
  for (const auto& [domain, name] : kDomains) {
    if (domain == d) return name;
  }
  return "unknown";
}

std::string_view to_string(Metric m) noexcept { return m == Metric::regard ? "regard" : "sentiment"; }

std::string_view to_string(Label l) noexcept { return kLabels[static_cast<std::size_t>(l)]; }

EvalDomain parse_domain(std::string_view s) {
  for (const auto& [domain, name] : kDomains) {
    if (name == s) return domain;
  }
  throw ValidationError("unknown domain '" + std::string(s) + "'", {"domain"});
}

Metric parse_metric(std::string_view s) {
  if (s == "regard") return Metric::regard;
  if (s == "sentiment") return Metric::sentiment;
  throw ValidationError("unknown metric '" + std::string(s) + "'", {"metric"});
}

Label parse_label(std::string_view s) {
  for (std::size_t i = 0; i < kLabels.size(); ++i) {
    if (kLabels[i] == s) return static_cast<Label>(i);
  }
  throw ValidationError("unknown label '" + std::string(s) + "'", {"label"});
}

std::vector<Label> labels_for(Metric metric) {
  if (metric == Metric::sentiment) return {Label::positive, Label::neutral, Label::negative};
  return {Label::positive, Label::neutral, Label::negative, Label::other};
}

json to_json(const EvalPrompt& p) {
  return {{"domain", to_string(p.domain)}, {"subgroup", p.subgroup}, {"prompt_text", p.prompt_text}};
}

EvalPrompt eval_prompt_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("prompt record is not an object");
  for (const char* key : {"domain", "subgroup", "prompt_text"}) {
    if (!j.contains(key) || !j[key].is_string()) throw ValidationError(std::string(key) + " must be a string", {key});
  }
  EvalPrompt p{parse_domain(j["domain"].get<std::string>()), j["subgroup"].get<std::string>(),
               std::string(text::trim(j["prompt_text"].get<std::string>()))};
  if (text::trim(p.subgroup).empty()) throw ValidationError("empty subgroup", {"subgroup"});
  if (p.prompt_text.empty()) throw ValidationError("empty prompt_text", {"prompt_text"});
  return p;
}

std::vector<EvalPrompt> read_eval_prompts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open prompt file " + path.string());
  std::vector<EvalPrompt> prompts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw ValidationError("malformed JSON");
      prompts.push_back(eval_prompt_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + " line " + std::to_string(line_no) + ": " + e.what(), e.fields());
    }
  }
  return prompts;
}

void write_eval_prompts(const std::vector<EvalPrompt>& prompts, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& p : prompts) out << to_json(p).dump() << '\n';
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

std::string bold_subgroup_label(EvalDomain domain, std::string_view raw) {
  static const std::map<std::string_view, std::string_view> kDemographic{
      {"American_actors", "Male"},
      {"American_actresses", "Female"},
      {"African_Americans", "Black"},
      {"Asian_Americans", "Asian"},
      {"European_Americans", "European"},
      {"Hispanic_and_Latino_Americans", "Hispanic and Latino"},
  };
  if (domain == EvalDomain::gender || domain == EvalDomain::race) {
    if (auto it = kDemographic.find(raw); it != kDemographic.end()) return std::string(it->second);
  }
  std::string out(raw);
  std::replace(out.begin(), out.end(), '_', ' ');
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::vector<EvalPrompt> import_bold(const std::filesystem::path& dir) {
  static constexpr std::array<std::pair<std::string_view, EvalDomain>, 5> kFiles{{
      {"gender_prompt.json", EvalDomain::gender},
      {"race_prompt.json", EvalDomain::race},
      {"religious_ideology_prompt.json", EvalDomain::religious_ideologies},
      {"political_ideology_prompt.json", EvalDomain::political_ideologies},
      {"profession_prompt.json", EvalDomain::professions},
  }};
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());

  std::vector<EvalPrompt> prompts;
  bool found = false;
  for (const auto& [name, domain] : kFiles) {
    const auto path = dir / name;
    if (!std::filesystem::is_regular_file(path)) continue;
    found = true;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    auto doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ValidationError(path.string() + ": expected a JSON object");
    for (const auto& [subgroup, entities] : doc.items()) {
      if (!entities.is_object()) throw ValidationError(path.string() + ": subgroup " + subgroup + " is not an object");
      const auto label = bold_subgroup_label(domain, subgroup);
      for (const auto& [entity, list] : entities.items()) {
        if (!list.is_array()) throw ValidationError(path.string() + ": entity " + entity + " has no prompt list");
        for (const auto& p : list) {
          if (!p.is_string()) continue;
          auto prompt = std::string(text::trim(p.get<std::string>()));
          if (!prompt.empty()) prompts.push_back({domain, label, std::move(prompt)});
        }
      }
    }
  }
  if (!found) throw IoError("no BOLD *_prompt.json files in " + dir.string());
  return prompts;
}

Label lexicon_classify(std::string_view text_in, const Lexicon& lexicon) {
  int positive = 0;
  int negative = 0;
  for (const auto& tok : text::tokenize(text_in)) {
    if (auto it = lexicon.find(tok); it != lexicon.end()) {
      (it->second == Polarity::positive ? positive : negative) += 1;
    }
  }
  if (positive > negative) return Label::positive;
  if (negative > positive) return Label::negative;
  return Label::neutral;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ValidationError("lexicon must be a JSON object", {"lexicon"});
  Lexicon lexicon;
  for (const auto& [token, value] : doc.items()) {
    const auto v = value.is_string() ? value.get<std::string>() : std::string();
    if (v != "positive" && v != "negative") {
      throw ValidationError("lexicon entry '" + token + "' must be positive or negative", {"lexicon"});
    }
    auto tokens = text::tokenize(token);
    if (tokens.size() != 1) throw ValidationError("lexicon key '" + token + "' is not a single token", {"lexicon"});
    lexicon[tokens.front()] = v == "positive" ? Polarity::positive : Polarity::negative;
  }
  return lexicon;
}

Label RemoteClassifier::classify(std::string_view text_in) {
  auto reply = endpoint_.post({{"text", text_in}});
  if (!reply.is_object() || !reply.contains("label") || !reply["label"].is_string()) {
    throw ProtocolError("classifier reply lacks a label", 200);
  }
  try {
    return parse_label(reply["label"].get<std::string>());
  } catch (const ValidationError& e) {
    throw ProtocolError(e.what(), 200);
  }
}

json to_json(const EvalCell& c) {
  return {{"bias", to_string(c.bias)},   {"subgroup", c.subgroup},     {"metric", to_string(c.metric)},
          {"label", to_string(c.label)}, {"proportion", c.proportion}, {"count", c.count},
          {"n", c.n}};
}

EvalCell eval_cell_from_json(const json& j) {
  try {
    EvalCell c;
    c.bias = parse_bias(j.at("bias").get<std::string>());
    c.subgroup = j.at("subgroup").get<std::string>();
    c.metric = parse_metric(j.at("metric").get<std::string>());
    c.label = parse_label(j.at("label").get<std::string>());
    c.proportion = j.at("proportion").get<double>();
    c.count = j.at("count").get<std::uint64_t>();
    c.n = j.at("n").get<std::uint64_t>();
    if (c.n == 0 || c.count > c.n) throw ValidationError("cell counts out of range", {"n"});
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed cell: ") + e.what(), {"cells"});
  }
}

json to_json(const EvalSample& s) {
  json j{{"bias", to_string(s.bias)},         {"domain", to_string(s.domain)}, {"subgroup", s.subgroup},
         {"metric", to_string(s.metric)},     {"prompt_text", s.prompt_text},  {"completion", s.completion}};
  j["label"] = s.label ? json(to_string(*s.label)) : json(nullptr);
  j["error"] = s.error.empty() ? json(nullptr) : json(s.error);
  return j;
}

namespace {

void evaluate_sample(EvalSample& sample, GenerationBackend& backend, const ClassifierSet& classifiers,
                     const GenerationParams& params) {
  try {
    auto prompt = render_inference(sample.bias, sample.prompt_text);
    sample.completion = backend.generate(prompt, params).text;
  } catch (const std::exception& e) {
    sample.error = std::string("generation failed: ") + e.what();
    return;
  }
  try {
    auto label = classifiers.for_metric(sample.metric).classify(sample.completion);
    if (sample.metric == Metric::sentiment && label == Label::other) {
      sample.error = "sentiment classifier returned 'other'";
      return;
    }
    sample.label = label;
  } catch (const std::exception& e) {
    sample.error = std::string("classification failed: ") + e.what();
  }
}

}  // namespace

EvalRun run_eval(const std::vector<BiasId>& biases, const std::vector<EvalPrompt>& prompts,
                 GenerationBackend& backend, const ClassifierSet& classifiers, const EvalOptions& options) {
  if (prompts.empty()) throw ValidationError("empty prompt set", {"prompts"});
  if (biases.empty()) throw ValidationError("no biases selected", {"biases"});
  if (!classifiers.regard || !classifiers.sentiment) {
    throw ValidationError("both a regard and a sentiment classifier are required", {"classifier"});
  }
  options.params.validate();

  EvalRun run;
  run.log.reserve(biases.size() * prompts.size());
  for (auto bias : biases) {
    for (const auto& p : prompts) {
      run.log.push_back(EvalSample{bias, p.domain, p.subgroup, decide_metric(p.domain), p.prompt_text, {}, {}, {}});
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < run.log.size(); i = next++) {
      evaluate_sample(run.log[i], backend, classifiers, options.params);
    }
  };
  const unsigned width = std::max(1u, std::min<unsigned>(options.parallelism, static_cast<unsigned>(run.log.size())));
  std::vector<std::thread> workers;
  for (unsigned t = 1; t < width; ++t) workers.emplace_back(worker);
  worker();
  for (auto& t : workers) t.join();

  run.skipped = static_cast<std::size_t>(std::count_if(run.log.begin(), run.log.end(),
                                                       [](const EvalSample& s) { return !s.label; }));
  run.degraded = static_cast<double>(run.skipped) > options.degraded_above * static_cast<double>(run.log.size());
  run.cells = aggregate(run.log);
  return run;
}

std::vector<EvalCell> aggregate(const std::vector<EvalSample>& log) {
  struct Group {
    Metric metric;
    std::map<Label, std::uint64_t> counts;
    std::uint64_t n = 0;
  };
  std::vector<std::string> subgroup_order;
  std::map<std::pair<BiasId, std::size_t>, Group> groups;

  for (const auto& s : log) {
    if (!s.label) continue;
    auto it = std::find(subgroup_order.begin(), subgroup_order.end(), s.subgroup);
    const auto column = static_cast<std::size_t>(it - subgroup_order.begin());
    if (it == subgroup_order.end()) subgroup_order.push_back(s.subgroup);
    auto& g = groups.try_emplace({s.bias, column}, Group{s.metric, {}, 0}).first->second;
    if (g.metric != s.metric) {
      throw ValidationError("subgroup '" + s.subgroup + "' is scored with two different metrics", {"subgroup"});
    }
    ++g.counts[*s.label];
    ++g.n;
  }

  std::vector<EvalCell> cells;
  for (const auto& [key, g] : groups) {
    for (auto label : labels_for(g.metric)) {
      const auto count = g.counts.contains(label) ? g.counts.at(label) : 0;
      cells.push_back(EvalCell{key.first, subgroup_order[key.second], g.metric, label,
                               static_cast<double>(count) / static_cast<double>(g.n), count, g.n});
    }
  }
  return cells;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  throw ValidationError("unknown report format '" + std::string(s) + "'", {"format"});
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string render_csv(const std::vector<EvalCell>& cells) {
  std::string out = "bias,subgroup,metric,label,count,n,proportion\n";
  for (const auto& c : cells) {
    out += std::string(to_string(c.bias)) + ',' + csv_field(c.subgroup) + ',' + std::string(to_string(c.metric)) + ',' +
           std::string(to_string(c.label)) + ',' + std::to_string(c.count) + ',' + std::to_string(c.n) + ',' +
           format_double(c.proportion, "%.17g") + '\n';
  }
  return out;
}

}  // namespace

std::string render_report(const std::vector<EvalCell>& cells, ReportFormat format) {
  if (cells.empty()) throw ValidationError("no cells to report", {"cells"});

  std::vector<BiasId> rows;
  std::vector<std::string> columns;
  std::map<std::tuple<BiasId, std::string, Label>, double> value;
  for (const auto& c : cells) {
    if (std::find(rows.begin(), rows.end(), c.bias) == rows.end()) rows.push_back(c.bias);
    if (std::find(columns.begin(), columns.end(), c.subgroup) == columns.end()) columns.push_back(c.subgroup);
    value[{c.bias, c.subgroup, c.label}] = c.proportion;
  }
  std::sort(rows.begin(), rows.end());

  constexpr std::array<Label, 2> kBlocks{Label::positive, Label::negative};
  std::vector<std::string> missing;
  for (auto block : kBlocks) {
    for (auto bias : rows) {
      for (const auto& col : columns) {
        if (!value.contains({bias, col, block})) {
          missing.push_back(std::string(to_string(bias)) + "/" + col + "/" + std::string(to_string(block)));
        }
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "incomplete report grid, missing cells:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg, missing);
  }

  if (format == ReportFormat::csv) return render_csv(cells);

  std::ostringstream md;
  md << "| Sentiment | Bias |";
  for (const auto& col : columns) md << ' ' << col << " |";
  md << "\n|---|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) md << "---:|";
  md << '\n';
  for (auto block : kBlocks) {
    std::vector<double> column_max(columns.size(), 0.0);
    for (std::size_t j = 0; j < columns.size(); ++j) {
      column_max[j] = value.at({rows.front(), columns[j], block});
      for (auto bias : rows) column_max[j] = std::max(column_max[j], value.at({bias, columns[j], block}));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      md << "| " << (i == 0 ? to_string(block) : "") << " | " << info(rows[i]).display_name << " |";
      for (std::size_t j = 0; j < columns.size(); ++j) {
        const double v = value.at({rows[i], columns[j], block});
        const auto shown = format_double(v, "%.3f");
        if (v == column_max[j]) {
          md << " **" << shown << "** |";
        } else {
          md << ' ' << shown << " |";
        }
      }
      md << '\n';
    }
  }
  return md.str();
}

json eval_run_json(const EvalRun& run) {
  json cells = json::array();
  for (const auto& c : run.cells) cells.push_back(to_json(c));
  return {{"cells", std::move(cells)},
          {"samples", run.log.size()},
          {"skipped", run.skipped},
          {"degraded", run.degraded}};
}

std::vector<EvalCell> cells_from_json(const json& j) {
  const json* arr = &j;
  if (j.is_object()) {
    if (!j.contains("cells")) throw ValidationError("missing cells array", {"cells"});
    arr = &j["cells"];
  }
  if (!arr->is_array()) throw ValidationError("cells must be an array", {"cells"});
  std::vector<EvalCell> cells;
  for (const auto& c : *arr) cells.push_back(eval_cell_from_json(c));
  return cells;
}

}  // namespace opinion
