#include "opinion/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <future>
#include <queue>
#include <unordered_map>

#include "opinion/error.hpp"
#include "opinion/text.hpp"

namespace opinion {

using nlohmann::json;
using nlohmann::ordered_json;

void validate(const InstructionPair& pair) {
  auto fail = [](const std::string& what, const char* field) {
    throw ValidationError(what, {field});
  };
  auto source = source_for_subreddit(pair.subreddit);
  if (!source || source->bias != pair.bias) {
    fail("subreddit '" + pair.subreddit + "' is not a source of bias " +
             std::string(to_string(pair.bias)),
         "subreddit");
  }
  if (text::trim(pair.instruction).empty()) fail("empty instruction", "instruction");
  if (text::trim(pair.response).empty()) fail("empty response", "response");
  if (text::word_count(pair.instruction) > kMaxWords) fail("instruction longer than 80 words", "instruction");
  if (text::word_count(pair.response) > kMaxWords) fail("response longer than 80 words", "response");
  if (pair.score < 1) fail("score below 1", "score");
  if (pair.post_id.empty()) fail("empty post_id", "post_id");
  if (pair.comment_id.empty()) fail("empty comment_id", "comment_id");
}

namespace {

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

bool has_blockquote(std::string_view body) {
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto end = body.find('\n', pos);
    auto line = body.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.starts_with(">") || line.starts_with("&gt;")) return true;
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return false;
}

bool has_permalink(std::string_view body) {
  for (auto pos = body.find("/r/"); pos != std::string_view::npos; pos = body.find("/r/", pos + 1)) {
    auto i = pos + 3;
    while (i < body.size() && is_name_char(body[i])) ++i;
    if (i > pos + 3 && body.substr(i).starts_with("/comments/")) return true;
  }
  return false;
}

bool has_user_mention(std::string_view body) {
  for (auto pos = body.find("u/"); pos != std::string_view::npos; pos = body.find("u/", pos + 1)) {
    bool boundary = pos == 0 || !(std::isalnum(static_cast<unsigned char>(body[pos - 1])) || body[pos - 1] == '_');
    if (boundary && pos + 2 < body.size() && is_name_char(body[pos + 2])) return true;
  }
  return false;
}

struct Candidate {
  std::int64_t score;
  std::int64_t created_utc;
  std::string comment_id;
  std::string post_id;
  std::string response;
};

// Rank order: score desc, then oldest first, then comment id.
struct RanksBefore {
  bool operator()(const Candidate& a, const Candidate& b) const {
    if (a.score != b.score) return a.score > b.score;
    if (a.created_utc != b.created_utc) return a.created_utc < b.created_utc;
    return a.comment_id < b.comment_id;
  }
};

struct SourceOutput {
  std::vector<InstructionPair> pairs;
  SourceReport report;
};

SourceOutput build_source(const BiasSource& source, const std::filesystem::path& dump_dir,
                          const CorpusOptions& options) {
  SourceOutput out;
  auto& report = out.report;
  auto& f = report.filters;
  report.source = source;
  report.quota = scaled_quota(source.quota, options.scale);

  const auto submissions_path = dump_file(dump_dir, source.subreddit, RecordKind::submissions);
  const auto comments_path = dump_file(dump_dir, source.subreddit, RecordKind::comments);

  std::unordered_map<std::string, std::string> instructions;  // post id -> trimmed title
  {
    SubmissionStream posts(submissions_path, options.mode);
    while (auto post = posts.next()) {
      ++f.posts_in;
      if (post->score < 1) {
        ++f.post_no_upvotes;
      } else if (post->deleted) {
        ++f.post_deleted;
      } else if (text::word_count(post->title) > kMaxWords) {
        ++f.post_too_long;
      } else {
        ++f.posts_kept;
        instructions.insert_or_assign(post->id, std::string(text::trim(post->title)));
      }
    }
    report.submissions = posts.stats();
  }

  // Bounded heap whose top is the worst kept candidate.
  std::priority_queue<Candidate, std::vector<Candidate>, RanksBefore> kept;
  std::uint64_t survivors = 0;
  {
    CommentStream comments(comments_path, options.mode);
    while (auto c = comments.next()) {
      ++f.responses_in;
      if (!c->is_top_level()) {
        ++f.response_not_toplevel;
        continue;
      }
      if (!instructions.contains(std::string(c->submission_id()))) {
        ++f.response_orphaned;
        continue;
      }
      if (c->deleted) {
        ++f.response_deleted;
        continue;
      }
      auto body = text::trim(c->body);
      if (body.empty()) {
        ++f.response_empty;
      } else if (cites_other_content(c->body)) {
        ++f.response_cites;
      } else if (text::word_count(body) > kMaxWords) {
        ++f.response_too_long;
      } else if (c->score < 1) {
        ++f.response_no_upvotes;
      } else {
        ++survivors;
        kept.push(Candidate{c->score, c->created_utc, std::move(c->id),
                            std::string(c->submission_id()), std::string(body)});
        if (kept.size() > report.quota) kept.pop();
      }
    }
    report.comments = comments.stats();
  }

  std::vector<Candidate> ranked;
  ranked.reserve(kept.size());
  while (!kept.empty()) {
    ranked.push_back(kept.top());
    kept.pop();
  }
  std::sort(ranked.begin(), ranked.end(), RanksBefore{});

  f.emitted = ranked.size();
  f.over_quota = survivors - f.emitted;

  out.pairs.reserve(ranked.size());
  for (auto& c : ranked) {
    out.pairs.push_back(InstructionPair{source.bias, std::string(source.subreddit),
                                        instructions.at(c.post_id), std::move(c.response), c.score,
                                        std::move(c.post_id), std::move(c.comment_id), c.created_utc});
  }
  return out;
}

}  // namespace

bool cites_other_content(std::string_view body) {
  return has_blockquote(body) || has_permalink(body) || has_user_mention(body);
}

CorpusResult build_corpus(std::span<const BiasSource> sources, const std::filesystem::path& dump_dir,
                          const CorpusOptions& options) {
  validate_scale(options.scale);

  std::vector<SourceOutput> outputs(sources.size());
  const std::size_t width = std::max(1u, options.parallelism);
  for (std::size_t begin = 0; begin < sources.size(); begin += width) {
    const std::size_t end = std::min(sources.size(), begin + width);
    std::vector<std::future<SourceOutput>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(std::launch::async, build_source, std::cref(sources[i]),
                                 std::cref(dump_dir), std::cref(options)));
    }
    for (std::size_t i = begin; i < end; ++i) outputs[i] = batch[i - begin].get();
  }

  std::stable_sort(outputs.begin(), outputs.end(), [](const SourceOutput& a, const SourceOutput& b) {
    if (a.report.source.bias != b.report.source.bias) return a.report.source.bias < b.report.source.bias;
    return a.report.source.subreddit < b.report.source.subreddit;
  });

  CorpusResult result;
  for (auto& o : outputs) {
    std::move(o.pairs.begin(), o.pairs.end(), std::back_inserter(result.pairs));
    result.reports.push_back(std::move(o.report));
  }
  return result;
}

ordered_json to_json(const InstructionPair& p) {
  ordered_json j;
  j["bias"] = to_string(p.bias);
  j["subreddit"] = p.subreddit;
  j["instruction"] = p.instruction;
  j["response"] = p.response;
  j["score"] = p.score;
  j["post_id"] = p.post_id;
  j["comment_id"] = p.comment_id;
  j["created_utc"] = p.created_utc;
  return j;
}

InstructionPair pair_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("record is not an object");
  static constexpr std::array<std::string_view, 8> kFields{
      "bias", "subreddit", "instruction", "response", "score", "post_id", "comment_id", "created_utc"};
  for (auto key : kFields) {
    if (!j.contains(key)) throw ValidationError("missing field " + std::string(key), {std::string(key)});
  }
  if (j.size() != kFields.size()) throw ValidationError("unexpected extra fields");

  auto str = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_string()) throw ValidationError(std::string(key) + " must be a string", {key});
    return v.get<std::string>();
  };
  auto integer = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ValidationError(std::string(key) + " must be an integer", {key});
    return v.get<std::int64_t>();
  };

  InstructionPair p;
  p.bias = parse_bias(str("bias"));
  p.subreddit = str("subreddit");
  p.instruction = str("instruction");
  p.response = str("response");
  p.score = integer("score");
  p.post_id = str("post_id");
  p.comment_id = str("comment_id");
  p.created_utc = integer("created_utc");
  validate(p);
  return p;
}

ordered_json to_json(const FilterReport& r) {
  ordered_json j;
  j["posts_in"] = r.posts_in;
  j["post_no_upvotes"] = r.post_no_upvotes;
  j["post_deleted"] = r.post_deleted;
  j["post_too_long"] = r.post_too_long;
  j["posts_kept"] = r.posts_kept;
  j["responses_in"] = r.responses_in;
  j["response_not_toplevel"] = r.response_not_toplevel;
  j["response_orphaned"] = r.response_orphaned;
  j["response_deleted"] = r.response_deleted;
  j["response_empty"] = r.response_empty;
  j["response_cites"] = r.response_cites;
  j["response_too_long"] = r.response_too_long;
  j["response_no_upvotes"] = r.response_no_upvotes;
  j["over_quota"] = r.over_quota;
  j["emitted"] = r.emitted;
  return j;
}

ordered_json report_json(const std::vector<SourceReport>& reports) {
  ordered_json sources = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json j;
    j["bias"] = to_string(r.source.bias);
    j["subreddit"] = r.source.subreddit;
    j["quota"] = r.quota;
    j["filters"] = to_json(r.filters);
    j["submissions"] = to_json(r.submissions);
    j["comments"] = to_json(r.comments);
    sources.push_back(std::move(j));
  }
  ordered_json out;
  out["sources"] = std::move(sources);
  return out;
}

void write_corpus(const std::vector<InstructionPair>& pairs, std::ostream& out) {
  for (const auto& p : pairs) {
    validate(p);
    out << to_json(p).dump() << '\n';
  }
}

void write_corpus(const std::vector<InstructionPair>& pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_corpus(pairs, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<InstructionPair> read_corpus(std::istream& in) {
  std::vector<InstructionPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ValidationError("line " + std::to_string(line_no) + ": malformed JSON");
    try {
      pairs.push_back(pair_from_json(j));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what(), e.fields());
    }
  }
  if (in.bad()) throw IoError("read failure");
  return pairs;
}

std::vector<InstructionPair> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return read_corpus(in);
}

}  // namespace opinion
