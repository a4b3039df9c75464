#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "opinion/bias_registry.hpp"
#include "opinion/dump_ingest.hpp"

namespace opinion {

inline constexpr std::size_t kMaxWords = 80;

// One bias-tagged training record: a post title answered by one of its
// top-level replies.
struct InstructionPair {
  BiasId bias{};
  std::string subreddit;
  std::string instruction;
  std::string response;
  std::int64_t score = 0;
  std::string post_id;
  std::string comment_id;
  std::int64_t created_utc = 0;

  friend bool operator==(const InstructionPair&, const InstructionPair&) = default;
};

// Throws ValidationError describing the first broken invariant.
void validate(const InstructionPair& pair);

// Per-source drop counters. Post counters count posts; every other counter
// counts responses, so
//   responses_in == emitted + (all response_* counters) + over_quota
//   posts_in == posts_kept + post_no_upvotes + post_deleted + post_too_long
struct FilterReport {
  std::uint64_t posts_in = 0;
  std::uint64_t post_no_upvotes = 0;
  std::uint64_t post_deleted = 0;
  std::uint64_t post_too_long = 0;
  std::uint64_t posts_kept = 0;

  std::uint64_t responses_in = 0;
  std::uint64_t response_not_toplevel = 0;
  std::uint64_t response_orphaned = 0;  // parent post dropped or absent
  std::uint64_t response_deleted = 0;
  std::uint64_t response_empty = 0;
  std::uint64_t response_cites = 0;
  std::uint64_t response_too_long = 0;
  std::uint64_t response_no_upvotes = 0;
  std::uint64_t over_quota = 0;
  std::uint64_t emitted = 0;

  std::uint64_t response_drops() const noexcept {
    return response_not_toplevel + response_orphaned + response_deleted + response_empty +
           response_cites + response_too_long + response_no_upvotes + over_quota;
  }

  friend bool operator==(const FilterReport&, const FilterReport&) = default;
};

struct SourceReport {
  BiasSource source;
  std::uint32_t quota = 0;  // after scaling
  FilterReport filters;
  IngestStats submissions;
  IngestStats comments;
};

struct CorpusOptions {
  double scale = 1.0;
  ParseMode mode = ParseMode::lenient;
  unsigned parallelism = 4;
};

struct CorpusResult {
  std::vector<InstructionPair> pairs;
  std::vector<SourceReport> reports;
};

// True when a reply leans on other content: a blockquote line (">" or the
// dump's "&gt;" encoding), a subreddit permalink ("/r/<name>/comments/"),
// or a user mention ("u/<name>" or "/u/<name>").
bool cites_other_content(std::string_view body);

// Derives the instruction corpus for `sources` from the dump files in
// dump_dir. Output is ordered by (bias, subreddit, rank).
CorpusResult build_corpus(std::span<const BiasSource> sources, const std::filesystem::path& dump_dir,
                          const CorpusOptions& options = {});

nlohmann::ordered_json to_json(const InstructionPair& pair);
InstructionPair pair_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const FilterReport& report);
nlohmann::ordered_json report_json(const std::vector<SourceReport>& reports);

void write_corpus(const std::vector<InstructionPair>& pairs, std::ostream& out);
void write_corpus(const std::vector<InstructionPair>& pairs, const std::filesystem::path& path);

// Throws ValidationError naming the offending line.
std::vector<InstructionPair> read_corpus(std::istream& in);
std::vector<InstructionPair> read_corpus(const std::filesystem::path& path);

}  // namespace opinion
