#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace opinion {

struct Submission {
  std::string id;  // base-36, no "t3_" prefix
  std::string subreddit;
  std::string title;
  std::int64_t score = 0;
  std::int64_t created_utc = 0;
  bool deleted = false;

  friend bool operator==(const Submission&, const Submission&) = default;
};

struct Comment {
  std::string id;
  std::string link_id;    // "t3_<submission id>"
  std::string parent_id;  // "t1_..." or "t3_..."
  std::string body;
  std::int64_t score = 0;
  std::int64_t created_utc = 0;
  bool deleted = false;

  bool is_top_level() const noexcept { return parent_id == link_id; }
  std::string_view submission_id() const noexcept { return std::string_view(link_id).substr(3); }

  friend bool operator==(const Comment&, const Comment&) = default;
};

struct IngestStats {
  std::uint64_t lines_read = 0;
  std::uint64_t records_ok = 0;
  std::uint64_t records_skipped = 0;
  std::map<std::string, std::uint64_t> skip_reasons;

  IngestStats& operator+=(const IngestStats& other);
  friend bool operator==(const IngestStats&, const IngestStats&) = default;
};

nlohmann::json to_json(const IngestStats& stats);

enum class ParseMode { lenient, strict };
enum class RecordKind { submissions, comments };

// Skip reasons reported in IngestStats::skip_reasons.
namespace skip_reason {
inline constexpr std::string_view blank_line = "blank_line";
inline constexpr std::string_view malformed_json = "malformed_json";
inline constexpr std::string_view not_an_object = "not_an_object";
inline constexpr std::string_view missing_field = "missing_field";
inline constexpr std::string_view invalid_field = "invalid_field";
}  // namespace skip_reason

// Result of decoding one dump line. Either `record` is set or `reason`
// names why the line was rejected.
template <typename Record>
struct LineParse {
  std::optional<Record> record;
  std::string_view reason;
  std::string detail;
};

LineParse<Submission> parse_submission(std::string_view line);
LineParse<Comment> parse_comment(std::string_view line);

// Inverse of parse_*: one dump-format JSON object carrying the typed fields.
nlohmann::json to_dump_json(const Submission& s);
nlohmann::json to_dump_json(const Comment& c);

// Pushshift-style deletion markers.
bool is_deletion_marker(std::string_view text) noexcept;

// Line reader over a plain, .gz or .zst file. Holds one line in memory at
// a time.
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path);
  ~LineReader();
  LineReader(LineReader&&) noexcept;
  LineReader& operator=(LineReader&&) noexcept;

  bool next(std::string& line);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Single-consumer stream of typed records from one dump file.
template <typename Record>
class RecordStream {
 public:
  RecordStream(const std::filesystem::path& path, ParseMode mode);

  // Next well-formed record, or nullopt at end of file. In strict mode a
  // bad line throws ParseError carrying its 1-based line number.
  std::optional<Record> next();

  const IngestStats& stats() const noexcept { return stats_; }

 private:
  LineReader reader_;
  ParseMode mode_;
  IngestStats stats_;
  std::string line_;
};

using SubmissionStream = RecordStream<Submission>;
using CommentStream = RecordStream<Comment>;

inline SubmissionStream stream_submissions(const std::filesystem::path& path,
                                           ParseMode mode = ParseMode::lenient) {
  return SubmissionStream(path, mode);
}

inline CommentStream stream_comments(const std::filesystem::path& path,
                                     ParseMode mode = ParseMode::lenient) {
  return CommentStream(path, mode);
}

// "<Subreddit>_submissions.ndjson[.zst|.gz]" inside dump_dir; the plain
// file wins over compressed variants. Throws IoError naming the subreddit
// when none exists.
std::filesystem::path dump_file(const std::filesystem::path& dump_dir, std::string_view subreddit,
                                RecordKind kind);

}  // namespace opinion
