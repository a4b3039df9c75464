#include "opinion/dump_ingest.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include <boost/iostreams/device/file.hpp>
#include <boost/iostreams/filter/gzip.hpp>
#include <boost/iostreams/filter/zstd.hpp>
#include <boost/iostreams/filtering_stream.hpp>

#include "opinion/error.hpp"
#include "opinion/text.hpp"

namespace opinion {

namespace io = boost::iostreams;
using nlohmann::json;

IngestStats& IngestStats::operator+=(const IngestStats& other) {
  lines_read += other.lines_read;
  records_ok += other.records_ok;
  records_skipped += other.records_skipped;
  for (const auto& [reason, n] : other.skip_reasons) skip_reasons[reason] += n;
  return *this;
}

json to_json(const IngestStats& stats) {
  return {{"lines_read", stats.lines_read},
          {"records_ok", stats.records_ok},
          {"records_skipped", stats.records_skipped},
          {"skip_reasons", stats.skip_reasons}};
}

bool is_deletion_marker(std::string_view text) noexcept {
  return text == "[deleted]" || text == "[removed]";
}

namespace {

// Fields whose non-null value means moderators or admins removed the record.
constexpr std::array<std::string_view, 2> kRemovalFields{"removed_by_category", "removed_by"};

struct FieldError {
  std::string_view reason;
  std::string detail;
};

const json* find(const json& obj, std::string_view key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

std::optional<FieldError> read_string(const json& obj, std::string_view key, std::string& out) {
  const json* v = find(obj, key);
  if (!v) return FieldError{skip_reason::missing_field, std::string(key)};
  if (!v->is_string()) return FieldError{skip_reason::invalid_field, std::string(key)};
  out = v->get<std::string>();
  return std::nullopt;
}

// Dumps from different years store numbers as ints, floats or strings.
std::optional<std::int64_t> as_integer(const json& v) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (!std::isfinite(d)) return std::nullopt;
    return static_cast<std::int64_t>(d);
  }
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc{} && ptr == s.data() + s.size()) return out;
  }
  return std::nullopt;
}

std::optional<FieldError> read_integer(const json& obj, std::string_view key, std::int64_t& out,
                                       std::optional<std::int64_t> fallback) {
  const json* v = find(obj, key);
  if (!v) {
    if (fallback) {
      out = *fallback;
      return std::nullopt;
    }
    return FieldError{skip_reason::missing_field, std::string(key)};
  }
  auto parsed = as_integer(*v);
  if (!parsed) return FieldError{skip_reason::invalid_field, std::string(key)};
  out = *parsed;
  return std::nullopt;
}

bool marked_removed(const json& obj) {
  if (const json* author = find(obj, "author"); author && author->is_string() &&
                                                 author->get_ref<const std::string&>() == "[deleted]") {
    return true;
  }
  for (auto key : kRemovalFields) {
    if (find(obj, key)) return true;
  }
  return false;
}

bool text_marked(const json& obj, std::string_view key) {
  const json* v = find(obj, key);
  return v && v->is_string() && is_deletion_marker(v->get_ref<const std::string&>());
}

template <typename Record>
LineParse<Record> reject(std::string_view reason, std::string detail) {
  return {std::nullopt, reason, std::move(detail)};
}

std::optional<json> parse_object(std::string_view line, std::string_view& reason) {
  json obj = json::parse(line.begin(), line.end(), nullptr, false);
  if (obj.is_discarded()) {
    reason = skip_reason::malformed_json;
    return std::nullopt;
  }
  if (!obj.is_object()) {
    reason = skip_reason::not_an_object;
    return std::nullopt;
  }
  return obj;
}

bool has_prefix(std::string_view s, std::string_view prefix) {
  return s.size() > prefix.size() && s.substr(0, prefix.size()) == prefix;
}

}  // namespace

LineParse<Submission> parse_submission(std::string_view line) {
  std::string_view reason;
  auto obj = parse_object(line, reason);
  if (!obj) return reject<Submission>(reason, {});

  Submission s;
  for (auto err : {read_string(*obj, "id", s.id), read_string(*obj, "subreddit", s.subreddit),
                   read_string(*obj, "title", s.title),
                   read_integer(*obj, "score", s.score, std::int64_t{0}),
                   read_integer(*obj, "created_utc", s.created_utc, std::nullopt)}) {
    if (err) return reject<Submission>(err->reason, std::move(err->detail));
  }
  if (s.id.empty()) return reject<Submission>(skip_reason::invalid_field, "id");

  s.deleted = text_marked(*obj, "title") || text_marked(*obj, "selftext") || marked_removed(*obj);
  if (text::trim(s.title).empty() && !s.deleted) {
    return reject<Submission>(skip_reason::invalid_field, "title");
  }
  return {std::move(s), {}, {}};
}

LineParse<Comment> parse_comment(std::string_view line) {
  std::string_view reason;
  auto obj = parse_object(line, reason);
  if (!obj) return reject<Comment>(reason, {});

  Comment c;
  for (auto err : {read_string(*obj, "id", c.id), read_string(*obj, "link_id", c.link_id),
                   read_string(*obj, "parent_id", c.parent_id), read_string(*obj, "body", c.body),
                   read_integer(*obj, "score", c.score, std::int64_t{0}),
                   read_integer(*obj, "created_utc", c.created_utc, std::nullopt)}) {
    if (err) return reject<Comment>(err->reason, std::move(err->detail));
  }
  if (c.id.empty()) return reject<Comment>(skip_reason::invalid_field, "id");
  if (!has_prefix(c.link_id, "t3_")) return reject<Comment>(skip_reason::invalid_field, "link_id");
  if (!has_prefix(c.parent_id, "t1_") && !has_prefix(c.parent_id, "t3_")) {
    return reject<Comment>(skip_reason::invalid_field, "parent_id");
  }

  c.deleted = text_marked(*obj, "body") || marked_removed(*obj);
  return {std::move(c), {}, {}};
}

json to_dump_json(const Submission& s) {
  return {{"id", s.id},
          {"subreddit", s.subreddit},
          {"title", s.title},
          {"score", s.score},
          {"created_utc", s.created_utc},
          {"removed_by_category", s.deleted ? json("deleted") : json(nullptr)}};
}

json to_dump_json(const Comment& c) {
  return {{"id", c.id},
          {"link_id", c.link_id},
          {"parent_id", c.parent_id},
          {"body", c.body},
          {"score", c.score},
          {"created_utc", c.created_utc},
          {"removed_by_category", c.deleted ? json("deleted") : json(nullptr)}};
}

struct LineReader::Impl {
  io::filtering_istream in;
};

LineReader::LineReader(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open " + path.string());
  }
  const auto ext = path.extension();
  if (ext == ".zst") {
    impl_->in.push(io::zstd_decompressor());
  } else if (ext == ".gz") {
    impl_->in.push(io::gzip_decompressor());
  }
  impl_->in.push(io::file_source(path.string(), std::ios::in | std::ios::binary));
}

LineReader::~LineReader() = default;
LineReader::LineReader(LineReader&&) noexcept = default;
LineReader& LineReader::operator=(LineReader&&) noexcept = default;

bool LineReader::next(std::string& line) {
  try {
    if (!std::getline(impl_->in, line)) {
      if (impl_->in.bad()) throw IoError("read failure");
      return false;
    }
  } catch (const io::gzip_error& e) {
    throw IoError(std::string("gzip stream: ") + e.what());
  } catch (const io::zstd_error& e) {
    throw IoError(std::string("zstd stream: ") + e.what());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

template <typename Record>
RecordStream<Record>::RecordStream(const std::filesystem::path& path, ParseMode mode)
    : reader_(path), mode_(mode) {}

template <typename Record>
std::optional<Record> RecordStream<Record>::next() {
  while (reader_.next(line_)) {
    ++stats_.lines_read;
    LineParse<Record> parsed;
    if (text::trim(line_).empty()) {
      parsed.reason = skip_reason::blank_line;
    } else if constexpr (std::is_same_v<Record, Submission>) {
      parsed = parse_submission(line_);
    } else {
      parsed = parse_comment(line_);
    }
    if (parsed.record) {
      ++stats_.records_ok;
      return std::move(parsed.record);
    }
    if (mode_ == ParseMode::strict) {
      std::string what(parsed.reason);
      if (!parsed.detail.empty()) what += ": " + parsed.detail;
      throw ParseError(what, stats_.lines_read);
    }
    ++stats_.records_skipped;
    ++stats_.skip_reasons[std::string(parsed.reason)];
  }
  return std::nullopt;
}

template class RecordStream<Submission>;
template class RecordStream<Comment>;

std::filesystem::path dump_file(const std::filesystem::path& dump_dir, std::string_view subreddit,
                                RecordKind kind) {
  const std::string stem = std::string(subreddit) +
                           (kind == RecordKind::submissions ? "_submissions" : "_comments") + ".ndjson";
  for (const char* suffix : {"", ".zst", ".gz"}) {
    auto candidate = dump_dir / (stem + suffix);
    if (std::filesystem::is_regular_file(candidate)) return candidate;
  }
  throw IoError("no " + std::string(kind == RecordKind::submissions ? "submissions" : "comments") +
                " dump for source " + std::string(subreddit) + " in " + dump_dir.string());
}

}  // namespace opinion
