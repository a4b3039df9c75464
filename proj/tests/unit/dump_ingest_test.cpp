#include <fstream>

#include <boost/iostreams/filter/gzip.hpp>
#include <boost/iostreams/filter/zstd.hpp>
#include <boost/iostreams/filtering_stream.hpp>
#include <gtest/gtest.h>

#include "opinion/dump_ingest.hpp"
#include "opinion/error.hpp"
#include "support/temp_dir.hpp"

namespace opinion {
namespace {

using opinion::testing::TempDir;

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

template <typename Compressor>
void write_compressed(const std::filesystem::path& p, const std::string& text) {
  std::ofstream file(p, std::ios::binary);
  boost::iostreams::filtering_ostream out;
  out.push(Compressor());
  out.push(file);
  out << text;
}

const std::string kThreePosts =
    R"({"id":"a1","subreddit":"AskAGerman","title":"What is the best bread?","score":12,"created_utc":1600000000})"
    "\n"
    R"({"id":"a2","subreddit":"AskAGerman","title":"broken)"
    "\n"
    R"({"id":"a3","subreddit":"AskAGerman","title":"Why Tagesschau?","score":"7","created_utc":1600000100,"selftext":"[removed]"})"
    "\n";

TEST(DumpIngest, EmptyFileYieldsNothing) {
  TempDir dir;
  write_file(dir / "empty.ndjson", "");
  auto stream = stream_submissions(dir / "empty.ndjson");
  EXPECT_FALSE(stream.next());
  EXPECT_EQ(stream.stats(), IngestStats{});
}

TEST(DumpIngest, LenientSkipsMalformedLine) {
  TempDir dir;
  write_file(dir / "p.ndjson", kThreePosts);
  auto stream = stream_submissions(dir / "p.ndjson");
  std::vector<Submission> got;
  while (auto s = stream.next()) got.push_back(*s);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].id, "a1");
  EXPECT_EQ(got[0].score, 12);
  EXPECT_FALSE(got[0].deleted);
  EXPECT_EQ(got[1].id, "a3");
  EXPECT_EQ(got[1].score, 7);
  EXPECT_TRUE(got[1].deleted);
  EXPECT_EQ(stream.stats().lines_read, 3u);
  EXPECT_EQ(stream.stats().records_ok, 2u);
  EXPECT_EQ(stream.stats().records_skipped, 1u);
  EXPECT_EQ(stream.stats().skip_reasons.at("malformed_json"), 1u);
}

TEST(DumpIngest, StrictReportsLineNumber) {
  TempDir dir;
  write_file(dir / "p.ndjson", kThreePosts);
  auto stream = stream_submissions(dir / "p.ndjson", ParseMode::strict);
  ASSERT_TRUE(stream.next());
  try {
    stream.next();
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(DumpIngest, CompressedVariantsMatchPlain) {
  TempDir dir;
  write_compressed<boost::iostreams::gzip_compressor>(dir / "p.ndjson.gz", kThreePosts);
  write_compressed<boost::iostreams::zstd_compressor>(dir / "p.ndjson.zst", kThreePosts);
  write_file(dir / "p.ndjson", kThreePosts);
  auto collect = [](const std::filesystem::path& p) {
    auto stream = stream_submissions(p);
    std::vector<Submission> out;
    while (auto s = stream.next()) out.push_back(*s);
    return std::make_pair(out, stream.stats());
  };
  auto plain = collect(dir / "p.ndjson");
  EXPECT_EQ(collect(dir / "p.ndjson.gz"), plain);
  EXPECT_EQ(collect(dir / "p.ndjson.zst"), plain);
}

TEST(DumpIngest, CorruptCompressedStreamIsIoError) {
  TempDir dir;
  write_file(dir / "bad.ndjson.gz", "this is not gzip data at all");
  auto stream = stream_submissions(dir / "bad.ndjson.gz");
  EXPECT_THROW(
      {
        while (stream.next()) {
        }
      },
      IoError);
}

TEST(DumpIngest, MissingFileIsIoError) {
  TempDir dir;
  EXPECT_THROW(stream_comments(dir / "nope.ndjson"), IoError);
  try {
    dump_file(dir.path(), "AskAGerman", RecordKind::comments);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("AskAGerman"), std::string::npos);
  }
}

TEST(DumpIngest, DumpFilePrefersPlain) {
  TempDir dir;
  write_file(dir / "AskMen_submissions.ndjson.zst", "");
  EXPECT_EQ(dump_file(dir.path(), "AskMen", RecordKind::submissions), dir / "AskMen_submissions.ndjson.zst");
  write_file(dir / "AskMen_submissions.ndjson", "");
  EXPECT_EQ(dump_file(dir.path(), "AskMen", RecordKind::submissions), dir / "AskMen_submissions.ndjson");
}

TEST(DumpIngest, SkipReasons) {
  EXPECT_EQ(parse_submission("[1,2]").reason, skip_reason::not_an_object);
  EXPECT_EQ(parse_submission("{").reason, skip_reason::malformed_json);
  EXPECT_EQ(parse_submission(R"({"id":"x","subreddit":"s","created_utc":1})").reason, skip_reason::missing_field);
  EXPECT_EQ(parse_submission(R"({"id":"x","subreddit":"s","title":5,"created_utc":1})").reason,
            skip_reason::invalid_field);
  EXPECT_EQ(parse_submission(R"({"id":"x","subreddit":"s","title":"t","created_utc":"soon"})").reason,
            skip_reason::invalid_field);
  EXPECT_EQ(parse_comment(R"({"id":"c","link_id":"x1","parent_id":"t3_x1","body":"b","created_utc":1})").reason,
            skip_reason::invalid_field);
}

TEST(DumpIngest, CommentFields) {
  auto c = parse_comment(
      R"({"id":"c1","link_id":"t3_p1","parent_id":"t3_p1","body":"CNN","created_utc":5,"author":"[deleted]"})");
  ASSERT_TRUE(c.record);
  EXPECT_TRUE(c.record->is_top_level());
  EXPECT_EQ(c.record->submission_id(), "p1");
  EXPECT_EQ(c.record->score, 0);
  EXPECT_TRUE(c.record->deleted);

  auto reply = parse_comment(R"({"id":"c2","link_id":"t3_p1","parent_id":"t1_c1","body":"x","created_utc":5,"score":3,"removed_by_category":null})");
  ASSERT_TRUE(reply.record);
  EXPECT_FALSE(reply.record->is_top_level());
  EXPECT_FALSE(reply.record->deleted);
}

TEST(DumpIngest, DeletionMarkers) {
  EXPECT_TRUE(is_deletion_marker("[deleted]"));
  EXPECT_TRUE(is_deletion_marker("[removed]"));
  EXPECT_FALSE(is_deletion_marker("[deleted] by me"));
  EXPECT_FALSE(is_deletion_marker(""));
}

TEST(DumpIngest, RecordsRoundTripThroughDumpJson) {
  Submission s{"abc", "AskMen", "What do you cook?", 42, 1600000000, false};
  Submission gone{"abd", "AskMen", "Hmm", 3, 1600000001, true};
  Comment c{"xyz", "t3_abc", "t3_abc", "Pasta, honestly.", 9, 1600000002, false};
  Comment cg{"xzz", "t3_abc", "t1_xyz", "whatever", 1, 1600000003, true};
  EXPECT_EQ(parse_submission(to_dump_json(s).dump()).record, s);
  EXPECT_EQ(parse_submission(to_dump_json(gone).dump()).record, gone);
  EXPECT_EQ(parse_comment(to_dump_json(c).dump()).record, c);
  EXPECT_EQ(parse_comment(to_dump_json(cg).dump()).record, cg);
}

TEST(DumpIngest, StatsInvariantOnNoisyFile) {
  TempDir dir;
  std::string text;
  std::size_t good = 0, bad = 0;
  for (int i = 0; i < 500; ++i) {
    if (i % 7 == 0) {
      text += "\n";
      ++bad;
    } else if (i % 11 == 0) {
      text += "{oops\n";
      ++bad;
    } else {
      text += R"({"id":"c)" + std::to_string(i) + R"(","link_id":"t3_p","parent_id":"t3_p","body":"b","created_utc":1})" + "\n";
      ++good;
    }
  }
  write_file(dir / "c.ndjson", text);
  auto stream = stream_comments(dir / "c.ndjson");
  std::size_t n = 0;
  while (stream.next()) ++n;
  const auto& st = stream.stats();
  EXPECT_EQ(n, good);
  EXPECT_EQ(st.records_ok, good);
  EXPECT_EQ(st.records_skipped, bad);
  EXPECT_EQ(st.lines_read, st.records_ok + st.records_skipped);
  std::uint64_t by_reason = 0;
  for (const auto& [_, k] : st.skip_reasons) by_reason += k;
  EXPECT_EQ(by_reason, st.records_skipped);
}

TEST(DumpIngest, StatsAccumulate) {
  IngestStats a{3, 2, 1, {{"blank_line", 1}}};
  IngestStats b{4, 2, 2, {{"blank_line", 1}, {"malformed_json", 1}}};
  a += b;
  EXPECT_EQ(a.lines_read, 7u);
  EXPECT_EQ(a.skip_reasons["blank_line"], 2u);
  EXPECT_EQ(to_json(a)["records_skipped"], 3);
}

}  // namespace
}  // namespace opinion
