#pragma once

// Deterministic generator for Pushshift-style dump files with adversarial
// records for every corpus filter. Uses raw mt19937_64 output (standardized)
// so fixtures are identical across platforms.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace opinion::testing {

struct SyntheticDump {
  std::vector<std::string> subreddits;
  std::size_t posts_per_source = 150;
  std::size_t comments_per_source = 600;
  std::uint64_t seed = 42;
  bool malformed_lines = true;
};

struct DumpCounts {
  std::size_t submissions = 0;
  std::size_t comments = 0;
};

namespace detail {

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words{
      "what", "is",   "the",   "best", "food",  "in",    "your",   "country", "do",     "you",
      "think", "about", "guns", "tv",   "news",  "why",   "people", "like",    "soccer", "football",
      "Käsespätzle", "honestly", "I", "love", "hate", "it", "depends", "on", "a", "lot",
      "CNN", "Fox", "Tagesschau", "NPR", "menu/item", "e.g.", "well,", "yes!", "no.", "maybe?"};
  return words;
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  std::string words(std::size_t n) {
    const auto& v = vocabulary();
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out += below(9) == 0 ? "  " : (below(13) == 0 ? "\n" : " ");
      out += v[below(v.size())];
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace detail

inline DumpCounts write_synthetic_dump(const std::filesystem::path& dir, const SyntheticDump& shape) {
  using nlohmann::json;
  std::filesystem::create_directories(dir);
  DumpCounts counts;
  detail::Gen g(shape.seed);
  std::size_t source_no = 0;
  for (const auto& sub : shape.subreddits) {
    ++source_no;
    const std::string prefix = "s" + std::to_string(source_no);
    std::vector<std::string> post_ids;

    std::ofstream posts(dir / (sub + "_submissions.ndjson"), std::ios::binary | std::ios::trunc);
    for (std::size_t i = 0; i < shape.posts_per_source; ++i) {
      const std::string id = prefix + "p" + std::to_string(i);
      post_ids.push_back(id);
      json j{{"id", id}, {"subreddit", sub}, {"author", "user" + std::to_string(g.below(50))},
             {"created_utc", 1500000000 + g.between(0, 1000)}, {"selftext", g.words(g.below(5))}};
      std::size_t title_words = 1 + g.below(15);
      if (i % 37 == 5) title_words = 80;
      if (i % 41 == 7) title_words = 81;
      j["title"] = g.words(title_words);
      j["score"] = g.between(-2, 30);
      if (i % 11 == 3) j["score"] = 0;
      if (i % 13 == 4) j["score"] = 1;
      if (i % 53 == 9) j.erase("score");
      if (i % 17 == 2) j["score"] = std::to_string(g.between(1, 30));
      if (i % 19 == 6) j["title"] = "[deleted]";
      if (i % 23 == 8) j["removed_by_category"] = "moderator";
      if (i % 29 == 10) j["author"] = "[deleted]";
      if (i % 31 == 12) j["selftext"] = "[removed]";
      if (i % 43 == 14) j["title"] = "  " + j["title"].get<std::string>() + " ";
      posts << j.dump() << '\n';
      ++counts.submissions;
      if (shape.malformed_lines && i % 97 == 50) posts << "{\"id\": \"broken\", \"title\": \n";
      if (shape.malformed_lines && i % 89 == 20) posts << "[1, 2, 3]\n";
    }

    std::ofstream comments(dir / (sub + "_comments.ndjson"), std::ios::binary | std::ios::trunc);
    for (std::size_t k = 0; k < shape.comments_per_source; ++k) {
      std::string post = post_ids[g.below(post_ids.size())];
      if (k % 79 == 3) post = prefix + "missing" + std::to_string(k);
      const std::string link = "t3_" + post;
      json j{{"id", prefix + "c" + std::to_string(k)}, {"link_id", link},
             {"author", "user" + std::to_string(g.below(50))}};
      j["parent_id"] = g.below(4) == 0 ? "t1_" + prefix + "c" + std::to_string(g.below(k + 1)) : link;
      std::size_t body_words = 1 + g.below(30);
      if (k % 31 == 4) body_words = 80;
      if (k % 33 == 6) body_words = 81;
      std::string body = g.words(body_words);
      if (k % 17 == 1) body = "> quoted text\n" + body;
      if (k % 43 == 2) body = "&gt; quoted text\n\n" + body;
      if (k % 47 == 3) body += " see /r/" + sub + "/comments/abc123/title/";
      if (k % 51 == 5) body += " ask u/someone";
      if (k % 59 == 7) body = "/u/other said " + body;
      if (k % 61 == 8) body = "[deleted]";
      if (k % 67 == 9) body = "[removed]";
      if (k % 73 == 10) body = "   \n ";
      if (k % 83 == 11) body = "  padded " + body + "  ";
      j["body"] = body;
      j["score"] = g.between(-3, 12);  // narrow range forces score ties
      if (k % 9 == 2) j["score"] = 0;
      if (k % 10 == 3) j["score"] = 1;
      if (k % 71 == 4) j.erase("score");
      j["created_utc"] = 1500000000 + g.between(0, 40);  // and created_utc ties
      if (k % 57 == 13) j["created_utc"] = std::to_string(1500000000 + g.between(0, 40));
      if (k % 101 == 14) j["removed_by_category"] = "deleted";
      comments << j.dump() << '\n';
      ++counts.comments;
      if (shape.malformed_lines && k % 199 == 77) comments << "not json at all\n";
    }
  }
  return counts;
}

}  // namespace opinion::testing
