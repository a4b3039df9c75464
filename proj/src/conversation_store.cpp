#include "opinion/conversation_store.hpp"

#include <unistd.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>

#include "opinion/error.hpp"
#include "opinion/secure_random.hpp"

namespace opinion {

using nlohmann::json;

json to_json(const BiasAnswer& a) {
  json j{{"bias", to_string(a.bias)},
         {"display_name", info(a.bias).display_name},
         {"subreddit_used", a.subreddit_used},
         {"text", a.text},
         {"status", a.status == AnswerStatus::ok ? "ok" : "error"},
         {"latency_ms", a.latency_ms}};
  j["error_detail"] = a.error_detail ? json(*a.error_detail) : json(nullptr);
  return j;
}

json to_json(const Turn& t) {
  json answers = json::array();
  for (const auto& a : t.answers) answers.push_back(to_json(a));
  return {{"question", t.question}, {"asked_at", t.asked_at}, {"answers", std::move(answers)}};
}

json to_json(const Conversation& c) {
  json turns = json::array();
  for (const auto& t : c.turns) turns.push_back(to_json(t));
  json j{{"id", c.id}, {"created_at", c.created_at}, {"turns", std::move(turns)}};
  j["share_token"] = c.share_token ? json(*c.share_token) : json(nullptr);
  return j;
}

json to_json(const ConversationSummary& s) {
  return {{"id", s.id}, {"created_at", s.created_at}, {"title", s.title}, {"turn_count", s.turn_count}};
}

BiasAnswer answer_from_json(const json& j) {
  BiasAnswer a;
  a.bias = parse_bias(j.at("bias").get<std::string>());
  a.subreddit_used = j.at("subreddit_used").get<std::string>();
  a.text = j.at("text").get<std::string>();
  a.status = j.at("status").get<std::string>() == "ok" ? AnswerStatus::ok : AnswerStatus::error;
  if (auto it = j.find("error_detail"); it != j.end() && !it->is_null()) a.error_detail = it->get<std::string>();
  a.latency_ms = j.at("latency_ms").get<std::int64_t>();
  return a;
}

Turn turn_from_json(const json& j) {
  Turn t;
  t.question = j.at("question").get<std::string>();
  t.asked_at = j.at("asked_at").get<std::string>();
  for (const auto& a : j.at("answers")) t.answers.push_back(answer_from_json(a));
  return t;
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

ConversationStore::ConversationStore(std::filesystem::path log_path) : path_(std::move(log_path)) {
  if (path_.empty()) return;
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  load();
  file_ = std::fopen(path_.c_str(), "ab");
  if (!file_) throw IoError("cannot open conversation log " + path_.string());
}

ConversationStore::~ConversationStore() {
  if (file_) std::fclose(file_);
}

void ConversationStore::load() {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;
  std::string line;
  std::uintmax_t good_bytes = 0;
  std::size_t line_no = 0;
  bool torn = false;
  while (std::getline(in, line)) {
    ++line_no;
    const bool complete = !in.eof();  // getline hit a newline
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !complete) {
      if (in.peek() == std::char_traits<char>::eof()) {
        torn = true;
        break;
      }
      throw IoError("corrupt conversation log " + path_.string() + " at line " + std::to_string(line_no));
    }
    try {
      apply(record);
    } catch (const json::exception& e) {
      throw IoError("corrupt conversation log " + path_.string() + " at line " + std::to_string(line_no) + ": " +
                    e.what());
    }
    good_bytes += line.size() + 1;
  }
  if (torn) {
    // A crash mid-append leaves a partial last line; drop it so new
    // records start on a clean line.
    std::cerr << "conversation log: discarding incomplete trailing record\n";
    in.close();
    std::filesystem::resize_file(path_, good_bytes);
  }
}

void ConversationStore::apply(const json& record) {
  const auto op = record.at("op").get<std::string>();
  const auto id = record.at("id").get<std::string>();
  if (op == "turn") {
    if (auto it = record.find("created_at"); it != record.end()) {
      auto& c = conversations_[id];
      c.id = id;
      c.created_at = it->get<std::string>();
      creation_order_.push_back(id);
    }
    conversations_.at(id).turns.push_back(turn_from_json(record.at("turn")));
  } else if (op == "share") {
    const auto token = record.at("token").get<std::string>();
    conversations_.at(id).share_token = token;
    tokens_[token] = id;
  } else {
    throw IoError("unknown conversation log op '" + op + "'");
  }
}

void ConversationStore::append_record(const json& record) {
  if (!file_) return;
  const auto line = record.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0 ||
      ::fsync(::fileno(file_)) != 0) {
    throw IoError("failed to persist conversation record to " + path_.string());
  }
}

Conversation ConversationStore::append_turn(const std::optional<std::string>& conversation_id, Turn turn) {
  std::lock_guard lock(mutex_);
  json record{{"op", "turn"}, {"turn", to_json(turn)}};
  std::string id;
  if (conversation_id) {
    if (!conversations_.contains(*conversation_id)) throw NotFoundError("conversation not found");
    id = *conversation_id;
  } else {
    do {
      id = hex(secure_random<16>());
    } while (conversations_.contains(id));
    record["created_at"] = utc_timestamp_now();
  }
  record["id"] = id;
  append_record(record);
  apply(record);
  return conversations_.at(id);
}

bool ConversationStore::contains(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return conversations_.contains(id);
}

std::vector<ConversationSummary> ConversationStore::history() const {
  std::lock_guard lock(mutex_);
  std::vector<ConversationSummary> out;
  out.reserve(creation_order_.size());
  for (auto it = creation_order_.rbegin(); it != creation_order_.rend(); ++it) {
    const auto& c = conversations_.at(*it);
    out.push_back({c.id, c.created_at, c.turns.empty() ? std::string() : c.turns.front().question, c.turns.size()});
  }
  return out;
}

Conversation ConversationStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = conversations_.find(id);
  if (it == conversations_.end()) throw NotFoundError("conversation not found");
  return it->second;
}

std::string ConversationStore::share(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = conversations_.find(id);
  if (it == conversations_.end()) throw NotFoundError("conversation not found");
  if (it->second.share_token) return *it->second.share_token;
  std::string token;
  do {
    token = base64url(secure_random<16>());
  } while (tokens_.contains(token));
  json record{{"op", "share"}, {"id", id}, {"token", token}};
  append_record(record);
  apply(record);
  return token;
}

Conversation ConversationStore::resolve_share(const std::string& token) const {
  std::lock_guard lock(mutex_);
  auto it = tokens_.find(token);
  if (it == tokens_.end()) throw NotFoundError("not found");
  return conversations_.at(it->second);
}

}  // namespace opinion
