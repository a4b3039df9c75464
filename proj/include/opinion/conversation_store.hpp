#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "opinion/bias_registry.hpp"

namespace opinion {

enum class AnswerStatus { ok, error };

struct BiasAnswer {
  BiasId bias{};
  std::string subreddit_used;
  std::string text;
  AnswerStatus status = AnswerStatus::ok;
  std::optional<std::string> error_detail;
  std::int64_t latency_ms = 0;

  friend bool operator==(const BiasAnswer&, const BiasAnswer&) = default;
};

struct Turn {
  std::string question;
  std::string asked_at;  // ISO-8601 UTC
  std::vector<BiasAnswer> answers;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Conversation {
  std::string id;
  std::string created_at;
  std::vector<Turn> turns;
  std::optional<std::string> share_token;

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

struct ConversationSummary {
  std::string id;
  std::string created_at;
  std::string title;  // first question
  std::size_t turn_count = 0;
};

nlohmann::json to_json(const BiasAnswer& a);
nlohmann::json to_json(const Turn& t);
nlohmann::json to_json(const Conversation& c);
nlohmann::json to_json(const ConversationSummary& s);
BiasAnswer answer_from_json(const nlohmann::json& j);
Turn turn_from_json(const nlohmann::json& j);

std::string utc_timestamp_now();

// Conversations with history and share tokens, persisted as an append-only
// JSON-lines log and replayed into memory on open. An empty path keeps
// everything in memory.
//
// Log records:
//   {"op":"turn","id":...,"created_at":...?,"turn":{...}}   created_at marks a new conversation
//   {"op":"share","id":...,"token":...}
//
// Every mutation is flushed and fsync'ed before it returns. One writer
// process per log file.
class ConversationStore {
 public:
  explicit ConversationStore(std::filesystem::path log_path = {});
  ~ConversationStore();

  ConversationStore(const ConversationStore&) = delete;
  ConversationStore& operator=(const ConversationStore&) = delete;

  // Appends to an existing conversation, or starts a new one when
  // `conversation_id` is empty. Throws NotFoundError for unknown ids.
  Conversation append_turn(const std::optional<std::string>& conversation_id, Turn turn);

  bool contains(const std::string& id) const;

  // Newest first.
  std::vector<ConversationSummary> history() const;
  Conversation get(const std::string& id) const;

  // Idempotent: a conversation keeps its first token.
  std::string share(const std::string& id);
  Conversation resolve_share(const std::string& token) const;

 private:
  void load();
  void append_record(const nlohmann::json& record);
  void apply(const nlohmann::json& record);

  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Conversation> conversations_;
  std::vector<std::string> creation_order_;
  std::unordered_map<std::string, std::string> tokens_;  // token -> conversation id
};

}  // namespace opinion
