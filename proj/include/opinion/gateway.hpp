#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include <json.hpp>

#include "opinion/backend.hpp"
#include "opinion/conversation_store.hpp"

namespace opinion {

inline constexpr std::size_t kMaxQuestionChars = 2000;

struct AskRequest {
  std::string question;
  std::vector<BiasId> biases;
  std::optional<GenerationParams> params;
};

// Trims the question, drops duplicate biases (first occurrence wins) and
// checks bounds. Throws ValidationError listing the offending fields.
AskRequest normalize(AskRequest request);

// Decodes {question, bias_ids, params?}. Unknown ids and type errors are
// reported together in one ValidationError.
AskRequest ask_request_from_json(const nlohmann::json& body);

struct AskResult {
  std::string conversation_id;
  std::vector<BiasAnswer> answers;  // request order
};

nlohmann::json to_json(const AskResult& r);

struct GatewayConfig {
  unsigned parallelism = 4;
  // Budget for each bias answer, counted from when the request arrives.
  std::chrono::milliseconds bias_timeout{30000};
};

// Fans a question out to one generation per bias and records the turn.
class Gateway {
 public:
  Gateway(BackendPtr backend, ConversationStore& store, GatewayConfig config = {});

  // A failing or slow bias yields an error answer; the request still
  // succeeds. The turn is persisted before this returns. Throws
  // ValidationError or NotFoundError (unknown conversation).
  AskResult ask(AskRequest request, const std::optional<std::string>& conversation_id = std::nullopt);

  std::vector<ConversationSummary> history() const { return store_.history(); }
  Conversation conversation(const std::string& id) const { return store_.get(id); }
  std::string share(const std::string& id) { return store_.share(id); }
  Conversation resolve_share(const std::string& token) const { return store_.resolve_share(token); }

  const GatewayConfig& config() const noexcept { return config_; }

 private:
  std::vector<BiasAnswer> fan_out(const AskRequest& request);

  BackendPtr backend_;
  ConversationStore& store_;
  GatewayConfig config_;
  std::shared_ptr<std::counting_semaphore<>> slots_;
};

}  // namespace opinion
