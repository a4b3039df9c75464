#include "opinion/gateway.hpp"

#include <algorithm>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "opinion/error.hpp"
#include "opinion/text.hpp"

namespace opinion {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

AskRequest normalize(AskRequest request) {
  std::vector<std::string> bad;
  std::string message;
  request.question = std::string(text::trim(request.question));
  const auto chars = text::utf8_length(request.question);
  if (chars == 0) {
    bad.push_back("question");
    message += "question is empty; ";
  } else if (chars > kMaxQuestionChars) {
    bad.push_back("question");
    message += "question exceeds 2000 characters; ";
  }

  std::vector<BiasId> unique;
  for (auto b : request.biases) {
    if (std::find(unique.begin(), unique.end(), b) == unique.end()) unique.push_back(b);
  }
  request.biases = std::move(unique);
  if (request.biases.empty()) {
    bad.push_back("bias_ids");
    message += "select at least one bias; ";
  }

  if (request.params) {
    try {
      request.params->validate();
    } catch (const ValidationError& e) {
      bad.insert(bad.end(), e.fields().begin(), e.fields().end());
      message += std::string(e.what()) + "; ";
    }
  }
  if (!bad.empty()) {
    message.resize(message.size() - 2);
    throw ValidationError(message, std::move(bad));
  }
  return request;
}

AskRequest ask_request_from_json(const json& body) {
  if (!body.is_object()) throw ValidationError("request body must be a JSON object", {"body"});
  AskRequest req;
  std::vector<std::string> bad;
  std::string message;
  auto note = [&](std::string field, std::string what) {
    message += what + "; ";
    bad.push_back(std::move(field));
  };

  if (auto it = body.find("question"); it != body.end() && it->is_string()) {
    req.question = it->get<std::string>();
  } else {
    note("question", "question must be a string");
  }

  if (auto it = body.find("bias_ids"); it != body.end() && it->is_array()) {
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& v = (*it)[i];
      const std::string field = "bias_ids[" + std::to_string(i) + "]";
      if (!v.is_string()) {
        note(field, field + " must be a string");
      } else if (auto id = try_parse_bias(v.get_ref<const std::string&>())) {
        req.biases.push_back(*id);
      } else {
        note(field, "unknown bias '" + v.get<std::string>() + "'");
      }
    }
  } else {
    note("bias_ids", "bias_ids must be an array");
  }

  if (auto it = body.find("params"); it != body.end() && !it->is_null()) {
    GenerationParams p;
    if (!it->is_object()) {
      note("params", "params must be an object");
    } else {
      if (auto m = it->find("max_tokens"); m != it->end()) {
        if (m->is_number_integer()) p.max_tokens = m->get<int>(); else note("params.max_tokens", "max_tokens must be an integer");
      }
      if (auto t = it->find("temperature"); t != it->end()) {
        if (t->is_number()) p.temperature = t->get<double>(); else note("params.temperature", "temperature must be a number");
      }
    }
    req.params = p;
  }

  if (!bad.empty()) {
    message.resize(message.size() - 2);
    throw ValidationError(message, std::move(bad));
  }
  return normalize(std::move(req));
}

json to_json(const AskResult& r) {
  json answers = json::array();
  for (const auto& a : r.answers) answers.push_back(to_json(a));
  return {{"conversation_id", r.conversation_id}, {"answers", std::move(answers)}};
}

Gateway::Gateway(BackendPtr backend, ConversationStore& store, GatewayConfig config)
    : backend_(std::move(backend)), store_(store), config_(config),
      slots_(std::make_shared<std::counting_semaphore<>>(std::max(1u, config.parallelism))) {
  if (!backend_) throw ValidationError("gateway needs a generation backend", {"backend"});
}

namespace {

struct Slot {
  std::mutex mutex;
  std::condition_variable ready;
  std::optional<BiasAnswer> answer;

  void set(BiasAnswer a) {
    {
      std::lock_guard lock(mutex);
      answer = std::move(a);
    }
    ready.notify_all();
  }
};

BiasAnswer error_answer(BiasId bias, std::string subreddit, std::string detail, std::int64_t latency_ms) {
  BiasAnswer a;
  a.bias = bias;
  a.subreddit_used = std::move(subreddit);
  a.status = AnswerStatus::error;
  a.error_detail = std::move(detail);
  a.latency_ms = latency_ms;
  return a;
}

std::int64_t elapsed_ms(Clock::time_point since) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count();
}

}  // namespace

std::vector<BiasAnswer> Gateway::fan_out(const AskRequest& request) {
  const auto start = Clock::now();
  const auto deadline = start + config_.bias_timeout;
  const GenerationParams params = request.params.value_or(GenerationParams{});

  std::vector<std::shared_ptr<Slot>> slots;
  for (auto bias : request.biases) {
    auto slot = std::make_shared<Slot>();
    slots.push_back(slot);
    auto prompt = render_inference(bias, request.question);
    // Workers own everything they touch, so a generation that overruns its
    // deadline can finish after the request has been answered.
    std::thread([backend = backend_, permits = slots_, slot, prompt = std::move(prompt), params, deadline, start,
                 bias] {
      const std::string subreddit(serving_subreddit(bias));
      if (!permits->try_acquire_until(deadline)) {
        slot->set(error_answer(bias, subreddit, "no generation slot before the deadline", elapsed_ms(start)));
        return;
      }
      BiasAnswer answer;
      try {
        auto completion = backend->generate(prompt, params);
        if (completion.text.empty()) {
          answer = error_answer(bias, subreddit, "empty completion", elapsed_ms(start));
        } else {
          answer.bias = bias;
          answer.subreddit_used = subreddit;
          answer.text = std::move(completion.text);
          answer.latency_ms = elapsed_ms(start);
        }
      } catch (const std::exception& e) {
        answer = error_answer(bias, subreddit, e.what(), elapsed_ms(start));
      }
      permits->release();
      slot->set(std::move(answer));
    }).detach();
  }

  std::vector<BiasAnswer> answers;
  answers.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    auto& slot = *slots[i];
    std::unique_lock lock(slot.mutex);
    if (slot.ready.wait_until(lock, deadline, [&] { return slot.answer.has_value(); })) {
      answers.push_back(*slot.answer);
    } else {
      const auto bias = request.biases[i];
      answers.push_back(error_answer(bias, std::string(serving_subreddit(bias)),
                                     "generation timed out after " + std::to_string(config_.bias_timeout.count()) + " ms",
                                     elapsed_ms(start)));
    }
  }
  return answers;
}

AskResult Gateway::ask(AskRequest request, const std::optional<std::string>& conversation_id) {
  request = normalize(std::move(request));
  if (conversation_id && !store_.contains(*conversation_id)) throw NotFoundError("conversation not found");

  Turn turn;
  turn.asked_at = utc_timestamp_now();
  turn.question = request.question;
  turn.answers = fan_out(request);

  auto stored = store_.append_turn(conversation_id, turn);
  return AskResult{stored.id, std::move(turn.answers)};
}

}  // namespace opinion
