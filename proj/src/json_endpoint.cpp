#include "opinion/json_endpoint.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>

#include "opinion/error.hpp"

namespace opinion {

using Clock = std::chrono::steady_clock;

ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint URL lacks a scheme: " + url, {"url"});
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ValidationError("unsupported endpoint scheme '" + scheme + "'", {"url"});
  }
  auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.base = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.base.size() <= scheme_end + 3) throw ValidationError("endpoint URL lacks a host: " + url, {"url"});
  return out;
}

JsonEndpoint::JsonEndpoint(EndpointConfig config)
    : config_(std::move(config)), url_(parse_url(config_.url)),
      in_flight_(static_cast<std::ptrdiff_t>(std::max(1u, config_.max_in_flight))) {}

namespace {

template <typename Duration>
void set_timeouts(httplib::Client& client, Duration remaining) {
  auto us = std::max<std::int64_t>(1000, std::chrono::duration_cast<std::chrono::microseconds>(remaining).count());
  const time_t sec = static_cast<time_t>(us / 1'000'000);
  const time_t usec = static_cast<time_t>(us % 1'000'000);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
}

}  // namespace

nlohmann::json JsonEndpoint::post(const nlohmann::json& body) {
  const auto deadline = Clock::now() + config_.timeout;
  if (!in_flight_.try_acquire_until(deadline)) {
    throw BackendUnavailable("timed out waiting for a free request slot to " + url_.base);
  }
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  const std::string payload = body.dump();
  auto backoff = config_.backoff;
  std::string last_error = "no attempt made";
  int last_status = 0;

  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) {
      if (Clock::now() + backoff >= deadline) break;
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    const auto remaining = deadline - Clock::now();
    if (remaining <= Clock::duration::zero()) break;

    httplib::Client client(url_.base);
    set_timeouts(client, remaining);
    httplib::Headers headers;
    if (!config_.token.empty()) headers.emplace("Authorization", "Bearer " + config_.token);

    auto res = client.Post(url_.path, headers, payload, "application/json");
    if (!res) {
      last_status = 0;
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_status = res->status;
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw ProtocolError("endpoint returned HTTP " + std::to_string(res->status), res->status);
    }
    auto reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) throw ProtocolError("endpoint returned malformed JSON", res->status);
    return reply;
  }

  if (last_status != 0) throw ProtocolError("endpoint failed: " + last_error, last_status);
  throw BackendUnavailable("endpoint " + url_.base + " unavailable: " + last_error);
}

}  // namespace opinion
