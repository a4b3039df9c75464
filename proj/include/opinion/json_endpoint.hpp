#pragma once

#include <chrono>
#include <semaphore>
#include <string>

#include <json.hpp>

namespace opinion {

struct EndpointConfig {
  std::string url;    // http(s)://host[:port][/path]
  std::string token;  // bearer token, never logged
  std::chrono::milliseconds timeout{30000};
  int retries = 2;
  std::chrono::milliseconds backoff{250};  // doubles per retry
  unsigned max_in_flight = 8;
};

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // at least "/"
};

// Throws ValidationError unless the URL is http:// or https://.
ParsedUrl parse_url(const std::string& url);

// POSTs JSON documents to one URL and returns the decoded JSON reply.
//
// A call never outlives `timeout`: retries and backoff share one deadline.
// Transport failures and 5xx replies are retried; once the deadline or the
// retry budget is spent, transport failures raise BackendUnavailable and
// HTTP errors raise ProtocolError carrying the status.
class JsonEndpoint {
 public:
  explicit JsonEndpoint(EndpointConfig config);

  JsonEndpoint(const JsonEndpoint&) = delete;
  JsonEndpoint& operator=(const JsonEndpoint&) = delete;

  nlohmann::json post(const nlohmann::json& body);

  const EndpointConfig& config() const noexcept { return config_; }

 private:
  EndpointConfig config_;
  ParsedUrl url_;
  std::counting_semaphore<> in_flight_;
};

}  // namespace opinion
