#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <thread>

#include "opinion/gateway.hpp"

namespace httplib {
class Server;
}

namespace opinion {

// JSON routes:
//   GET  /api/biases
//   POST /api/ask                         {question, bias_ids, conversation_id?, params?}
//   GET  /api/conversations
//   GET  /api/conversations/{id}
//   POST /api/conversations/{id}/share   -> {share_token}
//   GET  /api/share/{token}              -> read-only conversation
// Errors come back as {"error": message, "fields": [...]} with 400 for
// validation failures and 404 for unknown ids or tokens.
void mount_api(httplib::Server& server, Gateway& gateway);

// Owns an httplib server running the API on a background thread.
class ApiServer {
 public:
  struct Options {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 picks a free port
    std::filesystem::path web_root;  // optional static files at "/"
  };

  ApiServer(Gateway& gateway, Options options);
  ~ApiServer();

  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  int port() const noexcept { return port_; }
  void stop();
  // Blocks until the server stops.
  void wait();

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace opinion
