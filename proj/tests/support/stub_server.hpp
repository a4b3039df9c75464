#pragma once

#include <functional>
#include <string>
#include <thread>

#include <httplib.h>

namespace opinion::testing {

// httplib server on an ephemeral loopback port, stopped on destruction.
class StubServer {
 public:
  explicit StubServer(const std::function<void(httplib::Server&)>& routes) {
    routes(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  int port() const { return port_; }
  std::string url(const std::string& path = "/") const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// A loopback port with nothing listening on it.
inline int closed_port() {
  httplib::Server probe;
  return probe.bind_to_any_port("127.0.0.1");
}

}  // namespace opinion::testing
