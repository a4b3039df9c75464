#include "opinion/http_api.hpp"

#include <httplib.h>

#include "opinion/error.hpp"

namespace opinion {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::vector<std::string>& fields = {}) {
  send_json(res, {{"error", message}, {"fields", fields}}, status);
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler = std::move(handler)](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const ValidationError& e) {
      send_error(res, 400, e.what(), e.fields());
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) throw ValidationError("request body is not valid JSON", {"body"});
  return body;
}

}  // namespace

void mount_api(httplib::Server& server, Gateway& gateway) {
  server.Get("/api/biases", guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, registry_json());
  }));

  server.Post("/api/ask", guarded([&gateway](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    auto request = ask_request_from_json(body);
    std::optional<std::string> conversation_id;
    if (auto it = body.find("conversation_id"); it != body.end() && !it->is_null()) {
      if (!it->is_string()) throw ValidationError("conversation_id must be a string", {"conversation_id"});
      conversation_id = it->get<std::string>();
    }
    send_json(res, to_json(gateway.ask(std::move(request), conversation_id)));
  }));

  server.Get("/api/conversations", guarded([&gateway](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& s : gateway.history()) out.push_back(to_json(s));
    send_json(res, out);
  }));

  server.Get(R"(/api/conversations/([A-Za-z0-9]+))",
             guarded([&gateway](const httplib::Request& req, httplib::Response& res) {
               send_json(res, to_json(gateway.conversation(req.matches[1].str())));
             }));

  server.Post(R"(/api/conversations/([A-Za-z0-9]+)/share)",
              guarded([&gateway](const httplib::Request& req, httplib::Response& res) {
                send_json(res, {{"share_token", gateway.share(req.matches[1].str())}});
              }));

  server.Get(R"(/api/share/([A-Za-z0-9_\-]+))", guarded([&gateway](const httplib::Request& req, httplib::Response& res) {
    auto view = to_json(gateway.resolve_share(req.matches[1].str()));
    view["read_only"] = true;
    send_json(res, view);
  }));

  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
}

ApiServer::ApiServer(Gateway& gateway, Options options) : server_(std::make_unique<httplib::Server>()) {
  mount_api(*server_, gateway);
  if (!options.web_root.empty() && !server_->set_mount_point("/", options.web_root.string())) {
    throw IoError("web root not found: " + options.web_root.string());
  }
  if (options.port == 0) {
    port_ = server_->bind_to_any_port(options.host);
  } else {
    port_ = server_->bind_to_port(options.host, options.port) ? options.port : -1;
  }
  if (port_ < 0) throw IoError("cannot bind " + options.host + ":" + std::to_string(options.port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

ApiServer::~ApiServer() {
  stop();
  wait();
}

void ApiServer::stop() { server_->stop(); }

void ApiServer::wait() {
  if (thread_.joinable()) thread_.join();
}

}  // namespace opinion
