#include "qadaa/http.hpp"

#include <charconv>

#include "httplib.h"

namespace qadaa::app {

using nlohmann::json;

struct HttpServer::Impl {
  std::shared_ptr<const Registry> registry;
  httplib::Server server;
};

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, ErrorCode code, std::string_view message, int status = 0) {
  send(res, status ? status : http_status(code), error_json(code, message));
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    send_error(res, e.code(), e.what());
  } catch (const std::exception& e) {
    send_error(res, ErrorCode::internal, e.what());
  }
}

}  // namespace

HttpServer::HttpServer(std::shared_ptr<const Registry> registry) : impl_(std::make_unique<Impl>()) {
  impl_->registry = std::move(registry);
  auto& s = impl_->server;
  const Registry& reg = *impl_->registry;

  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  s.Get("/health", [&reg](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, health_json(reg)); });
  });
  s.Get("/models", [&reg](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, models_json(reg)); });
  });
  s.Post("/predict", [&reg](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        send_error(res, ErrorCode::invalid_input, std::string("request body is not valid JSON: ") + e.what(), 400);
        return;
      }
      send(res, 200, handle_predict(parse_predict_request(body), reg));
    });
  });
  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_error(res, ErrorCode::not_found, "no route for " + req.method + " " + req.path);
    } else {
      send_error(res, res.status >= 500 ? ErrorCode::internal : ErrorCode::invalid_input,
                 "request failed with status " + std::to_string(res.status), res.status);
    }
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::internal, e.what());
    } catch (...) {
      send_error(res, ErrorCode::internal, "unknown error");
    }
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) usage_error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

std::pair<std::string, int> parse_addr(const std::string& addr) {
  std::string host = "127.0.0.1";
  std::string port_text = addr;
  if (const auto colon = addr.rfind(':'); colon != std::string::npos) {
    if (colon > 0) host = addr.substr(0, colon);
    port_text = addr.substr(colon + 1);
  }
  int port = -1;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port < 0 || port > 65535) {
    usage_error("bad address '" + addr + "' (expected host:port)");
  }
  return {host, port};
}

}  // namespace qadaa::app
