#pragma once

// HTTP front end for the prediction service.
//   GET /health, GET /models, POST /predict
// Every response is JSON; errors use the {error: {code, message}} shape.

#include <memory>
#include <string>

#include "qadaa/service.hpp"

namespace qadaa::app {

class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<const Registry> registry);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port; throws usage when
  /// the address cannot be bound.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// "host:port" or ":port" or "port".
std::pair<std::string, int> parse_addr(const std::string& addr);

}  // namespace qadaa::app
