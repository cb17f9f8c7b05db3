#pragma once

// HTTP front end of the classification service:
//   POST /classify  ClassifyRequest JSON -> array of per-item results
//   POST /explain   ClassifyRequest JSON -> array of explanation reports
//   GET  /schema    class names and CiTO map
//   GET  /health    status and bundle metadata
// Errors answer {"error": message, "field": path} with a 4xx status.

#include <functional>
#include <memory>
#include <string>

#include "citefusion/service.hpp"

namespace citefusion {

struct HttpReply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Transport-free dispatch used by the server and by tests.
HttpReply handle_request(const Classifier& classifier, const std::string& method,
                         const std::string& path, const std::string& body,
                         std::size_t max_items = kMaxBatchItems);

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t max_items = kMaxBatchItems;
};

// Blocks until stop() is called from another thread (or the process ends).
class HttpService {
 public:
  HttpService(const Classifier& classifier, ServerConfig config);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Binds the socket; returns the bound port. Throws Error on failure.
  int bind();
  void listen();  // blocks
  void stop();
  // Runs once the server is ready to accept connections.
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace citefusion
