#include "citefusion/http_server.hpp"

#include "httplib.h"

namespace citefusion {

namespace {

HttpReply error_reply(int status, const std::string& field, const std::string& message) {
  Json o;
  o["error"] = message;
  o["field"] = field;
  return {status, o.dump() + "\n"};
}

}  // namespace

HttpReply handle_request(const Classifier& classifier, const std::string& method,
                         const std::string& path, const std::string& body, std::size_t max_items) {
  const bool get = method == "GET";
  const bool post = method == "POST";
  if (path == "/health" || path == "/schema") {
    if (!get) return error_reply(405, "method", "use GET for " + path);
    const Json o = path == "/health" ? classifier.health_json() : classifier.schema_json();
    return {200, o.dump(2) + "\n"};
  }
  if (path == "/classify" || path == "/explain") {
    if (!post) return error_reply(405, "method", "use POST for " + path);
    try {
      const ClassifyRequest req = parse_classify_request(body, max_items);
      if (path == "/classify") return {200, classify_body(classifier, req)};
      return {200, classifier.explain(req).dump(2) + "\n"};
    } catch (const RequestError& e) {
      const bool too_large = std::string(e.what()).find("exceeds the limit") != std::string::npos;
      return error_reply(too_large ? 413 : 400, e.field(), e.what());
    } catch (const StateError& e) {
      return error_reply(422, "items", e.what());
    } catch (const InvalidArgument& e) {
      return error_reply(400, "body", e.what());
    }
  }
  return error_reply(404, "path", "no route for " + path);
}

struct HttpService::Impl {
  const Classifier& classifier;
  ServerConfig config;
  httplib::Server server;
  int port = -1;
};

HttpService::HttpService(const Classifier& classifier, ServerConfig config)
    : impl_(new Impl{classifier, std::move(config), {}, -1}) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const HttpReply r = handle_request(impl_->classifier, req.method, req.path, req.body,
                                       impl_->config.max_items);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  for (const char* p : {"/health", "/schema", "/classify", "/explain"}) {
    impl_->server.Get(p, handler);
    impl_->server.Post(p, handler);
  }
  impl_->server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    Json o;
    o["error"] = "no route for " + req.path;
    o["field"] = "path";
    res.set_content(o.dump() + "\n", "application/json");
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::bind() {
  if (impl_->config.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(impl_->config.host);
  } else {
    impl_->port = impl_->server.bind_to_port(impl_->config.host, impl_->config.port)
                      ? impl_->config.port
                      : -1;
  }
  if (impl_->port < 0) {
    throw Error("cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  }
  return impl_->port;
}

void HttpService::listen() {
  if (impl_->port < 0) bind();
  impl_->server.listen_after_bind();
}

void HttpService::stop() { impl_->server.stop(); }

void HttpService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace citefusion
