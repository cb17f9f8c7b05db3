#include <cmath>
#include <thread>

#include "citefusion/http_server.hpp"
#include "citefusion/service.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace citefusion;
using nlohmann::json;

namespace {

ClassifyRequest request(std::vector<ClassifyItem> items, Mode mode = Mode::mixed,
                        double threshold = kDefaultThreshold) {
  return ClassifyRequest{std::move(items), mode, threshold};
}

ClassifyItem titled(std::string title, std::string context) { return {std::move(title), std::move(context)}; }
ClassifyItem untitled(std::string context) { return {std::nullopt, std::move(context)}; }

Classifier pair(std::vector<double> ws = {0.95, 0.03, 0.02}, std::vector<double> wos = {0.5, 0.3, 0.2}) {
  return Classifier(fixtures::constant_bundle(Setting::WS, ws, 0.8),
                    fixtures::constant_bundle(Setting::WoS, wos, 0.3));
}

}  // namespace

TEST_CASE("threshold examples") {
  const Classifier c = pair();
  const auto r = c.classify(request({titled("Methods", "We follow [4]."), untitled("Prior work [5].")}));
  REQUIRE(r.size() == 2);
  CHECK(r[0].setting == Setting::WS);
  CHECK(r[0].probabilities[0] == doctest::Approx(0.95).epsilon(1e-12));
  CHECK(r[0].reliable);
  CHECK(r[0].cito == "http://purl.org/spar/cito/usesMethodIn");
  CHECK(r[0].predicted == 0);
  for (double rho : r[0].rho1) CHECK(std::abs(rho - 0.8) < 1e-12);

  CHECK(r[1].setting == Setting::WoS);
  CHECK(r[1].confidence == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(r[1].reliable);
  CHECK(r[1].cito.ends_with("citesForInformation"));
  CHECK(std::abs(r[1].rho1[0] - 0.3) < 1e-12);
}

TEST_CASE("threshold is strict and monotone") {
  const Classifier c = pair({0.9, 0.05, 0.05});
  const auto item = titled("Results", "Our numbers agree with [2].");
  const double conf = c.classify(request({item}))[0].confidence;
  CHECK(c.classify(request({item}, Mode::mixed, conf))[0].reliable == false);
  CHECK(c.classify(request({item}, Mode::mixed, std::nextafter(conf, 0.0)))[0].reliable == true);
  bool was_unreliable = false;
  for (double t = 0.05; t <= 1.0; t += 0.05) {
    const bool rel = c.classify(request({item}, Mode::mixed, t))[0].reliable;
    if (was_unreliable) CHECK_FALSE(rel);
    was_unreliable = was_unreliable || !rel;
  }
}

TEST_CASE("mode routing") {
  const Classifier c = pair();
  std::vector<ClassifyItem> items{titled("Intro", "a [1]"), untitled("b [2]"), titled("   ", "c [3]"),
                                  titled("Discussion", "d [4]"), untitled("e [5]")};
  const auto mixed = c.classify(request(items));
  std::size_t ws = 0, wos = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const bool expect_ws = i == 0 || i == 3;
    CHECK((mixed[i].setting == Setting::WS) == expect_ws);
    (mixed[i].setting == Setting::WS ? ws : wos) += 1;
  }
  CHECK(ws + wos == items.size());
  CHECK(ws == 2);

  for (const auto& r : c.classify(request(items, Mode::with_sections))) CHECK(r.setting == Setting::WS);
  const auto forced = c.classify(request(items, Mode::with_sections));
  CHECK(forced[1].fell_back_to_wos);
  CHECK_FALSE(forced[0].fell_back_to_wos);
  for (const auto& r : c.classify(request(items, Mode::without_sections))) {
    CHECK(r.setting == Setting::WoS);
    CHECK_FALSE(r.fell_back_to_wos);
  }

  // a single bundle: items routed to the other setting fail before any result
  const Classifier only_ws(fixtures::constant_bundle(Setting::WS, {0.95, 0.03, 0.02}), std::nullopt);
  CHECK_THROWS_AS(only_ws.classify(request(items)), StateError);
  CHECK(only_ws.classify(request(items, Mode::with_sections)).size() == items.size());
  CHECK_THROWS_AS(only_ws.bundle(Setting::WoS), StateError);
}

TEST_CASE("classifier construction") {
  const auto ws = fixtures::constant_bundle(Setting::WS, {0.95, 0.03, 0.02});
  const auto wos = fixtures::constant_bundle(Setting::WoS, {0.95, 0.03, 0.02});
  CHECK_THROWS_AS(Classifier(std::nullopt, std::nullopt), InvalidArgument);
  CHECK_THROWS_AS(Classifier(wos, std::nullopt), InvalidArgument);
  CHECK_THROWS_AS(Classifier(std::nullopt, ws), InvalidArgument);
  auto other = wos;
  other.schema = aclarc_schema();
  CHECK_THROWS(Classifier(ws, other));
}

TEST_CASE("request parsing") {
  ClassifyRequest r = parse_classify_request(
      R"({"items":[{"section_title":"Methods","context":"x [1]"},"bare text",{"context":"y","section_title":null}],"mode":"with_sections","threshold":0.75})");
  REQUIRE(r.items.size() == 3);
  CHECK(*r.items[0].section_title == "Methods");
  CHECK(r.items[1].context == "bare text");
  CHECK_FALSE(r.items[2].section_title.has_value());
  CHECK(r.mode == Mode::with_sections);
  CHECK(r.threshold == 0.75);
  r = parse_classify_request(R"({"items":["a"]})");
  CHECK(r.mode == Mode::mixed);
  CHECK(r.threshold == kDefaultThreshold);

  auto field_of = [](const std::string& body, std::size_t limit = kMaxBatchItems) {
    try {
      parse_classify_request(body, limit);
    } catch (const RequestError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  CHECK(field_of("{") == "body");
  CHECK(field_of("[]") == "body");
  CHECK(field_of(R"({"items":[]})") == "items");
  CHECK(field_of(R"({"items":"x"})") == "items");
  CHECK(field_of(R"({"mode":"mixed"})") == "items");
  CHECK(field_of(R"({"items":["a"],"extra":1})") == "extra");
  CHECK(field_of(R"({"items":["a"],"mode":"fast"})") == "mode");
  CHECK(field_of(R"({"items":["a"],"threshold":0})") == "threshold");
  CHECK(field_of(R"({"items":["a"],"threshold":1.5})") == "threshold");
  CHECK(field_of(R"({"items":["a"],"threshold":"high"})") == "threshold");
  CHECK(field_of(R"({"items":["a",{"context":"  "}]})") == "items[1].context");
  CHECK(field_of(R"({"items":[{"section_title":"x"}]})") == "items[0].context");
  CHECK(field_of(R"({"items":[{"context":"a","page":3}]})") == "items[0].page");
  CHECK(field_of(R"({"items":[7]})") == "items[0]");
  CHECK(field_of(R"({"items":["a","b","c"]})", 2) == "items");
  CHECK(field_of(R"({"items":["a"],"threshold":1})") == "<none>");
}

TEST_CASE("result JSON") {
  const Classifier c = pair();
  const ClassifyRequest req = request({titled("Methods", "We follow [4].")});
  const std::string body = classify_body(c, req);
  CHECK(body == classify_body(c, req));
  const json j = json::parse(body);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 1);
  const json& o = j[0];
  CHECK(o["setting"] == "WS");
  CHECK(o["predicted_class"] == "Method");
  CHECK(o["reliable"] == true);
  CHECK(o["threshold"] == 0.9);
  CHECK(o["experts"].size() == 6);
  CHECK(o["experts"].contains("Result-general"));
  double total = 0;
  for (const auto& [k, v] : o["probabilities"].items()) total += v.get<double>();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const json schema = c.schema_json();
  CHECK(schema["classes"] == json({"Method", "Background", "Result"}));
  CHECK(schema["fallback"] == "http://purl.org/spar/cito/citesForInformation");
  CHECK(c.health_json()["status"] == "ok");
  CHECK(c.health_json()["bundles"].contains("WoS"));

  const json ex = c.explain(request({untitled("Prior work [5].")}));
  REQUIRE(ex.size() == 1);
  CHECK(ex[0]["setting"] == "WoS");
  CHECK(ex[0]["reliable"] == false);
  CHECK(ex[0]["cito"] == "http://purl.org/spar/cito/usesMethodIn");
  CHECK(ex[0]["experts"].size() == 6);
  const json forced = c.explain(request({untitled("Prior work [5].")}, Mode::with_sections));
  CHECK(forced[0]["fell_back_to_wos"] == true);
  CHECK(forced[0].contains("note"));
}

TEST_CASE("HTTP dispatch") {
  const Classifier c = pair();
  CHECK(handle_request(c, "GET", "/health", "").status == 200);
  CHECK(handle_request(c, "GET", "/schema", "").status == 200);
  CHECK(handle_request(c, "POST", "/health", "").status == 405);
  CHECK(handle_request(c, "GET", "/classify", "").status == 405);
  CHECK(handle_request(c, "GET", "/nope", "").status == 404);

  HttpReply r = handle_request(c, "POST", "/classify", R"({"items":["one [1]"]})");
  CHECK(r.status == 200);
  CHECK(json::parse(r.body).size() == 1);

  r = handle_request(c, "POST", "/classify", R"({"items":["one",)");
  CHECK(r.status == 400);
  CHECK(json::parse(r.body)["field"] == "body");
  CHECK(r.body.find("probabilities") == std::string::npos);

  r = handle_request(c, "POST", "/classify", R"({"items":["a","b","c"]})", 2);
  CHECK(r.status == 413);
  CHECK(json::parse(r.body)["error"].get<std::string>().find("limit of 2") != std::string::npos);

  const Classifier only_ws(fixtures::constant_bundle(Setting::WS, {0.95, 0.03, 0.02}), std::nullopt);
  r = handle_request(only_ws, "POST", "/classify", R"({"items":["no title"]})");
  CHECK(r.status == 422);

  r = handle_request(c, "POST", "/explain", R"({"items":[{"section_title":"Results","context":"x [2]"}]})");
  CHECK(r.status == 200);
  CHECK(json::parse(r.body)[0].contains("shapley"));
}

TEST_CASE("HTTP server round trip") {
  const Classifier c = pair();
  HttpService server(c, ServerConfig{"127.0.0.1", 0, kMaxBatchItems});
  const int port = server.bind();
  REQUIRE(port > 0);
  std::thread t([&] { server.listen(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["status"] == "ok");

  const std::string body = R"({"items":[{"section_title":"Methods","context":"We follow [4]."}]})";
  auto res = client.Post("/classify", body, "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == classify_body(c, parse_classify_request(body)));

  // concurrent identical requests see identical bodies
  std::vector<std::string> bodies(8);
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    workers.emplace_back([&, i] {
      httplib::Client cl("127.0.0.1", port);
      if (auto r = cl.Post("/classify", body, "application/json")) bodies[i] = r->body;
    });
  }
  for (auto& w : workers) w.join();
  for (const auto& b : bodies) CHECK(b == res->body);

  auto bad = client.Post("/classify", "{", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  auto missing = client.Get("/missing");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server.stop();
  t.join();
}
