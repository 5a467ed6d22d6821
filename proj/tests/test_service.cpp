#include <thread>

#include <httplib.h>

#include "doctest.h"
#include "helpers.hpp"
#include "qadaa/error.hpp"
#include "qadaa/http.hpp"
#include "qadaa/numkit.hpp"
#include "qadaa/service.hpp"

using namespace qadaa;
using namespace qadaa::app;
using nlohmann::json;
using pipeline::ModelKind;
using pipeline::Representation;
using corpus::Task;

namespace {

std::shared_ptr<const Registry> make_registry() {
  static const auto registry = [] {
    auto r = std::make_shared<Registry>();
    const auto custody = testkit::synthetic(5);
    const auto annulment = testkit::synthetic(5, 42, corpus::CaseType::annulment);
    const auto s = testkit::tiny_settings();
    r->add("custody-svm", pipeline::fit(ModelKind::svm, Representation::tfidf, Task::judgment, custody, s));
    r->add("custody-evidence", pipeline::fit(ModelKind::logreg, Representation::tfidf, Task::evidence, custody, s));
    r->add("custody-outcome", pipeline::fit(ModelKind::lstm, Representation::tfidf, Task::probability, custody, s));
    r->add("annulment-lr", pipeline::fit(ModelKind::logreg, Representation::tfidf, Task::judgment, annulment, s));
    r->add("annulment-evidence", pipeline::fit(ModelKind::logreg, Representation::tfidf, Task::evidence, annulment, s));
    return std::shared_ptr<const Registry>(r);
  }();
  return registry;
}

ErrorCode code_of(const json& body) {
  try {
    handle_predict(parse_predict_request(body), *make_registry());
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

const std::string kPleading = testkit::synthetic(1).cases[0].pleading;

}  // namespace

TEST_CASE("registry") {
  Registry r;
  const auto p = make_registry()->get("custody-svm").predictor;
  r.add("a", p);
  CHECK(r.contains("a"));
  CHECK_THROWS_AS(r.add("a", p), Error);
  CHECK_THROWS_AS(r.add("", p), Error);
  try {
    r.get("b");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_found);
  }
}

TEST_CASE("health and model listing") {
  const auto reg = make_registry();
  const auto h = health_json(*reg);
  CHECK(h.at("status") == "ok");
  CHECK(h.at("models") == 5);
  const auto m = models_json(*reg).at("models");
  REQUIRE(m.size() == 5);
  CHECK(m[0].at("id") == "annulment-evidence");
  const auto& svm = m[4];
  CHECK(svm.at("id") == "custody-svm");
  CHECK(svm.at("name") == "SVM-TFIDF");
  CHECK(svm.at("task") == "judgment");
  CHECK(svm.at("classes").size() == 4);
  CHECK(svm.at("classes")[0].contains("gloss"));
}

TEST_CASE("predict returns a distribution") {
  const auto reg = make_registry();
  const auto out = handle_predict(parse_predict_request({{"model", "custody-svm"}, {"pleading", kPleading}}), *reg);
  CHECK(out.at("head") == "softmax");
  CHECK(out.at("classes").size() == 4);
  double sum = 0.0;
  for (double v : out.at("probabilities")) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  const std::size_t idx = out.at("label_index");
  CHECK(out.at("label") == out.at("classes")[idx]);
  CHECK(out.at("token_count").get<std::size_t>() > 0);

  const auto joint = handle_predict(
      parse_predict_request({{"model", "custody-outcome"}, {"task", "probability"}, {"claim", kPleading}, {"answer", "رفض"}}),
      *reg);
  CHECK(joint.at("head") == "sigmoid");
  for (double v : joint.at("probabilities")) CHECK((v > 0.0 && v < 1.0));

  const auto paired = handle_predict(
      parse_predict_request({{"model", "custody-svm"}, {"pleading", kPleading}, {"evidence_model", "custody-evidence"}}),
      *reg);
  REQUIRE(paired.contains("evidence"));
  CHECK(paired.at("evidence").at("task") == "evidence");
}

TEST_CASE("predict errors") {
  CHECK(code_of({{"model", "nope"}, {"pleading", kPleading}}) == ErrorCode::not_found);
  CHECK(code_of({{"model", "custody-svm"}, {"pleading", ""}}) == ErrorCode::invalid_input);
  CHECK(code_of({{"model", "custody-svm"}, {"pleading", "في من"}}) == ErrorCode::invalid_input);
  CHECK(code_of({{"model", "custody-svm"}, {"task", "evidence"}, {"pleading", kPleading}}) == ErrorCode::invalid_input);
  CHECK(code_of({{"model", "custody-svm"}, {"task", "verdict"}, {"pleading", kPleading}}) == ErrorCode::invalid_input);
  CHECK(code_of({{"model", "custody-outcome"}, {"claim", kPleading}}) == ErrorCode::invalid_input);
  CHECK(code_of({{"model", "custody-svm"}, {"pleading", kPleading}, {"evidence_model", "annulment-evidence"}}) ==
        ErrorCode::invalid_input);
  CHECK(code_of({{"model", "custody-svm"}, {"pleading", kPleading}, {"evidence_model", "annulment-lr"}}) ==
        ErrorCode::invalid_input);
  CHECK(code_of({{"model", "custody-evidence"}, {"pleading", kPleading}, {"evidence_model", "custody-evidence"}}) ==
        ErrorCode::invalid_input);
  CHECK(code_of({{"model", "custody-svm"}, {"pleading", kPleading}, {"evidence_model", "gone"}}) ==
        ErrorCode::not_found);
  CHECK(code_of({{"pleading", kPleading}}) == ErrorCode::invalid_input);
  CHECK(code_of({{"model", 3}}) == ErrorCode::invalid_input);
  CHECK(code_of({{"model", "custody-svm"}, {"pleading", kPleading}, {"extra", 1}}) == ErrorCode::invalid_input);
  CHECK(code_of(json::array()) == ErrorCode::invalid_input);

  CHECK(http_status(ErrorCode::not_found) == 404);
  CHECK(http_status(ErrorCode::invalid_input) == 422);
  CHECK(http_status(ErrorCode::usage) == 400);
  CHECK(http_status(ErrorCode::internal) == 500);
  const auto e = error_json(ErrorCode::not_found, "x");
  CHECK(e.at("error").at("code") == "not_found");
  CHECK(e.at("error").at("message") == "x");
}

TEST_CASE("fuzzed request bodies give structured errors") {
  numkit::Rng rng(77);
  const std::vector<json> values{nullptr, 1, -2.5, true, "", "custody-svm", kPleading, json::array(),
                                 json::object(), json::array({1, 2}), "probability", "نص"};
  const std::vector<std::string> keys{"model", "task", "claim", "answer", "pleading", "evidence_model", "x", ""};
  for (int i = 0; i < 500; ++i) {
    json body = json::object();
    const std::size_t n = rng.index(5);
    for (std::size_t k = 0; k < n; ++k) body[keys[rng.index(keys.size())]] = values[rng.index(values.size())];
    INFO(body.dump());
    try {
      const auto out = handle_predict(parse_predict_request(body), *make_registry());
      CHECK(out.contains("probabilities"));
    } catch (const Error& e) {
      CHECK(e.code() != ErrorCode::internal);
      CHECK(std::string(e.what()).size() > 0);
    }
  }
}

TEST_CASE("http endpoints") {
  HttpServer server(make_registry());
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread worker([&] { server.serve(); });
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);
  for (int i = 0; i < 100 && !client.Get("/health"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(20));

  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body).at("status") == "ok");
  CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

  auto models = client.Get("/models");
  REQUIRE(models);
  CHECK(json::parse(models->body).at("models").size() == 5);

  const json req{{"model", "custody-svm"}, {"pleading", kPleading}};
  auto ok = client.Post("/predict", req.dump(), "application/json");
  REQUIRE(ok);
  CHECK(ok->status == 200);
  const auto body = json::parse(ok->body);
  CHECK(body == handle_predict(parse_predict_request(req), *make_registry()));

  auto missing = client.Post("/predict", json{{"model", "nope"}, {"pleading", "x"}}.dump(), "application/json");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body).at("error").at("code") == "not_found");

  auto empty = client.Post("/predict", json{{"model", "custody-svm"}, {"pleading", ""}}.dump(), "application/json");
  REQUIRE(empty);
  CHECK(empty->status == 422);

  auto bad = client.Post("/predict", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body).at("error").at("code") == "invalid_input");

  auto route = client.Get("/nowhere");
  REQUIRE(route);
  CHECK(route->status == 404);
  CHECK(json::parse(route->body).contains("error"));

  auto preflight = client.Options("/predict");
  REQUIRE(preflight);
  CHECK(preflight->status == 204);

  server.stop();
  worker.join();
}

TEST_CASE("parse_addr") {
  CHECK(parse_addr("0.0.0.0:8080") == std::pair<std::string, int>{"0.0.0.0", 8080});
  CHECK(parse_addr(":9000").second == 9000);
  CHECK(parse_addr("7000").second == 7000);
  CHECK_THROWS_AS(parse_addr("host:notaport"), Error);
  CHECK_THROWS_AS(parse_addr("host:70000"), Error);
}
