#include "qadaa/service.hpp"

#include <algorithm>

namespace qadaa::app {

using nlohmann::json;
using pipeline::Predictor;

void Registry::add(std::string id, Predictor predictor, std::filesystem::path source) {
  if (id.empty()) usage_error("registry: empty model id");
  if (entries_.contains(id)) usage_error("registry: duplicate model id '" + id + "'");
  ModelEntry e{id, std::move(source), std::move(predictor)};
  entries_.emplace(std::move(id), std::move(e));
}

const ModelEntry& Registry::get(std::string_view id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) fail(ErrorCode::not_found, "unknown model id '" + std::string(id) + "'");
  return it->second;
}

bool Registry::contains(std::string_view id) const { return entries_.find(id) != entries_.end(); }

std::vector<const ModelEntry*> Registry::entries() const {
  std::vector<const ModelEntry*> out;
  for (const auto& [_, e] : entries_) out.push_back(&e);
  return out;
}

Registry load_registry(const std::vector<std::filesystem::path>& artifacts, const LoadOptions& options) {
  Registry r;
  for (const auto& path : artifacts) r.add(path.stem().string(), load_artifact(path, options), path);
  return r;
}

namespace {

std::string field(const json& body, const char* key) {
  if (!body.contains(key)) return {};
  const auto& v = body.at(key);
  if (!v.is_string()) fail(ErrorCode::invalid_input, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

json classes_json(const corpus::LabelCatalog& c) {
  json out = json::array();
  for (const auto& l : c.classes()) out.push_back({{"name", l.name}, {"gloss", l.gloss}});
  return out;
}

json outcome(const ModelEntry& e, const pipeline::Prediction& p) {
  const auto& cat = e.predictor.catalog;
  json names = json::array();
  for (const auto& l : cat.classes()) names.push_back(l.name);
  return {{"model", e.id},
          {"task", corpus::to_string(e.predictor.task)},
          {"case_type", corpus::to_string(e.predictor.case_type)},
          {"head", e.predictor.head() == neural::Head::softmax ? "softmax" : "sigmoid"},
          {"label", cat.at(p.label).name},
          {"gloss", cat.at(p.label).gloss},
          {"label_index", p.label},
          {"classes", names},
          {"probabilities", p.probabilities}};
}

}  // namespace

PredictRequest parse_predict_request(const json& body) {
  if (!body.is_object()) fail(ErrorCode::invalid_input, "request body must be a JSON object");
  for (const auto& [key, _] : body.items()) {
    static const char* known[] = {"model", "task", "claim", "answer", "pleading", "evidence_model"};
    if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; })) {
      fail(ErrorCode::invalid_input, "unknown request field '" + key + "'");
    }
  }
  PredictRequest r;
  r.model = field(body, "model");
  if (r.model.empty()) fail(ErrorCode::invalid_input, "'model' is required");
  if (const auto task = field(body, "task"); !task.empty()) {
    try {
      r.task = corpus::parse_task(task);
    } catch (const Error& e) {
      fail(ErrorCode::invalid_input, e.what());
    }
  }
  r.text.claim = field(body, "claim");
  r.text.answer = field(body, "answer");
  r.text.pleading = field(body, "pleading");
  r.evidence_model = field(body, "evidence_model");
  return r;
}

json handle_predict(const PredictRequest& request, const Registry& registry) {
  const ModelEntry& entry = registry.get(request.model);
  const Predictor& p = entry.predictor;
  if (request.task && *request.task != p.task) {
    fail(ErrorCode::invalid_input, "model '" + entry.id + "' predicts task " +
                                       std::string(corpus::to_string(p.task)) + ", not " +
                                       std::string(corpus::to_string(*request.task)));
  }
  const ModelEntry* evidence = nullptr;
  if (!request.evidence_model.empty()) {
    evidence = &registry.get(request.evidence_model);
    if (p.task != corpus::Task::judgment) {
      fail(ErrorCode::invalid_input, "evidence prediction pairs with a judgment model");
    }
    if (evidence->predictor.task != corpus::Task::evidence) {
      fail(ErrorCode::invalid_input, "model '" + evidence->id + "' is not an evidence model");
    }
    if (evidence->predictor.case_type != p.case_type) {
      fail(ErrorCode::invalid_input, "evidence model '" + evidence->id + "' is for a different case type");
    }
  }

  json out = outcome(entry, p.predict(request.text));
  const auto tokens = pipeline::input_tokens(p.task, request.text, p.preprocess);
  out["token_count"] = p.task == corpus::Task::probability ? tokens.size() - 1 : tokens.size();
  if (evidence) out["evidence"] = outcome(*evidence, evidence->predictor.predict(request.text));
  return out;
}

json health_json(const Registry& registry) {
  return {{"status", "ok"}, {"version", QADAA_VERSION}, {"models", registry.size()}};
}

json models_json(const Registry& registry) {
  json models = json::array();
  for (const auto* e : registry.entries()) {
    const auto& p = e->predictor;
    models.push_back({{"id", e->id},
                      {"task", corpus::to_string(p.task)},
                      {"case_type", corpus::to_string(p.case_type)},
                      {"model", pipeline::to_string(p.model)},
                      {"representation", pipeline::to_string(p.representation)},
                      {"name", pipeline::row_name(p.model, p.representation)},
                      {"classes", classes_json(p.catalog)}});
  }
  return {{"models", models}};
}

json error_json(ErrorCode code, std::string_view message) {
  return {{"error", {{"code", to_string(code)}, {"message", message}}}};
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::usage: return 400;
    case ErrorCode::data: return 422;
    case ErrorCode::invalid_input: return 422;
    case ErrorCode::not_found: return 404;
    case ErrorCode::internal: return 500;
  }
  return 500;
}

}  // namespace qadaa::app
