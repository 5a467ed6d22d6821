#pragma once

// Prediction service: a read-only registry of loaded artifacts and the
// JSON handlers behind the HTTP endpoints.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qadaa/artifact.hpp"
#include "qadaa/error.hpp"
#include "qadaa/pipeline.hpp"

namespace qadaa::app {

struct ModelEntry {
  std::string id;
  std::filesystem::path source;
  pipeline::Predictor predictor;
};

class Registry {
 public:
  /// Throws usage on an empty or duplicate id.
  void add(std::string id, pipeline::Predictor predictor, std::filesystem::path source = {});
  /// Throws not_found.
  const ModelEntry& get(std::string_view id) const;
  bool contains(std::string_view id) const;
  std::size_t size() const noexcept { return entries_.size(); }
  /// Sorted by id.
  std::vector<const ModelEntry*> entries() const;

 private:
  std::map<std::string, ModelEntry, std::less<>> entries_;
};

/// Model id = file stem.
Registry load_registry(const std::vector<std::filesystem::path>& artifacts,
                       const LoadOptions& options = {});

struct PredictRequest {
  std::string model;
  /// When set, must equal the model's task.
  std::optional<corpus::Task> task;
  pipeline::InputText text;
  /// Optional evidence artifact run on the same pleading.
  std::string evidence_model;
};

/// Body keys: model (required), task, claim, answer, pleading,
/// evidence_model. Anything else is invalid_input.
PredictRequest parse_predict_request(const nlohmann::json& body);

/// {model, task, case_type, head, label, gloss, label_index, classes,
/// probabilities, token_count[, evidence]}.
nlohmann::json handle_predict(const PredictRequest& request, const Registry& registry);

nlohmann::json health_json(const Registry& registry);
/// {models: [{id, task, case_type, model, representation, classes: [{name, gloss}]}]}
nlohmann::json models_json(const Registry& registry);

/// {error: {code, message}}
nlohmann::json error_json(ErrorCode code, std::string_view message);
int http_status(ErrorCode code) noexcept;

}  // namespace qadaa::app
