#pragma once

// A fitted predictor for one task: preprocessing, featurizer and model bound
// together. The experiment runner, model artifacts and the service all go
// through this type.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qadaa/artext.hpp"
#include "qadaa/classical.hpp"
#include "qadaa/corpus.hpp"
#include "qadaa/eval.hpp"
#include "qadaa/features.hpp"
#include "qadaa/neural.hpp"

namespace qadaa::pipeline {

using artext::TokenList;
using corpus::Task;
using numkit::Vector;

/// Placed between claim and answer tokens. Tokenization can never produce
/// it because '<' and '>' are delimiters.
inline constexpr std::string_view kSeparator = "<sep>";

enum class ModelKind { svm, logreg, lstm, bilstm };
enum class Representation { tfidf, word2vec };

std::string_view to_string(ModelKind m) noexcept;
std::string_view to_string(Representation r) noexcept;
ModelKind parse_model_kind(std::string_view s);
Representation parse_representation(std::string_view s);
/// "SVM-TFIDF", "LR-Word2Vec", "BILSTM-TFIDF", ...
std::string row_name(ModelKind m, Representation r);

struct InputText {
  std::string claim;
  std::string answer;
  std::string pleading;
};

InputText case_input(const corpus::Case& c);

/// Pleading tokens for judgment and evidence; claim tokens, the separator,
/// then answer tokens for probability.
TokenList input_tokens(Task task, const InputText& text, const artext::PreprocessConfig& config);

struct EmbeddingRef {
  std::shared_ptr<const features::EmbeddingStore> store;
  std::string path;
  std::string sha256;
};

struct FitSettings {
  artext::PreprocessConfig preprocess = artext::default_config();
  features::TfidfOptions tfidf;
  classical::OvrSpec classical;
  bool grid_search = true;
  eval::GridSpec svm_grid = eval::default_svm_grid();
  eval::GridSpec logreg_grid = eval::default_logreg_grid();
  /// Share of the training set held out for grid search.
  double valid_fraction = 0.25;
  /// Held out for picking the best neural epoch. At 0 the network trains on
  /// everything and the epoch with the lowest training loss is kept.
  double neural_valid_fraction = 0.0;
  neural::ArchSpec lstm_arch = neural::ArchSpec::lstm();
  neural::ArchSpec bilstm_arch = neural::ArchSpec::bilstm();
  neural::TrainConfig neural_train;
  std::uint64_t seed = 42;
  std::size_t threads = 0;
};

/// Settings as a JSON object. Keys: preprocess, tfidf, classical, grid_search,
/// svm_grid, logreg_grid, valid_fraction,
/// neural_valid_fraction, lstm, bilstm, train, seed, threads.
nlohmann::json settings_json(const FitSettings& s);
/// Missing keys keep their defaults; unknown keys are errors. A string
/// "preprocess" value names a preprocessing config file relative to
/// `base_dir`.
FitSettings parse_settings(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
FitSettings load_settings(const std::filesystem::path& path);

nlohmann::json arch_json(const neural::ArchSpec& a);
neural::ArchSpec parse_arch(const nlohmann::json& j, neural::ArchSpec base);

struct Prediction {
  std::size_t label = 0;
  Vector probabilities;  // catalog order
};

struct Predictor {
  Task task = Task::judgment;
  corpus::CaseType case_type = corpus::CaseType::custody;
  ModelKind model = ModelKind::svm;
  Representation representation = Representation::tfidf;
  artext::PreprocessConfig preprocess = artext::default_config();
  corpus::LabelCatalog catalog;

  features::TfidfVectorizer tfidf;  // classical + tfidf
  EmbeddingRef embeddings;          // classical + word2vec
  /// Catalog index of each class the one-vs-rest model was trained on.
  std::vector<std::size_t> classes;
  classical::OvrModel ovr;

  features::Vocabulary vocab;  // neural
  neural::SeqClassifier seq;

  nlohmann::json hyper = nlohmann::json::object();
  std::uint64_t seed = 0;

  bool neural() const noexcept { return model == ModelKind::lstm || model == ModelKind::bilstm; }
  neural::Head head() const noexcept {
    return task == Task::probability ? neural::Head::sigmoid : neural::Head::softmax;
  }

  Vector classical_features(const TokenList& tokens) const;
  /// Single-label tasks get a distribution over the catalog (one-vs-rest
  /// SVM sigmoids are renormalized); the probability task keeps
  /// independent per-class values.
  Prediction predict_tokens(const TokenList& tokens) const;
  /// Throws invalid_input when the task's inputs are empty after
  /// preprocessing.
  Prediction predict(const InputText& text) const;
};

struct FitLog {
  std::optional<eval::GridResult> grid;
  std::vector<neural::EpochStats> history;
  std::size_t best_epoch = 0;
};

/// Fits on `train` (cases unusable for the task are skipped). Word2vec
/// needs `embeddings.store`; neural word2vec models copy it into their
/// embedding layer, classical ones keep the reference.
Predictor fit(ModelKind model, Representation rep, Task task, const corpus::CaseSet& train,
              const FitSettings& settings, const EmbeddingRef& embeddings = {},
              FitLog* log = nullptr);

}  // namespace qadaa::pipeline
