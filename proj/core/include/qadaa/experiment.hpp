#pragma once

// Runs model x representation combinations on one split and reports the
// P/R/F1/Acc table.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qadaa/corpus.hpp"
#include "qadaa/eval.hpp"
#include "qadaa/pipeline.hpp"

namespace qadaa::experiment {

using pipeline::ModelKind;
using pipeline::Representation;

struct RowSpec {
  ModelKind model = ModelKind::svm;
  Representation representation = Representation::tfidf;
  friend bool operator==(const RowSpec&, const RowSpec&) = default;
};

/// SVM, LR, LSTM, BILSTM, each with TF-IDF then Word2Vec.
std::vector<RowSpec> all_rows();

struct ExperimentConfig {
  corpus::Task task = corpus::Task::judgment;
  std::vector<RowSpec> rows = all_rows();
  double test_fraction = 0.25;
  pipeline::FitSettings fit;  // fit.seed drives the split too
  /// Echoed into the report; no effect on results.
  std::string data_label;
};

struct ExperimentRow {
  std::string name;
  RowSpec spec;
  eval::ConfusionMatrix confusion;
  eval::MetricsReport metrics;
  nlohmann::json hyper;
  std::vector<double> grid_scores;
  std::vector<neural::EpochStats> history;
  double seconds = 0.0;
};

struct ExperimentReport {
  nlohmann::json config;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<ExperimentRow> rows;
};

/// Throws when a word2vec row is requested without an embedding store,
/// on duplicate rows, or when the test split is empty.
ExperimentReport run_experiment(const ExperimentConfig& config, const corpus::CaseSet& cases,
                                const pipeline::EmbeddingRef& embeddings = {});

/// Aligned plain-text table, metrics to two decimals.
std::string render_table(const ExperimentReport& report);
/// Everything except wall-clock timings, so equal runs serialize equally.
nlohmann::json report_json(const ExperimentReport& report);
nlohmann::json timings_json(const ExperimentReport& report);

nlohmann::json config_json(const ExperimentConfig& config);

}  // namespace qadaa::experiment
