#include "qadaa/experiment.hpp"

#include <fmt/format.h>

#include <chrono>
#include <set>

#include "qadaa/error.hpp"

namespace qadaa::experiment {

using nlohmann::json;

std::vector<RowSpec> all_rows() {
  std::vector<RowSpec> rows;
  for (auto m : {ModelKind::svm, ModelKind::logreg, ModelKind::lstm, ModelKind::bilstm}) {
    for (auto r : {Representation::tfidf, Representation::word2vec}) rows.push_back({m, r});
  }
  return rows;
}

json config_json(const ExperimentConfig& config) {
  json rows = json::array();
  for (const auto& r : config.rows) rows.push_back(pipeline::row_name(r.model, r.representation));
  return {{"task", corpus::to_string(config.task)},
          {"rows", rows},
          {"test_fraction", config.test_fraction},
          {"data", config.data_label},
          {"settings", pipeline::settings_json(config.fit)}};
}

ExperimentReport run_experiment(const ExperimentConfig& config, const corpus::CaseSet& cases,
                                const pipeline::EmbeddingRef& embeddings) {
  if (config.rows.empty()) usage_error("experiment: no rows requested");
  std::set<std::string> names;
  for (const auto& r : config.rows) {
    if (!names.insert(pipeline::row_name(r.model, r.representation)).second) {
      usage_error("experiment: duplicate row " + pipeline::row_name(r.model, r.representation));
    }
    if (r.representation == Representation::word2vec && !embeddings.store) {
      fail(ErrorCode::not_found, "experiment: word2vec rows need an embedding file");
    }
  }

  const corpus::CaseSet usable = cases.filter(config.task);
  const auto split = corpus::split_stratified(usable, config.test_fraction, config.fit.seed, config.task);
  if (split.test.cases.empty()) data_error("experiment: empty test split");

  ExperimentReport report;
  report.config = config_json(config);
  report.config["case_type"] = corpus::to_string(cases.case_type);
  if (!embeddings.sha256.empty()) report.config["embeddings_sha256"] = embeddings.sha256;
  report.n_train = split.train.size();
  report.n_test = split.test.size();

  const auto& catalog = usable.catalog(config.task);
  for (const auto& spec : config.rows) {
    const auto start = std::chrono::steady_clock::now();
    pipeline::FitLog log;
    const auto predictor = pipeline::fit(spec.model, spec.representation, config.task, split.train,
                                         config.fit, embeddings, &log);
    std::vector<std::size_t> truth;
    std::vector<std::size_t> predicted;
    for (const auto& c : split.test.cases) {
      truth.push_back(c.label(config.task));
      const auto tokens = pipeline::input_tokens(config.task, pipeline::case_input(c), predictor.preprocess);
      predicted.push_back(predictor.predict_tokens(tokens).label);
    }
    ExperimentRow row;
    row.name = pipeline::row_name(spec.model, spec.representation);
    row.spec = spec;
    row.confusion = eval::confusion(truth, predicted, catalog.size());
    row.metrics = eval::macro_metrics(row.confusion);
    row.hyper = predictor.hyper;
    if (log.grid) row.grid_scores = log.grid->scores;
    row.history = log.history;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string render_table(const ExperimentReport& report) {
  std::size_t width = 5;
  for (const auto& r : report.rows) width = std::max(width, r.name.size());
  std::string out = fmt::format("{:<{}}  {:>8}  {:>8}  {:>8}  {:>8}\n", "Model", width, "P(%)", "R(%)",
                                "F1(%)", "Acc(%)");
  out += std::string(width + 4 * 10, '-') + "\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{:<{}}  {:>8.2f}  {:>8.2f}  {:>8.2f}  {:>8.2f}\n", r.name, width,
                       r.metrics.precision, r.metrics.recall, r.metrics.f1, r.metrics.accuracy);
  }
  return out;
}

json report_json(const ExperimentReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json cm = json::array();
    for (std::size_t t = 0; t < r.confusion.classes(); ++t) {
      json line = json::array();
      for (std::size_t p = 0; p < r.confusion.classes(); ++p) line.push_back(r.confusion.at(t, p));
      cm.push_back(line);
    }
    json per_class = json::array();
    for (const auto& m : r.metrics.per_class) {
      per_class.push_back({{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}});
    }
    json row{{"name", r.name},
             {"model", pipeline::to_string(r.spec.model)},
             {"representation", pipeline::to_string(r.spec.representation)},
             {"P", r.metrics.precision},
             {"R", r.metrics.recall},
             {"F1", r.metrics.f1},
             {"Acc", r.metrics.accuracy},
             {"per_class", per_class},
             {"confusion", cm},
             {"hyperparameters", r.hyper}};
    if (!r.grid_scores.empty()) row["grid_validation_accuracy"] = r.grid_scores;
    if (!r.history.empty()) {
      json hist = json::array();
      for (const auto& e : r.history) {
        hist.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"train_accuracy", e.train_accuracy},
                        {"valid_loss", e.valid_loss},
                        {"valid_accuracy", e.valid_accuracy}});
      }
      row["history"] = hist;
    }
    rows.push_back(row);
  }
  return {{"config", report.config},
          {"n_train", report.n_train},
          {"n_test", report.n_test},
          {"columns", {"P", "R", "F1", "Acc"}},
          {"rows", rows}};
}

json timings_json(const ExperimentReport& report) {
  json rows = json::object();
  for (const auto& r : report.rows) rows[r.name] = r.seconds;
  return {{"seconds", rows}};
}

}  // namespace qadaa::experiment
