// qadaa: synth, preprocess, train, grid, eval, predict and serve.
// Exit codes: 0 ok, 1 usage, 2 data/validation, 3 internal.

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qadaa/artifact.hpp"
#include "qadaa/error.hpp"
#include "qadaa/experiment.hpp"
#include "qadaa/hash.hpp"
#include "qadaa/http.hpp"
#include "qadaa/service.hpp"

using namespace qadaa;
using nlohmann::json;

namespace {

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::usage: return 1;
    case ErrorCode::data:
    case ErrorCode::invalid_input:
    case ErrorCode::not_found: return 2;
    case ErrorCode::internal: return 3;
  }
  return 3;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string model;
  std::string out;
};

struct DataOpts {
  std::string case_type = "custody";
  std::string catalog;
  bool table_variant = false;
  std::string embeddings;
};

void add_data_opts(CLI::App* cmd, DataOpts& d) {
  cmd->add_option("--case-type", d.case_type, "custody or annulment");
  cmd->add_option("--catalog", d.catalog, "label catalog JSON (default: built-in)");
  cmd->add_flag("--table-variant", d.table_variant, "built-in catalog with plain annulment in place of other");
}

corpus::CaseSet read_data(const Common& c, const DataOpts& d) {
  if (c.data.empty()) usage_error("--data is required");
  const auto type = corpus::parse_case_type(d.case_type);
  const auto catalogs = d.catalog.empty() ? corpus::builtin_catalogs(d.table_variant)
                                          : corpus::load_catalogs(d.catalog);
  return corpus::load_cases(c.data, catalogs.get(corpus::Task::judgment, type),
                            catalogs.get(corpus::Task::evidence, type));
}

pipeline::EmbeddingRef read_embeddings(const std::string& path) {
  if (path.empty()) return {};
  auto store = std::make_shared<const features::EmbeddingStore>(features::load_embeddings(path));
  return {std::move(store), path, file_sha256(path)};
}

pipeline::FitSettings read_settings(const Common& c) {
  pipeline::FitSettings s = c.config.empty() ? pipeline::FitSettings{} : pipeline::load_settings(c.config);
  if (c.seed) s.seed = *c.seed;
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::not_found, "cannot write " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, "cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<experiment::RowSpec> parse_rows(const std::vector<std::string>& names) {
  if (names.empty()) return experiment::all_rows();
  std::vector<experiment::RowSpec> rows;
  for (const auto& n : names) {
    const auto dash = n.find('-');
    if (dash == std::string::npos) usage_error("row '" + n + "' must look like model-representation");
    std::string m = n.substr(0, dash);
    std::string r = n.substr(dash + 1);
    for (auto* s : {&m, &r}) {
      for (auto& ch : *s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    rows.push_back({pipeline::parse_model_kind(m), pipeline::parse_representation(r)});
  }
  return rows;
}

app::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Arabic legal judgment prediction toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", QADAA_VERSION);
  Common common;
  DataOpts data;

  auto with_common = [&](CLI::App* cmd, bool config, bool seed, bool data_flag, bool model, bool out) {
    if (config) cmd->add_option("--config", common.config, "settings JSON");
    if (seed) cmd->add_option("--seed", common.seed, "overrides the configured seed");
    if (data_flag) cmd->add_option("--data", common.data, "cases JSONL");
    if (model) cmd->add_option("--model", common.model, "model artifact");
    if (out) cmd->add_option("--out", common.out, "output path (default stdout)");
  };

  // synth
  auto* synth = app.add_subcommand("synth", "generate a keyword-separable synthetic corpus");
  with_common(synth, false, true, false, false, true);
  std::size_t per_class = 25;
  std::string synth_embeddings;
  std::size_t embed_dim = 32;
  synth->add_option("--case-type", data.case_type, "custody or annulment");
  synth->add_option("--per-class", per_class, "cases per judgment class");
  synth->add_option("--embeddings-out", synth_embeddings, "also write matching word vectors here");
  synth->add_option("--dim", embed_dim, "word vector dimension");

  // preprocess
  auto* prep = app.add_subcommand("preprocess", "normalize and tokenize text, one document per line");
  with_common(prep, false, false, false, false, true);
  std::string prep_text;
  std::string prep_file;
  prep->add_option("--config", common.config, "preprocessing config JSON");
  prep->add_option("--file", prep_file, "plain text, one document per line");
  prep->add_option("--text", prep_text, "a single document");

  // train
  auto* train = app.add_subcommand("train", "fit one model and save an artifact");
  with_common(train, true, true, true, false, true);
  add_data_opts(train, data);
  std::string family = "svm";
  std::string rep = "tfidf";
  std::string task = "judgment";
  train->add_option("--family", family, "svm|logreg|lstm|bilstm");
  train->add_option("--representation", rep, "tfidf|word2vec");
  train->add_option("--task", task, "judgment|evidence|probability");
  train->add_option("--embeddings", data.embeddings, "word-vector text file");

  // grid
  auto* grid = app.add_subcommand("grid", "grid-search a classical model on an inner split");
  with_common(grid, true, true, true, false, true);
  add_data_opts(grid, data);
  grid->add_option("--family", family, "svm|logreg");
  grid->add_option("--representation", rep, "tfidf|word2vec");
  grid->add_option("--task", task, "judgment|evidence|probability");
  grid->add_option("--embeddings", data.embeddings, "word-vector text file");

  // eval
  auto* evalc = app.add_subcommand("eval", "run the model x representation table, or score one artifact");
  with_common(evalc, true, true, true, true, true);
  add_data_opts(evalc, data);
  std::vector<std::string> rows;
  double test_fraction = 0.25;
  std::string timings_out;
  evalc->add_option("--task", task, "judgment|evidence|probability");
  evalc->add_option("--rows", rows, "e.g. svm-tfidf lstm-word2vec (default: all eight)");
  evalc->add_option("--test-fraction", test_fraction, "held-out share");
  evalc->add_option("--embeddings", data.embeddings, "word-vector text file");
  evalc->add_option("--timings-out", timings_out, "write per-row wall-clock seconds here");

  // predict
  auto* predict = app.add_subcommand("predict", "predict with an artifact");
  with_common(predict, false, false, false, true, true);
  std::string claim, answer, pleading;
  std::string embeddings_override;
  predict->add_option("--claim", claim);
  predict->add_option("--answer", answer);
  predict->add_option("--pleading", pleading);
  predict->add_option("--embeddings", embeddings_override, "embedding file (hash must match)");

  // serve
  auto* serve = app.add_subcommand("serve", "serve /health, /models and /predict");
  std::string addr = "127.0.0.1:8080";
  std::vector<std::string> artifacts;
  serve->add_option("--addr", addr, "host:port");
  serve->add_option("--artifact", artifacts, "artifact files; id = file stem")->required();
  serve->add_option("--embeddings", embeddings_override, "embedding file for word2vec artifacts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      auto spec = corpus::default_synthetic_spec(corpus::parse_case_type(data.case_type), per_class);
      const std::uint64_t seed = common.seed.value_or(42);
      std::ostringstream s;
      corpus::write_cases(s, corpus::generate_synthetic(spec, seed));
      write_text(common.out, s.str());
      if (!synth_embeddings.empty()) {
        std::ostringstream e;
        corpus::write_synthetic_embeddings(e, spec, embed_dim, seed);
        write_text(synth_embeddings, e.str());
      }
    } else if (*prep) {
      const auto config = common.config.empty() ? artext::default_config()
                                                : artext::load_preprocess_config(common.config);
      std::vector<std::string> lines;
      if (!prep_text.empty()) {
        lines.push_back(prep_text);
      } else {
        if (prep_file.empty()) usage_error("give --text or --file");
        std::istringstream in(read_file(prep_file));
        for (std::string line; std::getline(in, line);) lines.push_back(line);
      }
      std::string out;
      for (const auto& line : lines) {
        const auto tokens = artext::preprocess(line, config);
        for (std::size_t i = 0; i < tokens.size(); ++i) out += (i ? " " : "") + tokens[i];
        out += "\n";
      }
      write_text(common.out, out);
    } else if (*train) {
      if (common.out.empty()) usage_error("train needs --out for the artifact");
      const auto cases = read_data(common, data);
      const auto settings = read_settings(common);
      const auto predictor = pipeline::fit(pipeline::parse_model_kind(family), pipeline::parse_representation(rep),
                                           corpus::parse_task(task), cases, settings,
                                           read_embeddings(data.embeddings));
      app::save_artifact(predictor, common.out);
      std::cerr << "saved " << pipeline::row_name(predictor.model, predictor.representation) << " to "
                << common.out << "\n";
    } else if (*grid) {
      const auto kind = pipeline::parse_model_kind(family);
      if (kind != pipeline::ModelKind::svm && kind != pipeline::ModelKind::logreg) {
        usage_error("grid search applies to svm and logreg");
      }
      auto settings = read_settings(common);
      settings.grid_search = true;
      pipeline::FitLog log;
      const auto predictor = pipeline::fit(kind, pipeline::parse_representation(rep), corpus::parse_task(task),
                                           read_data(common, data), settings, read_embeddings(data.embeddings),
                                           &log);
      const auto& points = kind == pipeline::ModelKind::svm ? settings.svm_grid : settings.logreg_grid;
      json result{{"chosen", predictor.hyper}, {"points", json::array()}};
      if (log.grid) {
        const auto fam = kind == pipeline::ModelKind::svm ? classical::Family::svm : classical::Family::logreg;
        for (std::size_t i = 0; i < points.size(); ++i) {
          result["points"].push_back({{"point", eval::describe(points[i], fam)},
                                      {"validation_accuracy", log.grid->scores[i]}});
        }
        result["best_index"] = log.grid->best_index;
      }
      write_text(common.out, result.dump(2) + "\n");
    } else if (*evalc) {
      const auto cases = read_data(common, data);
      if (!common.model.empty()) {
        const auto p = app::load_artifact(common.model, {data.embeddings, {}});
        const auto usable = cases.filter(p.task);
        std::vector<std::size_t> truth, pred;
        for (const auto& c : usable.cases) {
          truth.push_back(c.label(p.task));
          pred.push_back(p.predict_tokens(pipeline::input_tokens(p.task, pipeline::case_input(c), p.preprocess)).label);
        }
        const auto cm = eval::confusion(truth, pred, p.catalog.size());
        const auto m = eval::macro_metrics(cm);
        write_text(common.out, json{{"model", pipeline::row_name(p.model, p.representation)},
                                    {"n", truth.size()},
                                    {"P", m.precision},
                                    {"R", m.recall},
                                    {"F1", m.f1},
                                    {"Acc", m.accuracy}}
                                   .dump(2) + "\n");
      } else {
        experiment::ExperimentConfig cfg;
        cfg.task = corpus::parse_task(task);
        cfg.rows = parse_rows(rows);
        cfg.test_fraction = test_fraction;
        cfg.fit = read_settings(common);
        cfg.data_label = common.data;
        const auto report = experiment::run_experiment(cfg, cases, read_embeddings(data.embeddings));
        std::cout << experiment::render_table(report);
        if (!common.out.empty()) write_text(common.out, experiment::report_json(report).dump(2) + "\n");
        if (!timings_out.empty()) write_text(timings_out, experiment::timings_json(report).dump(2) + "\n");
      }
    } else if (*predict) {
      if (common.model.empty()) usage_error("predict needs --model");
      app::Registry registry;
      registry.add("model", app::load_artifact(common.model, {embeddings_override, {}}), common.model);
      app::PredictRequest req;
      req.model = "model";
      req.text = {claim, answer, pleading};
      write_text(common.out, app::handle_predict(req, registry).dump(2) + "\n");
    } else if (*serve) {
      std::vector<std::filesystem::path> paths(artifacts.begin(), artifacts.end());
      auto registry = std::make_shared<const app::Registry>(app::load_registry(paths, {embeddings_override, {}}));
      const auto [host, port] = app::parse_addr(addr);
      app::HttpServer server(registry);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving " << registry->size() << " model(s) on " << host << ":" << bound << "\n";
      server.serve();
      g_server = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
