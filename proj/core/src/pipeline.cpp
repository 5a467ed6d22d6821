#include "qadaa/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "qadaa/error.hpp"

namespace qadaa::pipeline {

std::string_view to_string(ModelKind m) noexcept {
  switch (m) {
    case ModelKind::svm: return "svm";
    case ModelKind::logreg: return "logreg";
    case ModelKind::lstm: return "lstm";
    case ModelKind::bilstm: return "bilstm";
  }
  return "?";
}

std::string_view to_string(Representation r) noexcept {
  return r == Representation::tfidf ? "tfidf" : "word2vec";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "svm") return ModelKind::svm;
  if (s == "logreg" || s == "lr") return ModelKind::logreg;
  if (s == "lstm") return ModelKind::lstm;
  if (s == "bilstm") return ModelKind::bilstm;
  usage_error("unknown model family '" + std::string(s) + "' (expected svm|logreg|lstm|bilstm)");
}

Representation parse_representation(std::string_view s) {
  if (s == "tfidf") return Representation::tfidf;
  if (s == "word2vec" || s == "w2v") return Representation::word2vec;
  usage_error("unknown representation '" + std::string(s) + "' (expected tfidf|word2vec)");
}

std::string row_name(ModelKind m, Representation r) {
  std::string name;
  switch (m) {
    case ModelKind::svm: name = "SVM"; break;
    case ModelKind::logreg: name = "LR"; break;
    case ModelKind::lstm: name = "LSTM"; break;
    case ModelKind::bilstm: name = "BILSTM"; break;
  }
  return name + (r == Representation::tfidf ? "-TFIDF" : "-Word2Vec");
}

InputText case_input(const corpus::Case& c) { return {c.claim, c.answer, c.pleading}; }

TokenList input_tokens(Task task, const InputText& text, const artext::PreprocessConfig& config) {
  if (task != Task::probability) return artext::preprocess(text.pleading, config);
  TokenList out = artext::preprocess(text.claim, config);
  out.emplace_back(kSeparator);
  const TokenList answer = artext::preprocess(text.answer, config);
  out.insert(out.end(), answer.begin(), answer.end());
  return out;
}

// ---------------------------------------------------------------------------
// Settings

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) usage_error(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      usage_error(where + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& target, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception&) {
    usage_error(where + ": bad value for '" + key + "'");
  }
}

json grid_json(const eval::GridSpec& grid) {
  json out = json::array();
  for (const auto& p : grid) {
    json e{{"kernel", p.kernel == classical::KernelKind::linear ? "linear" : "rbf"}, {"C", p.c}};
    if (p.kernel == classical::KernelKind::rbf) e["gamma"] = p.gamma;
    out.push_back(e);
  }
  return out;
}

eval::GridSpec parse_grid(const json& j, const std::string& where) {
  if (!j.is_array()) usage_error(where + " must be an array");
  eval::GridSpec grid;
  for (const auto& e : j) {
    check_keys(e, {"kernel", "C", "gamma"}, where);
    eval::GridPoint p;
    std::string kernel = "linear";
    read(e, "kernel", kernel, where);
    if (kernel == "linear") p.kernel = classical::KernelKind::linear;
    else if (kernel == "rbf") p.kernel = classical::KernelKind::rbf;
    else usage_error(where + ": unknown kernel '" + kernel + "'");
    read(e, "C", p.c, where);
    read(e, "gamma", p.gamma, where);
    if (!(p.c > 0.0) || !(p.gamma > 0.0)) usage_error(where + ": C and gamma must be positive");
    grid.push_back(p);
  }
  return grid;
}

}  // namespace

json arch_json(const neural::ArchSpec& a) {
  return {{"maxlen", a.maxlen},
          {"embed_dim", a.embed_dim},
          {"lstm_units", a.lstm_units},
          {"bidirectional", a.bidirectional},
          {"dense_units", a.dense_units},
          {"head", a.head == neural::Head::softmax ? "softmax" : "sigmoid"},
          {"n_classes", a.n_classes}};
}

neural::ArchSpec parse_arch(const json& j, neural::ArchSpec a) {
  const std::string where = "architecture";
  check_keys(j, {"maxlen", "embed_dim", "lstm_units", "bidirectional", "dense_units", "head", "n_classes"},
             where);
  read(j, "maxlen", a.maxlen, where);
  read(j, "embed_dim", a.embed_dim, where);
  read(j, "lstm_units", a.lstm_units, where);
  read(j, "bidirectional", a.bidirectional, where);
  read(j, "dense_units", a.dense_units, where);
  read(j, "n_classes", a.n_classes, where);
  if (j.contains("head")) {
    const auto h = j.at("head").get<std::string>();
    if (h == "softmax") a.head = neural::Head::softmax;
    else if (h == "sigmoid") a.head = neural::Head::sigmoid;
    else usage_error("architecture: unknown head '" + h + "'");
  }
  a.validate();
  return a;
}

json settings_json(const FitSettings& s) {
  json pre;
  artext::to_json(pre, s.preprocess);
  const auto& c = s.classical;
  const auto& t = s.neural_train;
  return {{"preprocess", pre},
          {"tfidf", {{"min_df", s.tfidf.min_df}, {"smooth_idf", s.tfidf.smooth_idf},
                     {"l2_normalize", s.tfidf.l2_normalize}}},
          {"classical", {{"kernel", c.kernel.kind == classical::KernelKind::linear ? "linear" : "rbf"},
                         {"C", c.kernel.c},
                         {"gamma", c.kernel.gamma},
                         {"smo_tol", c.smo.tol},
                         {"smo_max_passes", c.smo.max_passes},
                         {"logreg_lr", c.logreg.lr},
                         {"logreg_epochs", c.logreg.epochs},
                         {"logreg_batch_size", c.logreg.batch_size},
                         {"logreg_l2", c.logreg.l2}}},
          {"grid_search", s.grid_search},
          {"svm_grid", grid_json(s.svm_grid)},
          {"logreg_grid", grid_json(s.logreg_grid)},
          {"valid_fraction", s.valid_fraction},
          {"neural_valid_fraction", s.neural_valid_fraction},
          {"lstm", arch_json(s.lstm_arch)},
          {"bilstm", arch_json(s.bilstm_arch)},
          {"train", {{"optimizer", t.optimizer.rule == numkit::UpdateRule::adam ? "adam" : "sgd"},
                     {"lr", t.optimizer.lr},
                     {"beta1", t.optimizer.beta1},
                     {"beta2", t.optimizer.beta2},
                     {"eps", t.optimizer.eps},
                     {"batch_size", t.batch_size},
                     {"epochs", t.epochs},
                     {"clip_norm", t.clip_norm}}},
          {"seed", s.seed}};
}

FitSettings parse_settings(const json& j, const std::filesystem::path& base_dir) {
  const std::string where = "settings";
  check_keys(j, {"preprocess", "tfidf", "classical", "grid_search", "svm_grid", "logreg_grid",
                 "valid_fraction", "neural_valid_fraction", "lstm", "bilstm", "train", "seed",
                 "threads"},
             where);
  FitSettings s;
  if (j.contains("preprocess")) {
    const auto& p = j.at("preprocess");
    if (p.is_string()) {
      std::filesystem::path path(p.get<std::string>());
      if (path.is_relative()) path = base_dir / path;
      s.preprocess = artext::load_preprocess_config(path);
    } else if (p.contains("stoplist")) {
      artext::from_json(p, s.preprocess);
    } else {
      s.preprocess = artext::parse_preprocess_config(p, base_dir);
    }
  }
  if (j.contains("tfidf")) {
    const auto& t = j.at("tfidf");
    check_keys(t, {"min_df", "smooth_idf", "l2_normalize"}, "tfidf");
    read(t, "min_df", s.tfidf.min_df, "tfidf");
    read(t, "smooth_idf", s.tfidf.smooth_idf, "tfidf");
    read(t, "l2_normalize", s.tfidf.l2_normalize, "tfidf");
  }
  if (j.contains("classical")) {
    const auto& c = j.at("classical");
    const std::string w = "classical";
    check_keys(c, {"kernel", "C", "gamma", "smo_tol", "smo_max_passes", "logreg_lr", "logreg_epochs",
                   "logreg_batch_size", "logreg_l2"},
               w);
    std::string kernel = s.classical.kernel.kind == classical::KernelKind::linear ? "linear" : "rbf";
    read(c, "kernel", kernel, w);
    if (kernel != "linear" && kernel != "rbf") usage_error("classical: unknown kernel '" + kernel + "'");
    s.classical.kernel.kind = kernel == "linear" ? classical::KernelKind::linear : classical::KernelKind::rbf;
    read(c, "C", s.classical.kernel.c, w);
    read(c, "gamma", s.classical.kernel.gamma, w);
    read(c, "smo_tol", s.classical.smo.tol, w);
    read(c, "smo_max_passes", s.classical.smo.max_passes, w);
    read(c, "logreg_lr", s.classical.logreg.lr, w);
    read(c, "logreg_epochs", s.classical.logreg.epochs, w);
    read(c, "logreg_batch_size", s.classical.logreg.batch_size, w);
    read(c, "logreg_l2", s.classical.logreg.l2, w);
    s.classical.kernel.validate();
  }
  read(j, "grid_search", s.grid_search, where);
  if (j.contains("svm_grid")) s.svm_grid = parse_grid(j.at("svm_grid"), "svm_grid");
  if (j.contains("logreg_grid")) s.logreg_grid = parse_grid(j.at("logreg_grid"), "logreg_grid");
  read(j, "valid_fraction", s.valid_fraction, where);
  if (!(s.valid_fraction >= 0.0 && s.valid_fraction < 1.0)) {
    usage_error("settings: valid_fraction must lie in [0, 1)");
  }
  read(j, "neural_valid_fraction", s.neural_valid_fraction, where);
  if (!(s.neural_valid_fraction >= 0.0 && s.neural_valid_fraction < 1.0)) {
    usage_error("settings: neural_valid_fraction must lie in [0, 1)");
  }
  if (j.contains("lstm")) s.lstm_arch = parse_arch(j.at("lstm"), s.lstm_arch);
  if (j.contains("bilstm")) s.bilstm_arch = parse_arch(j.at("bilstm"), s.bilstm_arch);
  if (j.contains("train")) {
    const auto& t = j.at("train");
    const std::string w = "train";
    check_keys(t, {"optimizer", "lr", "beta1", "beta2", "eps", "batch_size", "epochs", "clip_norm"}, w);
    std::string rule = "adam";
    read(t, "optimizer", rule, w);
    if (rule == "adam") s.neural_train.optimizer.rule = numkit::UpdateRule::adam;
    else if (rule == "sgd") s.neural_train.optimizer.rule = numkit::UpdateRule::sgd;
    else usage_error("train: unknown optimizer '" + rule + "'");
    read(t, "lr", s.neural_train.optimizer.lr, w);
    read(t, "beta1", s.neural_train.optimizer.beta1, w);
    read(t, "beta2", s.neural_train.optimizer.beta2, w);
    read(t, "eps", s.neural_train.optimizer.eps, w);
    read(t, "batch_size", s.neural_train.batch_size, w);
    read(t, "epochs", s.neural_train.epochs, w);
    read(t, "clip_norm", s.neural_train.clip_norm, w);
    s.neural_train.validate();
  }
  read(j, "seed", s.seed, where);
  read(j, "threads", s.threads, where);
  return s;
}

FitSettings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::not_found, "cannot open settings file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    data_error("settings file " + path.string() + ": " + e.what());
  }
  return parse_settings(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Prediction

Vector Predictor::classical_features(const TokenList& tokens) const {
  if (representation == Representation::tfidf) return tfidf.transform_dense(tokens);
  if (!embeddings.store) fail(ErrorCode::not_found, "predictor: embedding store not loaded");
  return features::average_embedding(tokens, *embeddings.store);
}

Prediction Predictor::predict_tokens(const TokenList& tokens) const {
  Prediction p;
  if (neural()) {
    const auto seqv = features::encode_sequence(tokens, vocab, seq.arch.maxlen);
    p.probabilities = neural::forward(seq, seqv);
    p.label = classical::argmax(p.probabilities);
    return p;
  }
  const auto pred = classical::ovr_predict(ovr, classical_features(tokens));
  p.probabilities.assign(catalog.size(), 0.0);
  double total = 0.0;
  for (double v : pred.probabilities) total += v;
  for (std::size_t j = 0; j < classes.size(); ++j) {
    double v = pred.probabilities[j];
    if (head() == neural::Head::softmax && total > 0.0) v /= total;
    p.probabilities[classes[j]] = v;
  }
  p.label = classes.at(pred.label);
  return p;
}

Prediction Predictor::predict(const InputText& text) const {
  auto empty_after = [&](const std::string& field, const std::string& value) {
    if (artext::preprocess(value, preprocess).empty()) {
      fail(ErrorCode::invalid_input,
           field + " is empty after preprocessing (stop words, dates and punctuation are removed)");
    }
  };
  if (task == Task::probability) {
    empty_after("claim", text.claim);
    empty_after("answer", text.answer);
  } else {
    empty_after("pleading", text.pleading);
  }
  return predict_tokens(input_tokens(task, text, preprocess));
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

struct Encoded {
  std::vector<TokenList> docs;
  std::vector<std::size_t> labels;
};

Encoded encode(const corpus::CaseSet& cs, Task task, const artext::PreprocessConfig& config) {
  Encoded e;
  for (const auto& c : cs.cases) {
    e.docs.push_back(input_tokens(task, case_input(c), config));
    e.labels.push_back(c.label(task));
  }
  return e;
}

// Inner train/validation split; nullopt when some class is too small.
std::optional<corpus::SplitPair> inner_split(const corpus::CaseSet& cs, Task task, double fraction,
                                             std::uint64_t seed) {
  if (fraction <= 0.0) return std::nullopt;
  try {
    auto split = corpus::split_stratified(cs, fraction, seed, task);
    if (split.test.cases.empty() || split.train.cases.empty()) return std::nullopt;
    return split;
  } catch (const Error& e) {
    warn(std::string("validation split skipped: ") + e.what());
    return std::nullopt;
  }
}

struct ClassicalData {
  classical::Rows x;
  std::vector<std::size_t> y;  // compacted to trained classes
};

ClassicalData classical_rows(const Predictor& p, const Encoded& e) {
  ClassicalData d;
  for (std::size_t i = 0; i < e.docs.size(); ++i) {
    d.x.push_back(p.classical_features(e.docs[i]));
    const auto it = std::lower_bound(p.classes.begin(), p.classes.end(), e.labels[i]);
    if (it == p.classes.end() || *it != e.labels[i]) {
      data_error("validation label absent from the training classes");
    }
    d.y.push_back(static_cast<std::size_t>(it - p.classes.begin()));
  }
  return d;
}

nlohmann::json kernel_json(const classical::OvrSpec& spec, classical::Family family,
                           std::size_t n_train) {
  if (family == classical::Family::logreg) {
    return {{"l2", spec.logreg.l2},
            {"C", 1.0 / (spec.logreg.l2 * static_cast<double>(n_train))},
            {"lr", spec.logreg.lr},
            {"epochs", spec.logreg.epochs},
            {"batch_size", spec.logreg.batch_size}};
  }
  nlohmann::json j{{"kernel", spec.kernel.kind == classical::KernelKind::linear ? "linear" : "rbf"},
                   {"C", spec.kernel.c}};
  if (spec.kernel.kind == classical::KernelKind::rbf) j["gamma"] = spec.kernel.gamma;
  return j;
}

void fit_classical(Predictor& p, const corpus::CaseSet& train, const Encoded& all,
                   const FitSettings& s, FitLog* log) {
  const auto family = p.model == ModelKind::svm ? classical::Family::svm : classical::Family::logreg;
  std::set<std::size_t> present(all.labels.begin(), all.labels.end());
  if (present.size() < 2) data_error("training data contains fewer than two classes");
  p.classes.assign(present.begin(), present.end());
  if (p.classes.size() < p.catalog.size()) {
    warn("training data lacks " + std::to_string(p.catalog.size() - p.classes.size()) +
         " of the " + std::to_string(p.catalog.size()) +
         " classes; they get probability 0");
  }

  auto fit_featurizer = [&](const Encoded& e) {
    if (p.representation == Representation::tfidf) p.tfidf = features::tfidf_fit(e.docs, s.tfidf);
  };

  classical::OvrSpec spec = s.classical;
  const auto& grid = family == classical::Family::svm ? s.svm_grid : s.logreg_grid;
  if (s.grid_search && !grid.empty()) {
    eval::GridPoint chosen = grid.front();
    if (grid.size() > 1) {
      if (auto split = inner_split(train, p.task, s.valid_fraction, numkit::derive_seed(s.seed, 101))) {
        const Encoded tr = encode(split->train, p.task, p.preprocess);
        const Encoded va = encode(split->test, p.task, p.preprocess);
        if (std::set<std::size_t>(tr.labels.begin(), tr.labels.end()).size() == p.classes.size()) {
          fit_featurizer(tr);
          const auto dtr = classical_rows(p, tr);
          const auto dva = classical_rows(p, va);
          auto result = eval::grid_search(family, grid, {dtr.x, dtr.y}, {dva.x, dva.y},
                                          p.classes.size(), s.seed, s.classical, s.threads);
          chosen = result.best;
          if (log) log->grid = std::move(result);
        }
      }
    }
    spec = eval::apply_point(family, chosen, s.classical, all.docs.size());
  }
  spec.smo.seed = numkit::derive_seed(s.seed, 7);
  spec.logreg.seed = numkit::derive_seed(s.seed, 7);

  fit_featurizer(all);
  const auto data = classical_rows(p, all);
  p.ovr = classical::ovr_train(data.x, data.y, p.classes.size(), family, spec);
  p.hyper = kernel_json(spec, family, all.docs.size());
}

std::vector<neural::Example> examples(const Predictor& p, const Encoded& e) {
  std::vector<neural::Example> out;
  for (std::size_t i = 0; i < e.docs.size(); ++i) {
    out.push_back({features::encode_sequence(e.docs[i], p.vocab, p.seq.arch.maxlen), {e.labels[i], {}}});
  }
  return out;
}

void fit_neural(Predictor& p, const corpus::CaseSet& train, const Encoded& all,
                const FitSettings& s, const EmbeddingRef& emb, FitLog* log) {
  neural::ArchSpec arch = p.model == ModelKind::lstm ? s.lstm_arch : s.bilstm_arch;
  arch.head = p.head();
  arch.n_classes = p.catalog.size();
  const features::EmbeddingStore* store = nullptr;
  if (p.representation == Representation::word2vec) {
    store = emb.store.get();
    arch.embed_dim = store->dim();
  }
  p.vocab = features::fit_vocab(all.docs, s.tfidf.min_df);
  p.seq.arch = arch;

  std::vector<neural::Example> tr;
  std::vector<neural::Example> va;
  if (auto split = inner_split(train, p.task, s.neural_valid_fraction, numkit::derive_seed(s.seed, 102))) {
    tr = examples(p, encode(split->train, p.task, p.preprocess));
    va = examples(p, encode(split->test, p.task, p.preprocess));
  } else {
    tr = examples(p, all);
  }
  auto model = neural::init_model(arch, numkit::derive_seed(s.seed, 11), p.vocab, store);
  neural::TrainConfig cfg = s.neural_train;
  cfg.seed = numkit::derive_seed(s.seed, 12);
  auto result = neural::train(std::move(model), tr, va, cfg);
  p.seq = std::move(result.model);
  p.hyper = {{"maxlen", arch.maxlen},
             {"embed_dim", arch.embed_dim},
             {"lstm_units", arch.lstm_units},
             {"bidirectional", arch.bidirectional},
             {"dense_units", arch.dense_units},
             {"head", arch.head == neural::Head::softmax ? "softmax" : "sigmoid"},
             {"optimizer", cfg.optimizer.rule == numkit::UpdateRule::adam ? "adam" : "sgd"},
             {"lr", cfg.optimizer.lr},
             {"batch_size", cfg.batch_size},
             {"epochs", cfg.epochs},
             {"clip_norm", cfg.clip_norm},
             {"best_epoch", result.best_epoch}};
  if (log) {
    log->history = std::move(result.history);
    log->best_epoch = result.best_epoch;
  }
}

}  // namespace

Predictor fit(ModelKind model, Representation rep, Task task, const corpus::CaseSet& train_in,
              const FitSettings& settings, const EmbeddingRef& embeddings, FitLog* log) {
  settings.preprocess.validate();
  if (rep == Representation::word2vec && !embeddings.store) {
    fail(ErrorCode::not_found, "word2vec representation needs an embedding file");
  }
  const corpus::CaseSet train = train_in.filter(task);
  if (train.cases.empty()) data_error("no training cases usable for task " + std::string(corpus::to_string(task)));

  Predictor p;
  p.task = task;
  p.case_type = train.case_type;
  p.model = model;
  p.representation = rep;
  p.preprocess = settings.preprocess;
  p.catalog = corpus::LabelCatalog(task, train.case_type, train.catalog(task).classes());
  p.seed = settings.seed;
  if (rep == Representation::word2vec && model != ModelKind::lstm && model != ModelKind::bilstm) {
    p.embeddings = embeddings;
  }

  const Encoded all = encode(train, task, p.preprocess);
  if (p.neural()) {
    fit_neural(p, train, all, settings, embeddings, log);
  } else {
    fit_classical(p, train, all, settings, log);
  }
  return p;
}

}  // namespace qadaa::pipeline
