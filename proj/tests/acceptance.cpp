// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "qadaa/artext.hpp"
#include "qadaa/artifact.hpp"
#include "qadaa/classical.hpp"
#include "qadaa/error.hpp"
#include "qadaa/eval.hpp"
#include "qadaa/experiment.hpp"
#include "qadaa/features.hpp"
#include "qadaa/neural.hpp"
#include "qadaa/optim.hpp"

using namespace qadaa;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

// --- TF-IDF ----------------------------------------------------------------

Outcome tfidf_oracle() {
  Outcome out;
  numkit::Rng rng(20240501);
  const std::vector<std::string> words{"حضانة", "نفقة", "زيارة", "ام", "اب", "طفل", "دعوى", "حكم"};
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t vocab = 1 + rng.index(words.size());
    std::vector<artext::TokenList> corpus(1 + rng.index(10));
    for (auto& d : corpus) {
      const std::size_t len = rng.index(12);
      for (std::size_t i = 0; i < len; ++i) d.push_back(words[rng.index(vocab)]);
    }
    const auto tf = features::tfidf_fit(corpus);
    auto probes = corpus;
    probes.push_back({words[0], "غريب", words[vocab - 1]});
    for (const auto& doc : probes) {
      const auto want = oracle::tfidf(corpus, doc);
      const auto got = tf.transform_dense(doc);
      for (std::size_t i = 0; i < tf.dim(); ++i) {
        auto it = want.find(tf.vocabulary().token(i));
        worst = std::max(worst, std::abs(got[i] - (it == want.end() ? 0.0 : it->second)));
      }
      for (const auto& [token, _] : want) {
        out.require(tf.vocabulary().index(token).has_value(), "oracle token missing from vocabulary");
      }
    }
  }
  out.require(worst <= 1e-9, fmt::format("max deviation {:.3g}", worst));
  if (out.pass) out.detail = fmt::format("50 corpora, max deviation {:.3g}", worst);
  return out;
}

// --- SMO -------------------------------------------------------------------

Outcome smo_oracle() {
  using namespace classical;
  Outcome out;
  double worst_kkt = 0.0, worst_box = 0.0, worst_eq = 0.0, worst_obj = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    numkit::Rng rng(7000 + seed);
    const std::size_t n = 8 + rng.index(33);
    Rows x;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      Vector p{rng.normal(), rng.normal()};
      y.push_back(p[0] - 0.4 * p[1] + 0.7 * rng.normal() >= 0 ? 1 : -1);
      x.push_back(std::move(p));
    }
    y[0] = 1;
    y[1] = -1;
    KernelSpec spec{seed % 2 ? KernelKind::rbf : KernelKind::linear, 0.5, seed % 3 == 0 ? 0.5 : 2.0};
    SmoConfig cfg;
    cfg.seed = seed;
    const auto m = smo_train_binary(x, y, spec, cfg);
    worst_kkt = std::max(worst_kkt, svm_max_kkt_residual(m, x, y));
    const auto a = full_alphas(m, n);
    double balance = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      worst_box = std::max({worst_box, -a[i], a[i] - spec.c});
      balance += a[i] * y[i];
    }
    worst_eq = std::max(worst_eq, std::abs(balance));
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) k[i][j] = kernel(spec, x[i], x[j]);
    }
    const auto sol = oracle::solve_dual(k, y, spec.c);
    worst_obj = std::max(worst_obj, std::abs(svm_dual_objective(x, y, a, spec) - sol.objective));
  }
  out.require(worst_kkt <= 1e-3, fmt::format("KKT residual {:.3g}", worst_kkt));
  out.require(worst_box <= 1e-6, fmt::format("box violation {:.3g}", worst_box));
  out.require(worst_eq <= 1e-6, fmt::format("equality violation {:.3g}", worst_eq));
  out.require(worst_obj <= 1e-3, fmt::format("dual objective gap {:.3g}", worst_obj));

  const Rows x2{{-1.0}, {1.0}};
  const std::vector<int> y2{-1, 1};
  const auto m2 = smo_train_binary(x2, y2, KernelSpec{KernelKind::linear, 0.1, 10.0});
  const auto a2 = full_alphas(m2, 2);
  out.require(std::abs(a2[0] - 0.5) <= 1e-9 && std::abs(a2[1] - 0.5) <= 1e-9 && std::abs(m2.bias) <= 1e-9,
              fmt::format("analytic case alpha=({}, {}) b={}", a2[0], a2[1], m2.bias));
  if (out.pass) {
    out.detail = fmt::format("20 datasets, KKT {:.2g}, objective gap {:.2g}; analytic case exact", worst_kkt,
                             worst_obj);
  }
  return out;
}

// --- gradient checks ---------------------------------------------------------

double logreg_check() {
  using namespace classical;
  numkit::Rng rng(3);
  Rows x;
  std::vector<std::size_t> y;
  for (int i = 0; i < 10; ++i) {
    x.push_back({rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    y.push_back(static_cast<std::size_t>(i % 3));
  }
  LogRegModel model = zero_logreg(3, 4, 0.1);
  for (double& w : model.weights.values()) w = rng.normal();
  for (double& b : model.bias.values()) b = rng.normal();
  const auto g = logreg_loss_and_grad(model, x, y);
  std::vector<numkit::CheckedTensor> tensors{{"weights", &model.weights, &g.weights, {}},
                                             {"bias", &model.bias, &g.bias, {}}};
  const auto r = numkit::finite_diff_check([&] { return logreg_loss_and_grad(model, x, y).loss; }, tensors);
  return r.pass ? r.max_rel_error : INFINITY;
}

double seq_check(bool bidirectional, neural::Head head) {
  using namespace neural;
  ArchSpec arch;
  arch.maxlen = 5;
  arch.embed_dim = 3;
  arch.lstm_units = 3;
  arch.bidirectional = bidirectional;
  arch.dense_units = 3;
  arch.head = head;
  arch.n_classes = 3;
  const features::Vocabulary vocab({"a", "b", "c", "d", "e"}, {1, 1, 1, 1, 1}, 1);
  auto model = init_model(arch, 11, vocab);
  numkit::Rng rng(12);
  for (numkit::Matrix* t : model.params.tensors()) {
    for (double& v : t->values()) v += 0.3 * rng.normal();
  }
  for (double& v : model.params.embedding.row(0)) v = 0.0;
  for (double& v : model.params.dense_b.values()) v = 0.5 + std::abs(v);

  std::vector<Example> batch{{{2, 3, 5, 6, 0}, {0, {}}}, {{4, 1, 0, 0, 0}, {1, {}}}, {{5, 5, 2, 3, 6}, {2, {}}}};
  if (head == Head::sigmoid) {
    batch[0].target.bits = {1, 0, 0};
    batch[1].target.bits = {0, 1, 1};
    batch[2].target.bits = {1, 1, 0};
  }
  const auto lg = loss_and_grads(model, batch);
  const auto names = SeqParams::names(bidirectional);
  auto values = model.params.tensors();
  auto grads = lg.grads.tensors();
  std::set<std::uint32_t> touched;
  for (const auto& ex : batch) {
    for (std::size_t t = 0; t < effective_length(ex.sequence); ++t) touched.insert(ex.sequence[t]);
  }
  touched.erase(features::Vocabulary::kPad);
  std::vector<numkit::CheckedTensor> tensors;
  for (std::size_t i = 0; i < values.size(); ++i) {
    numkit::CheckedTensor ct{names[i], values[i], grads[i], {}};
    if (names[i] == "embedding") {
      for (auto row : touched) {
        for (std::size_t c = 0; c < arch.embed_dim; ++c) ct.coords.push_back(row * arch.embed_dim + c);
      }
    }
    tensors.push_back(std::move(ct));
  }
  const auto r = numkit::finite_diff_check([&] { return batch_loss(model, batch); }, tensors);
  for (const auto& t : r.tensors) {
    if (t.coords_checked == 0) return INFINITY;
  }
  return r.pass ? r.max_rel_error : INFINITY;
}

Outcome gradient_checks() {
  Outcome out;
  const double lr = logreg_check();
  double lstm = 0.0, bilstm = 0.0;
  for (auto head : {neural::Head::softmax, neural::Head::sigmoid}) {
    lstm = std::max(lstm, seq_check(false, head));
    bilstm = std::max(bilstm, seq_check(true, head));
  }
  out.require(lr < 1e-4, fmt::format("LR max relative error {:.3g}", lr));
  out.require(lstm < 1e-4, fmt::format("LSTM max relative error {:.3g}", lstm));
  out.require(bilstm < 1e-4, fmt::format("BiLSTM max relative error {:.3g}", bilstm));
  if (out.pass) out.detail = fmt::format("max relative error LR {:.2g}, LSTM {:.2g}, BiLSTM {:.2g}", lr, lstm, bilstm);
  return out;
}

// --- end to end --------------------------------------------------------------

struct Experiment {
  corpus::CaseSet cases;
  pipeline::EmbeddingRef embeddings;
  experiment::ExperimentConfig config;
};

Experiment& shared_experiment(const testkit::fs::path& dir) {
  static Experiment e = [&] {
    Experiment x;
    x.cases = corpus::generate_synthetic(corpus::default_synthetic_spec(corpus::CaseType::custody, 25), 42);
    x.embeddings = testkit::write_embeddings(dir / "vectors.txt", 32);
    x.config.fit = pipeline::load_settings(QADAA_DATA "/acceptance_settings.json");
    x.config.fit.seed = 42;
    x.config.test_fraction = 0.25;
    return x;
  }();
  return e;
}

Outcome end_to_end(const testkit::fs::path& dir) {
  Outcome out;
  auto& e = shared_experiment(dir);
  out.require(e.cases.size() == 100, "corpus size");
  out.require(e.config.fit.neural_train.epochs <= 30, "more than 30 epochs");
  const auto report = experiment::run_experiment(e.config, e.cases, e.embeddings);
  out.require(report.n_train == 75 && report.n_test == 25, "split is not 75/25");
  const std::vector<std::string> names{"SVM-TFIDF",    "SVM-Word2Vec",  "LR-TFIDF",     "LR-Word2Vec",
                                       "LSTM-TFIDF",   "LSTM-Word2Vec", "BILSTM-TFIDF", "BILSTM-Word2Vec"};
  out.require(report.rows.size() == names.size(), "row count");
  std::string accs;
  for (std::size_t i = 0; i < report.rows.size() && i < names.size(); ++i) {
    const auto& r = report.rows[i];
    out.require(r.name == names[i], "row order");
    for (double v : {r.metrics.precision, r.metrics.recall, r.metrics.f1, r.metrics.accuracy}) {
      out.require(v >= 0.0 && v <= 100.0, "metric outside [0, 100]");
    }
    const bool neural = r.spec.model == pipeline::ModelKind::lstm || r.spec.model == pipeline::ModelKind::bilstm;
    if (neural) {
      out.require(r.metrics.accuracy >= 90.0, fmt::format("{} accuracy {:.2f} < 90", r.name, r.metrics.accuracy));
      out.require(r.history.size() <= 30, r.name + " trained more than 30 epochs");
    }
    if (r.name == "SVM-TFIDF" || r.name == "LR-TFIDF") {
      out.require(r.metrics.accuracy >= 95.0, fmt::format("{} accuracy {:.2f} < 95", r.name, r.metrics.accuracy));
    }
    accs += fmt::format("{}{} {:.0f}", i ? ", " : "", r.name, r.metrics.accuracy);
  }
  const auto table = experiment::render_table(report);
  for (const char* col : {"P(%)", "R(%)", "F1(%)", "Acc(%)"}) {
    out.require(table.find(col) != std::string::npos, std::string("table lacks column ") + col);
  }
  if (out.pass) out.detail = "accuracy: " + accs;
  return out;
}

// --- metrics -------------------------------------------------------------------

Outcome metrics_oracle() {
  Outcome out;
  eval::ConfusionMatrix hand(2);
  hand.add(0, 0);
  hand.add(0, 1);
  hand.add(1, 1);
  hand.add(1, 1);
  const auto r = eval::macro_metrics(hand);
  out.require(r.accuracy == 75.0, fmt::format("hand accuracy {}", r.accuracy));
  out.require(std::round(r.f1 * 100.0) / 100.0 == 73.33, fmt::format("hand macro F1 {}", r.f1));

  numkit::Rng rng(31);
  double worst = 0.0;
  for (int m = 0; m < 100; ++m) {
    const std::size_t k = 2 + rng.index(9);
    std::vector<std::vector<long>> counts(k, std::vector<long>(k, 0));
    eval::ConfusionMatrix cm(k);
    for (std::size_t t = 0; t < k; ++t) {
      for (std::size_t p = 0; p < k; ++p) {
        counts[t][p] = rng.index(4) == 0 ? 0 : static_cast<long>(rng.index(15));
        for (long i = 0; i < counts[t][p]; ++i) cm.add(t, p);
      }
    }
    if (cm.total() == 0) {
      counts[0][0] = 1;
      cm.add(0, 0);
    }
    const auto got = eval::macro_metrics(cm);
    const auto want = oracle::per_class(counts);
    double mp = 0, mr = 0, mf = 0;
    for (std::size_t c = 0; c < k; ++c) {
      worst = std::max({worst, std::abs(got.per_class[c].precision - want[c].precision),
                        std::abs(got.per_class[c].recall - want[c].recall),
                        std::abs(got.per_class[c].f1 - want[c].f1)});
      mp += want[c].precision;
      mr += want[c].recall;
      mf += want[c].f1;
    }
    worst = std::max({worst, std::abs(got.precision / 100 - mp / k), std::abs(got.recall / 100 - mr / k),
                      std::abs(got.f1 / 100 - mf / k)});
  }
  out.require(worst <= 1e-9, fmt::format("oracle deviation {:.3g}", worst));
  if (out.pass) out.detail = fmt::format("hand example 75 / 73.33; 100 matrices, max deviation {:.2g}", worst);
  return out;
}

// --- determinism and persistence -------------------------------------------

Outcome determinism(const testkit::fs::path& dir) {
  Outcome out;
  auto& e = shared_experiment(dir);
  const auto a = experiment::report_json(experiment::run_experiment(e.config, e.cases, e.embeddings)).dump();
  const auto b = experiment::report_json(experiment::run_experiment(e.config, e.cases, e.embeddings)).dump();
  out.require(a == b, "experiment reports differ between identical runs");

  const auto fixtures = corpus::generate_synthetic(corpus::default_synthetic_spec(corpus::CaseType::custody, 5), 7);
  std::size_t models = 0;
  for (const auto& row : experiment::all_rows()) {
    const auto p = pipeline::fit(row.model, row.representation, corpus::Task::judgment, e.cases, e.config.fit,
                                 e.embeddings);
    const auto path = dir / "model.qadaa";
    app::save_artifact(p, path);
    const auto back = app::load_artifact(path);
    for (const auto& c : fixtures.cases) {
      const auto in = pipeline::case_input(c);
      const auto x = p.predict(in);
      const auto y = back.predict(in);
      const bool same = x.label == y.label && x.probabilities.size() == y.probabilities.size() &&
                        std::memcmp(x.probabilities.data(), y.probabilities.data(),
                                    x.probabilities.size() * sizeof(double)) == 0;
      out.require(same, pipeline::row_name(row.model, row.representation) + " prediction changed after reload");
    }
    ++models;
  }
  if (out.pass) {
    out.detail = fmt::format("report bytes equal ({} bytes); {} model kinds x {} fixtures bit-identical", a.size(),
                             models, fixtures.size());
  }
  return out;
}

// --- preprocessing -----------------------------------------------------------

Outcome preprocessing() {
  Outcome out;
  const auto config = artext::default_config();
  std::ifstream in(QADAA_FIXTURES "/preprocess_golden.tsv");
  std::size_t goldens = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    const auto want = artext::tokenize(line.substr(tab + 1));
    out.require(artext::preprocess(line.substr(0, tab), config) == want, "golden mismatch: " + line.substr(0, tab));
    ++goldens;
  }
  out.require(goldens >= 20, "golden file missing or short");

  numkit::Rng rng(1000);
  for (int i = 0; i < 1000; ++i) {
    const auto text = testkit::random_text(rng);
    const auto once = artext::preprocess(text, config);
    out.require(artext::preprocess(artext::join(once), config) == once, "preprocess not idempotent on: " + text);
    const auto stripped = artext::strip_diacritics(text, config);
    out.require(artext::strip_diacritics(stripped, config) == stripped, "strip not idempotent on: " + text);
    for (const auto& t : once) out.require(!t.empty(), "empty token");
  }
  if (out.pass) out.detail = fmt::format("{} goldens; 1000 random strings idempotent", goldens);
  return out;
}

}  // namespace

int main() {
  testkit::TempDir dir("acceptance");
  struct Criterion {
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"tfidf-oracle", 5.0, tfidf_oracle},
      {"smo-correctness", 30.0, smo_oracle},
      {"gradient-checks", 60.0, gradient_checks},
      {"end-to-end-synthetic", 300.0, [&] { return end_to_end(dir.path); }},
      {"metrics-oracle", 0.0, metrics_oracle},
      {"determinism-persistence", 0.0, [&] { return determinism(dir.path); }},
      {"preprocessing-goldens", 0.0, preprocessing},
  };
  bool all = true;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("exception: ") + ex.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0.0 && secs >= c.limit_seconds) {
      o.pass = false;
      o.detail = fmt::format("runtime {:.1f} s over the {:.0f} s limit; {}", secs, c.limit_seconds, o.detail);
    }
    all = all && o.pass;
    std::cout << fmt::format("{}  {:<26} {:>7.2f} s  {}\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail)
              << std::flush;
  }
  return all ? 0 : 1;
}
