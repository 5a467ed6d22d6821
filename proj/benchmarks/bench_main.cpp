#include <benchmark/benchmark.h>

#include "qadaa/artext.hpp"
#include "qadaa/classical.hpp"
#include "qadaa/corpus.hpp"
#include "qadaa/features.hpp"
#include "qadaa/neural.hpp"

using namespace qadaa;

namespace {

const corpus::CaseSet& cases() {
  static const auto set =
      corpus::generate_synthetic(corpus::default_synthetic_spec(corpus::CaseType::custody, 25), 42);
  return set;
}

std::vector<artext::TokenList> token_docs() {
  const auto config = artext::default_config();
  std::vector<artext::TokenList> docs;
  for (const auto& c : cases().cases) docs.push_back(artext::preprocess(c.pleading, config));
  return docs;
}

void BM_Preprocess(benchmark::State& state) {
  const auto config = artext::default_config();
  std::size_t bytes = 0;
  for (auto _ : state) {
    for (const auto& c : cases().cases) {
      benchmark::DoNotOptimize(artext::preprocess(c.pleading, config));
      bytes += c.pleading.size();
    }
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_Preprocess);

void BM_TfidfFitTransform(benchmark::State& state) {
  const auto docs = token_docs();
  for (auto _ : state) {
    const auto tf = features::tfidf_fit(docs);
    for (const auto& d : docs) benchmark::DoNotOptimize(tf.transform(d));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(docs.size()));
}
BENCHMARK(BM_TfidfFitTransform);

void BM_SmoRbf(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  numkit::Rng rng(1);
  classical::Rows x;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.normal(), b = rng.normal();
    x.push_back({a, b, rng.normal()});
    y.push_back(a + 0.5 * b + 0.5 * rng.normal() >= 0 ? 1 : -1);
  }
  const classical::KernelSpec spec{classical::KernelKind::rbf, 0.5, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(classical::smo_train_binary(x, y, spec));
}
BENCHMARK(BM_SmoRbf)->Arg(50)->Arg(200);

void BM_LstmForward(benchmark::State& state) {
  const auto docs = token_docs();
  const auto vocab = features::fit_vocab(docs);
  auto arch = state.range(0) ? neural::ArchSpec::bilstm() : neural::ArchSpec::lstm();
  arch.maxlen = 64;
  arch.embed_dim = 32;
  arch.lstm_units = 32;
  arch.dense_units = 32;
  const auto model = neural::init_model(arch, 3, vocab);
  std::vector<features::IndexSequence> seqs;
  for (const auto& d : docs) seqs.push_back(features::encode_sequence(d, vocab, arch.maxlen));
  for (auto _ : state) {
    for (const auto& s : seqs) benchmark::DoNotOptimize(neural::forward(model, s));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(seqs.size()));
}
BENCHMARK(BM_LstmForward)->Arg(0)->Arg(1);

}  // namespace
BENCHMARK_MAIN();
