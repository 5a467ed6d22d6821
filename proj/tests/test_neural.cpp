#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "qadaa/error.hpp"
#include "qadaa/neural.hpp"

using namespace qadaa;
using namespace qadaa::neural;

namespace {

features::Vocabulary toy_vocab(std::size_t n = 4) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < n; ++i) tokens.push_back(std::string(1, static_cast<char>('a' + i)));
  return features::Vocabulary(tokens, std::vector<std::size_t>(n, 1), 1);
}

ArchSpec toy_arch(bool bidirectional, Head head) {
  ArchSpec a;
  a.maxlen = 4;
  a.embed_dim = 3;
  a.lstm_units = 2;
  a.bidirectional = bidirectional;
  a.dense_units = 2;
  a.head = head;
  a.n_classes = 2;
  return a;
}

// Moves the dense pre-activations away from the relu kink so finite
// differences stay on one side of it.
void jitter(SeqClassifier& m, std::uint64_t seed) {
  numkit::Rng rng(seed);
  for (Matrix* t : m.params.tensors()) {
    for (double& v : t->values()) v += 0.3 * rng.normal();
  }
  for (double& v : m.params.embedding.row(0)) v = 0.0;
  for (double& v : m.params.dense_b.values()) v = 0.5 + std::abs(v);
}

std::vector<Example> toy_batch(Head head) {
  std::vector<Example> batch{{{2, 3, 5, 0}, {0, {}}}, {{4, 1, 0, 0}, {1, {}}}, {{5, 5, 2, 3}, {1, {}}}};
  if (head == Head::sigmoid) {
    batch[0].target.bits = {1, 0};
    batch[1].target.bits = {0, 1};
    batch[2].target.bits = {1, 1};
  }
  return batch;
}

numkit::GradCheckReport check_model(SeqClassifier& model, const std::vector<Example>& batch) {
  const LossAndGrads lg = loss_and_grads(model, batch);
  const auto names = SeqParams::names(model.arch.bidirectional);
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
        for (std::size_t c = 0; c < model.arch.embed_dim; ++c) {
          ct.coords.push_back(row * model.arch.embed_dim + c);
        }
      }
    }
    tensors.push_back(ct);
  }
  return numkit::finite_diff_check([&] { return batch_loss(model, batch); }, tensors);
}

}  // namespace

TEST_CASE("gradient check covers every tensor") {
  for (bool bidirectional : {false, true}) {
    for (Head head : {Head::softmax, Head::sigmoid}) {
      auto model = init_model(toy_arch(bidirectional, head), 42, toy_vocab());
      jitter(model, 5);
      const auto report = check_model(model, toy_batch(head));
      CAPTURE(bidirectional);
      CAPTURE(static_cast<int>(head));
      CHECK(report.pass);
      CHECK(report.max_rel_error < 1e-4);
      CHECK(report.tensors.size() == SeqParams::names(bidirectional).size());
      for (const auto& t : report.tensors) CHECK(t.coords_checked > 0);
    }
  }
}

TEST_CASE("pad row receives no gradient") {
  auto model = init_model(toy_arch(true, Head::softmax), 1, toy_vocab());
  const auto lg = loss_and_grads(model, toy_batch(Head::softmax));
  for (double v : lg.grads.embedding.row(0)) CHECK(v == 0.0);
}

TEST_CASE("zero parameters give uniform outputs") {
  auto model = init_model(toy_arch(false, Head::softmax), 3, toy_vocab());
  for (Matrix* t : model.params.tensors()) t->fill(0.0);
  const auto p = forward(model, {2, 3, 0, 0});
  for (double v : p) CHECK(v == 0.5);
  model.arch.head = Head::sigmoid;
  for (double v : forward(model, {2, 3, 0, 0})) CHECK(v == 0.5);
}

TEST_CASE("all-pad input is finite") {
  auto model = init_model(toy_arch(true, Head::softmax), 3, toy_vocab());
  const auto p = forward(model, {0, 0, 0, 0});
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  for (double v : p) CHECK(std::isfinite(v));
}

TEST_CASE("trailing padding does not change the output") {
  ArchSpec arch = toy_arch(true, Head::softmax);
  arch.maxlen = 8;
  auto model = init_model(arch, 9, toy_vocab());
  jitter(model, 2);
  auto short_model = model;
  short_model.arch.maxlen = 3;
  CHECK(forward(model, {2, 4, 3, 0, 0, 0, 0, 0}) == forward(short_model, {2, 4, 3}));
}

TEST_CASE("forward validates its input") {
  auto model = init_model(toy_arch(false, Head::softmax), 3, toy_vocab());
  CHECK_THROWS_AS(forward(model, {1, 2, 3}), Error);
  CHECK_THROWS_AS(forward(model, {1, 2, 3, 6}), Error);
  CHECK_THROWS_AS(loss_and_grads(model, {}), Error);
  std::vector<Example> bad{{{2, 0, 0, 0}, {7, {}}}};
  CHECK_THROWS_AS(loss_and_grads(model, bad), Error);
}

TEST_CASE("duplicated example averages to the single-example gradient") {
  auto model = init_model(toy_arch(false, Head::softmax), 4, toy_vocab());
  const Example ex{{2, 3, 4, 0}, {1, {}}};
  const std::vector<Example> one{ex};
  const std::vector<Example> two{ex, ex};
  const auto a = loss_and_grads(model, one);
  const auto b = loss_and_grads(model, two);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
  auto ga = a.grads.tensors();
  auto gb = b.grads.tensors();
  for (std::size_t t = 0; t < ga.size(); ++t) {
    for (std::size_t i = 0; i < ga[t]->size(); ++i) {
      CHECK(ga[t]->values()[i] == doctest::Approx(gb[t]->values()[i]).epsilon(1e-12));
    }
  }
  const auto p = forward(model, ex.sequence);
  CHECK(a.loss == doctest::Approx(-std::log(p[1])).epsilon(1e-12));
}

TEST_CASE("init is seeded and copies store rows") {
  const auto vocab = toy_vocab();
  features::EmbeddingStore store(3);
  store.set("b", {0.1, 0.2, 0.3});
  const auto arch = toy_arch(false, Head::softmax);
  const auto a = init_model(arch, 8, vocab, &store);
  CHECK(a == init_model(arch, 8, vocab, &store));
  CHECK(!(a == init_model(arch, 9, vocab, &store)));
  const auto row = a.params.embedding.row(*vocab.index("b") + features::Vocabulary::kReserved);
  CHECK(std::vector<double>(row.begin(), row.end()) == std::vector<double>{0.1, 0.2, 0.3});
  for (double v : a.params.embedding.row(0)) CHECK(v == 0.0);
  features::EmbeddingStore wide(300);
  CHECK_THROWS_AS(init_model(arch, 8, vocab, &wide), Error);
}

TEST_CASE("bilstm default has 64 units per direction") {
  const auto a = ArchSpec::bilstm();
  CHECK(a.lstm_units == 64);
  CHECK(a.readout_dim() == 128);
  CHECK(ArchSpec::lstm().lstm_units == 300);
}

namespace {

std::vector<Example> separable_set(std::size_t n, std::size_t maxlen, std::uint64_t seed) {
  // tokens 2..3 signal class 0, 4..5 class 1, 6..9 are filler
  numkit::Rng rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % 2;
    IndexSequence seq(maxlen, 0);
    const std::size_t len = 3 + rng.index(maxlen - 3);
    for (std::size_t t = 0; t < len; ++t) seq[t] = static_cast<std::uint32_t>(6 + rng.index(4));
    seq[rng.index(len)] = static_cast<std::uint32_t>(2 + 2 * label + rng.index(2));
    out.push_back({seq, {label, {}}});
  }
  return out;
}

}  // namespace

TEST_CASE("training fits a separable set and is deterministic") {
  ArchSpec arch;
  arch.maxlen = 8;
  arch.embed_dim = 8;
  arch.lstm_units = 8;
  arch.dense_units = 8;
  arch.n_classes = 2;
  const auto data = separable_set(40, arch.maxlen, 1);
  const auto model = init_model(arch, 42, toy_vocab(8));
  TrainConfig cfg;
  cfg.optimizer.lr = 1e-2;
  const auto r = train(model, data, {}, cfg);
  CHECK(r.history.size() == 30);
  CHECK(accuracy(r.model, data) >= 0.95);
  for (std::size_t e = 1; e < 5; ++e) CHECK(r.history[e].train_loss < r.history[e - 1].train_loss);
  const auto again = train(model, data, {}, cfg);
  CHECK(again.model == r.model);
  for (std::size_t e = 0; e < r.history.size(); ++e) {
    CHECK(again.history[e].train_loss == r.history[e].train_loss);
  }

  cfg.epochs = 0;
  const auto none = train(model, data, {}, cfg);
  CHECK(none.history.empty());
  CHECK(none.model == model);
  CHECK_THROWS_AS(train(model, {}, {}, cfg), Error);
}
