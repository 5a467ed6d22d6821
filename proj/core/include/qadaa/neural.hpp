#pragma once

// Recurrent sequence classifiers with hand-derived backpropagation:
//   embedding -> LSTM (or BiLSTM) -> dense(relu) -> head(softmax | sigmoid)
//
// LSTM gate layout: rows [0,H) input gate i, [H,2H) forget gate f,
// [2H,3H) candidate g, [3H,4H) output gate o.
//   z = Wx e_t + Wh h_{t-1} + b
//   c_t = f * c_{t-1} + i * g,  h_t = o * tanh(c_t)
// Sequences are post-padded; only positions before the last non-PAD token
// are run. The forward direction reads out its state after the last real
// token, the backward direction after reaching position 0.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qadaa/features.hpp"
#include "qadaa/numkit.hpp"
#include "qadaa/optim.hpp"

namespace qadaa::neural {

using features::IndexSequence;
using numkit::Matrix;
using numkit::Vector;

enum class Head { softmax, sigmoid };

struct ArchSpec {
  std::size_t maxlen = 1200;
  std::size_t embed_dim = 300;
  std::size_t lstm_units = 300;
  bool bidirectional = false;
  std::size_t dense_units = 300;
  Head head = Head::softmax;
  std::size_t n_classes = 4;

  void validate() const;
  std::size_t readout_dim() const noexcept { return bidirectional ? 2 * lstm_units : lstm_units; }

  static ArchSpec lstm(Head head = Head::softmax, std::size_t n_classes = 4);
  /// 64 units per direction.
  static ArchSpec bilstm(Head head = Head::softmax, std::size_t n_classes = 4);
  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

struct LstmParams {
  Matrix wx;  // 4H x E
  Matrix wh;  // 4H x H
  Matrix b;   // 4H x 1
  friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

/// Every trainable tensor. Also used as the gradient container.
struct SeqParams {
  Matrix embedding;  // V x E, row 0 = PAD
  LstmParams fwd;
  LstmParams bwd;    // empty unless bidirectional
  Matrix dense_w;    // D x R
  Matrix dense_b;    // D x 1
  Matrix head_w;     // K x D
  Matrix head_b;     // K x 1

  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  static std::vector<std::string> names(bool bidirectional);
  /// Same shapes, all zeros.
  SeqParams zeros_like() const;
  friend bool operator==(const SeqParams&, const SeqParams&) = default;
};

struct SeqClassifier {
  ArchSpec arch;
  SeqParams params;

  std::size_t vocab_size() const noexcept { return params.embedding.rows(); }
  friend bool operator==(const SeqClassifier&, const SeqClassifier&) = default;
};

/// Glorot-uniform weights, zero biases except forget-gate bias 1, embedding
/// rows uniform in [-0.05, 0.05] or copied from `embeddings` for tokens it
/// holds; PAD row zero. Throws if the store's dim differs from embed_dim.
SeqClassifier init_model(const ArchSpec& arch, std::uint64_t seed, const features::Vocabulary& vocab,
                         const features::EmbeddingStore* embeddings = nullptr);

struct Target {
  std::size_t label = 0;
  /// Sigmoid head only; empty means one-hot of `label`.
  std::vector<std::uint8_t> bits;
};

struct Example {
  IndexSequence sequence;
  Target target;
};

/// Per-class outputs: a distribution (softmax head) or independent
/// probabilities (sigmoid head). Throws on length or index errors.
Vector forward(const SeqClassifier& model, const IndexSequence& seq);

/// Number of positions actually run (index of last non-PAD token + 1).
std::size_t effective_length(const IndexSequence& seq) noexcept;

struct LossAndGrads {
  double loss = 0.0;
  SeqParams grads;
  double grad_norm = 0.0;  // before clipping
};

/// Batch-averaged loss (cross-entropy for softmax, mean per-class binary
/// cross-entropy for sigmoid) with BPTT gradients. Gradients are clipped
/// to global norm `clip_norm` when it is positive.
LossAndGrads loss_and_grads(const SeqClassifier& model, std::span<const Example> batch,
                            double clip_norm = 0.0);

/// Loss only; used by the finite-difference oracle and for evaluation.
double batch_loss(const SeqClassifier& model, std::span<const Example> batch);

struct TrainConfig {
  numkit::OptimizerHyper optimizer{};
  std::size_t batch_size = 8;
  std::size_t epochs = 30;
  std::uint64_t seed = 42;
  double clip_norm = 5.0;
  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double valid_loss = 0.0;
  double valid_accuracy = 0.0;
};

struct TrainResult {
  SeqClassifier model;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;  // 1-based; 0 when no epoch ran
};

/// Seeded shuffling each epoch. Returns the parameters from the epoch with
/// the lowest validation loss (training loss when `valid` is empty).
TrainResult train(SeqClassifier model, std::span<const Example> train_set,
                  std::span<const Example> valid_set, const TrainConfig& config);

double accuracy(const SeqClassifier& model, std::span<const Example> examples);

}  // namespace qadaa::neural
