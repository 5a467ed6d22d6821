#include "qadaa/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qadaa/error.hpp"

namespace qadaa::neural {

using numkit::sigmoid;

void ArchSpec::validate() const {
  if (maxlen == 0 || embed_dim == 0 || lstm_units == 0 || dense_units == 0) {
    usage_error("architecture dimensions must be positive");
  }
  if (n_classes < 2) usage_error("architecture needs at least two output classes");
}

ArchSpec ArchSpec::lstm(Head head, std::size_t n_classes) {
  ArchSpec a;
  a.head = head;
  a.n_classes = n_classes;
  return a;
}

ArchSpec ArchSpec::bilstm(Head head, std::size_t n_classes) {
  ArchSpec a = lstm(head, n_classes);
  a.bidirectional = true;
  a.lstm_units = 64;
  return a;
}

std::vector<Matrix*> SeqParams::tensors() {
  std::vector<Matrix*> out{&embedding, &fwd.wx, &fwd.wh, &fwd.b};
  if (!bwd.wx.empty()) {
    out.insert(out.end(), {&bwd.wx, &bwd.wh, &bwd.b});
  }
  out.insert(out.end(), {&dense_w, &dense_b, &head_w, &head_b});
  return out;
}

std::vector<const Matrix*> SeqParams::tensors() const {
  auto mut = const_cast<SeqParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

std::vector<std::string> SeqParams::names(bool bidirectional) {
  std::vector<std::string> out{"embedding", "fwd.wx", "fwd.wh", "fwd.b"};
  if (bidirectional) out.insert(out.end(), {"bwd.wx", "bwd.wh", "bwd.b"});
  out.insert(out.end(), {"dense.w", "dense.b", "head.w", "head.b"});
  return out;
}

SeqParams SeqParams::zeros_like() const {
  auto z = [](const Matrix& m) { return Matrix(m.rows(), m.cols()); };
  return SeqParams{z(embedding),
                   {z(fwd.wx), z(fwd.wh), z(fwd.b)},
                   {z(bwd.wx), z(bwd.wh), z(bwd.b)},
                   z(dense_w), z(dense_b), z(head_w), z(head_b)};
}

namespace {

void glorot(Matrix& m, numkit::Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
}

LstmParams init_lstm(numkit::Rng& rng, std::size_t in, std::size_t units) {
  LstmParams p{Matrix(4 * units, in), Matrix(4 * units, units), Matrix(4 * units, 1)};
  glorot(p.wx, rng, in, 4 * units);
  glorot(p.wh, rng, units, 4 * units);
  for (std::size_t u = 0; u < units; ++u) p.b(units + u, 0) = 1.0;
  return p;
}

}  // namespace

SeqClassifier init_model(const ArchSpec& arch, std::uint64_t seed, const features::Vocabulary& vocab,
                         const features::EmbeddingStore* embeddings) {
  arch.validate();
  if (embeddings && embeddings->dim() != arch.embed_dim) {
    data_error("embedding store dimension " + std::to_string(embeddings->dim()) +
               " does not match architecture embed_dim " + std::to_string(arch.embed_dim));
  }
  numkit::Rng rng(seed);
  SeqClassifier model;
  model.arch = arch;
  SeqParams& p = model.params;
  const std::size_t v = vocab.sequence_size();
  p.embedding = Matrix(v, arch.embed_dim);
  for (std::size_t r = 1; r < v; ++r) {
    for (double& x : p.embedding.row(r)) x = rng.uniform(-0.05, 0.05);
  }
  if (embeddings) {
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      if (const auto* vec = embeddings->find(vocab.token(i))) {
        auto row = p.embedding.row(i + features::Vocabulary::kReserved);
        std::copy(vec->begin(), vec->end(), row.begin());
      }
    }
  }
  p.fwd = init_lstm(rng, arch.embed_dim, arch.lstm_units);
  if (arch.bidirectional) p.bwd = init_lstm(rng, arch.embed_dim, arch.lstm_units);
  p.dense_w = Matrix(arch.dense_units, arch.readout_dim());
  glorot(p.dense_w, rng, arch.readout_dim(), arch.dense_units);
  p.dense_b = Matrix(arch.dense_units, 1);
  p.head_w = Matrix(arch.n_classes, arch.dense_units);
  glorot(p.head_w, rng, arch.dense_units, arch.n_classes);
  p.head_b = Matrix(arch.n_classes, 1);
  return model;
}

std::size_t effective_length(const IndexSequence& seq) noexcept {
  std::size_t len = seq.size();
  while (len > 0 && seq[len - 1] == features::Vocabulary::kPad) --len;
  return len;
}

namespace {

// Activations of one direction, one entry per processed step.
struct DirectionCache {
  std::vector<std::size_t> positions;
  std::vector<Vector> gates;  // post-activation i, f, g, o (4H)
  std::vector<Vector> cell;   // c_t
  std::vector<Vector> tanh_cell;
  std::vector<Vector> hidden;  // h_t
};

struct Cache {
  DirectionCache fwd;
  DirectionCache bwd;
  Vector readout;
  Vector dense_pre;
  Vector dense_out;
  Vector output;
};

void validate_sequence(const SeqClassifier& model, const IndexSequence& seq) {
  if (seq.size() != model.arch.maxlen) {
    data_error("sequence length " + std::to_string(seq.size()) + " does not match maxlen " +
               std::to_string(model.arch.maxlen));
  }
  const std::size_t v = model.vocab_size();
  for (auto id : seq) {
    if (id >= v) data_error("token id " + std::to_string(id) + " out of vocabulary range");
  }
}

Vector run_direction(const LstmParams& p, const Matrix& embedding, const IndexSequence& seq,
                     std::vector<std::size_t> positions, DirectionCache& cache) {
  const std::size_t h = p.wh.cols();
  Vector h_prev(h, 0.0);
  Vector c_prev(h, 0.0);
  cache.positions = std::move(positions);
  const std::size_t steps = cache.positions.size();
  cache.gates.resize(steps);
  cache.cell.resize(steps);
  cache.tanh_cell.resize(steps);
  cache.hidden.resize(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto e = embedding.row(seq[cache.positions[s]]);
    Vector z(p.b.values().begin(), p.b.values().end());
    numkit::gemv_acc(p.wx, e, z);
    numkit::gemv_acc(p.wh, h_prev, z);
    Vector& gate = cache.gates[s];
    gate.resize(4 * h);
    Vector& c = cache.cell[s];
    c.resize(h);
    Vector& tc = cache.tanh_cell[s];
    tc.resize(h);
    Vector& hs = cache.hidden[s];
    hs.resize(h);
    for (std::size_t u = 0; u < h; ++u) {
      const double i = sigmoid(z[u]);
      const double f = sigmoid(z[h + u]);
      const double g = std::tanh(z[2 * h + u]);
      const double o = sigmoid(z[3 * h + u]);
      gate[u] = i;
      gate[h + u] = f;
      gate[2 * h + u] = g;
      gate[3 * h + u] = o;
      c[u] = f * c_prev[u] + i * g;
      tc[u] = std::tanh(c[u]);
      hs[u] = o * tc[u];
    }
    h_prev = hs;
    c_prev = c;
  }
  return h_prev;
}

void backward_direction(const LstmParams& p, LstmParams& g, const IndexSequence& seq,
                        const Matrix& embedding, Matrix& d_embedding, const DirectionCache& cache,
                        Vector dh) {
  const std::size_t h = p.wh.cols();
  Vector dc(h, 0.0);
  Vector dz(4 * h);
  const Vector zeros(h, 0.0);
  for (std::size_t s = cache.positions.size(); s-- > 0;) {
    const Vector& gate = cache.gates[s];
    const Vector& c_prev = s > 0 ? cache.cell[s - 1] : zeros;
    const Vector& h_prev = s > 0 ? cache.hidden[s - 1] : zeros;
    const Vector& tc = cache.tanh_cell[s];
    for (std::size_t u = 0; u < h; ++u) {
      const double i = gate[u];
      const double f = gate[h + u];
      const double gg = gate[2 * h + u];
      const double o = gate[3 * h + u];
      const double d_o = dh[u] * tc[u];
      dc[u] += dh[u] * o * (1.0 - tc[u] * tc[u]);
      dz[u] = dc[u] * gg * i * (1.0 - i);
      dz[h + u] = dc[u] * c_prev[u] * f * (1.0 - f);
      dz[2 * h + u] = dc[u] * i * (1.0 - gg * gg);
      dz[3 * h + u] = d_o * o * (1.0 - o);
      dc[u] *= f;
    }
    const std::uint32_t id = seq[cache.positions[s]];
    numkit::outer_acc(g.wx, dz, embedding.row(id));
    numkit::outer_acc(g.wh, dz, h_prev);
    auto gb = g.b.values();
    for (std::size_t k = 0; k < dz.size(); ++k) gb[k] += dz[k];
    if (id != features::Vocabulary::kPad) numkit::gemv_t_acc(p.wx, dz, d_embedding.row(id));
    std::fill(dh.begin(), dh.end(), 0.0);
    numkit::gemv_t_acc(p.wh, dz, dh);
  }
}

Vector forward_impl(const SeqClassifier& model, const IndexSequence& seq, Cache& cache) {
  validate_sequence(model, seq);
  const SeqParams& p = model.params;
  const std::size_t len = effective_length(seq);
  std::vector<std::size_t> pos(len);
  std::iota(pos.begin(), pos.end(), std::size_t{0});

  cache.readout = run_direction(p.fwd, p.embedding, seq, pos, cache.fwd);
  if (model.arch.bidirectional) {
    std::reverse(pos.begin(), pos.end());
    Vector back = run_direction(p.bwd, p.embedding, seq, pos, cache.bwd);
    cache.readout.insert(cache.readout.end(), back.begin(), back.end());
  }

  cache.dense_pre.assign(p.dense_b.values().begin(), p.dense_b.values().end());
  numkit::gemv_acc(p.dense_w, cache.readout, cache.dense_pre);
  cache.dense_out.resize(cache.dense_pre.size());
  for (std::size_t k = 0; k < cache.dense_pre.size(); ++k) {
    cache.dense_out[k] = std::max(0.0, cache.dense_pre[k]);
  }
  Vector logits(p.head_b.values().begin(), p.head_b.values().end());
  numkit::gemv_acc(p.head_w, cache.dense_out, logits);
  if (model.arch.head == Head::softmax) {
    cache.output = numkit::softmax(logits);
  } else {
    cache.output.resize(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) cache.output[k] = sigmoid(logits[k]);
  }
  return logits;
}

std::vector<std::uint8_t> target_bits(const Target& t, std::size_t k) {
  if (!t.bits.empty()) {
    if (t.bits.size() != k) data_error("sigmoid target has wrong length");
    for (auto b : t.bits) {
      if (b > 1) data_error("sigmoid target entries must be 0 or 1");
    }
    return t.bits;
  }
  if (t.label >= k) data_error("target class index out of range");
  std::vector<std::uint8_t> bits(k, 0);
  bits[t.label] = 1;
  return bits;
}

// Loss of one example and d loss / d logits.
double example_loss(const SeqClassifier& model, const Vector& logits, const Vector& output,
                    const Target& target, Vector* d_logits) {
  const std::size_t k = model.arch.n_classes;
  if (model.arch.head == Head::softmax) {
    if (target.label >= k) data_error("target class index out of range");
    if (d_logits) {
      *d_logits = output;
      (*d_logits)[target.label] -= 1.0;
    }
    // log-softmax from logits for accuracy at extreme confidence
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    return -(logits[target.label] - mx - std::log(z));
  }
  const auto bits = target_bits(target, k);
  double loss = 0.0;
  if (d_logits) d_logits->assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const auto r = numkit::sigmoid_bce(logits[c], bits[c]);
    loss += r.loss / static_cast<double>(k);
    if (d_logits) (*d_logits)[c] = r.grad / static_cast<double>(k);
  }
  return loss;
}

}  // namespace

Vector forward(const SeqClassifier& model, const IndexSequence& seq) {
  Cache cache;
  forward_impl(model, seq, cache);
  return cache.output;
}

double batch_loss(const SeqClassifier& model, std::span<const Example> batch) {
  if (batch.empty()) data_error("loss: empty batch");
  double total = 0.0;
  Cache cache;
  for (const auto& ex : batch) {
    const Vector logits = forward_impl(model, ex.sequence, cache);
    total += example_loss(model, logits, cache.output, ex.target, nullptr);
  }
  return total / static_cast<double>(batch.size());
}

LossAndGrads loss_and_grads(const SeqClassifier& model, std::span<const Example> batch,
                            double clip_norm) {
  if (batch.empty()) data_error("loss_and_grads: empty batch");
  const SeqParams& p = model.params;
  LossAndGrads out;
  out.grads = p.zeros_like();
  SeqParams& g = out.grads;
  const double scale = 1.0 / static_cast<double>(batch.size());
  const std::size_t h = model.arch.lstm_units;

  Cache cache;
  Vector d_logits;
  for (const auto& ex : batch) {
    const Vector logits = forward_impl(model, ex.sequence, cache);
    out.loss += example_loss(model, logits, cache.output, ex.target, &d_logits) * scale;
    for (double& d : d_logits) d *= scale;

    numkit::outer_acc(g.head_w, d_logits, cache.dense_out);
    auto ghb = g.head_b.values();
    for (std::size_t k = 0; k < d_logits.size(); ++k) ghb[k] += d_logits[k];

    Vector d_dense(cache.dense_out.size(), 0.0);
    numkit::gemv_t_acc(p.head_w, d_logits, d_dense);
    for (std::size_t k = 0; k < d_dense.size(); ++k) {
      if (cache.dense_pre[k] <= 0.0) d_dense[k] = 0.0;
    }
    numkit::outer_acc(g.dense_w, d_dense, cache.readout);
    auto gdb = g.dense_b.values();
    for (std::size_t k = 0; k < d_dense.size(); ++k) gdb[k] += d_dense[k];

    Vector d_readout(cache.readout.size(), 0.0);
    numkit::gemv_t_acc(p.dense_w, d_dense, d_readout);
    backward_direction(p.fwd, g.fwd, ex.sequence, p.embedding, g.embedding, cache.fwd,
                       Vector(d_readout.begin(), d_readout.begin() + static_cast<std::ptrdiff_t>(h)));
    if (model.arch.bidirectional) {
      backward_direction(p.bwd, g.bwd, ex.sequence, p.embedding, g.embedding, cache.bwd,
                         Vector(d_readout.begin() + static_cast<std::ptrdiff_t>(h), d_readout.end()));
    }
  }
  auto tensors = g.tensors();
  out.grad_norm = numkit::clip_global_norm(tensors, clip_norm);
  return out;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (batch_size < 1) usage_error("train config: batch size must be at least 1");
  if (!(optimizer.lr >= 0.0)) usage_error("train config: learning rate must be non-negative");
}

namespace {

std::size_t predicted_class(const Vector& output) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < output.size(); ++k) {
    if (output[k] > output[best]) best = k;
  }
  return best;
}

}  // namespace

double accuracy(const SeqClassifier& model, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : examples) {
    if (predicted_class(forward(model, ex.sequence)) == ex.target.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

TrainResult train(SeqClassifier model, std::span<const Example> train_set,
                  std::span<const Example> valid_set, const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) data_error("train: empty training set");
  TrainResult result;
  result.model = model;
  if (config.epochs == 0) return result;

  numkit::Rng rng(config.seed);
  numkit::OptimizerState state;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Example> batch;
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
      LossAndGrads lg = loss_and_grads(model, batch, config.clip_norm);
      auto params = model.params.tensors();
      auto grads = lg.grads.tensors();
      std::vector<const Matrix*> cgrads(grads.begin(), grads.end());
      numkit::optimizer_step(params, cgrads, state, config.optimizer);
      // PAD row stays zero under Adam's momentum.
      for (double& v : model.params.embedding.row(features::Vocabulary::kPad)) v = 0.0;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = batch_loss(model, train_set);
    stats.train_accuracy = accuracy(model, train_set);
    if (!valid_set.empty()) {
      stats.valid_loss = batch_loss(model, valid_set);
      stats.valid_accuracy = accuracy(model, valid_set);
    } else {
      stats.valid_loss = stats.train_loss;
      stats.valid_accuracy = stats.train_accuracy;
    }
    result.history.push_back(stats);
    if (stats.valid_loss < best) {
      best = stats.valid_loss;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace qadaa::neural
