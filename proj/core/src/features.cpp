#include "qadaa/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "qadaa/error.hpp"

namespace qadaa::features {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> df,
                       std::size_t n_docs)
    : tokens_(std::move(tokens)), df_(std::move(df)), n_docs_(n_docs) {
  if (tokens_.size() != df_.size()) data_error("vocabulary: token and df counts differ");
  lookup_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (df_[i] < 1 || df_[i] > n_docs_) {
      data_error("vocabulary: df of '" + tokens_[i] + "' outside [1, N]");
    }
    if (!lookup_.emplace(tokens_[i], static_cast<std::uint32_t>(i)).second) {
      data_error("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

std::optional<std::uint32_t> Vocabulary::index(std::string_view token) const {
  auto it = lookup_.find(std::string(token));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Vocabulary::sequence_id(std::string_view token) const {
  auto i = index(token);
  return i ? *i + kReserved : kUnk;
}

Vocabulary fit_vocab(std::span<const TokenList> docs, std::size_t min_df) {
  if (docs.empty()) data_error("fit_vocab: empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : docs) {
    std::set<std::string_view> seen(doc.begin(), doc.end());
    for (auto t : seen) ++df[std::string(t)];
  }
  std::vector<std::string> tokens;
  std::vector<std::size_t> counts;
  for (auto& [t, c] : df) {
    if (c >= std::max<std::size_t>(min_df, 1)) {
      tokens.push_back(t);
      counts.push_back(c);
    }
  }
  return Vocabulary(std::move(tokens), std::move(counts), docs.size());
}

// ---------------------------------------------------------------------------
// TF-IDF

Vector densify(const SparseVector& v, std::size_t dim) {
  Vector out(dim, 0.0);
  for (const auto& e : v) {
    if (e.index >= dim) data_error("densify: sparse index out of range");
    out[e.index] = e.value;
  }
  return out;
}

TfidfVectorizer::TfidfVectorizer(Vocabulary vocab, TfidfOptions options)
    : vocab_(std::move(vocab)), options_(options), fitted_(true) {
  const double n = static_cast<double>(vocab_.n_docs());
  idf_.resize(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    const double df = static_cast<double>(vocab_.df(i));
    idf_[i] = options_.smooth_idf ? std::log((1.0 + n) / (1.0 + df)) + 1.0 : std::log(n / df);
  }
}

SparseVector TfidfVectorizer::transform(const TokenList& doc) const {
  if (!fitted_) fail(ErrorCode::usage, "tfidf_transform: vectorizer is not fitted");
  std::map<std::uint32_t, std::size_t> counts;
  for (const auto& t : doc) {
    if (auto i = vocab_.index(t)) ++counts[*i];
  }
  SparseVector out;
  out.reserve(counts.size());
  double sq = 0.0;
  for (const auto& [i, c] : counts) {
    const double w = static_cast<double>(c) * idf_[i];
    if (w == 0.0) continue;
    out.push_back({i, w});
    sq += w * w;
  }
  if (options_.l2_normalize && sq > 0.0) {
    const double norm = std::sqrt(sq);
    for (auto& e : out) e.value /= norm;
  }
  return out;
}

Vector TfidfVectorizer::transform_dense(const TokenList& doc) const {
  return densify(transform(doc), dim());
}

TfidfVectorizer tfidf_fit(std::span<const TokenList> docs, TfidfOptions options) {
  return TfidfVectorizer(fit_vocab(docs, options.min_df), options);
}

// ---------------------------------------------------------------------------
// Embeddings

EmbeddingStore::EmbeddingStore(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) data_error("embedding dimension must be positive");
}

void EmbeddingStore::set(const std::string& token, std::vector<double> vec) {
  if (vec.size() != dim_) data_error("embedding row for '" + token + "' has wrong arity");
  rows_[token] = std::move(vec);
}

const std::vector<double>* EmbeddingStore::find(std::string_view token) const {
  auto it = rows_.find(std::string(token));
  return it == rows_.end() ? nullptr : &it->second;
}

namespace {

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  // from_chars rejects a leading '+'; word2vec writers never emit one but
  // some hand-edited files do.
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

EmbeddingStore read_embeddings(std::istream& in, std::string_view source) {
  const std::string src(source);
  std::string line;
  if (!std::getline(in, line)) data_error(src + ": empty embedding file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_spaces(line);
  std::size_t declared = 0;
  std::size_t dim = 0;
  auto parse_size = [](std::string_view s, std::size_t& v) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && p == s.data() + s.size();
  };
  if (header.size() != 2 || !parse_size(header[0], declared) || !parse_size(header[1], dim) ||
      dim == 0) {
    data_error(src + ":1: header must be 'vocab_size dim'");
  }
  EmbeddingStore store(dim);
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_spaces(line);
    if (fields.empty()) continue;
    const std::string where = src + ":" + std::to_string(line_no);
    if (fields.size() != dim + 1) {
      data_error(where + ": expected " + std::to_string(dim) + " components, got " +
                 std::to_string(fields.size() - 1));
    }
    std::vector<double> vec(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      if (!parse_double(fields[d + 1], vec[d])) {
        data_error(where + ": non-numeric component '" + std::string(fields[d + 1]) + "'");
      }
    }
    const std::string token(fields[0]);
    if (store.contains(token)) warn(where + ": duplicate token '" + token + "', last row wins");
    store.set(token, std::move(vec));
    ++rows;
  }
  if (rows != declared) {
    data_error(src + ": header declares " + std::to_string(declared) + " rows, file has " +
               std::to_string(rows));
  }
  return store;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::not_found, "cannot open embedding file: " + path.string());
  return read_embeddings(in, path.string());
}

Vector average_embedding(const TokenList& tokens, const EmbeddingStore& store) {
  Vector sum(store.dim(), 0.0);
  std::size_t hits = 0;
  for (const auto& t : tokens) {
    if (const auto* v = store.find(t)) {
      for (std::size_t d = 0; d < sum.size(); ++d) sum[d] += (*v)[d];
      ++hits;
    }
  }
  if (hits > 0) {
    for (double& x : sum) x /= static_cast<double>(hits);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Sequences

IndexSequence encode_sequence(const TokenList& tokens, const Vocabulary& vocab,
                              std::size_t maxlen) {
  if (maxlen < 1) usage_error("encode_sequence: maxlen must be at least 1");
  IndexSequence out(maxlen, Vocabulary::kPad);
  const std::size_t n = std::min(maxlen, tokens.size());
  for (std::size_t i = 0; i < n; ++i) out[i] = vocab.sequence_id(tokens[i]);
  return out;
}

}  // namespace qadaa::features
