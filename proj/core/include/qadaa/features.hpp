#pragma once

// Featurizers: vocabulary + TF-IDF sparse vectors, averaged pretrained word
// vectors, and fixed-length index sequences for the recurrent models.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "qadaa/artext.hpp"
#include "qadaa/numkit.hpp"

namespace qadaa::features {

using artext::TokenList;
using numkit::Vector;

/// Tokens sorted lexicographically (byte order) get dense indices 0..V-1.
/// Sequence encoding shifts these by two: id 0 is PAD, id 1 is UNK.
class Vocabulary {
 public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kUnk = 1;
  static constexpr std::uint32_t kReserved = 2;

  Vocabulary() = default;
  /// Throws unless tokens are unique and every df lies in [1, n_docs].
  Vocabulary(std::vector<std::string> tokens, std::vector<std::size_t> df, std::size_t n_docs);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t n_docs() const noexcept { return n_docs_; }
  std::size_t sequence_size() const noexcept { return tokens_.size() + kReserved; }

  std::optional<std::uint32_t> index(std::string_view token) const;
  std::uint32_t sequence_id(std::string_view token) const;
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  std::size_t df(std::size_t i) const { return df_.at(i); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<std::size_t>& dfs() const noexcept { return df_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.df_ == b.df_ && a.n_docs_ == b.n_docs_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> df_;
  std::size_t n_docs_ = 0;
  std::unordered_map<std::string, std::uint32_t> lookup_;
};

/// Tokens with document frequency >= min_df. Throws on an empty corpus.
Vocabulary fit_vocab(std::span<const TokenList> docs, std::size_t min_df = 1);

struct SparseEntry {
  std::uint32_t index;
  double value;
  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Entries strictly increasing by index; exact zeros are not stored.
using SparseVector = std::vector<SparseEntry>;

Vector densify(const SparseVector& v, std::size_t dim);

struct TfidfOptions {
  std::size_t min_df = 1;
  bool smooth_idf = false;    // idf = ln((1+N)/(1+df)) + 1
  bool l2_normalize = false;
};

class TfidfVectorizer {
 public:
  TfidfVectorizer() = default;
  TfidfVectorizer(Vocabulary vocab, TfidfOptions options);

  bool fitted() const noexcept { return fitted_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  const TfidfOptions& options() const noexcept { return options_; }
  std::size_t dim() const noexcept { return vocab_.size(); }
  double idf(std::size_t i) const { return idf_.at(i); }

  /// weight(w) = count(w in doc) * ln(N / df(w)); out-of-vocabulary tokens
  /// are ignored. Throws if the vectorizer was never fitted.
  SparseVector transform(const TokenList& doc) const;
  Vector transform_dense(const TokenList& doc) const;

 private:
  Vocabulary vocab_;
  TfidfOptions options_;
  std::vector<double> idf_;
  bool fitted_ = false;
};

TfidfVectorizer tfidf_fit(std::span<const TokenList> docs, TfidfOptions options = {});

class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return rows_.size(); }
  /// Replaces an existing row (last wins).
  void set(const std::string& token, std::vector<double> vec);
  const std::vector<double>* find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token) != nullptr; }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> rows_;
};

/// Word-vector text format: "vocab_size dim" header, then "token c1 .. c_dim".
/// Arity mismatches and non-numeric components are errors; duplicate tokens
/// warn and the last row wins.
EmbeddingStore load_embeddings(const std::filesystem::path& path);
EmbeddingStore read_embeddings(std::istream& in, std::string_view source = "<stream>");

/// Mean of the vectors of in-store tokens; zero vector when none are found.
Vector average_embedding(const TokenList& tokens, const EmbeddingStore& store);

using IndexSequence = std::vector<std::uint32_t>;

/// Head-truncated to maxlen, post-padded with PAD; OOV maps to UNK.
IndexSequence encode_sequence(const TokenList& tokens, const Vocabulary& vocab,
                              std::size_t maxlen = 1200);

}  // namespace qadaa::features
