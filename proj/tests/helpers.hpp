#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <unistd.h>

#include "qadaa/corpus.hpp"
#include "qadaa/features.hpp"
#include "qadaa/hash.hpp"
#include "qadaa/numkit.hpp"
#include "qadaa/pipeline.hpp"

namespace testkit {

namespace fs = std::filesystem;
using namespace qadaa;

// Removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("qadaa-" + name + "-" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

inline pipeline::FitSettings tiny_settings() {
  pipeline::FitSettings s;
  s.svm_grid = {{classical::KernelKind::linear, 1.0, 0.1}, {classical::KernelKind::rbf, 10.0, 0.1}};
  s.logreg_grid = {{classical::KernelKind::linear, 1.0, 0.1}, {classical::KernelKind::linear, 10.0, 0.1}};
  for (auto* a : {&s.lstm_arch, &s.bilstm_arch}) {
    a->maxlen = 24;
    a->embed_dim = 8;
    a->lstm_units = 6;
    a->dense_units = 8;
  }
  s.neural_train.epochs = 4;
  s.neural_train.optimizer.rule = numkit::UpdateRule::adam;
  s.neural_train.optimizer.lr = 0.01;
  s.threads = 2;
  return s;
}

inline corpus::CaseSet synthetic(std::size_t per_class = 6, std::uint64_t seed = 42,
                                 corpus::CaseType type = corpus::CaseType::custody) {
  return corpus::generate_synthetic(corpus::default_synthetic_spec(type, per_class), seed);
}

inline pipeline::EmbeddingRef write_embeddings(const fs::path& path, std::size_t dim = 8,
                                               corpus::CaseType type = corpus::CaseType::custody) {
  {
    std::ofstream out(path);
    corpus::write_synthetic_embeddings(out, corpus::default_synthetic_spec(type), dim, 7);
  }
  auto store = std::make_shared<const features::EmbeddingStore>(features::load_embeddings(path));
  return {std::move(store), path.string(), file_sha256(path)};
}

// Arabic letters, harakat, tatweel, digits in both scripts, Latin and
// Arabic punctuation, spaces and date context words.
inline std::string random_text(numkit::Rng& rng) {
  static const std::vector<std::string> pieces{
      "ا", "ب", "ت", "ح", "د", "ر", "س", "ع", "ل", "م", "ن", "ه", "و", "ي", "ة", "أ", "إ", "آ",
      "\xD9\x8E", "\xD9\x8F", "\xD9\x90", "\xD9\x91", "\xD9\x92", "\xD9\x8B", "\xD9\xB0", "ـ",
      "0", "1", "2", "4", "9", "١", "٤", "٠", "/", "-", ".", ",", "،", "؛", "؟", "!", "(", ")",
      " ", " ", " ", "\t", "\n", "هـ", "عام ", "بتاريخ ", "في ", "إلى ", "a", "Z", "1440/02/15",
      "2020", "\xC2\xA0", "\xE2\x80\x8F", "\xEF\xBF\xBD", "\xE2\x80\x94", "\xC2\xAB", "\xDB\x94",
      "\xD9\xAC", "\xE3\x80\x81", "\xEF\xBC\x81", "\xEF\xBB\xBF", "\xE2\x81\x9F", "سنة", "م", "ه"};
  std::string s;
  const std::size_t n = rng.index(40);
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng.index(pieces.size())];
  return s;
}

}  // namespace testkit
