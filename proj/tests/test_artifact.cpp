#include <cstring>
#include <fstream>

#include "doctest.h"
#include "helpers.hpp"
#include "qadaa/artifact.hpp"
#include "qadaa/error.hpp"
#include "qadaa/experiment.hpp"
#include "qadaa/hash.hpp"

using namespace qadaa;
using namespace qadaa::app;
using pipeline::ModelKind;
using pipeline::Representation;
using corpus::Task;

namespace {

ErrorCode code_of(std::string_view bytes, const LoadOptions& options = {}) {
  try {
    parse_artifact(bytes, options);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::internal;
}

// Replaces the trailing checksum so only the targeted corruption is seen.
std::string reseal(std::string bytes) {
  bytes.resize(bytes.size() - 64);
  return bytes + sha256_hex(bytes);
}

std::uint64_t read_u64(const std::string& s, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[at + i]);
  return v;
}

void write_u64(std::string& s, std::size_t at, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s[at + i] = static_cast<char>((v >> (8 * i)) & 0xFF);
}

}  // namespace

TEST_CASE("round trip gives bit-identical predictions on 20 fixtures") {
  testkit::TempDir dir("artifact");
  const auto emb = testkit::write_embeddings(dir.path / "vectors.txt");
  const auto train = testkit::synthetic(6, 42);
  const auto fixtures = testkit::synthetic(5, 99);
  REQUIRE(fixtures.size() == 20);
  const auto settings = testkit::tiny_settings();

  std::vector<std::pair<ModelKind, Representation>> kinds;
  for (const auto& r : experiment::all_rows()) kinds.emplace_back(r.model, r.representation);
  for (Task task : {Task::judgment, Task::evidence, Task::probability}) {
    for (const auto& [model, rep] : kinds) {
      if (task != Task::judgment && rep == Representation::word2vec) continue;
      INFO(corpus::to_string(task), " ", pipeline::row_name(model, rep));
      const auto p = pipeline::fit(model, rep, task, train, settings, emb);
      const auto path = dir.path / "model.qadaa";
      save_artifact(p, path);
      ArtifactInfo info;
      const auto back = load_artifact(path, {}, &info);
      CHECK(info.format_version == kArtifactVersion);
      CHECK(info.toolkit_version == QADAA_VERSION);
      CHECK(back.task == p.task);
      CHECK(back.catalog == p.catalog);
      CHECK(back.hyper == p.hyper);
      CHECK(serialize_artifact(back) == serialize_artifact(p));
      for (const auto& c : fixtures.cases) {
        const auto in = pipeline::case_input(c);
        const auto a = p.predict(in);
        const auto b = back.predict(in);
        CHECK(a.label == b.label);
        REQUIRE(a.probabilities.size() == b.probabilities.size());
        CHECK(std::memcmp(a.probabilities.data(), b.probabilities.data(),
                          a.probabilities.size() * sizeof(double)) == 0);
      }
    }
  }
}

TEST_CASE("corrupted artifacts are rejected as data errors") {
  const auto p = pipeline::fit(ModelKind::logreg, Representation::tfidf, Task::judgment, testkit::synthetic(4),
                               testkit::tiny_settings());
  const std::string good = serialize_artifact(p);
  CHECK_NOTHROW(parse_artifact(good));

  auto magic = good;
  magic.replace(0, 4, "XXXX");
  CHECK(code_of(magic) == ErrorCode::data);

  auto version = good;
  version[4] = 9;
  CHECK(code_of(version) == ErrorCode::data);
  CHECK(code_of(reseal(version)) == ErrorCode::data);

  CHECK(code_of(good.substr(0, good.size() / 2)) == ErrorCode::data);
  CHECK(code_of("") == ErrorCode::data);
  CHECK(code_of(good + "x") == ErrorCode::data);

  auto flipped = good;
  flipped[good.size() / 2] ^= 0x01;
  CHECK(code_of(flipped) == ErrorCode::data);

  // Header edits that keep a valid checksum: wrong tensor shape, bad JSON.
  const std::uint64_t header_len = read_u64(good, 8);
  const std::string header = good.substr(16, header_len);
  auto j = nlohmann::json::parse(header);
  for (auto& t : j.at("tensors")) {
    t.at("rows") = t.at("rows").get<std::size_t>() + 1;
    break;
  }
  const std::string bad_header = j.dump();
  std::string reshaped = good.substr(0, 8);
  reshaped += std::string(8, '\0');
  write_u64(reshaped, 8, bad_header.size());
  reshaped += bad_header;
  reshaped += good.substr(16 + header_len);
  CHECK(code_of(reseal(reshaped)) == ErrorCode::data);

  auto garbled = good;
  garbled[16] = '[';
  CHECK(code_of(reseal(garbled)) == ErrorCode::data);

  try {
    load_artifact("/nonexistent/model.qadaa");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_found);
  }
}

TEST_CASE("word2vec artifacts check the embedding file") {
  testkit::TempDir dir("artifact-emb");
  const auto emb = testkit::write_embeddings(dir.path / "vectors.txt");
  const auto p = pipeline::fit(ModelKind::svm, Representation::word2vec, Task::judgment, testkit::synthetic(4),
                               testkit::tiny_settings(), emb);
  const auto path = dir.path / "svm.qadaa";
  save_artifact(p, path);
  CHECK_NOTHROW(load_artifact(path));

  const auto moved = dir.path / "moved.txt";
  std::filesystem::rename(dir.path / "vectors.txt", moved);
  try {
    load_artifact(path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_found);
  }
  CHECK_NOTHROW(load_artifact(path, {moved, {}}));

  testkit::write_embeddings(dir.path / "other.txt", 6);
  try {
    load_artifact(path, {dir.path / "other.txt", {}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::data);
  }
}
