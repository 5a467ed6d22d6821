#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "qadaa/artext.hpp"
#include "qadaa/corpus.hpp"
#include "qadaa/error.hpp"

using namespace qadaa;
using namespace qadaa::corpus;

namespace {

CaseSet fixture() {
  const auto cats = builtin_catalogs();
  return load_cases(QADAA_FIXTURES "/cases_custody.jsonl", cats.get(Task::judgment, CaseType::custody),
                    cats.get(Task::evidence, CaseType::custody));
}

}  // namespace

TEST_CASE("enum names round trip") {
  for (auto t : {Task::judgment, Task::evidence, Task::probability}) CHECK(parse_task(to_string(t)) == t);
  for (auto c : {CaseType::custody, CaseType::annulment}) CHECK(parse_case_type(to_string(c)) == c);
  CHECK_THROWS_AS(parse_task("verdict"), Error);
}

TEST_CASE("shipped catalog files equal the built-in catalogs") {
  const auto file = load_catalogs(QADAA_DATA "/catalogs.json");
  const auto table = load_catalogs(QADAA_DATA "/catalogs_table.json");
  CHECK(file.all() == builtin_catalogs(false).all());
  CHECK(table.all() == builtin_catalogs(true).all());
  CHECK(file.get(Task::judgment, CaseType::custody).size() == 4);
  CHECK(file.get(Task::judgment, CaseType::annulment).size() == 4);
  CHECK(file.get(Task::evidence, CaseType::custody).size() == 8);
  CHECK(file.get(Task::evidence, CaseType::annulment).size() == 11);
  CHECK(file.get(Task::probability, CaseType::custody).classes() ==
        file.get(Task::judgment, CaseType::custody).classes());
  CHECK(parse_catalogs(serialize_catalogs(file)).all() == file.all());
}

TEST_CASE("catalog validation") {
  CHECK_THROWS_AS(LabelCatalog(Task::judgment, CaseType::custody, {{"a", "a"}}), Error);
  CHECK_THROWS_AS(LabelCatalog(Task::judgment, CaseType::custody, {{"a", "a"}, {"a", "b"}}), Error);
  CHECK_THROWS_AS(parse_catalogs("{\"catalogs\": [{\"task\": \"judgment\", \"case_type\": \"custody\", "
                                 "\"classes\": [{\"name\": \"a\", \"gloss\": \"\"}, {\"name\": \"b\", \"gloss\": \"\"}]}]}"),
                  Error);
  CHECK_THROWS_AS(parse_catalogs("not json"), Error);
}

TEST_CASE("fixture loads and round trips") {
  const auto set = fixture();
  REQUIRE(set.size() == 5);
  CHECK(set.cases[0].judgment == 1);
  CHECK(set.cases[1].judgment == 2);
  CHECK(set.cases[2].provenance == Provenance::simulated);
  const auto counts = set.provenance_counts();
  CHECK(counts.at(Provenance::simulated) == 3);
  CHECK(counts.at(Provenance::ministry) == 1);

  std::stringstream buf;
  write_cases(buf, set);
  const auto back = read_cases(buf, set.judgment_catalog, set.evidence_catalog);
  CHECK(back.cases == set.cases);
}

TEST_CASE("filter keeps usable cases in order") {
  const auto set = fixture();
  const auto t1 = set.filter(Task::judgment);
  CHECK(t1.size() == 4);
  for (const auto& c : t1.cases) CHECK(c.id != "c-4");
  const auto t2 = set.filter(Task::probability);
  CHECK(t2.size() == 4);
  for (const auto& c : t2.cases) CHECK(c.id != "c-3");
}

TEST_CASE("malformed case lines are data errors") {
  const auto cats = builtin_catalogs();
  const auto& j = cats.get(Task::judgment, CaseType::custody);
  const auto& e = cats.get(Task::evidence, CaseType::custody);
  const std::string ok_fields = "\"case_type\": \"custody\", \"claim\": \"\", \"answer\": \"\", \"pleading\": \"x\"";
  const std::vector<std::string> bad{
      "{not json",
      "{\"id\": \"a\", " + ok_fields + ", \"judgment\": \"unknown\", \"evidence\": \"" + e.at(0).name + "\"}",
      "{\"id\": \"a\", " + ok_fields + ", \"judgment\": \"" + j.at(0).name + "\"}",
      "{\"id\": \"a\", \"case_type\": \"annulment\", \"claim\": \"\", \"answer\": \"\", \"pleading\": \"x\", \"judgment\": \"" +
          j.at(0).name + "\", \"evidence\": \"" + e.at(0).name + "\"}",
  };
  for (const auto& b : bad) {
    INFO(b);
    std::istringstream in(b + "\n");
    try {
      read_cases(in, j, e);
      FAIL("expected an error");
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::data);
    }
  }
  CHECK_THROWS_AS(load_cases("/nonexistent/cases.jsonl", j, e), Error);
}

TEST_CASE("stratified split of 100 synthetic cases") {
  const auto set = generate_synthetic(default_synthetic_spec(CaseType::custody), 42);
  REQUIRE(set.size() == 100);
  const auto split = split_stratified(set, 0.25, 42);
  CHECK(split.test.size() == 25);
  CHECK(split.train.size() == 75);
  std::vector<std::size_t> per_class(4, 0);
  for (const auto& c : split.test.cases) ++per_class[c.judgment];
  for (auto n : per_class) CHECK((n == 6 || n == 7));

  std::set<std::string> ids;
  for (const auto& c : split.train.cases) ids.insert(c.id);
  for (const auto& c : split.test.cases) CHECK(ids.insert(c.id).second);
  CHECK(ids.size() == 100);

  const auto again = split_stratified(set, 0.25, 42);
  CHECK(again.test.cases == split.test.cases);
  const auto other = split_stratified(set, 0.25, 43);
  CHECK(other.test.cases != split.test.cases);
  CHECK_THROWS_AS(split_stratified(set, 1.5, 1), Error);
}

TEST_CASE("synthetic generator properties") {
  for (auto type : {CaseType::custody, CaseType::annulment}) {
    const auto spec = default_synthetic_spec(type, 10);
    const auto set = generate_synthetic(spec, 7);
    CHECK(set.size() == 10 * spec.lexicons.size());
    CHECK(generate_synthetic(spec, 7).cases == set.cases);
    CHECK(generate_synthetic(spec, 8).cases != set.cases);
    std::vector<std::size_t> counts(spec.lexicons.size(), 0);
    const auto config = artext::default_config();
    for (const auto& c : set.cases) {
      ++counts[c.judgment];
      CHECK(c.evidence == c.judgment % spec.evidence_catalog.size());
      CHECK(c.usable_for(Task::judgment));
      CHECK(c.usable_for(Task::probability));
      for (const auto* text : {&c.pleading, &c.claim}) {
        const auto tokens = artext::tokenize(*text);
        std::size_t own = 0;
        for (const auto& t : tokens) {
          for (std::size_t k = 0; k < spec.lexicons.size(); ++k) {
            const auto& lex = spec.lexicons[k];
            if (std::find(lex.begin(), lex.end(), t) == lex.end()) continue;
            if (k == c.judgment) {
              ++own;
            } else {
              FAIL("foreign keyword " << t << " in " << c.id);
            }
          }
        }
        CHECK(own >= spec.min_hits);
        CHECK(own <= spec.max_hits);
      }
      // Decoy dates never survive preprocessing as digits.
      for (const auto& t : artext::preprocess(c.pleading, config)) {
        CHECK(t.find_first_of("0123456789") == std::string::npos);
      }
    }
    for (auto n : counts) CHECK(n == 10);
  }
  auto bad = default_synthetic_spec(CaseType::custody);
  bad.min_hits = 0;
  CHECK_THROWS_AS(generate_synthetic(bad, 1), Error);
  bad = default_synthetic_spec(CaseType::custody);
  bad.lexicons[1].push_back(bad.lexicons[0][0]);
  CHECK_THROWS_AS(generate_synthetic(bad, 1), Error);
}

TEST_CASE("synthetic embeddings cover the vocabulary") {
  const auto spec = default_synthetic_spec(CaseType::custody);
  std::ostringstream out;
  write_synthetic_embeddings(out, spec, 8, 3);
  std::istringstream in(out.str());
  std::size_t rows = 0, dim = 0;
  in >> rows >> dim;
  CHECK(dim == 8);
  std::set<std::string> words;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) words.insert(line.substr(0, line.find(' ')));
  CHECK(words.size() == rows);
  for (const auto& lex : spec.lexicons) {
    for (const auto& w : lex) CHECK(words.contains(w));
  }
  std::ostringstream again;
  write_synthetic_embeddings(again, spec, 8, 3);
  CHECK(again.str() == out.str());
}
