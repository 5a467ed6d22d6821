#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qadaa::corpus {

enum class CaseType { custody, annulment };
enum class Task { judgment, evidence, probability };
enum class Provenance { ministry, simulated, synthetic };

std::string_view to_string(CaseType t) noexcept;
std::string_view to_string(Task t) noexcept;
std::string_view to_string(Provenance p) noexcept;
CaseType parse_case_type(std::string_view s);
Task parse_task(std::string_view s);
Provenance parse_provenance(std::string_view s);

struct ClassLabel {
  std::string name;   // Arabic, authoritative
  std::string gloss;  // English
  friend bool operator==(const ClassLabel&, const ClassLabel&) = default;
};

/// Ordered class list for one (task, case type).
class LabelCatalog {
 public:
  LabelCatalog() = default;
  /// Throws on duplicate names or fewer than two classes.
  LabelCatalog(Task task, CaseType case_type, std::vector<ClassLabel> classes);

  Task task() const noexcept { return task_; }
  CaseType case_type() const noexcept { return case_type_; }
  std::size_t size() const noexcept { return classes_.size(); }
  const std::vector<ClassLabel>& classes() const noexcept { return classes_; }
  const ClassLabel& at(std::size_t i) const { return classes_.at(i); }
  std::optional<std::size_t> index_of(std::string_view name) const;

  friend bool operator==(const LabelCatalog&, const LabelCatalog&) = default;

 private:
  Task task_ = Task::judgment;
  CaseType case_type_ = CaseType::custody;
  std::vector<ClassLabel> classes_;
};

/// All catalogs of one catalog file, keyed by (task, case type). A missing
/// probability catalog falls back to the judgment classes.
class CatalogSet {
 public:
  void add(LabelCatalog catalog);
  const LabelCatalog& get(Task task, CaseType case_type) const;
  bool contains(Task task, CaseType case_type) const;
  std::vector<LabelCatalog> all() const;

 private:
  std::map<std::pair<Task, CaseType>, LabelCatalog> catalogs_;
  mutable std::map<CaseType, LabelCatalog> probability_fallback_;
};

/// Catalog file: {"catalogs": [{"task", "case_type", "classes": [{"name", "gloss"}]}]}.
/// Judgment catalogs must have 4 classes; evidence catalogs 8 (custody)
/// or 11 (annulment).
CatalogSet load_catalogs(const std::filesystem::path& path);
CatalogSet parse_catalogs(std::string_view json_text);
std::string serialize_catalogs(const CatalogSet& set);

/// Built-in catalogs. The annulment judgment set is with/without
/// compensation, deny, other; `table_variant` swaps "other" for a plain
/// annulment class.
CatalogSet builtin_catalogs(bool table_variant = false);

struct Case {
  std::string id;
  CaseType case_type = CaseType::custody;
  std::string claim;
  std::string answer;
  std::string pleading;
  std::size_t judgment = 0;
  std::size_t evidence = 0;
  Provenance provenance = Provenance::synthetic;

  /// Task 1 needs a pleading; task 2 needs both claim and answer.
  bool usable_for(Task task) const noexcept;
  std::size_t label(Task task) const noexcept {
    return task == Task::evidence ? evidence : judgment;
  }
  friend bool operator==(const Case&, const Case&) = default;
};

struct CaseSet {
  CaseType case_type = CaseType::custody;
  LabelCatalog judgment_catalog;
  LabelCatalog evidence_catalog;
  std::vector<Case> cases;

  std::size_t size() const noexcept { return cases.size(); }
  const LabelCatalog& catalog(Task task) const noexcept {
    return task == Task::evidence ? evidence_catalog : judgment_catalog;
  }
  std::map<Provenance, std::size_t> provenance_counts() const;
  /// Cases usable for the task, order preserved.
  CaseSet filter(Task task) const;
};

/// One JSON object per line: id, case_type, claim, answer, pleading,
/// judgment, evidence (label fields hold class names), optional provenance.
CaseSet load_cases(const std::filesystem::path& path, const LabelCatalog& judgment,
                   const LabelCatalog& evidence);
CaseSet read_cases(std::istream& in, const LabelCatalog& judgment,
                   const LabelCatalog& evidence, std::string_view source = "<stream>");
void write_cases(std::ostream& out, const CaseSet& cases);
void save_cases(const std::filesystem::path& path, const CaseSet& cases);

struct SplitPair {
  CaseSet train;
  CaseSet test;
  std::uint64_t seed = 0;
  double test_fraction = 0.0;
};

/// Stratified by the task's label. The overall test size is
/// round(fraction * N), distributed over classes by largest remainder, so
/// each class lands within one case of fraction * class size.
SplitPair split_stratified(const CaseSet& cases, double test_fraction, std::uint64_t seed,
                           Task stratify_by = Task::judgment);

struct SyntheticSpec {
  CaseType case_type = CaseType::custody;
  std::size_t per_class = 25;
  std::vector<std::vector<std::string>> lexicons;  // one per judgment class
  std::vector<std::string> filler;
  std::size_t min_words = 8;
  std::size_t max_words = 16;
  /// Keywords inserted into each pleading and claim.
  std::size_t min_hits = 2;
  std::size_t max_hits = 3;
  LabelCatalog judgment_catalog;
  LabelCatalog evidence_catalog;
};

/// Default lexicons and filler for the case type, with built-in catalogs.
SyntheticSpec default_synthetic_spec(CaseType case_type, std::size_t per_class = 25);

/// Balanced corpus: each case's pleading and claim carry at least one
/// keyword of its class lexicon, seeded filler and a decoy date. Evidence
/// labels are class index modulo the evidence catalog size.
CaseSet generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Word vectors for every lexicon and filler word in word-vector text
/// format. Keywords of one class share a cluster centre.
void write_synthetic_embeddings(std::ostream& out, const SyntheticSpec& spec, std::size_t dim,
                                std::uint64_t seed);

}  // namespace qadaa::corpus
