#include "qadaa/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "qadaa/error.hpp"
#include "qadaa/numkit.hpp"

namespace qadaa::corpus {

using nlohmann::json;

std::string_view to_string(CaseType t) noexcept {
  return t == CaseType::custody ? "custody" : "annulment";
}

std::string_view to_string(Task t) noexcept {
  switch (t) {
    case Task::judgment: return "judgment";
    case Task::evidence: return "evidence";
    case Task::probability: return "probability";
  }
  return "judgment";
}

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::ministry: return "ministry";
    case Provenance::simulated: return "simulated";
    case Provenance::synthetic: return "synthetic";
  }
  return "synthetic";
}

CaseType parse_case_type(std::string_view s) {
  if (s == "custody") return CaseType::custody;
  if (s == "annulment") return CaseType::annulment;
  data_error("unknown case type '" + std::string(s) + "' (expected custody|annulment)");
}

Task parse_task(std::string_view s) {
  if (s == "judgment") return Task::judgment;
  if (s == "evidence") return Task::evidence;
  if (s == "probability") return Task::probability;
  data_error("unknown task '" + std::string(s) + "' (expected judgment|evidence|probability)");
}

Provenance parse_provenance(std::string_view s) {
  if (s == "ministry") return Provenance::ministry;
  if (s == "simulated") return Provenance::simulated;
  if (s == "synthetic") return Provenance::synthetic;
  data_error("unknown provenance '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Catalogs

LabelCatalog::LabelCatalog(Task task, CaseType case_type, std::vector<ClassLabel> classes)
    : task_(task), case_type_(case_type), classes_(std::move(classes)) {
  if (classes_.size() < 2) data_error("label catalog needs at least two classes");
  std::set<std::string> seen;
  for (const auto& c : classes_) {
    if (c.name.empty()) data_error("label catalog has an empty class name");
    if (!seen.insert(c.name).second) data_error("duplicate class name in catalog: " + c.name);
  }
}

std::optional<std::size_t> LabelCatalog::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].name == name) return i;
  }
  return std::nullopt;
}

namespace {

std::size_t expected_size(Task task, CaseType type) {
  if (task == Task::evidence) return type == CaseType::custody ? 8 : 11;
  return 4;
}

}  // namespace

void CatalogSet::add(LabelCatalog catalog) {
  const auto want = expected_size(catalog.task(), catalog.case_type());
  if (catalog.size() != want) {
    data_error(std::string(to_string(catalog.task())) + "/" +
               std::string(to_string(catalog.case_type())) + " catalog must have " +
               std::to_string(want) + " classes, got " + std::to_string(catalog.size()));
  }
  const auto key = std::pair{catalog.task(), catalog.case_type()};
  catalogs_[key] = std::move(catalog);
}

bool CatalogSet::contains(Task task, CaseType case_type) const {
  if (catalogs_.contains({task, case_type})) return true;
  return task == Task::probability && catalogs_.contains({Task::judgment, case_type});
}

const LabelCatalog& CatalogSet::get(Task task, CaseType case_type) const {
  if (auto it = catalogs_.find({task, case_type}); it != catalogs_.end()) return it->second;
  if (task == Task::probability) {
    if (auto it = catalogs_.find({Task::judgment, case_type}); it != catalogs_.end()) {
      auto& slot = probability_fallback_[case_type];
      if (slot.size() == 0) {
        slot = LabelCatalog(Task::probability, case_type, it->second.classes());
      }
      return slot;
    }
  }
  fail(ErrorCode::not_found, "no " + std::string(to_string(task)) + " catalog for " +
                                 std::string(to_string(case_type)));
}

std::vector<LabelCatalog> CatalogSet::all() const {
  std::vector<LabelCatalog> out;
  for (const auto& [key, c] : catalogs_) out.push_back(c);
  return out;
}

CatalogSet parse_catalogs(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    data_error(std::string("catalog file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("catalogs") || !j["catalogs"].is_array()) {
    data_error("catalog file: expected an object with a 'catalogs' array");
  }
  CatalogSet set;
  for (const auto& c : j["catalogs"]) {
    try {
      std::vector<ClassLabel> classes;
      for (const auto& cls : c.at("classes")) {
        if (cls.is_string()) {
          classes.push_back({cls.get<std::string>(), ""});
        } else {
          classes.push_back({cls.at("name").get<std::string>(), cls.value("gloss", "")});
        }
      }
      set.add(LabelCatalog(parse_task(c.at("task").get<std::string>()),
                           parse_case_type(c.at("case_type").get<std::string>()),
                           std::move(classes)));
    } catch (const json::exception& e) {
      data_error(std::string("catalog file: ") + e.what());
    }
  }
  return set;
}

CatalogSet load_catalogs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::not_found, "cannot open catalog file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_catalogs(buffer.str());
}

std::string serialize_catalogs(const CatalogSet& set) {
  json arr = json::array();
  for (const auto& c : set.all()) {
    json classes = json::array();
    for (const auto& cls : c.classes()) classes.push_back({{"name", cls.name}, {"gloss", cls.gloss}});
    arr.push_back({{"task", to_string(c.task())},
                   {"case_type", to_string(c.case_type())},
                   {"classes", classes}});
  }
  return json{{"catalogs", arr}}.dump(2, ' ', false);
}

CatalogSet builtin_catalogs(bool table_variant) {
  CatalogSet set;
  set.add(LabelCatalog(
      Task::judgment, CaseType::custody,
      {{"تخيير الابناء فوق السبع سنوات، وتكون الحضانة للام لمن لم يبلغ سبعه سنوات",
        "children over seven choose; custody of those under seven goes to the mother"},
       {"حضانة الاولاد لوالدتهم", "mother granted custody of the children"},
       {"حضانة الاولاد لوالدهم", "father granted custody of the children"},
       {"أخرى", "other"}}));
  if (table_variant) {
    set.add(LabelCatalog(Task::judgment, CaseType::annulment,
                         {{"فسخ نكاح لعوض", "annulment of marriage for compensation"},
                          {"فسخ نكاح بدون عوض", "annulment of marriage without compensation"},
                          {"فسخ نكاح", "annulment of marriage"},
                          {"رد دعوة المدعي", "annulment denied"}}));
  } else {
    set.add(LabelCatalog(Task::judgment, CaseType::annulment,
                         {{"فسخ نكاح لعوض", "annulment of marriage for compensation"},
                          {"فسخ نكاح بدون عوض", "annulment of marriage without compensation"},
                          {"رد دعوة المدعي", "annulment denied"},
                          {"أخرى", "other"}}));
  }
  auto articles = [](std::size_t n) {
    std::vector<ClassLabel> out;
    for (std::size_t i = 1; i <= n; ++i) {
      out.push_back({"السند " + std::to_string(i), "legal basis " + std::to_string(i)});
    }
    return out;
  };
  set.add(LabelCatalog(Task::evidence, CaseType::custody, articles(8)));
  set.add(LabelCatalog(Task::evidence, CaseType::annulment, articles(11)));
  return set;
}

// ---------------------------------------------------------------------------
// Cases

bool Case::usable_for(Task task) const noexcept {
  if (task == Task::probability) return !claim.empty() && !answer.empty();
  return !pleading.empty();
}

std::map<Provenance, std::size_t> CaseSet::provenance_counts() const {
  std::map<Provenance, std::size_t> counts;
  for (const auto& c : cases) ++counts[c.provenance];
  return counts;
}

CaseSet CaseSet::filter(Task task) const {
  CaseSet out{case_type, judgment_catalog, evidence_catalog, {}};
  for (const auto& c : cases) {
    if (c.usable_for(task)) out.cases.push_back(c);
  }
  return out;
}

namespace {

std::string required_string(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) data_error(where + ": missing required field '" + key + "'");
  if (!j[key].is_string()) data_error(where + ": field '" + key + "' must be a string");
  return j[key].get<std::string>();
}

}  // namespace

CaseSet read_cases(std::istream& in, const LabelCatalog& judgment, const LabelCatalog& evidence,
                   std::string_view source) {
  if (judgment.case_type() != evidence.case_type()) {
    usage_error("judgment and evidence catalogs belong to different case types");
  }
  CaseSet set{judgment.case_type(), judgment, evidence, {}};
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      data_error(where + ": malformed record: " + e.what());
    }
    if (!j.is_object()) data_error(where + ": malformed record: expected an object");

    Case c;
    c.id = required_string(j, "id", where);
    const std::string rec = where + " (record " + c.id + ")";
    if (!ids.insert(c.id).second) data_error(rec + ": duplicate id");
    c.case_type = parse_case_type(required_string(j, "case_type", rec));
    if (c.case_type != set.case_type) {
      data_error(rec + ": case_type " + std::string(to_string(c.case_type)) +
                 " does not match catalog case type " + std::string(to_string(set.case_type)));
    }
    c.claim = required_string(j, "claim", rec);
    c.answer = required_string(j, "answer", rec);
    c.pleading = required_string(j, "pleading", rec);
    const std::string jl = required_string(j, "judgment", rec);
    const std::string el = required_string(j, "evidence", rec);
    auto ji = judgment.index_of(jl);
    if (!ji) data_error(rec + ": unknown judgment label '" + jl + "'");
    auto ei = evidence.index_of(el);
    if (!ei) data_error(rec + ": unknown evidence label '" + el + "'");
    c.judgment = *ji;
    c.evidence = *ei;
    c.provenance = j.contains("provenance")
                       ? parse_provenance(required_string(j, "provenance", rec))
                       : Provenance::simulated;
    if (!c.usable_for(Task::judgment) && !c.usable_for(Task::probability)) {
      data_error(rec + ": needs a pleading or both claim and answer");
    }
    set.cases.push_back(std::move(c));
  }
  return set;
}

CaseSet load_cases(const std::filesystem::path& path, const LabelCatalog& judgment,
                   const LabelCatalog& evidence) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::not_found, "cannot open case file: " + path.string());
  return read_cases(in, judgment, evidence, path.string());
}

void write_cases(std::ostream& out, const CaseSet& cases) {
  for (const auto& c : cases.cases) {
    json j{{"id", c.id},
           {"case_type", to_string(c.case_type)},
           {"claim", c.claim},
           {"answer", c.answer},
           {"pleading", c.pleading},
           {"judgment", cases.judgment_catalog.at(c.judgment).name},
           {"evidence", cases.evidence_catalog.at(c.evidence).name},
           {"provenance", to_string(c.provenance)}};
    out << j.dump(-1, ' ', false) << '\n';
  }
}

void save_cases(const std::filesystem::path& path, const CaseSet& cases) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::not_found, "cannot write case file: " + path.string());
  write_cases(out, cases);
}

// ---------------------------------------------------------------------------
// Splitting

SplitPair split_stratified(const CaseSet& cases, double test_fraction, std::uint64_t seed,
                           Task stratify_by) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    usage_error("test fraction must lie in [0, 1)");
  }
  const std::size_t k = cases.catalog(stratify_by).size();
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < cases.cases.size(); ++i) {
    const std::size_t label = cases.cases[i].label(stratify_by);
    if (label >= k) data_error("case " + cases.cases[i].id + " has an out-of-range label");
    members[label].push_back(i);
  }

  std::vector<std::size_t> quota(k, 0);
  if (test_fraction > 0.0) {
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c].size() == 1) {
        data_error("class '" + cases.catalog(stratify_by).at(c).name +
                   "' has a single member; cannot stratify");
      }
    }
    const double n = static_cast<double>(cases.cases.size());
    const auto total = static_cast<std::size_t>(std::llround(test_fraction * n));
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double exact = test_fraction * static_cast<double>(members[c].size());
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      assigned += quota[c];
      if (!members[c].empty()) remainders.emplace_back(exact - std::floor(exact), c);
    }
    // Largest remainder first; ties go to the lower class index.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; r < remainders.size() && assigned < total; ++r) {
      const auto c = remainders[r].second;
      if (quota[c] + 1 < members[c].size()) {
        ++quota[c];
        ++assigned;
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (members[c].empty()) continue;
      quota[c] = std::clamp<std::size_t>(quota[c], 1, members[c].size() - 1);
    }
  }

  std::vector<bool> in_test(cases.cases.size(), false);
  for (std::size_t c = 0; c < k; ++c) {
    numkit::Rng rng(numkit::derive_seed(seed, c));
    auto idx = members[c];
    rng.shuffle(idx);
    for (std::size_t q = 0; q < quota[c]; ++q) in_test[idx[q]] = true;
  }

  SplitPair split;
  split.seed = seed;
  split.test_fraction = test_fraction;
  split.train = CaseSet{cases.case_type, cases.judgment_catalog, cases.evidence_catalog, {}};
  split.test = split.train;
  for (std::size_t i = 0; i < cases.cases.size(); ++i) {
    (in_test[i] ? split.test : split.train).cases.push_back(cases.cases[i]);
  }
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

SyntheticSpec default_synthetic_spec(CaseType case_type, std::size_t per_class) {
  const CatalogSet catalogs = builtin_catalogs();
  SyntheticSpec spec;
  spec.case_type = case_type;
  spec.per_class = per_class;
  spec.judgment_catalog = catalogs.get(Task::judgment, case_type);
  spec.evidence_catalog = catalogs.get(Task::evidence, case_type);
  if (case_type == CaseType::custody) {
    spec.lexicons = {{"تخيير", "يختار", "السابعة", "التخيير"},
                     {"لوالدتهم", "الأم", "أمهم", "الحاضنة"},
                     {"لوالدهم", "الأب", "أبيهم", "الولاية"},
                     {"النفقة", "الزيارة", "الرؤية", "التأجيل"}};
  } else {
    spec.lexicons = {{"لعوض", "المهر", "إعادة", "العوض"},
                     {"بدون", "الضرر", "الهجر", "الإعسار"},
                     {"رفض", "ردت", "كيدية", "الإثبات"},
                     {"الصلح", "إصلاح", "الحكمين", "مهلة"}};
  }
  spec.filler = {"المدعي",  "المدعى",   "الدعوى",  "الجلسة",  "المحكمة", "القاضي",
                 "حضر",     "وكيل",     "أفاد",    "طلب",     "قرر",     "سجل",
                 "النظر",   "الزوج",    "الزوجة",  "الأولاد", "الطفل",   "البنت",
                 "الابن",   "السكن",    "المدينة", "الشهود",  "البينة",  "اليمين",
                 "الصك",    "المرافعة", "الجواب",  "الطلاق",  "النكاح",  "العقد",
                 "الحال",   "الأسباب",  "الطرفين", "الحضور",  "الغياب",  "الموعد",
                 "ذكر",     "أجاب",     "قائلا",   "صحيح",    "وعليه",   "لذا"};
  return spec;
}

namespace {

void validate_spec(const SyntheticSpec& spec) {
  if (spec.per_class < 1) usage_error("synthetic spec: per-class count must be at least 1");
  if (spec.lexicons.size() != spec.judgment_catalog.size()) {
    usage_error("synthetic spec: need one lexicon per judgment class");
  }
  if (spec.filler.empty()) usage_error("synthetic spec: filler vocabulary is empty");
  if (spec.min_words < 1 || spec.max_words < spec.min_words) {
    usage_error("synthetic spec: bad word-count range");
  }
  if (spec.min_hits < 1 || spec.max_hits < spec.min_hits) usage_error("synthetic spec: bad keyword-hit range");
  std::map<std::string, std::size_t> owner;
  for (std::size_t c = 0; c < spec.lexicons.size(); ++c) {
    if (spec.lexicons[c].empty()) usage_error("synthetic spec: empty lexicon for class " + std::to_string(c));
    for (const auto& w : spec.lexicons[c]) {
      auto [it, inserted] = owner.emplace(w, c);
      if (!inserted && it->second != c) {
        usage_error("synthetic spec: keyword '" + w + "' appears in lexicons " +
                    std::to_string(it->second) + " and " + std::to_string(c));
      }
    }
  }
  for (const auto& w : spec.filler) {
    if (owner.contains(w)) usage_error("synthetic spec: filler word '" + w + "' is also a keyword");
  }
}

std::string two_digits(std::size_t v) {
  std::ostringstream s;
  s << std::setw(2) << std::setfill('0') << v;
  return s.str();
}

std::string decoy_date(numkit::Rng& rng) {
  const std::size_t day = 1 + rng.index(28);
  const std::size_t month = 1 + rng.index(12);
  switch (rng.index(3)) {
    case 0:
      return "بتاريخ " + std::to_string(1430 + rng.index(15)) + "/" + two_digits(month) + "/" +
             two_digits(day) + " هـ";
    case 1:
      return "مواليد " + two_digits(day) + "-" + two_digits(month) + "-" +
             std::to_string(2000 + rng.index(20));
    default:
      return "عام " + std::to_string(1990 + rng.index(30));
  }
}

std::string compose(numkit::Rng& rng, const SyntheticSpec& spec, const std::vector<std::string>* lexicon,
                    bool with_date) {
  const std::size_t n = spec.min_words + rng.index(spec.max_words - spec.min_words + 1);
  std::vector<std::string> words;
  words.reserve(n + 4);
  for (std::size_t i = 0; i < n; ++i) words.push_back(spec.filler[rng.index(spec.filler.size())]);
  if (lexicon) {
    const std::size_t hits = spec.min_hits + rng.index(spec.max_hits - spec.min_hits + 1);
    for (std::size_t h = 0; h < hits; ++h) {
      const auto pos = rng.index(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos),
                   (*lexicon)[rng.index(lexicon->size())]);
    }
  }
  if (with_date) {
    const auto pos = rng.index(words.size() + 1);
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), decoy_date(rng));
  }
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) text += (rng.index(8) == 0 ? "، " : " ");
    text += words[i];
  }
  return text + ".";
}

}  // namespace

CaseSet generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  CaseSet set{spec.case_type, spec.judgment_catalog, spec.evidence_catalog, {}};
  numkit::Rng rng(seed);
  const std::size_t k = spec.lexicons.size();
  for (std::size_t i = 0; i < spec.per_class; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      Case cs;
      cs.id = std::string(to_string(spec.case_type)) + "-" + two_digits(c) + "-" + std::to_string(i);
      cs.case_type = spec.case_type;
      cs.claim = compose(rng, spec, &spec.lexicons[c], false);
      cs.answer = compose(rng, spec, nullptr, rng.index(2) == 0);
      cs.pleading = compose(rng, spec, &spec.lexicons[c], true);
      cs.judgment = c;
      cs.evidence = c % spec.evidence_catalog.size();
      cs.provenance = Provenance::synthetic;
      set.cases.push_back(std::move(cs));
    }
  }
  return set;
}

void write_synthetic_embeddings(std::ostream& out, const SyntheticSpec& spec, std::size_t dim,
                                std::uint64_t seed) {
  validate_spec(spec);
  if (dim == 0) usage_error("embedding dimension must be positive");
  numkit::Rng rng(seed);
  std::vector<std::vector<double>> centres(spec.lexicons.size(), std::vector<double>(dim));
  for (auto& c : centres) {
    for (double& v : c) v = rng.normal();
  }
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (std::size_t c = 0; c < spec.lexicons.size(); ++c) {
    for (const auto& w : spec.lexicons[c]) {
      std::vector<double> v(dim);
      for (std::size_t d = 0; d < dim; ++d) v[d] = centres[c][d] + 0.3 * rng.normal();
      rows.emplace_back(w, std::move(v));
    }
  }
  std::set<std::string> seen;
  for (const auto& w : spec.filler) {
    if (!seen.insert(w).second) continue;
    std::vector<double> v(dim);
    for (double& x : v) x = 0.5 * rng.normal();
    rows.emplace_back(w, std::move(v));
  }
  out << rows.size() << ' ' << dim << '\n';
  out << std::setprecision(6) << std::fixed;
  for (const auto& [w, v] : rows) {
    out << w;
    for (double x : v) out << ' ' << x;
    out << '\n';
  }
}

}  // namespace qadaa::corpus
