#include "qadaa/artext.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <nlohmann/json.hpp>
#include <regex>
#include <sstream>

#include "qadaa/error.hpp"

namespace qadaa::artext {

// ---------------------------------------------------------------------------
// UTF-8

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      len = 2;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      len = 3;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      len = 4;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > n) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlongs, surrogates and out-of-range scalars.
    static constexpr std::array<char32_t, 5> kMin{0, 0, 0x80, 0x800, 0x10000};
    if (!ok || cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size() * 2);
  for (char32_t cp : text) append_utf8(out, cp);
  return out;
}

// ---------------------------------------------------------------------------
// Character classes

bool is_space(char32_t cp) noexcept {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000: case 0xFEFF:
      return true;
    default:
      break;
  }
  // En quad .. hair space, and the zero-width format characters.
  return (cp >= 0x2000 && cp <= 0x200F) || cp == 0x2060;
}

bool is_punctuation(char32_t cp) noexcept {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  if (cp >= 0xA1 && cp <= 0xBF) return true;  // ¡ « » ¿ ...
  if (cp == 0xD7 || cp == 0xF7) return true;
  switch (cp) {
    case 0x060C:  // ، comma
    case 0x060D:  // date separator
    case 0x061B:  // ؛ semicolon
    case 0x061E:  // triple dot
    case 0x061F:  // ؟ question mark
    case 0x066A:  // ٪ percent
    case 0x066B:  // decimal separator
    case 0x066C:  // thousands separator
    case 0x066D:  // five pointed star
    case 0x06D4:  // full stop
    case 0xFD3E:  // ornate parentheses
    case 0xFD3F:
      return true;
    default:
      break;
  }
  if (cp >= 0x2010 && cp <= 0x2027) return true;  // dashes, quotes, bullets
  if (cp >= 0x2030 && cp <= 0x205E) return true;
  if (cp >= 0x3001 && cp <= 0x3003) return true;
  if (cp >= 0xFF01 && cp <= 0xFF0F) return true;
  return false;
}

namespace {

bool is_delimiter(char32_t cp) noexcept { return is_space(cp) || is_punctuation(cp); }

constexpr char32_t kTatweel = 0x0640;

std::string collapse_spaces(std::string_view text) {
  const std::u32string cps = decode_utf8(text);
  std::u32string out;
  out.reserve(cps.size());
  bool pending = false;
  for (char32_t cp : cps) {
    if (is_space(cp)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(U' ');
    pending = false;
    out.push_back(cp);
  }
  return encode_utf8(out);
}

}  // namespace

std::set<char32_t> default_diacritics() {
  std::set<char32_t> set;
  for (char32_t cp = 0x064B; cp <= 0x065F; ++cp) set.insert(cp);
  set.insert(0x0670);
  set.insert(kTatweel);
  return set;
}

void PreprocessConfig::validate() const {
  if (strip_diacritics && diacritic_codepoints.empty()) {
    usage_error("preprocess config: strip_diacritics is set but the diacritic set is empty");
  }
}

// ---------------------------------------------------------------------------
// Stages

std::string strip_diacritics(std::string_view text, const PreprocessConfig& config) {
  std::u32string cps = decode_utf8(text);
  std::u32string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) {
    if (config.strip_diacritics && config.diacritic_codepoints.contains(cp)) continue;
    if (config.remove_tatweel && cp == kTatweel) continue;
    if (config.fold_alef && (cp == 0x0622 || cp == 0x0623 || cp == 0x0625 || cp == 0x0671)) {
      cp = 0x0627;
    }
    out.push_back(cp);
  }
  std::string result = encode_utf8(out);
  return config.collapse_whitespace ? collapse_spaces(result) : result;
}

namespace {

// Digit in ASCII, Arabic-Indic (U+0660..) or Extended Arabic-Indic (U+06F0..).
std::string digit(int d) {
  std::string s = "(?:";
  s += static_cast<char>('0' + d);
  s += "|\xD9";
  s += static_cast<char>(0xA0 + d);
  s += "|\xDB";
  s += static_cast<char>(0xB0 + d);
  s += ")";
  return s;
}

std::string any_digit() { return "(?:[0-9]|\xD9[\xA0-\xA9]|\xDB[\xB0-\xB9])"; }

// 13xx, 14xx (Hijri) and 19xx, 20xx (Gregorian).
std::string year() {
  const std::string d = any_digit();
  return "(?:" + digit(1) + "(?:" + digit(3) + "|" + digit(4) + "|" + digit(9) + ")|" +
         digit(2) + digit(0) + ")" + d + d;
}

std::string day_or_month() { return any_digit() + "{1,2}"; }

const std::string kSep = "[/.\\-]";
// One delimiter codepoint (is_space or is_punctuation) in UTF-8.
const std::string kDelim =
    "(?:[\\s!-/:-@\\[-`{-~]|\xC2[\x85\xA0-\xBF]|\xC3[\x97\xB7]|\xD8[\x8C\x8D\x9B\x9E\x9F]|"
    "\xD9[\xAA-\xAD]|\xDB\x94|\xE1\x9A\x80|\xE2\x80[\x80-\xA9\xAF-\xBF]|\xE2\x81[\x80-\xA0]|"
    "\xE3\x80[\x80-\x83]|\xEF\xB4[\xBE\xBF]|\xEF\xBB\xBF|\xEF\xBC[\x81-\x8F])";

// Era markers: هـ (possibly already stripped of tatweel), ه, and م, as a
// separate word after the year.
const std::string kEra = "(?:" + kDelim + ")*(?:\xD9\x87\xD9\x80|\xD9\x87|\xD9\x85)(?=" + kDelim + "|$)";

// Context words that mark a following bare number as a year:
// عام العام لعام سنة السنة لسنة تاريخ بتاريخ التاريخ مواليد الموافق
const std::string kContext =
    "(\xD8\xB9\xD8\xA7\xD9\x85|\xD8\xA7\xD9\x84\xD8\xB9\xD8\xA7\xD9\x85|"
    "\xD9\x84\xD8\xB9\xD8\xA7\xD9\x85|\xD8\xB3\xD9\x86\xD8\xA9|"
    "\xD8\xA7\xD9\x84\xD8\xB3\xD9\x86\xD8\xA9|\xD9\x84\xD8\xB3\xD9\x86\xD8\xA9|"
    "\xD8\xAA\xD8\xA7\xD8\xB1\xD9\x8A\xD8\xAE|\xD8\xA8\xD8\xAA\xD8\xA7\xD8\xB1\xD9\x8A\xD8\xAE|"
    "\xD8\xA7\xD9\x84\xD8\xAA\xD8\xA7\xD8\xB1\xD9\x8A\xD8\xAE|"
    "\xD9\x85\xD9\x88\xD8\xA7\xD9\x84\xD9\x8A\xD8\xAF|"
    "\xD8\xA7\xD9\x84\xD9\x85\xD9\x88\xD8\xA7\xD9\x81\xD9\x82)"
    "((?:" + kDelim + ")+)";

struct DatePattern {
  std::regex re;
  bool keep_context;  // group 1 (the context word) survives
};

const std::vector<DatePattern>& date_patterns() {
  static const std::vector<DatePattern> patterns = [] {
    const auto flags = std::regex::ECMAScript | std::regex::optimize;
    const std::string dm = day_or_month();
    const std::string y = year();
    std::vector<DatePattern> p;
    // d/m/yyyy and yyyy/m/d, optional era marker.
    p.push_back({std::regex(dm + kSep + dm + kSep + y + "(?:" + kEra + ")?", flags), false});
    p.push_back({std::regex(y + kSep + dm + kSep + dm + "(?:" + kEra + ")?", flags), false});
    // Context word + bare year; the context word is kept.
    p.push_back({std::regex(kContext + y + "(?:" + kEra + ")?", flags), true});
    // Bare year + era marker.
    p.push_back({std::regex(y + kEra, flags), false});
    return p;
  }();
  return patterns;
}

// Codepoint immediately before / after a byte offset.
char32_t cp_before(std::string_view s, std::size_t pos) {
  if (pos == 0) return 0;
  std::size_t start = pos - 1;
  while (start > 0 && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) --start;
  auto cps = decode_utf8(s.substr(start, pos - start));
  return cps.empty() ? 0 : cps.back();
}

char32_t cp_at(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return 0;
  std::size_t len = 1;
  while (pos + len < s.size() && (static_cast<unsigned char>(s[pos + len]) & 0xC0) == 0x80) ++len;
  auto cps = decode_utf8(s.substr(pos, len));
  return cps.empty() ? 0 : cps.front();
}

bool is_digit_cp(char32_t cp) noexcept {
  return (cp >= U'0' && cp <= U'9') || (cp >= 0x0660 && cp <= 0x0669) ||
         (cp >= 0x06F0 && cp <= 0x06F9);
}

std::size_t utf8_len_at(std::string_view s, std::size_t pos) {
  std::size_t len = 1;
  while (pos + len < s.size() && (static_cast<unsigned char>(s[pos + len]) & 0xC0) == 0x80) ++len;
  return len;
}

// Applies one pattern; a match counts only if it is not glued to a
// neighbouring digit (or, for context matches, to a preceding letter).
// Matches run on `mask`, a copy of `text` with the same byte layout; both
// are rewritten in step.
void apply_pattern(std::string& text, std::string& mask, const DatePattern& pattern, bool& changed) {
  std::string out;
  std::string out_mask;
  out.reserve(text.size());
  out_mask.reserve(mask.size());
  std::size_t pos = 0;
  std::smatch m;
  auto copy = [&](std::size_t from, std::size_t to) {
    out.append(text, from, to - from);
    out_mask.append(mask, from, to - from);
  };
  while (pos < mask.size()) {
    auto begin = mask.cbegin() + static_cast<std::ptrdiff_t>(pos);
    const auto flags = pos == 0 ? std::regex_constants::match_default
                                : std::regex_constants::match_prev_avail;
    if (!std::regex_search(begin, mask.cend(), m, pattern.re, flags)) break;
    const std::size_t start = pos + static_cast<std::size_t>(m.position(0));
    const std::size_t end = start + static_cast<std::size_t>(m.length(0));
    const char32_t before = cp_before(mask, start);
    const char32_t after = cp_at(mask, end);
    bool ok = !is_digit_cp(after);
    if (pattern.keep_context) {
      ok = ok && (before == 0 || is_delimiter(before));
    } else {
      ok = ok && !is_digit_cp(before);
    }
    if (!ok) {
      const std::size_t step = utf8_len_at(mask, start);
      copy(pos, start + step);
      pos = start + step;
      continue;
    }
    copy(pos, start);
    if (pattern.keep_context) {
      const std::size_t ctx = pos + static_cast<std::size_t>(m.position(1));
      copy(ctx, ctx + static_cast<std::size_t>(m.length(1)));
    }
    out += ' ';
    out_mask += ' ';
    changed = true;
    pos = end;
  }
  copy(pos, mask.size());
  text = std::move(out);
  mask = std::move(out_mask);
}

// Blanks every token found in `transparent`, byte for byte.
std::string mask_tokens(const std::string& text, const std::unordered_set<std::string>& transparent) {
  std::string mask = text;
  if (transparent.empty()) return mask;
  std::size_t token_start = std::string::npos;
  auto close = [&](std::size_t end) {
    if (token_start == std::string::npos) return;
    if (transparent.contains(text.substr(token_start, end - token_start))) {
      std::fill(mask.begin() + static_cast<std::ptrdiff_t>(token_start),
                mask.begin() + static_cast<std::ptrdiff_t>(end), ' ');
    }
    token_start = std::string::npos;
  };
  for (std::size_t i = 0; i < text.size();) {
    const std::size_t len = utf8_len_at(text, i);
    if (is_delimiter(cp_at(text, i))) {
      close(i);
    } else if (token_start == std::string::npos) {
      token_start = i;
    }
    i += len;
  }
  close(text.size());
  return mask;
}

}  // namespace

std::string remove_dates(std::string_view text) { return remove_dates(text, {}); }

std::string remove_dates(std::string_view text, const std::unordered_set<std::string>& transparent) {
  std::string current(text);
  bool changed = false;
  // Repeat until stable: a removal can bring a context word next to
  // another year, or turn a token into a transparent one.
  for (bool again = true; again;) {
    again = false;
    std::string mask = mask_tokens(current, transparent);
    for (const DatePattern& p : date_patterns()) apply_pattern(current, mask, p, again);
    changed = changed || again;
  }
  return changed ? collapse_spaces(current) : current;
}

TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::u32string current;
  for (char32_t cp : decode_utf8(text)) {
    if (is_delimiter(cp)) {
      if (!current.empty()) {
        tokens.push_back(encode_utf8(current));
        current.clear();
      }
    } else {
      current.push_back(cp);
    }
  }
  if (!current.empty()) tokens.push_back(encode_utf8(current));
  return tokens;
}

TokenList drop_stopwords(const TokenList& tokens,
                         const std::unordered_set<std::string>& stoplist) {
  TokenList out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stoplist.contains(t)) out.push_back(t);
  }
  return out;
}

std::string light_stem(std::string_view token) {
  static const std::vector<std::u32string> prefixes = {U"وال", U"بال", U"كال", U"فال",
                                                       U"لل",  U"ال",  U"و"};
  static const std::vector<std::u32string> suffixes = {U"ها", U"ان", U"ات", U"ون", U"ين",
                                                       U"يه", U"ية", U"ه",  U"ة",  U"ي"};
  std::u32string w = decode_utf8(token);
  for (const auto& p : prefixes) {
    if (w.size() >= p.size() + 3 && w.starts_with(p)) {
      w.erase(0, p.size());
      break;
    }
  }
  bool stripped = true;
  while (stripped) {
    stripped = false;
    for (const auto& s : suffixes) {
      if (w.size() >= s.size() + 3 && w.ends_with(s)) {
        w.erase(w.size() - s.size());
        stripped = true;
        break;
      }
    }
  }
  return encode_utf8(w);
}

TokenList preprocess(std::string_view text, const PreprocessConfig& config) {
  std::string normalized(text);
  if (config.strip_diacritics || config.remove_tatweel || config.fold_alef ||
      config.collapse_whitespace) {
    normalized = strip_diacritics(normalized, config);
  }
  if (config.remove_dates) normalized = remove_dates(normalized, config.stoplist);
  TokenList tokens = tokenize(normalized);
  if (!config.stoplist.empty()) tokens = drop_stopwords(tokens, config.stoplist);
  if (config.stem) {
    for (auto& t : tokens) t = light_stem(t);
  }
  return tokens;
}

std::string join(const TokenList& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stop lists and config files

namespace {

constexpr std::string_view kDefaultStopwords =
    "في من إلى الى على عن مع هذا هذه ذلك تلك التي الذي الذين اللذان اللتان أن ان إن كان "
    "كانت يكون قد لقد لا ما لم لن هو هي هم هن ثم أو او و بعد قبل عند كل حيث حتى إذا اذا "
    "أيضا ايضا بين غير كما لكن وقد فقد منذ نحن أنا انا أنت انت هناك هنا عليه عليها فيه "
    "فيها منه منها به بها له لها وهو وهي ولا وما يا أي اي التى الذى";

}  // namespace

std::unordered_set<std::string> default_stoplist() {
  std::unordered_set<std::string> out;
  std::istringstream in{std::string(kDefaultStopwords)};
  std::string w;
  while (in >> w) out.insert(w);
  return out;
}

std::unordered_set<std::string> load_stoplist(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::not_found, "cannot open stop-word list: " + path.string());
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Trim ASCII whitespace.
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);
    if (line.starts_with('#')) continue;
    out.insert(line);
  }
  return out;
}

std::unordered_set<std::string> normalize_stoplist(
    const std::unordered_set<std::string>& raw, const PreprocessConfig& config) {
  std::unordered_set<std::string> out;
  for (const auto& w : raw) {
    for (auto& t : tokenize(strip_diacritics(w, config))) out.insert(std::move(t));
  }
  return out;
}

PreprocessConfig default_config() {
  PreprocessConfig config;
  config.stoplist = normalize_stoplist(default_stoplist(), config);
  return config;
}

PreprocessConfig load_preprocess_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::not_found, "cannot open preprocess config: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    data_error("preprocess config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) data_error("preprocess config must be an object: " + path.string());
  return parse_preprocess_config(j, path.parent_path());
}

PreprocessConfig parse_preprocess_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  static const std::set<std::string> known{"stoplist_path", "strip_diacritics", "remove_dates",
                                           "remove_tatweel", "collapse_whitespace", "fold_alef", "stem"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) usage_error("preprocess config: unknown key '" + key + "'");
  }
  PreprocessConfig config;
  auto flag = [&](const char* key, bool& target) {
    if (j.contains(key)) {
      if (!j[key].is_boolean()) usage_error(std::string("preprocess config: '") + key + "' must be a boolean");
      target = j[key].get<bool>();
    }
  };
  flag("strip_diacritics", config.strip_diacritics);
  flag("remove_dates", config.remove_dates);
  flag("remove_tatweel", config.remove_tatweel);
  flag("collapse_whitespace", config.collapse_whitespace);
  flag("fold_alef", config.fold_alef);
  flag("stem", config.stem);

  std::unordered_set<std::string> raw = default_stoplist();
  if (j.contains("stoplist_path") && !j["stoplist_path"].is_null()) {
    if (!j["stoplist_path"].is_string()) usage_error("preprocess config: 'stoplist_path' must be a string");
    const auto sp = j["stoplist_path"].get<std::string>();
    if (sp.empty()) {
      raw.clear();
    } else {
      std::filesystem::path p(sp);
      if (p.is_relative()) p = base_dir / p;
      raw = load_stoplist(p);
    }
  }
  config.stoplist = normalize_stoplist(raw, config);
  config.validate();
  return config;
}

void to_json(nlohmann::json& j, const PreprocessConfig& config) {
  std::vector<std::string> words(config.stoplist.begin(), config.stoplist.end());
  std::sort(words.begin(), words.end());
  std::vector<std::uint32_t> cps(config.diacritic_codepoints.begin(),
                                 config.diacritic_codepoints.end());
  j = nlohmann::json{{"strip_diacritics", config.strip_diacritics},
                     {"remove_dates", config.remove_dates},
                     {"remove_tatweel", config.remove_tatweel},
                     {"collapse_whitespace", config.collapse_whitespace},
                     {"fold_alef", config.fold_alef},
                     {"stem", config.stem},
                     {"diacritic_codepoints", cps},
                     {"stoplist", words}};
}

void from_json(const nlohmann::json& j, PreprocessConfig& config) {
  config.strip_diacritics = j.at("strip_diacritics").get<bool>();
  config.remove_dates = j.at("remove_dates").get<bool>();
  config.remove_tatweel = j.at("remove_tatweel").get<bool>();
  config.collapse_whitespace = j.at("collapse_whitespace").get<bool>();
  config.fold_alef = j.at("fold_alef").get<bool>();
  config.stem = j.at("stem").get<bool>();
  config.diacritic_codepoints.clear();
  for (auto cp : j.at("diacritic_codepoints").get<std::vector<std::uint32_t>>()) {
    config.diacritic_codepoints.insert(static_cast<char32_t>(cp));
  }
  config.stoplist.clear();
  for (auto& w : j.at("stoplist").get<std::vector<std::string>>()) config.stoplist.insert(w);
  config.validate();
}

}  // namespace qadaa::artext
