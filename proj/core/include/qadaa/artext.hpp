#pragma once

// Arabic text preprocessing: diacritic stripping, date removal,
// tokenization and stop-word filtering, composed in that fixed order.

#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace qadaa::artext {

using TokenList = std::vector<std::string>;

// UTF-8 helpers. Malformed sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

bool is_space(char32_t cp) noexcept;
bool is_punctuation(char32_t cp) noexcept;

/// Harakat U+064B..U+065F, superscript alef U+0670 and tatweel U+0640.
std::set<char32_t> default_diacritics();

struct PreprocessConfig {
  std::unordered_set<std::string> stoplist;
  bool strip_diacritics = true;
  bool remove_dates = true;
  std::set<char32_t> diacritic_codepoints = default_diacritics();
  bool remove_tatweel = true;
  bool collapse_whitespace = false;
  bool fold_alef = false;  // أ إ آ ٱ -> ا
  bool stem = false;       // light prefix/suffix stripping

  /// Throws if strip_diacritics is set with an empty codepoint set.
  void validate() const;
};

/// Per-character normalization used by the diacritic stage: configured
/// codepoints (and tatweel) dropped, optional alef folding.
std::string strip_diacritics(std::string_view text, const PreprocessConfig& config);

/// Removes numeric dates (d/m/y or y/m/d, separators '/', '-', '.'),
/// Hijri 13xx/14xx and Gregorian 19xx/20xx years, and bare years next to a
/// date context word or era marker. Whitespace is re-collapsed.
std::string remove_dates(std::string_view text);
/// Same, with tokens from `transparent` allowed inside the gap between a
/// year and its context word or era marker, as if they were whitespace.
std::string remove_dates(std::string_view text, const std::unordered_set<std::string>& transparent);

/// Splits on whitespace and punctuation (Latin, Arabic, general).
TokenList tokenize(std::string_view text);

TokenList drop_stopwords(const TokenList& tokens,
                         const std::unordered_set<std::string>& stoplist);

/// Light stemmer: strips one common prefix and one common suffix when the
/// remaining stem keeps at least three letters.
std::string light_stem(std::string_view token);

/// strip_diacritics -> remove_dates (stop words transparent) -> tokenize ->
/// drop_stopwords, each
/// stage gated by its config flag; stemming (when enabled) runs last.
TokenList preprocess(std::string_view text, const PreprocessConfig& config);

std::string join(const TokenList& tokens, std::string_view sep = " ");

/// One token per line, UTF-8; blank lines and lines starting with '#'
/// are skipped.
std::unordered_set<std::string> load_stoplist(const std::filesystem::path& path);

/// Stop words normalized with the config's own diacritic stage so they
/// match the tokens they are compared against.
std::unordered_set<std::string> normalize_stoplist(
    const std::unordered_set<std::string>& raw, const PreprocessConfig& config);

/// Built-in list shipped with the library (also in core/data/stopwords_ar.txt).
std::unordered_set<std::string> default_stoplist();

/// JSON config: stoplist_path, strip_diacritics, remove_dates, fold_alef,
/// stem. Relative stoplist paths resolve against the config file's folder.
PreprocessConfig load_preprocess_config(const std::filesystem::path& path);
/// Same keys from an already parsed object.
PreprocessConfig parse_preprocess_config(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir = {});

/// Default config with the built-in stoplist, normalized.
PreprocessConfig default_config();

// Full round-trippable form (stoplist words inline) used by model artifacts.
void to_json(nlohmann::json& j, const PreprocessConfig& config);
void from_json(const nlohmann::json& j, PreprocessConfig& config);

}  // namespace qadaa::artext
