#pragma once

// Merging split source/target rule files into one validated project, and
// producing the "blank" target files handed to translators.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lite/diagnostic.hpp"
#include "lite/formalism.hpp"

namespace lite {

using CanonicalKey = std::string;
using LanguageTag = std::string;

struct TargetFileRef {
  LanguageTag lang;
  std::string path;
};

struct SignLexiconPaths {
  std::string manual;
  std::string nonmanual;
  std::string mouthing;
};

struct SignTargetConfig {
  LanguageTag lang;
  std::vector<std::string> rule_files;  // .lite text or .csv
  SignLexiconPaths lexicon;
};

/// Project description loaded from a JSON document. Relative paths are
/// resolved against the manifest's directory by load_manifest.
///
///   {
///     "id": "cafe",
///     "source_language": "english",
///     "locale": "en-US",                       (optional, SRGS xml:lang)
///     "target_languages": ["french"],
///     "source_files": ["cafe.en.lite"],
///     "target_files": [{"lang": "french", "path": "cafe.fr.lite"}],
///     "sign_targets": [{"lang": "lsf-ch", "rules": ["train.lite"],
///                       "lexicon": {"manual": "m.csv", "nonmanual": "n.csv",
///                                   "mouthing": "o.csv"}}],
///     "questionnaire_files": ["survey.json"]
///   }
struct ProjectManifest {
  std::string id;
  LanguageTag source_language;
  std::string locale;
  std::vector<LanguageTag> target_languages;
  std::vector<std::string> source_files;
  std::vector<TargetFileRef> target_files;
  std::vector<SignTargetConfig> sign_targets;
  std::vector<std::string> questionnaire_files;

  std::filesystem::path base_dir;
};

ProjectManifest parse_manifest(std::string_view json_text,
                               std::filesystem::path base_dir = {});
ProjectManifest load_manifest(const std::filesystem::path& path);

/// Throws Error("BadManifest") when invariants fail.
void check_manifest(const ProjectManifest& m);

struct Origin {
  std::string path;
  std::size_t line = 0;
  std::size_t end_line = 0;
};

struct TrPhraseUnit {
  std::string category;
  std::vector<Pattern> source_lines;
  Template canonical;
  CanonicalKey key;
  std::map<LanguageTag, Template> targets;  // filled translations only
  Origin origin;
  std::size_t declaration_index = 0;
};

struct TrLexEntry {
  std::string category;
  Pattern source_pattern;
  std::vector<Token> canonical;
  CanonicalKey key;
  std::map<LanguageTag, std::vector<Token>> targets;  // filled translations only
  Origin origin;
  std::size_t declaration_index = 0;
};

struct CategoryEntry {
  enum class Kind { Unit, Lexeme } kind;
  std::size_t index;  // into units / lexemes
};

struct AssembledProject {
  std::string id;
  LanguageTag source_language;
  std::string locale;
  std::vector<LanguageTag> target_languages;

  std::vector<TrPhraseUnit> units;  // source declaration order
  std::vector<TrLexEntry> lexemes;  // source declaration order
  // Category -> its units and lexemes ordered by declaration_index.
  std::map<std::string, std::vector<CategoryEntry>> categories;
  // Category -> categories referenced from its units' source lines.
  std::map<std::string, std::set<std::string>> variable_graph;

  const TrPhraseUnit* find_unit(std::string_view category,
                                std::string_view key) const;
  const TrLexEntry* find_lexeme(std::string_view category,
                                std::string_view key) const;
  std::vector<CanonicalKey> top_keys() const;
  bool has_target_language(std::string_view lang) const;

  // (key, lang) -> target text, over units and lexemes.
  std::map<std::pair<CanonicalKey, LanguageTag>, std::string> target_index() const;
};

inline constexpr std::string_view kTop = "top";

struct AssemblyResult {
  AssembledProject project;
  Diagnostics diagnostics;
  bool ok() const { return !has_errors(diagnostics); }
};

AssemblyResult assemble(const ProjectManifest& manifest,
                        const std::vector<RuleFile>& files);

Diagnostics validate(const AssembledProject& project);

std::string generate_blank_targets(const AssembledProject& project,
                                   const LanguageTag& lang);

std::string refresh_blank_targets(const RuleFile& existing,
                                  const AssembledProject& project,
                                  const LanguageTag& lang);

/// Everything the tools and the service need from one manifest: the
/// manifest, the parsed rule files, the assembled project and all
/// diagnostics (parse + assembly + validation).
struct LoadedProject {
  ProjectManifest manifest;
  std::vector<RuleFile> files;
  AssembledProject project;
  Diagnostics diagnostics;
  bool ok() const { return !has_errors(diagnostics); }
};

LoadedProject load_project(const ProjectManifest& manifest);
LoadedProject load_project(const std::filesystem::path& manifest_path);

std::string read_file(const std::filesystem::path& p);

}  // namespace lite
