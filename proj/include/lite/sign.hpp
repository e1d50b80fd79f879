#pragma once

// Speech-to-sign translation: six aligned output streams produced by sign
// target rules, with columns for variables filled from sign lexemes, and
// SiGML-style XML rendering.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lite/engine.hpp"
#include "lite/project.hpp"

namespace lite {

enum class Stream { Gloss, Head, Gaze, Eyebrows, Aperture, Mouthing };
inline constexpr std::size_t kStreamCount = 6;

std::string_view stream_name(Stream s);
std::optional<Stream> parse_stream(std::string_view name);

// The designated no-op value: emits no nonmanual element.
inline constexpr std::string_view kNeutral = "Neutral";

struct SignSlot {
  enum class Kind { Symbol, Var } kind = Kind::Symbol;
  std::string value;  // symbol text or variable name
  friend bool operator==(const SignSlot&, const SignSlot&) = default;
};

template <typename T>
using PerStream = std::array<T, kStreamCount>;

struct SignTargetRule {
  std::string category;
  CanonicalKey key;
  PerStream<std::vector<SignSlot>> streams;
  Origin origin;

  std::size_t width() const { return streams[0].size(); }
  // Variable owning column `c`, if any.
  std::optional<std::string> column_variable(std::size_t c) const;

  friend bool operator==(const SignTargetRule& a, const SignTargetRule& b) {
    return a.category == b.category && a.key == b.key && a.streams == b.streams;
  }
};

struct SignLexEntry {
  std::string category;
  CanonicalKey key;
  PerStream<std::optional<std::vector<std::string>>> streams;
  std::size_t width = 1;
  Origin origin;

  friend bool operator==(const SignLexEntry& a, const SignLexEntry& b) {
    return a.category == b.category && a.key == b.key && a.streams == b.streams &&
           a.width == b.width;
  }
};

struct SignRuleSet {
  std::vector<SignTargetRule> rules;
  std::vector<SignLexEntry> lexemes;

  const SignTargetRule* find_rule(std::string_view category,
                                  std::string_view key) const;
  const SignLexEntry* find_lexeme(std::string_view category,
                                  std::string_view key) const;
  void append(SignRuleSet other);

  friend bool operator==(const SignRuleSet&, const SignRuleSet&) = default;
};

struct SignTable {
  PerStream<std::vector<std::string>> streams;

  std::size_t columns() const { return streams[0].size(); }
  const std::vector<std::string>& operator[](Stream s) const {
    return streams[static_cast<std::size_t>(s)];
  }
  friend bool operator==(const SignTable&, const SignTable&) = default;
};

// Aligned, column-padded text dump (one line per stream).
std::string format_table(const SignTable& t);

enum class SignRuleFormat { Text, Csv };

struct ParsedSignRules {
  SignRuleSet rules;
  Diagnostics diagnostics;
};

/// Text form: a rule file whose units carry six `Target/<stream>` lines
/// (units without any stream line are ignored). `role` decides whether
/// Source lines are expected.
///
/// CSV form, one row per stream, header required:
///   kind,category,canonical,stream,slots...
///   phrase,top,ce train ne circule pas via $$station,gloss,TRAIN,CE,$$station,ALLER,PAS
///   lex,station,genčve,gloss,GENEVE
///
/// Errors: StreamLengthMismatch, MissingStream, InconsistentVarColumn,
/// VariableNotInCanonical.
ParsedSignRules parse_sign_rules(std::string_view input, SignRuleFormat format,
                                 const FileRole& role, std::string path = "<input>");

/// Throws Error("NoMatch"), Error("MissingSignTarget").
SignTable sign_translate(const AssembledProject& project, const SignRuleSet& rules,
                         const Utterance& utt);

/// Realizes a table from an already computed canonical parse.
SignTable realize_sign_table(const AssembledProject& project,
                             const SignRuleSet& rules, const MatchResult& canonical);

struct SignLexicon {
  std::map<std::string, std::string> manual;                           // gloss -> HamNoSys
  std::map<std::pair<std::string, std::string>, std::string> nonmanual;  // (stream, symbol) -> tag
  std::map<std::string, std::string> mouthing;                         // symbol -> picture
};

enum class SignLexiconKind { Manual, Nonmanual, Mouthing };

/// Spreadsheet layouts (header row required, first column = symbol):
///   manual:     gloss,hamnosys
///   nonmanual:  symbol,stream,tag
///   mouthing:   mouthing,picture
/// Throws Error("BadLexicon") on malformed rows or duplicate keys.
void load_lexicon_csv(SignLexicon& lex, SignLexiconKind kind, std::string_view csv);

/// Throws Error("MissingLexiconEntry").
std::string render_sigml(const SignTable& table, const SignLexicon& lex);

/// Appends a `?` row for every symbol used by the rules but absent from the
/// spreadsheet; existing text is kept byte for byte.
std::string refresh_sign_lexicon(SignLexiconKind kind, std::string_view csv,
                                 const SignRuleSet& rules);

struct LoadedSignTarget {
  std::string lang;
  SignRuleSet rules;
  SignLexicon lexicon;
  Diagnostics diagnostics;
};

LoadedSignTarget load_sign_target(const ProjectManifest& manifest,
                                  const SignTargetConfig& config);

}  // namespace lite
