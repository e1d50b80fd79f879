#pragma once

// Rule-file formalism: tokens, phrase patterns, canonical/target templates,
// and the TrPhrase / TrLex rule file format.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lite/diagnostic.hpp"

namespace lite {

struct Token {
  std::string display;
  std::string norm;

  // norm is match_form(display); punctuation-only tokens fall back to the
  // lowercased display so norm is never empty.
  static Token make(std::string_view display);

  bool punctuation_only() const;

  friend bool operator==(const Token&, const Token&) = default;
};

bool is_valid_variable_name(std::string_view name);

// ---------------------------------------------------------------------------
// Patterns

struct PatternElement;
using Sequence = std::vector<PatternElement>;

struct PatternElement {
  enum class Kind { Literal, Var, Group, Optional };

  Kind kind = Kind::Literal;
  Token token;                         // Literal
  std::string variable;                // Var
  std::vector<Sequence> alternatives;  // Group
  Sequence inner;                      // Optional, exactly one element

  static PatternElement literal(Token t);
  static PatternElement var(std::string name);
  static PatternElement group(std::vector<Sequence> alts);
  static PatternElement optional(PatternElement e);

  bool is_optional_var() const {
    return kind == Kind::Optional && inner.front().kind == Kind::Var;
  }

  friend bool operator==(const PatternElement&, const PatternElement&) = default;
};

struct Pattern {
  Sequence elements;
  friend bool operator==(const Pattern&, const Pattern&) = default;
};

// Throws lite::Error with code UnbalancedParenthesis, EmptyAlternative,
// DanglingOptional, BadVariableName, StrayAlternation or EmptyPattern.
Pattern parse_pattern(std::string_view text);

std::string to_string(const Pattern& p);
std::string to_string(const Sequence& s);

// Collapses Optional(Optional(x)) to Optional(x), recursively.
Pattern normalize(const Pattern& p);

bool is_nullable(const Sequence& s);
inline bool is_nullable(const Pattern& p) { return is_nullable(p.elements); }

// Variables referenced anywhere in the pattern, in first-occurrence order.
std::vector<std::string> variables_of(const Sequence& s);

// Variables occurring outside any Optional/Group, i.e. bound by every parse.
std::vector<std::string> mandatory_variables_of(const Sequence& s);

// First alternative of each group, optionals dropped. Used to derive a
// canonical when a rule omits one.
std::vector<PatternElement> first_path(const Sequence& s);

// ---------------------------------------------------------------------------
// Templates (canonical and target lines)

struct TemplateSlot {
  enum class Kind { Literal, Var, OptionalVar };

  Kind kind = Kind::Literal;
  Token token;           // Literal
  std::string variable;  // Var, OptionalVar

  friend bool operator==(const TemplateSlot&, const TemplateSlot&) = default;
};

struct Template {
  std::vector<TemplateSlot> slots;

  std::vector<std::string> variables() const;
  bool has_variable(std::string_view v) const;
  friend bool operator==(const Template&, const Template&) = default;
};

enum class TemplateMode {
  Canonical,  // matched against text: no groups, no punctuation-only tokens
  Target      // emitted only: `(`, `|` and stray `?` are plain text
};

// Throws lite::Error (GroupInTemplate, OptionalLiteralInTemplate,
// DuplicateTemplateVariable, BadVariableName, PunctuationOnlyToken,
// EmptyPattern).
Template parse_template(std::string_view text, TemplateMode mode);

std::string to_string(const Template& t);

// Normalized key linking split rule pieces: lowercased literal norms,
// `$$v` / `?$$v` markers, single spaces.
std::string canonical_key(const Template& t);
std::string canonical_key(const std::vector<Token>& tokens);

// Tokens of a plain attribute value ("un coca").
std::vector<Token> parse_token_list(std::string_view text);
std::string to_string(const std::vector<Token>& tokens);

// ---------------------------------------------------------------------------
// Rule files

enum class RuleRole { Source, Target, Monolithic };

struct FileRole {
  RuleRole kind = RuleRole::Monolithic;
  std::string canonical_language = "english";
  std::string target_language;  // Target role only

  static FileRole source(std::string canonical) {
    return {RuleRole::Source, std::move(canonical), {}};
  }
  static FileRole target(std::string lang, std::string canonical) {
    return {RuleRole::Target, std::move(canonical), std::move(lang)};
  }
  static FileRole monolithic(std::string canonical) {
    return {RuleRole::Monolithic, std::move(canonical), {}};
  }
};

// Equality on the line types below ignores line numbers: two files are
// structurally equal when they carry the same rules and comments.
struct SourceLine {
  Pattern pattern;
  std::size_t line = 0;
  friend bool operator==(const SourceLine& a, const SourceLine& b) {
    return a.pattern == b.pattern;
  }
};

struct TargetLine {
  std::optional<Template> tmpl;  // nullopt: blank `?` placeholder
  std::size_t line = 0;
  friend bool operator==(const TargetLine& a, const TargetLine& b) {
    return a.tmpl == b.tmpl;
  }
};

using TokenValue = std::optional<std::vector<Token>>;  // nullopt: `"?"`

struct UnitFragment {
  std::string category;
  std::vector<SourceLine> sources;
  std::map<std::string, TargetLine> targets;  // language or sign stream
  std::size_t line = 0;
  std::size_t end_line = 0;
  std::vector<std::string> comments;  // verbatim `#` lines directly above

  friend bool operator==(const UnitFragment& a, const UnitFragment& b) {
    return a.category == b.category && a.sources == b.sources &&
           a.targets == b.targets && a.comments == b.comments;
  }
};

struct LexemeFragment {
  std::string category;
  std::optional<Pattern> source;
  std::map<std::string, TokenValue> values;  // language or sign stream
  std::size_t line = 0;
  std::vector<std::string> comments;

  friend bool operator==(const LexemeFragment& a, const LexemeFragment& b) {
    return a.category == b.category && a.source == b.source &&
           a.values == b.values && a.comments == b.comments;
  }
};

using Fragment = std::variant<UnitFragment, LexemeFragment>;

struct RuleFile {
  FileRole role;
  std::string path;
  std::vector<Fragment> items;  // declaration order
  std::vector<std::string> trailing_comments;

  std::vector<const UnitFragment*> units() const;
  std::vector<const LexemeFragment*> lexemes() const;

  friend bool operator==(const RuleFile& a, const RuleFile& b) {
    return a.items == b.items && a.trailing_comments == b.trailing_comments;
  }
};

struct ParsedRuleFile {
  RuleFile file;
  Diagnostics diagnostics;
};

ParsedRuleFile parse_rule_file(std::string_view text, const FileRole& role,
                               std::string path = "<input>");

std::string serialize_rule_file(const RuleFile& file);
std::string serialize_fragment(const Fragment& f, const FileRole& role);

// Sign-table stream names, in canonical order.
inline constexpr std::string_view kStreams[] = {"gloss",    "head",
                                                "gaze",     "eyebrows",
                                                "aperture", "mouthing"};
bool is_stream_name(std::string_view s);

}  // namespace lite
