#pragma once

// Source matching, canonical paraphrase realization and translation through
// the canonical pivot.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lite/project.hpp"

namespace lite {

struct Utterance {
  std::string raw;
  std::vector<Token> tokens;
};

/// Splits on Unicode whitespace and normalizes each token; `? ! . ,` are
/// stripped from token edges and tokens left empty are dropped.
/// Throws Error("EmptyUtterance").
Utterance tokenize(std::string_view raw);

struct MatchNode;

struct Binding {
  std::string variable;
  std::size_t start = 0;  // token span [start, end)
  std::size_t end = 0;
  std::shared_ptr<const MatchNode> value;
};

/// One parse of a unit line or lexeme over a token span.
struct MatchNode {
  CategoryEntry::Kind kind = CategoryEntry::Kind::Unit;
  std::size_t index = 0;       // into project.units / project.lexemes
  std::size_t line_index = 0;  // source line; 0 for lexemes and canonical parses
  std::size_t start = 0;
  std::size_t end = 0;
  std::vector<Binding> bindings;  // pattern order, at most one per variable

  const Binding* find(std::string_view variable) const;
};

struct MatchResult {
  std::shared_ptr<const MatchNode> root;
  // (unit declaration index, line index, then the same tuple for each bound
  // value in pattern order). Ties are broken by token spans.
  std::vector<std::size_t> priority;
  std::vector<std::size_t> spans;

  const TrPhraseUnit& unit(const AssembledProject& p) const {
    return p.units[root->index];
  }
  std::size_t line_index() const { return root->line_index; }
};

using Scope = std::set<CanonicalKey>;

/// All full-utterance parses of $$top source lines, best first. An optional
/// scope restricts $$top to units with those canonical keys.
/// Throws Error("NoMatch") when there is none.
std::vector<MatchResult> match_source(const AssembledProject& project,
                                      const Utterance& utt,
                                      const Scope* scope = nullptr);

/// Same as match_source but returns an empty list instead of throwing.
std::vector<MatchResult> find_source_matches(const AssembledProject& project,
                                             const Utterance& utt,
                                             const Scope* scope = nullptr);

/// Parses of a canonical string against $$top canonical templates (the
/// second, target-side stage). Throws Error("NoCanonicalMatch").
std::vector<MatchResult> match_canonical(const AssembledProject& project,
                                         std::string_view canonical);

/// Throws Error("UnboundMandatoryVariable").
std::string realize_canonical(const AssembledProject& project,
                              const MatchResult& match);

/// Realizes `lang` for an already computed canonical parse.
/// Throws Error("MissingTarget") / Error("UnboundMandatoryVariable").
std::string realize_target(const AssembledProject& project,
                           const MatchResult& canonical_match,
                           const LanguageTag& lang);

std::string translate_canonical(const AssembledProject& project,
                                std::string_view canonical,
                                const LanguageTag& lang);

struct TargetOutput {
  std::string text;        // set on success
  std::string error_code;  // set on failure
  std::string error_message;
  bool ok() const { return error_code.empty(); }
};

struct TranslationResult {
  std::string paraphrase;
  std::map<LanguageTag, TargetOutput> outputs;
};

/// Throws Error("NoMatch"); per-language failures are recorded in outputs.
TranslationResult translate(const AssembledProject& project, const Utterance& utt,
                            const std::vector<LanguageTag>& langs,
                            const Scope* scope = nullptr);

}  // namespace lite
