#pragma once

// Recognition grammars compiled from a project: analytic counting,
// derivation enumeration, and lite-bnf / SRGS XML emission.

#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lite/engine.hpp"
#include "lite/project.hpp"

namespace lite {

struct Regex {
  enum class Kind { Terminal, RuleRef, Seq, Alt, Opt };

  Kind kind = Kind::Terminal;
  std::string text;          // Terminal: token norm; RuleRef: rule name
  std::vector<Regex> items;  // Seq, Alt: children; Opt: exactly one

  static Regex terminal(std::string t) { return {Kind::Terminal, std::move(t), {}}; }
  static Regex ref(std::string r) { return {Kind::RuleRef, std::move(r), {}}; }
  // Single-item sequences/alternations collapse to the item; nested
  // sequences are spliced into the parent.
  static Regex seq(std::vector<Regex> items);
  static Regex alt(std::vector<Regex> items);
  static Regex opt(Regex inner);

  friend bool operator==(const Regex&, const Regex&) = default;
};

struct RecognitionGrammar {
  std::map<std::string, Regex> rules;
  std::string start = "top";
  std::set<std::string> terminals;
  std::string language;  // xml:lang for SRGS output
};

// `food-or-drink` -> `food_or_drink`.
std::string rule_name(std::string_view category);

/// One rule per category reachable from $$top. With a scope, $$top keeps
/// only units whose canonical key is in it. Throws Error("EmptyScope"),
/// Error("RuleNameCollision").
RecognitionGrammar compile_grammar(const AssembledProject& project,
                                   const Scope* scope = nullptr);

using BigCount = boost::multiprecision::cpp_int;

struct LanguageSize {
  BigCount count;  // derivations
  std::size_t vocabulary = 0;
};

/// Bottom-up: sequences multiply, alternations add, optionals add one.
LanguageSize count_language(const RecognitionGrammar& g);

/// Visits derivations in order (alternatives left to right, an optional
/// element absent before present) until `visit` returns false or `limit`
/// sentences have been produced.
void for_each_sentence(
    const RecognitionGrammar& g, std::size_t limit,
    const std::function<bool(const std::vector<std::string>&)>& visit);

std::vector<std::string> enumerate_language(const RecognitionGrammar& g,
                                            std::size_t limit);

struct EnumerationSummary {
  std::size_t derivations = 0;
  std::size_t distinct = 0;
  bool complete = false;  // false when the limit cut enumeration short
};

EnumerationSummary summarize_enumeration(const RecognitionGrammar& g,
                                         std::size_t limit);

enum class GrammarFormat { LiteBnf, SrgsXml };

std::string emit_grammar(const RecognitionGrammar& g, GrammarFormat format);

/// Reads the lite-bnf emitted by emit_grammar. Throws Error("BadGrammar").
RecognitionGrammar parse_lite_bnf(std::string_view text);

}  // namespace lite
