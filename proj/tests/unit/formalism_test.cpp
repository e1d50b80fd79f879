#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "lite/formalism.hpp"

namespace lite {
namespace {

using K = PatternElement::Kind;

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

TEST(Pattern, GroupOfAlternatives) {
  auto p = parse_pattern("( hello | hi )");
  ASSERT_EQ(p.elements.size(), 1u);
  const auto& g = p.elements[0];
  ASSERT_EQ(g.kind, K::Group);
  ASSERT_EQ(g.alternatives.size(), 2u);
  EXPECT_EQ(g.alternatives[0][0].token.norm, "hello");
  EXPECT_EQ(g.alternatives[1][0].token.norm, "hi");
}

TEST(Pattern, OptionalPrefixGroup) {
  auto p = parse_pattern("?(est-ce que) la douleur");
  Pattern expected{{PatternElement::optional(PatternElement::group(
                        {{PatternElement::literal(Token::make("est-ce")),
                          PatternElement::literal(Token::make("que"))}})),
                    PatternElement::literal(Token::make("la")),
                    PatternElement::literal(Token::make("douleur"))}};
  EXPECT_EQ(p, expected);
}

TEST(Pattern, VariablesAndOptionalVariables) {
  auto p = parse_pattern("i want $$food-or-drink ?please ?$$time");
  EXPECT_EQ(variables_of(p.elements), (std::vector<std::string>{"food-or-drink", "time"}));
  EXPECT_EQ(mandatory_variables_of(p.elements), (std::vector<std::string>{"food-or-drink"}));
  EXPECT_TRUE(p.elements[4].is_optional_var());
}

TEST(Pattern, Errors) {
  EXPECT_EQ(code_of([] { parse_pattern("( a | b"); }), "UnbalancedParenthesis");
  EXPECT_EQ(code_of([] { parse_pattern("a )"); }), "UnbalancedParenthesis");
  EXPECT_EQ(code_of([] { parse_pattern("(a | )"); }), "EmptyAlternative");
  EXPECT_EQ(code_of([] { parse_pattern("( | a)"); }), "EmptyAlternative");
  EXPECT_EQ(code_of([] { parse_pattern("a b ?"); }), "DanglingOptional");
  EXPECT_EQ(code_of([] { parse_pattern("a $$Bad!"); }), "BadVariableName");
  EXPECT_EQ(code_of([] { parse_pattern("a $$"); }), "BadVariableName");
  EXPECT_EQ(code_of([] { parse_pattern("a | b"); }), "StrayAlternation");
  EXPECT_EQ(code_of([] { parse_pattern("   "); }), "EmptyPattern");
}

TEST(Pattern, Nullable) {
  EXPECT_TRUE(is_nullable(parse_pattern("?a ?( b | c )")));
  EXPECT_TRUE(is_nullable(parse_pattern("( ?a | b )")));
  EXPECT_FALSE(is_nullable(parse_pattern("?a b")));
}

TEST(Pattern, FirstPath) {
  auto path = first_path(parse_pattern("?please ( could | can ) i ( have | get $$x )").elements);
  std::vector<std::string> words;
  for (const auto& e : path) words.push_back(e.kind == K::Var ? "$$" + e.variable : e.token.norm);
  EXPECT_EQ(words, (std::vector<std::string>{"could", "i", "have"}));
}

TEST(Pattern, NormalizeCollapsesNestedOptionals) {
  auto p = parse_pattern("??a b");
  auto n = normalize(p);
  ASSERT_EQ(n.elements[0].kind, K::Optional);
  EXPECT_EQ(n.elements[0].inner[0].kind, K::Literal);
  EXPECT_EQ(to_string(n), "?a b");
}

TEST(Template, CanonicalModeRules) {
  auto t = parse_template("i want $$food-or-drink ?$$time please", TemplateMode::Canonical);
  ASSERT_EQ(t.slots.size(), 5u);
  EXPECT_EQ(t.slots[3].kind, TemplateSlot::Kind::OptionalVar);
  EXPECT_EQ(t.variables(), (std::vector<std::string>{"food-or-drink", "time"}));
  EXPECT_EQ(canonical_key(t), "i want $$food-or-drink ?$$time please");

  EXPECT_EQ(code_of([] { parse_template("a ( b | c )", TemplateMode::Canonical); }),
            "GroupInTemplate");
  EXPECT_EQ(code_of([] { parse_template("a ?b", TemplateMode::Canonical); }),
            "OptionalLiteralInTemplate");
  EXPECT_EQ(code_of([] { parse_template("$$x and $$x", TemplateMode::Canonical); }),
            "DuplicateTemplateVariable");
  EXPECT_EQ(code_of([] { parse_template("is it ?", TemplateMode::Canonical); }),
            "PunctuationOnlyToken");
  EXPECT_EQ(code_of([] { parse_template("", TemplateMode::Canonical); }), "EmptyPattern");
}

TEST(Template, TargetModeKeepsSpecialCharactersAsText) {
  auto t = parse_template("(oui | non) ? $$x", TemplateMode::Target);
  EXPECT_EQ(to_string(t), "(oui | non) ? $$x");
  EXPECT_EQ(t.variables(), (std::vector<std::string>{"x"}));
}

TEST(Template, KeyIsCaseAndSpacingInsensitive) {
  auto a = parse_template("I  Want $$x", TemplateMode::Canonical);
  auto b = parse_template("i want $$x", TemplateMode::Canonical);
  EXPECT_EQ(canonical_key(a), canonical_key(b));
  EXPECT_EQ(canonical_key(parse_token_list("A Coke")), "a coke");
}

const FileRole kSource = FileRole::source("english");
const FileRole kFrench = FileRole::target("french", "english");

TEST(RuleFile, EmptyFile) {
  auto r = parse_rule_file("", kSource);
  EXPECT_TRUE(r.file.items.empty());
  EXPECT_TRUE(r.diagnostics.empty());
  EXPECT_EQ(serialize_rule_file(r.file), "\n");
}

TEST(RuleFile, CommentsAttachToFollowingItem) {
  auto r = parse_rule_file("# greeting\nTrPhrase $$top\nSource hello\nEndTrPhrase\n# end\n",
                           kSource);
  ASSERT_EQ(r.file.units().size(), 1u);
  EXPECT_EQ(r.file.units()[0]->comments, (std::vector<std::string>{"# greeting"}));
  EXPECT_EQ(r.file.trailing_comments, (std::vector<std::string>{"# end"}));
}

TEST(RuleFile, DerivedCanonicalWarning) {
  auto r = parse_rule_file("TrPhrase $$top\nSource ( hello | hi ) ?there\nEndTrPhrase\n", kSource);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].code, "DerivedCanonical");
  EXPECT_EQ(r.diagnostics[0].severity, Severity::Warning);
  EXPECT_EQ(to_string(*r.file.units()[0]->targets.at("english").tmpl), "hello");
}

TEST(RuleFile, UnterminatedBlockAtStartLine) {
  auto r = parse_rule_file("\n\nTrPhrase $$top\nSource hello\n", kSource);
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].code, "UnterminatedBlock");
  EXPECT_EQ(r.diagnostics[0].location.line, 3u);
}

TEST(RuleFile, ErrorCodes) {
  struct Case {
    const char* text;
    const char* code;
    std::size_t line;
  };
  const Case cases[] = {
      {"Frobnicate x\n", "UnknownDirective", 1},
      {"TrPhrase top\nSource a\nEndTrPhrase\n", "MissingCategory", 1},
      {"TrLex $$x source=\"a\" source=\"b\"\n", "DuplicateAttributeKey", 1},
      {"TrPhrase $$top\nSource a\nTarget/french x\nTarget/french y\nEndTrPhrase\n",
       "DuplicateAttributeKey", 4},
      {"TrPhrase $$top\nSource a (\nEndTrPhrase\n", "UnbalancedParenthesis", 2},
      {"\nEndTrPhrase\n", "UnexpectedDirective", 2},
      {"TrPhrase $$top\nEndTrPhrase\n", "MissingSource", 1},
      {"TrLex $$x english=\"a\"\n", "MissingSource", 1},
      {"TrLex $$x source=\"a $$y\"\n", "VariableInLexeme", 1},
      {"TrLex $$x source=\"a\" english=\"\"\n", "EmptyAttribute", 1},
      {"TrLex $$x source=\"a\n", "MalformedAttribute", 1},
      {"TrPhrase $$top\nSource a\nTarget/english ?\nEndTrPhrase\n", "BlankCanonical", 3},
  };
  for (const auto& c : cases) {
    auto r = parse_rule_file(c.text, kSource, "f.lite");
    ASSERT_FALSE(r.diagnostics.empty()) << c.text;
    EXPECT_EQ(r.diagnostics[0].code, c.code) << c.text;
    EXPECT_EQ(r.diagnostics[0].location.line, c.line) << c.text;
    EXPECT_EQ(r.diagnostics[0].location.path, "f.lite");
  }
}

TEST(RuleFile, TargetRole) {
  auto r = parse_rule_file(
      "TrPhrase $$top\nTarget/english hello\nTarget/french ?\nEndTrPhrase\n"
      "TrLex $$x source=\"a coke\" french=\"un coca\"\n",
      kFrench);
  ASSERT_TRUE(r.diagnostics.empty());
  EXPECT_FALSE(r.file.units()[0]->targets.at("french").tmpl.has_value());
  // `source` is an alias for the canonical-language key in target files.
  EXPECT_TRUE(r.file.lexemes()[0]->values.count("english"));

  auto bad = parse_rule_file("TrPhrase $$top\nSource x\nTarget/english a\nEndTrPhrase\n", kFrench);
  EXPECT_EQ(bad.diagnostics.at(0).code, "SourceInTargetFile");
  auto nocanon = parse_rule_file("TrPhrase $$top\nTarget/french a\nEndTrPhrase\n", kFrench);
  EXPECT_EQ(nocanon.diagnostics.at(0).code, "MissingCanonical");
}

TEST(RuleFile, FrenchTargetRoundTripFixpoint) {
  const char* text = R"L(TrPhrase $$top
Target/english hello
Target/french Bonjour
EndTrPhrase

TrPhrase $$top
Target/english i want $$food-or-drink please
Target/french je voudrais $$food-or-drink s'il vous plaît
EndTrPhrase

TrLex $$food-or-drink english="a coke" french="un coca"
)L";
  auto r = parse_rule_file(text, kFrench);
  ASSERT_TRUE(r.diagnostics.empty());
  auto once = serialize_rule_file(r.file);
  EXPECT_EQ(once, text);
  EXPECT_EQ(serialize_rule_file(parse_rule_file(once, kFrench).file), once);
}

// ---------------------------------------------------------------------------
// Random rule files

class FileGen {
 public:
  explicit FileGen(std::uint64_t seed) : rng_(seed) {}

  std::string file(bool target_role) {
    std::string out;
    std::size_t n = pick(0, 6);
    for (std::size_t i = 0; i < n; ++i) {
      if (chance(0.3)) out += "# note " + word() + "\n";
      if (chance(0.6))
        out += unit(target_role);
      else
        out += lexeme(target_role);
      if (chance(0.5)) out += "\n";
    }
    if (chance(0.2)) out += "# trailing\n";
    return out;
  }

  std::string pattern(int depth = 0) {
    std::string s;
    std::size_t n = pick(1, 4);
    bool mandatory = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::string e = element(depth);
      mandatory |= e[0] != '?';
      s += (i ? " " : "") + e;
    }
    if (!mandatory) s += " " + word();
    return s;
  }

 private:
  std::size_t pick(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::string word() {
    static const char* w[] = {"a", "b", "coca-cola", "s'il", "plaît", "Hello", "x"};
    return w[pick(0, 6)];
  }
  std::string var() { return "$$v" + std::to_string(pick(1, 3)); }

  std::string element(int depth) {
    double r = std::uniform_real_distribution<double>(0, 1)(rng_);
    if (r < 0.15) return "?" + element(depth + 1);
    if (r < 0.3 && depth < 2) {
      std::string g = "(";
      std::size_t n = pick(1, 3);
      for (std::size_t i = 0; i < n; ++i) g += (i ? " | " : " ") + pattern(depth + 1);
      return g + " )";
    }
    if (r < 0.4) return var();
    return word();
  }

  std::string unit(bool target_role) {
    std::string out = "TrPhrase $$c" + std::to_string(pick(0, 2)) + "\n";
    if (!target_role)
      for (std::size_t i = pick(1, 2); i > 0; --i) out += "Source " + pattern() + "\n";
    if (target_role || chance(0.7)) out += "Target/english k" + std::to_string(pick(0, 9)) + " $$v1\n";
    if (chance(0.5)) out += "Target/french " + (chance(0.3) ? std::string("?") : "l " + word()) + "\n";
    if (chance(0.2)) out += "Target/gloss A B\n";
    return out + "EndTrPhrase\n";
  }

  std::string lexeme(bool target_role) {
    std::string out = "TrLex $$c" + std::to_string(pick(0, 2));
    std::string lit = word();
    if (!target_role) out += " source=\"( " + lit + " | " + word() + " )\"";
    if (target_role || chance(0.7)) out += " english=\"" + lit + "\"";
    if (chance(0.5)) out += " french=\"" + (chance(0.3) ? std::string("?") : word()) + "\"";
    return out + "\n";
  }

  std::mt19937_64 rng_;
};

TEST(Property, RuleFileRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    FileGen gen(seed);
    bool target = seed % 3 == 0;
    FileRole role = target ? kFrench : kSource;
    std::string text = gen.file(target);
    auto first = parse_rule_file(text, role);
    ASSERT_FALSE(has_errors(first.diagnostics)) << text;
    auto out = serialize_rule_file(first.file);
    auto second = parse_rule_file(out, role);
    ASSERT_FALSE(has_errors(second.diagnostics)) << out;
    ASSERT_EQ(second.file, first.file) << text << "----\n" << out;
    ASSERT_EQ(serialize_rule_file(second.file), out);
  }
}

TEST(Property, PatternPrintParse) {
  FileGen gen(7);
  for (int i = 0; i < 500; ++i) {
    std::string text = gen.pattern();
    auto p = parse_pattern(text);
    auto printed = to_string(p);
    EXPECT_EQ(parse_pattern(printed), p) << text;
    // Normalization is idempotent and keeps the printed form parseable.
    auto n = normalize(p);
    EXPECT_EQ(normalize(n), n) << text;
    EXPECT_EQ(parse_pattern(to_string(n)), n) << text;
  }
}

std::vector<std::string> literals(const Sequence& s) {
  std::vector<std::string> out;
  for (const auto& e : s) {
    if (e.kind == K::Literal) out.push_back(e.token.display);
    for (const auto& alt : e.alternatives)
      for (auto& w : literals(alt)) out.push_back(w);
    for (auto& w : literals(e.inner)) out.push_back(w);
  }
  return out;
}

TEST(Property, TokensSurvivePrinting) {
  FileGen gen(11);
  for (int i = 0; i < 300; ++i) {
    auto p = parse_pattern(gen.pattern());
    std::vector<std::string> words;
    std::istringstream in(to_string(p));
    for (std::string w; in >> w;) {
      while (!w.empty() && (w[0] == '?' || w[0] == '(')) w.erase(0, 1);
      if (w.empty() || w == "|" || w == ")" || w.rfind("$$", 0) == 0) continue;
      words.push_back(w);
    }
    EXPECT_EQ(words, literals(p.elements));
  }
}

TEST(Property, DiagnosticLinesExist) {
  std::mt19937_64 rng(5);
  const char* lines[] = {"TrPhrase $$top", "TrPhrase", "Source a ( b", "Source a",
                         "Target/english a", "Target/ x", "EndTrPhrase",
                         "TrLex $$x source=\"a\"", "TrLex $$x", "Bogus", "# c", ""};
  for (int i = 0; i < 300; ++i) {
    std::string text;
    std::size_t n = std::uniform_int_distribution<std::size_t>(0, 12)(rng);
    for (std::size_t k = 0; k < n; ++k)
      text += std::string(lines[std::uniform_int_distribution<std::size_t>(0, 11)(rng)]) + "\n";
    auto r = parse_rule_file(text, kSource, "p.lite");
    std::size_t line_count = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    for (const auto& d : r.diagnostics) {
      EXPECT_EQ(d.location.path, "p.lite");
      EXPECT_GE(d.location.line, 1u) << text;
      EXPECT_LE(d.location.line, line_count) << text;
    }
  }
}

}  // namespace
}  // namespace lite
