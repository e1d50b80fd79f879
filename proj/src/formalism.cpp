#include "lite/formalism.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "lite/text.hpp"

namespace lite {

std::string format_diagnostic(const Diagnostic& d) {
  return fmt::format("{}:{}: {} {} {}", d.location.path, d.location.line,
                     to_string(d.severity), d.code, d.message);
}

Token Token::make(std::string_view display) {
  Token t{std::string(display), text::match_form(display)};
  if (t.norm.empty()) t.norm = text::lowercase(display);
  return t;
}

bool Token::punctuation_only() const { return text::match_form(display).empty(); }

bool is_valid_variable_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

bool is_stream_name(std::string_view s) {
  return std::find(std::begin(kStreams), std::end(kStreams), s) !=
         std::end(kStreams);
}

PatternElement PatternElement::literal(Token t) {
  PatternElement e;
  e.kind = Kind::Literal;
  e.token = std::move(t);
  return e;
}

PatternElement PatternElement::var(std::string name) {
  PatternElement e;
  e.kind = Kind::Var;
  e.variable = std::move(name);
  return e;
}

PatternElement PatternElement::group(std::vector<Sequence> alts) {
  PatternElement e;
  e.kind = Kind::Group;
  e.alternatives = std::move(alts);
  return e;
}

PatternElement PatternElement::optional(PatternElement inner) {
  if (inner.kind == Kind::Optional) return inner;
  PatternElement e;
  e.kind = Kind::Optional;
  e.inner.push_back(std::move(inner));
  return e;
}

// ---------------------------------------------------------------------------
// Pattern lexer / parser

namespace {

struct Lexeme {
  enum class Kind { LParen, RParen, Bar, Question, Word } kind;
  std::string text;
};

bool is_special(char c) { return c == '(' || c == ')' || c == '|' || c == '?'; }

std::vector<Lexeme> lex_pattern(std::string_view text) {
  std::vector<Lexeme> out;
  for (const auto& chunk : text::split_whitespace(text)) {
    std::size_t i = 0;
    while (i < chunk.size()) {
      char c = chunk[i];
      if (is_special(c)) {
        Lexeme::Kind k = c == '('   ? Lexeme::Kind::LParen
                         : c == ')' ? Lexeme::Kind::RParen
                         : c == '|' ? Lexeme::Kind::Bar
                                    : Lexeme::Kind::Question;
        out.push_back({k, std::string(1, c)});
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < chunk.size() && !is_special(chunk[j])) ++j;
      out.push_back({Lexeme::Kind::Word, chunk.substr(i, j - i)});
      i = j;
    }
  }
  return out;
}

class PatternParser {
 public:
  explicit PatternParser(std::vector<Lexeme> lx) : lx_(std::move(lx)) {}

  Pattern parse() {
    Pattern p{sequence(false)};
    if (p.elements.empty()) throw Error("EmptyPattern", "pattern is empty");
    return p;
  }

 private:
  bool at_end() const { return pos_ >= lx_.size(); }
  const Lexeme& peek() const { return lx_[pos_]; }

  Sequence sequence(bool in_group) {
    Sequence seq;
    while (!at_end()) {
      const auto& t = peek();
      if (t.kind == Lexeme::Kind::RParen) {
        if (!in_group)
          throw Error("UnbalancedParenthesis", "unmatched ')'");
        break;
      }
      if (t.kind == Lexeme::Kind::Bar) {
        if (!in_group)
          throw Error("StrayAlternation", "'|' outside parentheses");
        break;
      }
      seq.push_back(element());
    }
    return seq;
  }

  PatternElement element() {
    const Lexeme t = peek();
    ++pos_;
    switch (t.kind) {
      case Lexeme::Kind::Question: {
        if (at_end() || peek().kind == Lexeme::Kind::RParen ||
            peek().kind == Lexeme::Kind::Bar)
          throw Error("DanglingOptional", "'?' is not followed by an element");
        return PatternElement::optional(element());
      }
      case Lexeme::Kind::LParen: {
        std::vector<Sequence> alts;
        for (;;) {
          Sequence s = sequence(true);
          if (s.empty() && at_end())
            throw Error("UnbalancedParenthesis", "unterminated '('");
          if (s.empty())
            throw Error("EmptyAlternative", "empty alternative in group");
          alts.push_back(std::move(s));
          if (at_end())
            throw Error("UnbalancedParenthesis", "unterminated '('");
          auto k = peek().kind;
          ++pos_;
          if (k == Lexeme::Kind::RParen) break;
        }
        return PatternElement::group(std::move(alts));
      }
      case Lexeme::Kind::Word:
        return word(t.text);
      default:
        throw Error("UnbalancedParenthesis", "unexpected token");
    }
  }

  static PatternElement word(const std::string& w) {
    if (w.rfind("$$", 0) == 0) {
      std::string name = w.substr(2);
      if (!is_valid_variable_name(name))
        throw Error("BadVariableName", fmt::format("bad variable name '{}'", w));
      return PatternElement::var(std::move(name));
    }
    return PatternElement::literal(Token::make(w));
  }

  std::vector<Lexeme> lx_;
  std::size_t pos_ = 0;
};

void append_string(std::string& out, const PatternElement& e);

void append_string(std::string& out, const Sequence& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ' ';
    append_string(out, s[i]);
  }
}

void append_string(std::string& out, const PatternElement& e) {
  using K = PatternElement::Kind;
  switch (e.kind) {
    case K::Literal:
      out += e.token.display;
      break;
    case K::Var:
      out += "$$" + e.variable;
      break;
    case K::Group:
      out += "( ";
      for (std::size_t i = 0; i < e.alternatives.size(); ++i) {
        if (i) out += " | ";
        append_string(out, e.alternatives[i]);
      }
      out += " )";
      break;
    case K::Optional:
      out += '?';
      append_string(out, e.inner.front());
      break;
  }
}

Sequence normalize_seq(const Sequence& s);

PatternElement normalize_elem(const PatternElement& e) {
  using K = PatternElement::Kind;
  switch (e.kind) {
    case K::Group: {
      std::vector<Sequence> alts;
      for (const auto& a : e.alternatives) alts.push_back(normalize_seq(a));
      return PatternElement::group(std::move(alts));
    }
    case K::Optional:
      return PatternElement::optional(normalize_elem(e.inner.front()));
    default:
      return e;
  }
}

Sequence normalize_seq(const Sequence& s) {
  Sequence out;
  for (const auto& e : s) out.push_back(normalize_elem(e));
  return out;
}

bool elem_nullable(const PatternElement& e) {
  using K = PatternElement::Kind;
  switch (e.kind) {
    case K::Literal:
    case K::Var:
      return false;
    case K::Optional:
      return true;
    case K::Group:
      return std::any_of(e.alternatives.begin(), e.alternatives.end(),
                         [](const Sequence& a) { return is_nullable(a); });
  }
  return false;
}

void collect_vars(const Sequence& s, std::vector<std::string>& out) {
  using K = PatternElement::Kind;
  for (const auto& e : s) {
    switch (e.kind) {
      case K::Var:
        if (std::find(out.begin(), out.end(), e.variable) == out.end())
          out.push_back(e.variable);
        break;
      case K::Group:
        for (const auto& a : e.alternatives) collect_vars(a, out);
        break;
      case K::Optional:
        collect_vars(e.inner, out);
        break;
      default:
        break;
    }
  }
}

void collect_first_path(const Sequence& s, std::vector<PatternElement>& out) {
  using K = PatternElement::Kind;
  for (const auto& e : s) {
    switch (e.kind) {
      case K::Literal:
      case K::Var:
        out.push_back(e);
        break;
      case K::Group:
        collect_first_path(e.alternatives.front(), out);
        break;
      case K::Optional:
        break;
    }
  }
}

}  // namespace

Pattern parse_pattern(std::string_view text) {
  if (text::is_blank(text)) throw Error("EmptyPattern", "pattern is empty");
  return PatternParser(lex_pattern(text)).parse();
}

std::string to_string(const Sequence& s) {
  std::string out;
  append_string(out, s);
  return out;
}

std::string to_string(const Pattern& p) { return to_string(p.elements); }

Pattern normalize(const Pattern& p) { return Pattern{normalize_seq(p.elements)}; }

bool is_nullable(const Sequence& s) {
  return std::all_of(s.begin(), s.end(), elem_nullable);
}

std::vector<std::string> variables_of(const Sequence& s) {
  std::vector<std::string> out;
  collect_vars(s, out);
  return out;
}

std::vector<std::string> mandatory_variables_of(const Sequence& s) {
  std::vector<std::string> out;
  for (const auto& e : s)
    if (e.kind == PatternElement::Kind::Var &&
        std::find(out.begin(), out.end(), e.variable) == out.end())
      out.push_back(e.variable);
  return out;
}

std::vector<PatternElement> first_path(const Sequence& s) {
  std::vector<PatternElement> out;
  collect_first_path(s, out);
  return out;
}

// ---------------------------------------------------------------------------
// Templates

std::vector<std::string> Template::variables() const {
  std::vector<std::string> out;
  for (const auto& s : slots)
    if (s.kind != TemplateSlot::Kind::Literal) out.push_back(s.variable);
  return out;
}

bool Template::has_variable(std::string_view v) const {
  return std::any_of(slots.begin(), slots.end(), [&](const TemplateSlot& s) {
    return s.kind != TemplateSlot::Kind::Literal && s.variable == v;
  });
}

Template parse_template(std::string_view text, TemplateMode mode) {
  Template t;
  std::set<std::string> seen;
  auto add_var = [&](std::string name, TemplateSlot::Kind kind,
                     const std::string& chunk) {
    if (!is_valid_variable_name(name))
      throw Error("BadVariableName",
                  fmt::format("bad variable name '{}'", chunk));
    if (!seen.insert(name).second)
      throw Error("DuplicateTemplateVariable",
                  fmt::format("variable $${} occurs twice in template", name));
    t.slots.push_back({kind, {}, std::move(name)});
  };
  for (const auto& chunk : text::split_whitespace(text)) {
    if (chunk.rfind("?$$", 0) == 0) {
      add_var(chunk.substr(3), TemplateSlot::Kind::OptionalVar, chunk);
      continue;
    }
    if (chunk.rfind("$$", 0) == 0) {
      add_var(chunk.substr(2), TemplateSlot::Kind::Var, chunk);
      continue;
    }
    if (chunk.size() > 1 && chunk[0] == '?')
      throw Error("OptionalLiteralInTemplate",
                  fmt::format("'{}': only variables may be optional here", chunk));
    Token tok = Token::make(chunk);
    if (mode == TemplateMode::Canonical) {
      if (chunk.find_first_of("()|") != std::string::npos)
        throw Error("GroupInTemplate",
                    fmt::format("'{}': groups are not allowed here", chunk));
      if (tok.punctuation_only())
        throw Error("PunctuationOnlyToken",
                    fmt::format("'{}' must be attached to a word", chunk));
    }
    t.slots.push_back({TemplateSlot::Kind::Literal, std::move(tok), {}});
  }
  if (t.slots.empty()) throw Error("EmptyPattern", "template is empty");
  return t;
}

std::string to_string(const Template& t) {
  std::vector<std::string> parts;
  for (const auto& s : t.slots) {
    switch (s.kind) {
      case TemplateSlot::Kind::Literal:
        parts.push_back(s.token.display);
        break;
      case TemplateSlot::Kind::Var:
        parts.push_back("$$" + s.variable);
        break;
      case TemplateSlot::Kind::OptionalVar:
        parts.push_back("?$$" + s.variable);
        break;
    }
  }
  return text::join(parts, " ");
}

std::string canonical_key(const Template& t) {
  std::vector<std::string> parts;
  for (const auto& s : t.slots) {
    switch (s.kind) {
      case TemplateSlot::Kind::Literal:
        parts.push_back(s.token.norm);
        break;
      case TemplateSlot::Kind::Var:
        parts.push_back("$$" + s.variable);
        break;
      case TemplateSlot::Kind::OptionalVar:
        parts.push_back("?$$" + s.variable);
        break;
    }
  }
  return text::join(parts, " ");
}

std::string canonical_key(const std::vector<Token>& tokens) {
  std::vector<std::string> parts;
  for (const auto& t : tokens) parts.push_back(t.norm);
  return text::join(parts, " ");
}

std::vector<Token> parse_token_list(std::string_view text) {
  std::vector<Token> out;
  for (const auto& w : text::split_whitespace(text)) out.push_back(Token::make(w));
  return out;
}

std::string to_string(const std::vector<Token>& tokens) {
  std::vector<std::string> parts;
  for (const auto& t : tokens) parts.push_back(t.display);
  return text::join(parts, " ");
}

// ---------------------------------------------------------------------------
// Rule files

std::vector<const UnitFragment*> RuleFile::units() const {
  std::vector<const UnitFragment*> out;
  for (const auto& f : items)
    if (auto* u = std::get_if<UnitFragment>(&f)) out.push_back(u);
  return out;
}

std::vector<const LexemeFragment*> RuleFile::lexemes() const {
  std::vector<const LexemeFragment*> out;
  for (const auto& f : items)
    if (auto* l = std::get_if<LexemeFragment>(&f)) out.push_back(l);
  return out;
}

namespace {

class RuleFileParser {
 public:
  RuleFileParser(const FileRole& role, std::string path) {
    out_.file.role = role;
    out_.file.path = std::move(path);
  }

  ParsedRuleFile run(std::string_view text) {
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto nl = text.find('\n', pos);
      std::string_view raw = text.substr(
          pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      ++lineno;
      line(raw, lineno);
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
    if (block_) {
      error("UnterminatedBlock", "TrPhrase without EndTrPhrase", block_->line);
      block_.reset();
    }
    out_.file.trailing_comments = std::move(pending_comments_);
    return std::move(out_);
  }

 private:
  const FileRole& role() const { return out_.file.role; }

  void diag(Severity s, std::string code, std::string msg, std::size_t line) {
    out_.diagnostics.push_back(
        {s, std::move(code), std::move(msg), {out_.file.path, line}});
  }
  void error(std::string code, std::string msg, std::size_t line) {
    block_error_ = true;
    diag(Severity::Error, std::move(code), std::move(msg), line);
  }
  void warning(std::string code, std::string msg, std::size_t line) {
    diag(Severity::Warning, std::move(code), std::move(msg), line);
  }

  std::optional<std::string> category(std::string_view rest, std::size_t line) {
    std::string cat = text::trim(rest);
    auto sp = cat.find_first_of(" \t");
    if (sp != std::string::npos) cat = cat.substr(0, sp);
    if (cat.rfind("$$", 0) != 0 || !is_valid_variable_name(cat.substr(2))) {
      error("MissingCategory", "expected a $$category", line);
      return std::nullopt;
    }
    return cat.substr(2);
  }

  void line(std::string_view raw, std::size_t lineno) {
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    std::string t = text::trim(raw);
    if (t.empty()) return;
    if (t[0] == '#') {
      if (block_)
        block_->comments.push_back(t);
      else
        pending_comments_.push_back(t);
      return;
    }
    auto sp = t.find_first_of(" \t");
    std::string directive = t.substr(0, sp);
    std::string rest = sp == std::string::npos ? "" : text::trim(t.substr(sp));

    if (directive == "TrPhrase") {
      if (block_) {
        error("UnterminatedBlock", "TrPhrase without EndTrPhrase", block_->line);
        block_.reset();
      }
      block_error_ = false;
      auto cat = category(rest, lineno);
      block_.emplace();
      block_->category = cat.value_or("");
      block_->line = lineno;
      block_->comments = std::move(pending_comments_);
      pending_comments_.clear();
      return;
    }
    if (directive == "EndTrPhrase") {
      if (!block_) {
        error("UnexpectedDirective", "EndTrPhrase outside a TrPhrase block", lineno);
        return;
      }
      block_->end_line = lineno;
      finish_unit();
      return;
    }
    if (directive == "Source") {
      if (!block_) {
        error("UnexpectedDirective", "Source outside a TrPhrase block", lineno);
        return;
      }
      if (role().kind == RuleRole::Target) {
        error("SourceInTargetFile", "Source lines belong in source files", lineno);
        return;
      }
      try {
        block_->sources.push_back({parse_pattern(rest), lineno});
      } catch (const Error& e) {
        error(e.code(), e.what(), lineno);
      }
      return;
    }
    if (directive.rfind("Target/", 0) == 0) {
      std::string lang = directive.substr(7);
      if (!block_) {
        error("UnexpectedDirective", "Target line outside a TrPhrase block", lineno);
        return;
      }
      if (lang.empty()) {
        error("UnknownDirective", "Target/ without a language", lineno);
        return;
      }
      if (block_->targets.count(lang)) {
        error("DuplicateAttributeKey",
              fmt::format("second Target/{} line in block", lang), lineno);
        return;
      }
      TargetLine tl;
      tl.line = lineno;
      if (rest != "?") {
        try {
          tl.tmpl = parse_template(rest, lang == role().canonical_language
                                             ? TemplateMode::Canonical
                                             : TemplateMode::Target);
        } catch (const Error& e) {
          error(e.code(), e.what(), lineno);
          return;
        }
      }
      block_->targets.emplace(lang, std::move(tl));
      return;
    }
    if (directive == "TrLex") {
      if (block_) {
        error("UnterminatedBlock", "TrPhrase without EndTrPhrase", block_->line);
        block_.reset();
      }
      lexeme(rest, lineno);
      return;
    }
    error("UnknownDirective", fmt::format("unknown directive '{}'", directive),
          lineno);
  }

  void finish_unit() {
    UnitFragment u = std::move(*block_);
    block_.reset();
    const std::string& canon = role().canonical_language;
    auto it = u.targets.find(canon);
    if (it != u.targets.end() && !it->second.tmpl) {
      error("BlankCanonical", "canonical line cannot be a placeholder", it->second.line);
    }
    if (role().kind == RuleRole::Target) {
      if (it == u.targets.end())
        error("MissingCanonical",
              fmt::format("block has no Target/{} line", canon), u.line);
    } else {
      if (u.sources.empty() && !block_error_)
        error("MissingSource", "TrPhrase block has no Source line", u.line);
      if (it == u.targets.end() && !u.sources.empty()) {
        Template derived;
        std::set<std::string> seen;
        for (const auto& e : first_path(u.sources.front().pattern.elements)) {
          if (e.kind == PatternElement::Kind::Var) {
            if (!seen.insert(e.variable).second) continue;
            derived.slots.push_back({TemplateSlot::Kind::Var, {}, e.variable});
          } else {
            derived.slots.push_back({TemplateSlot::Kind::Literal, e.token, {}});
          }
        }
        warning("DerivedCanonical",
                fmt::format("no Target/{} line; using '{}'", canon,
                            to_string(derived)),
                u.line);
        u.targets.emplace(canon, TargetLine{std::move(derived), u.line});
      }
    }
    if (!block_error_) out_.file.items.emplace_back(std::move(u));
    block_error_ = false;
  }

  struct RawAttr {
    std::string key;
    std::string value;
  };

  std::optional<std::vector<RawAttr>> attributes(std::string_view s,
                                                 std::size_t lineno) {
    std::vector<RawAttr> out;
    std::size_t i = 0;
    auto skip_ws = [&] {
      while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    };
    for (;;) {
      skip_ws();
      if (i >= s.size()) break;
      std::size_t k = i;
      while (i < s.size() && s[i] != '=' && s[i] != ' ' && s[i] != '\t') ++i;
      std::string key(s.substr(k, i - k));
      if (key.empty() || i + 1 >= s.size() || s[i] != '=' || s[i + 1] != '"') {
        error("MalformedAttribute", "expected key=\"value\"", lineno);
        return std::nullopt;
      }
      i += 2;
      std::string value;
      bool closed = false;
      while (i < s.size()) {
        char c = s[i++];
        if (c == '\\' && i < s.size()) {
          value += s[i++];
        } else if (c == '"') {
          closed = true;
          break;
        } else {
          value += c;
        }
      }
      if (!closed) {
        error("MalformedAttribute", "unterminated attribute value", lineno);
        return std::nullopt;
      }
      out.push_back({std::move(key), std::move(value)});
    }
    return out;
  }

  void lexeme(std::string_view rest, std::size_t lineno) {
    block_error_ = false;
    LexemeFragment lx;
    lx.line = lineno;
    lx.comments = std::move(pending_comments_);
    pending_comments_.clear();
    auto cat = category(rest, lineno);
    if (!cat) return;
    lx.category = *cat;
    auto ws = rest.find_first_of(" \t");
    std::string_view after =
        ws == std::string_view::npos ? std::string_view{} : rest.substr(ws);
    auto attrs = attributes(after, lineno);
    if (!attrs) return;
    const std::string& canon = role().canonical_language;
    std::set<std::string> seen;
    for (auto& a : *attrs) {
      std::string key = a.key;
      if (key == "source" && role().kind == RuleRole::Target) key = canon;
      if (!seen.insert(key).second) {
        error("DuplicateAttributeKey",
              fmt::format("attribute '{}' given twice", key), lineno);
        return;
      }
      if (key == "source") {
        try {
          Pattern p = parse_pattern(a.value);
          if (!variables_of(p.elements).empty()) {
            error("VariableInLexeme", "TrLex source patterns cannot contain variables",
                  lineno);
            return;
          }
          lx.source = std::move(p);
        } catch (const Error& e) {
          error(e.code(), e.what(), lineno);
          return;
        }
        continue;
      }
      std::string v = text::trim(a.value);
      if (v == "?") {
        if (key == canon) {
          error("BlankCanonical", "canonical value cannot be a placeholder", lineno);
          return;
        }
        lx.values.emplace(key, std::nullopt);
        continue;
      }
      auto toks = parse_token_list(v);
      if (toks.empty()) {
        error("EmptyAttribute", fmt::format("attribute '{}' is empty", key), lineno);
        return;
      }
      if (key == canon) {
        for (const auto& t : toks)
          if (t.punctuation_only()) {
            error("PunctuationOnlyToken",
                  fmt::format("'{}' must be attached to a word", t.display), lineno);
            return;
          }
      }
      lx.values.emplace(key, std::move(toks));
    }
    if (role().kind == RuleRole::Target) {
      if (!lx.values.count(canon)) {
        error("MissingCanonical",
              fmt::format("TrLex has no {}= attribute", canon), lineno);
        return;
      }
    } else {
      if (!lx.source) {
        error("MissingSource", "TrLex has no source= attribute", lineno);
        return;
      }
      if (!lx.values.count(canon)) {
        std::vector<Token> derived;
        for (const auto& e : first_path(lx.source->elements)) derived.push_back(e.token);
        warning("DerivedCanonical",
                fmt::format("no {}= attribute; using '{}'", canon, to_string(derived)),
                lineno);
        lx.values.emplace(canon, std::move(derived));
      }
    }
    out_.file.items.emplace_back(std::move(lx));
  }

  ParsedRuleFile out_;
  std::optional<UnitFragment> block_;
  bool block_error_ = false;
  std::vector<std::string> pending_comments_;
};

std::string escape_attr(std::string_view v) {
  std::string out;
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::vector<std::string> target_order(const std::map<std::string, TargetLine>& m,
                                      const std::string& canonical) {
  std::vector<std::string> out;
  if (m.count(canonical)) out.push_back(canonical);
  for (auto s : kStreams)
    if (std::string(s) != canonical && m.count(std::string(s)))
      out.emplace_back(s);
  for (const auto& [k, _] : m)
    if (k != canonical && !is_stream_name(k)) out.push_back(k);
  return out;
}

}  // namespace

ParsedRuleFile parse_rule_file(std::string_view text, const FileRole& role,
                               std::string path) {
  return RuleFileParser(role, std::move(path)).run(text);
}

std::string serialize_fragment(const Fragment& f, const FileRole& role) {
  std::string out;
  const std::string& canon = role.canonical_language;
  if (auto* u = std::get_if<UnitFragment>(&f)) {
    for (const auto& c : u->comments) out += c + "\n";
    out += "TrPhrase $$" + u->category + "\n";
    for (const auto& s : u->sources) out += "Source " + to_string(s.pattern) + "\n";
    for (const auto& lang : target_order(u->targets, canon)) {
      const auto& tl = u->targets.at(lang);
      out += "Target/" + lang + " " + (tl.tmpl ? to_string(*tl.tmpl) : "?") + "\n";
    }
    out += "EndTrPhrase\n";
    return out;
  }
  const auto& lx = std::get<LexemeFragment>(f);
  for (const auto& c : lx.comments) out += c + "\n";
  out += "TrLex $$" + lx.category;
  if (lx.source) out += " source=\"" + escape_attr(to_string(*lx.source)) + "\"";
  auto emit = [&](const std::string& key, const TokenValue& v) {
    out += " " + key + "=\"" + (v ? escape_attr(to_string(*v)) : "?") + "\"";
  };
  if (auto it = lx.values.find(canon); it != lx.values.end()) emit(canon, it->second);
  for (const auto& [k, v] : lx.values)
    if (k != canon) emit(k, v);
  out += "\n";
  return out;
}

std::string serialize_rule_file(const RuleFile& file) {
  std::string out;
  bool prev_lexeme = false;
  for (std::size_t i = 0; i < file.items.size(); ++i) {
    bool is_lexeme = std::holds_alternative<LexemeFragment>(file.items[i]);
    bool has_comments =
        is_lexeme ? !std::get<LexemeFragment>(file.items[i]).comments.empty()
                  : !std::get<UnitFragment>(file.items[i]).comments.empty();
    if (i > 0 && !(prev_lexeme && is_lexeme && !has_comments)) out += "\n";
    out += serialize_fragment(file.items[i], file.role);
    prev_lexeme = is_lexeme;
  }
  if (!file.trailing_comments.empty()) {
    if (!out.empty()) out += "\n";
    for (const auto& c : file.trailing_comments) out += c + "\n";
  }
  if (out.empty()) out = "\n";
  return out;
}

}  // namespace lite
