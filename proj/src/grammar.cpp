#include "lite/grammar.hpp"

#include <algorithm>
#include <unordered_set>

#include <fmt/format.h>

#include "lite/text.hpp"

namespace lite {

Regex Regex::seq(std::vector<Regex> items) {
  std::vector<Regex> flat;
  for (auto& i : items) {
    if (i.kind == Kind::Seq) {
      for (auto& j : i.items) flat.push_back(std::move(j));
    } else {
      flat.push_back(std::move(i));
    }
  }
  if (flat.size() == 1) return std::move(flat.front());
  return {Kind::Seq, {}, std::move(flat)};
}

Regex Regex::alt(std::vector<Regex> items) {
  if (items.size() == 1) return std::move(items.front());
  return {Kind::Alt, {}, std::move(items)};
}

Regex Regex::opt(Regex inner) {
  if (inner.kind == Kind::Opt) return inner;
  return {Kind::Opt, {}, {std::move(inner)}};
}

std::string rule_name(std::string_view category) {
  std::string out(category);
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

class Compiler {
 public:
  Compiler(const AssembledProject& p, RecognitionGrammar& g) : p_(p), g_(g) {}

  Regex sequence(const Sequence& s, bool dedupe) {
    std::vector<Regex> items;
    for (const auto& e : s) items.push_back(element(e, dedupe));
    return Regex::seq(std::move(items));
  }

  Regex element(const PatternElement& e, bool dedupe) {
    using K = PatternElement::Kind;
    switch (e.kind) {
      case K::Literal:
        g_.terminals.insert(e.token.norm);
        return Regex::terminal(e.token.norm);
      case K::Var:
        return Regex::ref(rule_name(e.variable));
      case K::Optional:
        return Regex::opt(element(e.inner.front(), dedupe));
      case K::Group: {
        std::vector<Regex> alts;
        for (const auto& a : e.alternatives) {
          Regex r = sequence(a, dedupe);
          if (dedupe && std::find(alts.begin(), alts.end(), r) != alts.end())
            continue;
          alts.push_back(std::move(r));
        }
        return Regex::alt(std::move(alts));
      }
    }
    return {};
  }

  // A variable repeated as top-level `?$$v` binds at most once: expand into
  // one variant per occurrence plus the variant with none.
  void line_variants(const Sequence& s, std::vector<Regex>& out) {
    std::map<std::string, std::vector<std::size_t>> occ;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i].is_optional_var()) occ[s[i].inner.front().variable].push_back(i);
    std::vector<std::vector<std::size_t>> repeated;
    for (auto& [_, positions] : occ)
      if (positions.size() > 1) repeated.push_back(positions);
    if (repeated.empty()) {
      out.push_back(sequence(s, false));
      return;
    }
    // choice[v] == 0: variable absent; k > 0: occurrence k-1 taken.
    std::vector<std::size_t> choice(repeated.size(), 0);
    for (;;) {
      Sequence variant;
      for (std::size_t i = 0; i < s.size(); ++i) {
        bool drop = false, force = false;
        for (std::size_t v = 0; v < repeated.size(); ++v) {
          auto& pos = repeated[v];
          auto it = std::find(pos.begin(), pos.end(), i);
          if (it == pos.end()) continue;
          std::size_t k = static_cast<std::size_t>(it - pos.begin()) + 1;
          if (choice[v] == k)
            force = true;
          else
            drop = true;
        }
        if (drop) continue;
        variant.push_back(force ? s[i].inner.front() : s[i]);
      }
      out.push_back(sequence(variant, false));
      std::size_t v = 0;
      while (v < repeated.size() && ++choice[v] > repeated[v].size()) choice[v++] = 0;
      if (v == repeated.size()) break;
    }
  }

  Regex category(const std::string& cat, const Scope* scope) {
    std::vector<Regex> alts;
    auto it = p_.categories.find(cat);
    if (it == p_.categories.end()) return Regex::alt({});
    for (const auto& e : it->second) {
      if (e.kind == CategoryEntry::Kind::Unit) {
        const auto& u = p_.units[e.index];
        if (scope && cat == kTop && !scope->count(u.key)) continue;
        for (const auto& line : u.source_lines) line_variants(line.elements, alts);
      } else {
        alts.push_back(sequence(p_.lexemes[e.index].source_pattern.elements, true));
      }
    }
    return Regex::alt(std::move(alts));
  }

 private:
  const AssembledProject& p_;
  RecognitionGrammar& g_;
};

void collect_refs(const Regex& r, std::set<std::string>& out) {
  if (r.kind == Regex::Kind::RuleRef) out.insert(r.text);
  for (const auto& i : r.items) collect_refs(i, out);
}

}  // namespace

RecognitionGrammar compile_grammar(const AssembledProject& project,
                                   const Scope* scope) {
  RecognitionGrammar g;
  g.start = rule_name(kTop);
  g.language = project.locale.empty() ? project.source_language : project.locale;

  std::map<std::string, std::string> names;  // rule name -> category
  for (const auto& [cat, _] : project.categories) {
    auto [it, ok] = names.emplace(rule_name(cat), cat);
    if (!ok)
      throw Error("RuleNameCollision",
                  fmt::format("$${} and $${} both become rule '{}'", it->second,
                              cat, it->first));
  }

  if (scope) {
    bool any = false;
    for (const auto& k : project.top_keys()) any = any || scope->count(k);
    if (!any) throw Error("EmptyScope", "scope selects no $$top units");
  }

  Compiler c(project, g);
  std::vector<std::string> work{std::string(kTop)};
  while (!work.empty()) {
    std::string cat = work.back();
    work.pop_back();
    std::string name = rule_name(cat);
    if (g.rules.count(name)) continue;
    Regex body = c.category(cat, scope);
    std::set<std::string> refs;
    collect_refs(body, refs);
    g.rules.emplace(name, std::move(body));
    for (const auto& r : refs)
      if (!g.rules.count(r) && names.count(r)) work.push_back(names.at(r));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Counting

namespace {

class Counter {
 public:
  explicit Counter(const RecognitionGrammar& g) : g_(g) {}

  BigCount count(const Regex& r) {
    switch (r.kind) {
      case Regex::Kind::Terminal:
        return 1;
      case Regex::Kind::RuleRef:
        return rule(r.text);
      case Regex::Kind::Seq: {
        BigCount n = 1;
        for (const auto& i : r.items) n *= count(i);
        return n;
      }
      case Regex::Kind::Alt: {
        BigCount n = 0;
        for (const auto& i : r.items) n += count(i);
        return n;
      }
      case Regex::Kind::Opt:
        return count(r.items.front()) + 1;
    }
    return 0;
  }

  BigCount rule(const std::string& name) {
    if (auto it = memo_.find(name); it != memo_.end()) return it->second;
    auto it = g_.rules.find(name);
    BigCount n = it == g_.rules.end() ? BigCount(0) : count(it->second);
    memo_.emplace(name, n);
    return n;
  }

 private:
  const RecognitionGrammar& g_;
  std::map<std::string, BigCount> memo_;
};

class Enumerator {
 public:
  using Cont = std::function<bool()>;

  explicit Enumerator(const RecognitionGrammar& g) : g_(g) {}

  // Returns false once enumeration must stop.
  bool gen(const Regex& r, const Cont& k) {
    switch (r.kind) {
      case Regex::Kind::Terminal: {
        out.push_back(r.text);
        bool go = k();
        out.pop_back();
        return go;
      }
      case Regex::Kind::RuleRef: {
        auto it = g_.rules.find(r.text);
        return it == g_.rules.end() ? true : gen(it->second, k);
      }
      case Regex::Kind::Seq:
        return seq(r.items, 0, k);
      case Regex::Kind::Alt:
        for (const auto& i : r.items)
          if (!gen(i, k)) return false;
        return true;
      case Regex::Kind::Opt:
        if (!k()) return false;
        return gen(r.items.front(), k);
    }
    return true;
  }

  std::vector<std::string> out;

 private:
  bool seq(const std::vector<Regex>& items, std::size_t i, const Cont& k) {
    if (i == items.size()) return k();
    return gen(items[i], [&] { return seq(items, i + 1, k); });
  }

  const RecognitionGrammar& g_;
};

}  // namespace

LanguageSize count_language(const RecognitionGrammar& g) {
  LanguageSize s;
  s.count = Counter(g).rule(g.start);
  s.vocabulary = g.terminals.size();
  return s;
}

void for_each_sentence(
    const RecognitionGrammar& g, std::size_t limit,
    const std::function<bool(const std::vector<std::string>&)>& visit) {
  if (limit == 0) return;
  auto it = g.rules.find(g.start);
  if (it == g.rules.end()) return;
  Enumerator e(g);
  std::size_t n = 0;
  e.gen(it->second, [&] {
    if (!visit(e.out)) return false;
    return ++n < limit;
  });
}

std::vector<std::string> enumerate_language(const RecognitionGrammar& g,
                                            std::size_t limit) {
  std::vector<std::string> out;
  for_each_sentence(g, limit, [&](const std::vector<std::string>& toks) {
    out.push_back(text::join(toks, " "));
    return true;
  });
  return out;
}

EnumerationSummary summarize_enumeration(const RecognitionGrammar& g,
                                         std::size_t limit) {
  EnumerationSummary s;
  std::unordered_set<std::string> seen;
  // One past the limit tells a complete enumeration from a truncated one.
  for_each_sentence(g, limit + 1, [&](const std::vector<std::string>& toks) {
    if (s.derivations == limit) return false;
    ++s.derivations;
    seen.insert(text::join(toks, " "));
    return true;
  });
  s.distinct = seen.size();
  s.complete = s.derivations < limit || count_language(g).count == s.derivations;
  return s;
}

// ---------------------------------------------------------------------------
// Emission

namespace {

bool bare_terminal(std::string_view t) {
  if (t.empty() || t[0] == '$') return false;
  return t.find_first_of(" \t()[]|;=\"\\") == std::string_view::npos;
}

std::string bnf_terminal(std::string_view t) {
  if (bare_terminal(t)) return std::string(t);
  std::string out = "\"";
  for (char c : t) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string bnf_alt(const Regex& r);

std::string bnf_item(const Regex& r) {
  switch (r.kind) {
    case Regex::Kind::Terminal:
      return bnf_terminal(r.text);
    case Regex::Kind::RuleRef:
      return "$" + r.text;
    case Regex::Kind::Opt:
      return "[ " + bnf_alt(r.items.front()) + " ]";
    case Regex::Kind::Alt:
    case Regex::Kind::Seq:
      return "( " + bnf_alt(r) + " )";
  }
  return {};
}

std::string bnf_seq(const Regex& r) {
  if (r.kind != Regex::Kind::Seq) return bnf_item(r);
  std::vector<std::string> parts;
  for (const auto& i : r.items) parts.push_back(bnf_item(i));
  return text::join(parts, " ");
}

std::string bnf_alt(const Regex& r) {
  if (r.kind != Regex::Kind::Alt) return bnf_seq(r);
  std::vector<std::string> parts;
  for (const auto& i : r.items) parts.push_back(bnf_seq(i));
  return text::join(parts, " | ");
}

std::vector<std::string> rule_order(const RecognitionGrammar& g) {
  std::vector<std::string> out;
  if (g.rules.count(g.start)) out.push_back(g.start);
  for (const auto& [name, _] : g.rules)
    if (name != g.start) out.push_back(name);
  return out;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

void srgs_node(const Regex& r, int indent, std::string& out) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  switch (r.kind) {
    case Regex::Kind::Terminal:
      out += pad + "<token>" + xml_escape(r.text) + "</token>\n";
      break;
    case Regex::Kind::RuleRef:
      out += pad + "<ruleref uri=\"#" + xml_escape(r.text) + "\"/>\n";
      break;
    case Regex::Kind::Seq:
      for (const auto& i : r.items) srgs_node(i, indent, out);
      break;
    case Regex::Kind::Alt:
      out += pad + "<one-of>\n";
      for (const auto& i : r.items) {
        out += pad + "  <item>\n";
        srgs_node(i, indent + 2, out);
        out += pad + "  </item>\n";
      }
      out += pad + "</one-of>\n";
      break;
    case Regex::Kind::Opt:
      out += pad + "<item repeat=\"0-1\">\n";
      srgs_node(r.items.front(), indent + 1, out);
      out += pad + "</item>\n";
      break;
  }
}

}  // namespace

std::string emit_grammar(const RecognitionGrammar& g, GrammarFormat format) {
  std::string out;
  if (format == GrammarFormat::LiteBnf) {
    out += "root $" + g.start + " ;\n";
    for (const auto& name : rule_order(g))
      out += name + " = " + bnf_alt(g.rules.at(name)) + " ;\n";
    return out;
  }
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<grammar xmlns=\"http://www.w3.org/2001/06/grammar\" version=\"1.0\" "
         "mode=\"voice\" xml:lang=\"" +
         xml_escape(g.language) + "\" root=\"" + xml_escape(g.start) + "\">\n";
  for (const auto& name : rule_order(g)) {
    out += "  <rule id=\"" + xml_escape(name) + "\" scope=\"" +
           (name == g.start ? "public" : "private") + "\">\n";
    srgs_node(g.rules.at(name), 2, out);
    out += "  </rule>\n";
  }
  out += "</grammar>\n";
  return out;
}

// ---------------------------------------------------------------------------
// lite-bnf reader

namespace {

class BnfParser {
 public:
  explicit BnfParser(std::string_view text) { lex(text); }

  RecognitionGrammar parse() {
    RecognitionGrammar g;
    expect("root");
    std::string start = next();
    if (start.size() < 2 || start[0] != '$') fail("expected $rule after root");
    g.start = start.substr(1);
    expect(";");
    while (pos_ < toks_.size()) {
      std::string name = next();
      expect("=");
      Regex body = alt();
      expect(";");
      if (!g.rules.emplace(name, std::move(body)).second)
        fail("rule '" + name + "' defined twice");
    }
    for (const auto& [_, r] : g.rules) terminals(r, g.terminals);
    g.language.clear();
    return g;
  }

 private:
  struct Tok {
    std::string text;
    bool quoted;
  };

  [[noreturn]] static void fail(const std::string& msg) { throw Error("BadGrammar", msg); }

  void lex(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
      char c = s[i];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++i;
      } else if (std::string_view("()[]|;=").find(c) != std::string_view::npos) {
        toks_.push_back({std::string(1, c), false});
        ++i;
      } else if (c == '"') {
        std::string v;
        ++i;
        bool closed = false;
        while (i < s.size()) {
          char d = s[i++];
          if (d == '\\' && i < s.size()) {
            v += s[i++];
          } else if (d == '"') {
            closed = true;
            break;
          } else {
            v += d;
          }
        }
        if (!closed) fail("unterminated quoted terminal");
        toks_.push_back({v, true});
      } else {
        std::size_t j = i;
        while (j < s.size() && std::string_view(" \t\r\n()[]|;=\"").find(s[j]) ==
                                   std::string_view::npos)
          ++j;
        toks_.push_back({std::string(s.substr(i, j - i)), false});
        i = j;
      }
    }
  }

  bool at(std::string_view t) const {
    return pos_ < toks_.size() && !toks_[pos_].quoted && toks_[pos_].text == t;
  }
  std::string next() {
    if (pos_ >= toks_.size()) fail("unexpected end of grammar");
    return toks_[pos_++].text;
  }
  void expect(std::string_view t) {
    if (!at(t)) fail(fmt::format("expected '{}'", t));
    ++pos_;
  }

  Regex alt() {
    std::vector<Regex> alts{seq()};
    while (at("|")) {
      ++pos_;
      alts.push_back(seq());
    }
    return Regex::alt(std::move(alts));
  }

  Regex seq() {
    std::vector<Regex> items;
    while (pos_ < toks_.size() && !at("|") && !at(";") && !at(")") && !at("]"))
      items.push_back(item());
    if (items.empty()) fail("empty sequence");
    if (items.size() == 1) return std::move(items.front());
    return {Regex::Kind::Seq, {}, std::move(items)};
  }

  Regex item() {
    if (at("(")) {
      ++pos_;
      Regex r = alt();
      expect(")");
      return r;
    }
    if (at("[")) {
      ++pos_;
      Regex r = alt();
      expect("]");
      return Regex::opt(std::move(r));
    }
    const Tok& t = toks_[pos_++];
    if (!t.quoted && t.text.size() > 1 && t.text[0] == '$')
      return Regex::ref(t.text.substr(1));
    if (!t.quoted && std::string_view("=").find(t.text) != std::string_view::npos)
      fail("unexpected '='");
    return Regex::terminal(t.text);
  }

  static void terminals(const Regex& r, std::set<std::string>& out) {
    if (r.kind == Regex::Kind::Terminal) out.insert(r.text);
    for (const auto& i : r.items) terminals(i, out);
  }

  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
};

}  // namespace

RecognitionGrammar parse_lite_bnf(std::string_view text) {
  return BnfParser(text).parse();
}

}  // namespace lite
