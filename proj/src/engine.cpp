#include "lite/engine.hpp"

#include <algorithm>
#include <functional>

#include <fmt/format.h>

#include "lite/text.hpp"

namespace lite {

Utterance tokenize(std::string_view raw) {
  Utterance u;
  u.raw = std::string(raw);
  for (const auto& w : text::split_whitespace(raw)) {
    Token t{w, text::match_form(w)};
    if (t.norm.empty()) continue;
    u.tokens.push_back(std::move(t));
  }
  if (u.tokens.empty()) throw Error("EmptyUtterance", "utterance has no tokens");
  return u;
}

const Binding* MatchNode::find(std::string_view variable) const {
  for (const auto& b : bindings)
    if (b.variable == variable) return &b;
  return nullptr;
}

namespace {

enum class View { Source, Canonical };

Sequence template_as_sequence(const Template& t) {
  Sequence seq;
  for (const auto& s : t.slots) {
    switch (s.kind) {
      case TemplateSlot::Kind::Literal:
        seq.push_back(PatternElement::literal(s.token));
        break;
      case TemplateSlot::Kind::Var:
        seq.push_back(PatternElement::var(s.variable));
        break;
      case TemplateSlot::Kind::OptionalVar:
        seq.push_back(PatternElement::optional(PatternElement::var(s.variable)));
        break;
    }
  }
  return seq;
}

Sequence tokens_as_sequence(const std::vector<Token>& toks) {
  Sequence seq;
  for (const auto& t : toks) seq.push_back(PatternElement::literal(t));
  return seq;
}

void priority_of(const AssembledProject& p, const MatchNode& n,
                 std::vector<std::size_t>& out) {
  out.push_back(n.kind == CategoryEntry::Kind::Unit
                    ? p.units[n.index].declaration_index
                    : p.lexemes[n.index].declaration_index);
  out.push_back(n.line_index);
  for (const auto& b : n.bindings) priority_of(p, *b.value, out);
}

void spans_of(const MatchNode& n, std::vector<std::size_t>& out) {
  out.push_back(n.start);
  out.push_back(n.end);
  out.push_back(n.bindings.size());
  for (const auto& b : n.bindings) spans_of(*b.value, out);
}

MatchResult make_result(const AssembledProject& p,
                        std::shared_ptr<const MatchNode> node) {
  MatchResult r;
  priority_of(p, *node, r.priority);
  spans_of(*node, r.spans);
  r.root = std::move(node);
  return r;
}

bool result_less(const MatchResult& a, const MatchResult& b) {
  if (a.priority != b.priority) return a.priority < b.priority;
  return a.spans < b.spans;
}

bool result_equal(const MatchResult& a, const MatchResult& b) {
  return a.priority == b.priority && a.spans == b.spans;
}

// Backtracking parser over one project view. Category parses are memoized
// per start position; a variable binds at most once within one line.
class Matcher {
 public:
  Matcher(const AssembledProject& p, View view, const std::vector<Token>& tokens)
      : p_(p), view_(view), tokens_(tokens) {
    if (view_ == View::Canonical) {
      unit_seqs_.reserve(p.units.size());
      for (const auto& u : p.units) unit_seqs_.push_back(template_as_sequence(u.canonical));
      lex_seqs_.reserve(p.lexemes.size());
      for (const auto& l : p.lexemes) lex_seqs_.push_back(tokens_as_sequence(l.canonical));
    }
  }

  std::vector<MatchResult> top(const Scope* scope) {
    std::vector<MatchResult> out;
    auto it = p_.categories.find(std::string(kTop));
    if (it == p_.categories.end()) return out;
    for (const auto& e : it->second) {
      if (e.kind != CategoryEntry::Kind::Unit) continue;
      if (scope && !scope->count(p_.units[e.index].key)) continue;
      parse_unit(e.index, 0, [&](std::shared_ptr<const MatchNode> n) {
        if (n->end == tokens_.size()) out.push_back(make_result(p_, std::move(n)));
      });
    }
    std::sort(out.begin(), out.end(), result_less);
    out.erase(std::unique(out.begin(), out.end(), result_equal), out.end());
    return out;
  }

 private:
  using Bindings = std::vector<Binding>;
  using Cont = std::function<void(std::size_t, Bindings&)>;
  using NodeSink = std::function<void(std::shared_ptr<const MatchNode>)>;

  std::vector<const Sequence*> unit_lines(std::size_t i) const {
    std::vector<const Sequence*> out;
    if (view_ == View::Canonical) {
      out.push_back(&unit_seqs_[i]);
    } else {
      for (const auto& s : p_.units[i].source_lines) out.push_back(&s.elements);
    }
    return out;
  }

  const Sequence& lexeme_seq(std::size_t i) const {
    return view_ == View::Canonical ? lex_seqs_[i] : p_.lexemes[i].source_pattern.elements;
  }

  void parse_unit(std::size_t index, std::size_t start, const NodeSink& sink) {
    auto lines = unit_lines(index);
    for (std::size_t li = 0; li < lines.size(); ++li) {
      Bindings b;
      walk(*lines[li], 0, start, b, [&](std::size_t end, Bindings& bs) {
        auto n = std::make_shared<MatchNode>();
        n->kind = CategoryEntry::Kind::Unit;
        n->index = index;
        n->line_index = li;
        n->start = start;
        n->end = end;
        n->bindings = bs;
        sink(std::move(n));
      });
    }
  }

  void parse_lexeme(std::size_t index, std::size_t start, const NodeSink& sink) {
    Bindings b;
    std::set<std::size_t> ends;
    walk(lexeme_seq(index), 0, start, b, [&](std::size_t end, Bindings&) {
      if (!ends.insert(end).second) return;
      auto n = std::make_shared<MatchNode>();
      n->kind = CategoryEntry::Kind::Lexeme;
      n->index = index;
      n->start = start;
      n->end = end;
      sink(std::move(n));
    });
  }

  const std::vector<std::shared_ptr<const MatchNode>>& category(
      const std::string& cat, std::size_t start) {
    auto key = std::make_pair(cat, start);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::vector<MatchResult> found;
    auto it = p_.categories.find(cat);
    if (it != p_.categories.end()) {
      for (const auto& e : it->second) {
        NodeSink sink = [&](std::shared_ptr<const MatchNode> n) {
          found.push_back(make_result(p_, std::move(n)));
        };
        if (e.kind == CategoryEntry::Kind::Unit)
          parse_unit(e.index, start, sink);
        else
          parse_lexeme(e.index, start, sink);
      }
    }
    std::sort(found.begin(), found.end(), result_less);
    found.erase(std::unique(found.begin(), found.end(), result_equal), found.end());
    std::vector<std::shared_ptr<const MatchNode>> nodes;
    for (auto& r : found) nodes.push_back(std::move(r.root));
    return memo_.emplace(key, std::move(nodes)).first->second;
  }

  void walk(const Sequence& seq, std::size_t i, std::size_t pos, Bindings& b,
            const Cont& k) {
    if (i == seq.size()) {
      k(pos, b);
      return;
    }
    const auto& e = seq[i];
    using K = PatternElement::Kind;
    switch (e.kind) {
      case K::Literal:
        if (pos < tokens_.size() && tokens_[pos].norm == e.token.norm)
          walk(seq, i + 1, pos + 1, b, k);
        break;
      case K::Var: {
        if (std::any_of(b.begin(), b.end(),
                        [&](const Binding& x) { return x.variable == e.variable; }))
          break;
        if (pos >= tokens_.size()) break;
        // Copy: the memo vector may grow while we recurse.
        auto parses = category(e.variable, pos);
        for (const auto& n : parses) {
          b.push_back({e.variable, n->start, n->end, n});
          walk(seq, i + 1, n->end, b, k);
          b.pop_back();
        }
        break;
      }
      case K::Group:
        for (const auto& alt : e.alternatives)
          walk(alt, 0, pos, b, [&](std::size_t p2, Bindings& b2) {
            walk(seq, i + 1, p2, b2, k);
          });
        break;
      case K::Optional:
        walk(seq, i + 1, pos, b, k);
        walk(e.inner, 0, pos, b, [&](std::size_t p2, Bindings& b2) {
          walk(seq, i + 1, p2, b2, k);
        });
        break;
    }
  }

  const AssembledProject& p_;
  View view_;
  const std::vector<Token>& tokens_;
  std::vector<Sequence> unit_seqs_;
  std::vector<Sequence> lex_seqs_;
  std::map<std::pair<std::string, std::size_t>,
           std::vector<std::shared_ptr<const MatchNode>>>
      memo_;
};

void realize_canonical_into(const AssembledProject& p, const MatchNode& n,
                            std::vector<std::string>& out) {
  if (n.kind == CategoryEntry::Kind::Lexeme) {
    for (const auto& t : p.lexemes[n.index].canonical) out.push_back(t.display);
    return;
  }
  const auto& u = p.units[n.index];
  for (const auto& s : u.canonical.slots) {
    if (s.kind == TemplateSlot::Kind::Literal) {
      out.push_back(s.token.display);
      continue;
    }
    const Binding* b = n.find(s.variable);
    if (!b) {
      if (s.kind == TemplateSlot::Kind::OptionalVar) continue;
      throw Error("UnboundMandatoryVariable",
                  fmt::format("$${} unbound while realizing '{}'", s.variable, u.key));
    }
    realize_canonical_into(p, *b->value, out);
  }
}

void realize_target_into(const AssembledProject& p, const MatchNode& n,
                         const LanguageTag& lang, std::vector<std::string>& out) {
  if (n.kind == CategoryEntry::Kind::Lexeme) {
    const auto& l = p.lexemes[n.index];
    auto it = l.targets.find(lang);
    if (it == l.targets.end())
      throw Error("MissingTarget", fmt::format("{}: \"{}\"", lang, l.key));
    for (const auto& t : it->second) out.push_back(t.display);
    return;
  }
  const auto& u = p.units[n.index];
  auto it = u.targets.find(lang);
  if (it == u.targets.end())
    throw Error("MissingTarget", fmt::format("{}: \"{}\"", lang, u.key));
  for (const auto& s : it->second.slots) {
    if (s.kind == TemplateSlot::Kind::Literal) {
      out.push_back(s.token.display);
      continue;
    }
    const Binding* b = n.find(s.variable);
    if (!b) {
      if (s.kind == TemplateSlot::Kind::OptionalVar) continue;
      throw Error("UnboundMandatoryVariable",
                  fmt::format("$${} unbound in {} target of '{}'", s.variable, lang,
                              u.key));
    }
    realize_target_into(p, *b->value, lang, out);
  }
}

}  // namespace

std::vector<MatchResult> find_source_matches(const AssembledProject& project,
                                             const Utterance& utt,
                                             const Scope* scope) {
  return Matcher(project, View::Source, utt.tokens).top(scope);
}

std::vector<MatchResult> match_source(const AssembledProject& project,
                                      const Utterance& utt, const Scope* scope) {
  auto out = find_source_matches(project, utt, scope);
  if (out.empty())
    throw Error("NoMatch", fmt::format("no rule covers '{}'", utt.raw));
  return out;
}

std::vector<MatchResult> match_canonical(const AssembledProject& project,
                                         std::string_view canonical) {
  std::vector<MatchResult> out;
  try {
    Utterance utt = tokenize(canonical);
    out = Matcher(project, View::Canonical, utt.tokens).top(nullptr);
  } catch (const Error& e) {
    if (e.code() != "EmptyUtterance") throw;
  }
  if (out.empty())
    throw Error("NoCanonicalMatch",
                fmt::format("'{}' is not a canonical sentence", canonical));
  return out;
}

std::string realize_canonical(const AssembledProject& project,
                              const MatchResult& match) {
  std::vector<std::string> out;
  realize_canonical_into(project, *match.root, out);
  return text::join(out, " ");
}

std::string realize_target(const AssembledProject& project,
                           const MatchResult& canonical_match,
                           const LanguageTag& lang) {
  if (lang == project.source_language)
    return realize_canonical(project, canonical_match);
  std::vector<std::string> out;
  realize_target_into(project, *canonical_match.root, lang, out);
  return text::join(out, " ");
}

std::string translate_canonical(const AssembledProject& project,
                                std::string_view canonical,
                                const LanguageTag& lang) {
  auto matches = match_canonical(project, canonical);
  return realize_target(project, matches.front(), lang);
}

TranslationResult translate(const AssembledProject& project, const Utterance& utt,
                            const std::vector<LanguageTag>& langs,
                            const Scope* scope) {
  auto matches = match_source(project, utt, scope);
  TranslationResult r;
  r.paraphrase = realize_canonical(project, matches.front());
  std::optional<MatchResult> pivot;
  std::optional<Error> pivot_error;
  try {
    pivot = match_canonical(project, r.paraphrase).front();
  } catch (const Error& e) {
    pivot_error = e;
  }
  for (const auto& lang : langs) {
    TargetOutput o;
    try {
      if (pivot_error) throw *pivot_error;
      o.text = realize_target(project, *pivot, lang);
    } catch (const Error& e) {
      o.error_code = e.code();
      o.error_message = e.what();
    }
    r.outputs[lang] = std::move(o);
  }
  return r;
}

}  // namespace lite
