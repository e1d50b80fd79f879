#include "lite/sign.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "lite/csv.hpp"
#include "lite/text.hpp"

namespace lite {

std::string_view stream_name(Stream s) { return kStreams[static_cast<std::size_t>(s)]; }

std::optional<Stream> parse_stream(std::string_view name) {
  for (std::size_t i = 0; i < kStreamCount; ++i)
    if (kStreams[i] == name) return static_cast<Stream>(i);
  return std::nullopt;
}

std::optional<std::string> SignTargetRule::column_variable(std::size_t c) const {
  for (const auto& s : streams)
    if (c < s.size() && s[c].kind == SignSlot::Kind::Var) return s[c].value;
  return std::nullopt;
}

const SignTargetRule* SignRuleSet::find_rule(std::string_view category,
                                             std::string_view key) const {
  for (const auto& r : rules)
    if (r.category == category && r.key == key) return &r;
  return nullptr;
}

const SignLexEntry* SignRuleSet::find_lexeme(std::string_view category,
                                             std::string_view key) const {
  for (const auto& l : lexemes)
    if (l.category == category && l.key == key) return &l;
  return nullptr;
}

void SignRuleSet::append(SignRuleSet other) {
  for (auto& r : other.rules) rules.push_back(std::move(r));
  for (auto& l : other.lexemes) lexemes.push_back(std::move(l));
}

std::string format_table(const SignTable& t) {
  std::vector<std::size_t> widths(t.columns(), 0);
  auto display_width = [](const std::string& s) {
    // Count code points, not bytes, so accented symbols line up.
    return static_cast<std::size_t>(std::count_if(
        s.begin(), s.end(), [](unsigned char c) { return (c & 0xC0) != 0x80; }));
  };
  for (const auto& s : t.streams)
    for (std::size_t c = 0; c < s.size(); ++c)
      widths[c] = std::max(widths[c], display_width(s[c]));
  std::string out;
  for (std::size_t i = 0; i < kStreamCount; ++i) {
    std::string line(kStreams[i]);
    line.append(10 - kStreams[i].size(), ' ');
    for (std::size_t c = 0; c < t.columns(); ++c) {
      const auto& v = t.streams[i][c];
      line += v;
      if (c + 1 < t.columns()) line.append(widths[c] - display_width(v) + 2, ' ');
    }
    out += line + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rule parsing

namespace {

class SignRuleBuilder {
 public:
  explicit SignRuleBuilder(std::string path) : path_(std::move(path)) {}

  void error(std::string code, std::string msg, std::size_t line) {
    out_.diagnostics.push_back(
        {Severity::Error, std::move(code), std::move(msg), {path_, line}});
  }

  // Validates alignment; `canonical` supplies the variables a column may use.
  void add_rule(SignTargetRule r, const Template& canonical) {
    std::size_t line = r.origin.line;
    std::size_t width = r.streams[0].size();
    for (std::size_t i = 1; i < kStreamCount; ++i)
      if (r.streams[i].size() != width) {
        error("StreamLengthMismatch",
              fmt::format("'{}': gloss has {} columns, {} has {}", r.key, width,
                          kStreams[i], r.streams[i].size()),
              line);
        return;
      }
    std::set<std::string> used;
    for (std::size_t c = 0; c < width; ++c) {
      std::optional<std::string> var;
      for (const auto& s : r.streams) {
        if (s[c].kind != SignSlot::Kind::Var) continue;
        if (var && *var != s[c].value) {
          error("InconsistentVarColumn",
                fmt::format("'{}': column {} mixes $${} and $${}", r.key, c + 1,
                            *var, s[c].value),
                line);
          return;
        }
        var = s[c].value;
      }
      if (!var) continue;
      if (!canonical.has_variable(*var)) {
        error("VariableNotInCanonical",
              fmt::format("'{}': column {} uses $${}", r.key, c + 1, *var), line);
        return;
      }
      if (!used.insert(*var).second) {
        error("InconsistentVarColumn",
              fmt::format("'{}': $${} occupies more than one column", r.key, *var),
              line);
        return;
      }
    }
    out_.rules.rules.push_back(std::move(r));
  }

  void add_lexeme(SignLexEntry e) {
    std::size_t line = e.origin.line;
    if (!e.streams[0]) {
      error("MissingStream", fmt::format("sign lexeme '{}' has no gloss", e.key), line);
      return;
    }
    e.width = e.streams[0]->size();
    for (std::size_t i = 1; i < kStreamCount; ++i)
      if (e.streams[i] && e.streams[i]->size() != e.width) {
        error("StreamLengthMismatch",
              fmt::format("sign lexeme '{}': gloss has {} symbols, {} has {}", e.key,
                          e.width, kStreams[i], e.streams[i]->size()),
              line);
        return;
      }
    out_.rules.lexemes.push_back(std::move(e));
  }

  ParsedSignRules take() { return std::move(out_); }
  Diagnostics& diagnostics() { return out_.diagnostics; }

 private:
  std::string path_;
  ParsedSignRules out_;
};

std::vector<SignSlot> slots_of(const Template& t) {
  std::vector<SignSlot> out;
  for (const auto& s : t.slots) {
    if (s.kind == TemplateSlot::Kind::Literal)
      out.push_back({SignSlot::Kind::Symbol, s.token.display});
    else
      out.push_back({SignSlot::Kind::Var, s.variable});
  }
  return out;
}

ParsedSignRules parse_text_rules(std::string_view input, const FileRole& role,
                                 const std::string& path) {
  auto parsed = parse_rule_file(input, role, path);
  SignRuleBuilder b(path);
  for (auto& d : parsed.diagnostics)
    if (d.severity == Severity::Error) b.diagnostics().push_back(d);
  const std::string& canon = role.canonical_language;
  for (const auto* u : parsed.file.units()) {
    std::size_t present = 0;
    for (auto s : kStreams) present += u->targets.count(std::string(s));
    if (present == 0) continue;
    const auto& canonical = *u->targets.at(canon).tmpl;
    SignTargetRule r;
    r.category = u->category;
    r.key = canonical_key(canonical);
    r.origin = {path, u->line, u->end_line};
    bool ok = true;
    for (std::size_t i = 0; i < kStreamCount; ++i) {
      auto it = u->targets.find(std::string(kStreams[i]));
      if (it == u->targets.end() || !it->second.tmpl) {
        b.error("MissingStream",
                fmt::format("'{}' has no Target/{} line", r.key, kStreams[i]),
                u->line);
        ok = false;
        break;
      }
      r.streams[i] = slots_of(*it->second.tmpl);
    }
    if (ok) b.add_rule(std::move(r), canonical);
  }
  for (const auto* l : parsed.file.lexemes()) {
    bool any = std::any_of(std::begin(kStreams), std::end(kStreams),
                           [&](auto s) { return l->values.count(std::string(s)); });
    if (!any) continue;
    SignLexEntry e;
    e.category = l->category;
    e.key = canonical_key(*l->values.at(canon));
    e.origin = {path, l->line, l->line};
    for (std::size_t i = 0; i < kStreamCount; ++i) {
      auto it = l->values.find(std::string(kStreams[i]));
      if (it == l->values.end() || !it->second) continue;
      std::vector<std::string> syms;
      for (const auto& t : *it->second) syms.push_back(t.display);
      e.streams[i] = std::move(syms);
    }
    b.add_lexeme(std::move(e));
  }
  return b.take();
}

std::string strip_dollars(const std::string& s) {
  return s.rfind("$$", 0) == 0 ? s.substr(2) : s;
}

ParsedSignRules parse_csv_rules(std::string_view input, const std::string& path) {
  SignRuleBuilder b(path);
  std::vector<csv::Record> records;
  try {
    records = csv::parse(input);
  } catch (const Error& e) {
    b.error(e.code(), e.what(), 0);
    return b.take();
  }
  if (records.empty()) return b.take();
  if (records.front().cells.empty() || text::trim(records.front().cells[0]) != "kind") {
    b.error("BadCsv", "header row 'kind,category,canonical,stream,...' required",
            records.front().line);
    return b.take();
  }

  struct Group {
    std::string kind, category, canonical_text;
    std::size_t line;
    std::map<std::size_t, std::vector<std::string>> streams;
    bool failed = false;
  };
  std::vector<Group> groups;
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto cells = records[r].cells;
    while (!cells.empty() && text::trim(cells.back()).empty()) cells.pop_back();
    std::size_t line = records[r].line;
    if (cells.size() < 4) {
      b.error("BadCsv", "expected kind,category,canonical,stream,...", line);
      continue;
    }
    for (auto& c : cells) c = text::trim(c);
    const std::string& kind = cells[0];
    if (kind != "phrase" && kind != "lex") {
      b.error("BadCsv", fmt::format("unknown row kind '{}'", kind), line);
      continue;
    }
    auto stream = parse_stream(cells[3]);
    if (!stream) {
      b.error("MissingStream", fmt::format("unknown stream '{}'", cells[3]), line);
      continue;
    }
    std::string category = strip_dollars(cells[1]);
    auto g = std::find_if(groups.begin(), groups.end(), [&](const Group& x) {
      return x.kind == kind && x.category == category && x.canonical_text == cells[2];
    });
    if (g == groups.end()) {
      groups.push_back({kind, category, cells[2], line, {}, false});
      g = std::prev(groups.end());
    }
    auto idx = static_cast<std::size_t>(*stream);
    if (g->streams.count(idx)) {
      b.error("DuplicateAttributeKey",
              fmt::format("stream '{}' given twice for '{}'", cells[3], cells[2]),
              line);
      g->failed = true;
      continue;
    }
    g->streams[idx] = std::vector<std::string>(cells.begin() + 4, cells.end());
  }

  for (auto& g : groups) {
    if (g.failed) continue;
    if (g.kind == "phrase") {
      Template canonical;
      try {
        canonical = parse_template(g.canonical_text, TemplateMode::Canonical);
      } catch (const Error& e) {
        b.error(e.code(), e.what(), g.line);
        continue;
      }
      SignTargetRule r;
      r.category = g.category;
      r.key = canonical_key(canonical);
      r.origin = {path, g.line, g.line};
      bool ok = true;
      for (std::size_t i = 0; i < kStreamCount && ok; ++i) {
        auto it = g.streams.find(i);
        if (it == g.streams.end()) {
          b.error("MissingStream",
                  fmt::format("'{}' has no {} row", r.key, kStreams[i]), g.line);
          ok = false;
          break;
        }
        for (const auto& cell : it->second) {
          if (cell.rfind("?$$", 0) == 0)
            r.streams[i].push_back({SignSlot::Kind::Var, cell.substr(3)});
          else if (cell.rfind("$$", 0) == 0)
            r.streams[i].push_back({SignSlot::Kind::Var, cell.substr(2)});
          else
            r.streams[i].push_back({SignSlot::Kind::Symbol, cell});
        }
      }
      if (ok) b.add_rule(std::move(r), canonical);
    } else {
      SignLexEntry e;
      e.category = g.category;
      e.key = canonical_key(parse_token_list(g.canonical_text));
      e.origin = {path, g.line, g.line};
      for (auto& [i, syms] : g.streams) e.streams[i] = std::move(syms);
      b.add_lexeme(std::move(e));
    }
  }
  return b.take();
}

}  // namespace

ParsedSignRules parse_sign_rules(std::string_view input, SignRuleFormat format,
                                 const FileRole& role, std::string path) {
  if (format == SignRuleFormat::Csv) return parse_csv_rules(input, path);
  return parse_text_rules(input, role, path);
}

// ---------------------------------------------------------------------------
// Translation

namespace {

void append_node(const AssembledProject& p, const SignRuleSet& rules,
                 const MatchNode& n, SignTable& out);

void append_unit(const AssembledProject& p, const SignRuleSet& rules,
                 const MatchNode& n, SignTable& out) {
  const auto& u = p.units[n.index];
  const SignTargetRule* r = rules.find_rule(u.category, u.key);
  if (!r)
    throw Error("MissingSignTarget", fmt::format("no sign rule for '{}'", u.key));
  for (std::size_t c = 0; c < r->width(); ++c) {
    auto var = r->column_variable(c);
    if (!var) {
      for (std::size_t s = 0; s < kStreamCount; ++s)
        out.streams[s].push_back(r->streams[s][c].value);
      continue;
    }
    const Binding* b = n.find(*var);
    if (!b) continue;  // optional variable left unbound: column disappears
    const MatchNode& child = *b->value;
    if (child.kind == CategoryEntry::Kind::Unit) {
      append_node(p, rules, child, out);
      continue;
    }
    const auto& lx = p.lexemes[child.index];
    const SignLexEntry* e = rules.find_lexeme(lx.category, lx.key);
    if (!e)
      throw Error("MissingSignTarget",
                  fmt::format("no sign lexeme for $${} '{}'", lx.category, lx.key));
    for (std::size_t s = 0; s < kStreamCount; ++s) {
      if (e->streams[s]) {
        out.streams[s].insert(out.streams[s].end(), e->streams[s]->begin(),
                              e->streams[s]->end());
        continue;
      }
      const SignSlot& slot = r->streams[s][c];
      std::string inherited =
          slot.kind == SignSlot::Kind::Symbol ? slot.value : std::string(kNeutral);
      out.streams[s].insert(out.streams[s].end(), e->width, inherited);
    }
  }
}

void append_node(const AssembledProject& p, const SignRuleSet& rules,
                 const MatchNode& n, SignTable& out) {
  if (n.kind == CategoryEntry::Kind::Unit) {
    append_unit(p, rules, n, out);
    return;
  }
  // A lexeme bound directly at top level cannot occur ($$top holds units).
  throw Error("MissingSignTarget", "lexeme without an enclosing sign rule");
}

}  // namespace

SignTable realize_sign_table(const AssembledProject& project,
                             const SignRuleSet& rules, const MatchResult& canonical) {
  SignTable t;
  append_node(project, rules, *canonical.root, t);
  return t;
}

SignTable sign_translate(const AssembledProject& project, const SignRuleSet& rules,
                         const Utterance& utt) {
  auto matches = match_source(project, utt);
  std::string paraphrase = realize_canonical(project, matches.front());
  auto canonical = match_canonical(project, paraphrase);
  return realize_sign_table(project, rules, canonical.front());
}

// ---------------------------------------------------------------------------
// Lexicon + SiGML

namespace {

bool blank(const std::string& v) { return v.empty() || v == "?"; }

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

const char* nonmanual_element(Stream s) {
  switch (s) {
    case Stream::Head: return "hnm_head";
    case Stream::Gaze: return "hnm_eyegaze";
    case Stream::Eyebrows: return "hnm_eyebrows";
    case Stream::Aperture: return "hnm_eyelids";
    default: return "";
  }
}

std::size_t header_columns(SignLexiconKind k) {
  return k == SignLexiconKind::Nonmanual ? 3 : 2;
}

const char* header_row(SignLexiconKind k) {
  switch (k) {
    case SignLexiconKind::Manual: return "gloss,hamnosys";
    case SignLexiconKind::Nonmanual: return "symbol,stream,tag";
    case SignLexiconKind::Mouthing: return "mouthing,picture";
  }
  return "";
}

}  // namespace

void load_lexicon_csv(SignLexicon& lex, SignLexiconKind kind, std::string_view text) {
  auto records = csv::parse(text);
  if (records.empty()) return;
  std::size_t need = header_columns(kind);
  for (std::size_t i = 1; i < records.size(); ++i) {
    auto cells = records[i].cells;
    if (cells.size() < need)
      throw Error("BadLexicon", fmt::format("line {}: expected {} columns",
                                            records[i].line, need));
    for (auto& c : cells) c = text::trim(c);
    bool fresh = true;
    switch (kind) {
      case SignLexiconKind::Manual:
        fresh = lex.manual.emplace(cells[0], cells[1]).second;
        break;
      case SignLexiconKind::Nonmanual:
        fresh = lex.nonmanual.emplace(std::make_pair(cells[1], cells[0]), cells[2]).second;
        break;
      case SignLexiconKind::Mouthing:
        fresh = lex.mouthing.emplace(cells[0], cells[1]).second;
        break;
    }
    if (!fresh)
      throw Error("BadLexicon", fmt::format("line {}: duplicate key '{}'",
                                            records[i].line, cells[0]));
  }
}

std::string render_sigml(const SignTable& table, const SignLexicon& lex) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<sigml>\n";
  for (std::size_t c = 0; c < table.columns(); ++c) {
    const std::string& gloss = table[Stream::Gloss][c];
    auto m = lex.manual.find(gloss);
    if (m == lex.manual.end() || blank(m->second))
      throw Error("MissingLexiconEntry", gloss);
    std::string nonmanual;
    for (Stream s : {Stream::Head, Stream::Gaze, Stream::Eyebrows, Stream::Aperture}) {
      const std::string& v = table[s][c];
      if (v == kNeutral) continue;
      auto it = lex.nonmanual.find({std::string(stream_name(s)), v});
      if (it == lex.nonmanual.end() || blank(it->second))
        throw Error("MissingLexiconEntry", fmt::format("{}:{}", stream_name(s), v));
      nonmanual += fmt::format("      <{} tag=\"{}\"/>\n", nonmanual_element(s),
                               xml_escape(it->second));
    }
    const std::string& mouth = table[Stream::Mouthing][c];
    if (mouth != kNeutral) {
      auto it = lex.mouthing.find(mouth);
      if (it == lex.mouthing.end() || blank(it->second))
        throw Error("MissingLexiconEntry", fmt::format("mouthing:{}", mouth));
      nonmanual += fmt::format("      <hnm_mouthpicture picture=\"{}\"/>\n",
                               xml_escape(it->second));
    }
    out += fmt::format("  <hns_sign gloss=\"{}\">\n", xml_escape(gloss));
    if (!nonmanual.empty())
      out += "    <hamnosys_nonmanual>\n" + nonmanual + "    </hamnosys_nonmanual>\n";
    out += fmt::format("    <hamnosys_manual>{}</hamnosys_manual>\n",
                       xml_escape(m->second));
    out += "  </hns_sign>\n";
  }
  out += "</sigml>\n";
  return out;
}

std::string refresh_sign_lexicon(SignLexiconKind kind, std::string_view text,
                                 const SignRuleSet& rules) {
  // Inventory in first-use order.
  std::vector<csv::Row> wanted;
  std::set<csv::Row> seen_wanted;
  auto want = [&](Stream s, const std::string& sym) {
    if (sym.empty()) return;
    csv::Row key;
    switch (kind) {
      case SignLexiconKind::Manual:
        if (s != Stream::Gloss) return;
        key = {sym};
        break;
      case SignLexiconKind::Mouthing:
        if (s != Stream::Mouthing || sym == kNeutral) return;
        key = {sym};
        break;
      case SignLexiconKind::Nonmanual:
        if (s == Stream::Gloss || s == Stream::Mouthing || sym == kNeutral) return;
        key = {sym, std::string(stream_name(s))};
        break;
    }
    if (seen_wanted.insert(key).second) wanted.push_back(key);
  };
  for (const auto& r : rules.rules)
    for (std::size_t s = 0; s < kStreamCount; ++s)
      for (const auto& slot : r.streams[s])
        if (slot.kind == SignSlot::Kind::Symbol) want(static_cast<Stream>(s), slot.value);
  for (const auto& l : rules.lexemes)
    for (std::size_t s = 0; s < kStreamCount; ++s)
      if (l.streams[s])
        for (const auto& sym : *l.streams[s]) want(static_cast<Stream>(s), sym);

  auto records = csv::parse(text);
  std::set<csv::Row> have;
  for (std::size_t i = 1; i < records.size(); ++i) {
    auto cells = records[i].cells;
    for (auto& c : cells) c = text::trim(c);
    if (kind == SignLexiconKind::Nonmanual && cells.size() >= 2)
      have.insert({cells[0], cells[1]});
    else if (!cells.empty())
      have.insert({cells[0]});
  }

  std::vector<csv::Row> missing;
  for (const auto& key : wanted)
    if (!have.count(key)) missing.push_back(key);
  std::string out(text);
  if (missing.empty()) return out;
  if (records.empty()) out = std::string(header_row(kind)) + "\n";
  if (!out.empty() && out.back() != '\n') out += '\n';
  for (auto row : missing) {
    row.push_back("?");
    out += csv::format_row(row) + "\n";
  }
  return out;
}

LoadedSignTarget load_sign_target(const ProjectManifest& manifest,
                                  const SignTargetConfig& config) {
  LoadedSignTarget t;
  t.lang = config.lang;
  for (const auto& path : config.rule_files) {
    std::string text;
    try {
      text = read_file(manifest.base_dir / path);
    } catch (const Error& e) {
      t.diagnostics.push_back({Severity::Error, e.code(), e.what(), {path, 0}});
      continue;
    }
    bool is_csv = path.size() >= 4 && path.substr(path.size() - 4) == ".csv";
    bool is_source = std::find(manifest.source_files.begin(),
                               manifest.source_files.end(),
                               path) != manifest.source_files.end();
    FileRole role = is_source ? FileRole::monolithic(manifest.source_language)
                              : FileRole::target(config.lang, manifest.source_language);
    auto parsed = parse_sign_rules(text, is_csv ? SignRuleFormat::Csv : SignRuleFormat::Text,
                                   role, path);
    t.diagnostics.insert(t.diagnostics.end(), parsed.diagnostics.begin(),
                         parsed.diagnostics.end());
    t.rules.append(std::move(parsed.rules));
  }
  auto load = [&](const std::string& path, SignLexiconKind kind) {
    if (path.empty()) return;
    try {
      load_lexicon_csv(t.lexicon, kind, read_file(manifest.base_dir / path));
    } catch (const Error& e) {
      t.diagnostics.push_back({Severity::Error, e.code(), e.what(), {path, 0}});
    }
  };
  load(config.lexicon.manual, SignLexiconKind::Manual);
  load(config.lexicon.nonmanual, SignLexiconKind::Nonmanual);
  load(config.lexicon.mouthing, SignLexiconKind::Mouthing);
  return t;
}

}  // namespace lite
