#include "lite/project.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace lite {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("FileNotFound", fmt::format("cannot read '{}'", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Manifest

ProjectManifest parse_manifest(std::string_view json_text,
                               std::filesystem::path base_dir) {
  ProjectManifest m;
  m.base_dir = std::move(base_dir);
  try {
    json j = json::parse(json_text);
    m.id = j.value("id", std::string{});
    m.source_language = j.at("source_language").get<std::string>();
    m.locale = j.value("locale", std::string{});
    m.target_languages =
        j.value("target_languages", std::vector<std::string>{});
    m.source_files = j.value("source_files", std::vector<std::string>{});
    for (const auto& t : j.value("target_files", json::array()))
      m.target_files.push_back(
          {t.at("lang").get<std::string>(), t.at("path").get<std::string>()});
    for (const auto& s : j.value("sign_targets", json::array())) {
      SignTargetConfig c;
      c.lang = s.at("lang").get<std::string>();
      c.rule_files = s.value("rules", std::vector<std::string>{});
      if (s.contains("lexicon")) {
        const auto& l = s["lexicon"];
        c.lexicon.manual = l.value("manual", std::string{});
        c.lexicon.nonmanual = l.value("nonmanual", std::string{});
        c.lexicon.mouthing = l.value("mouthing", std::string{});
      }
      m.sign_targets.push_back(std::move(c));
    }
    m.questionnaire_files =
        j.value("questionnaire_files", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error("BadManifest", e.what());
  }
  if (m.id.empty()) m.id = m.source_language;
  check_manifest(m);
  return m;
}

ProjectManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.parent_path());
}

void check_manifest(const ProjectManifest& m) {
  auto fail = [](std::string msg) { throw Error("BadManifest", msg); };
  if (m.id.empty()) fail("id is empty");
  if (m.source_language.empty()) fail("source_language is empty");
  if (m.source_files.empty()) fail("no source_files");
  std::set<std::string> langs;
  for (const auto& l : m.target_languages) {
    if (l == m.source_language)
      fail(fmt::format("source language '{}' listed as a target", l));
    if (!langs.insert(l).second) fail(fmt::format("target '{}' listed twice", l));
  }
  std::set<std::string> paths;
  auto add_path = [&](const std::string& p) {
    if (!paths.insert(p).second) fail(fmt::format("path '{}' listed twice", p));
  };
  for (const auto& p : m.source_files) add_path(p);
  for (const auto& t : m.target_files) {
    if (!langs.count(t.lang))
      fail(fmt::format("target file '{}' has undeclared language '{}'", t.path,
                       t.lang));
    add_path(t.path);
  }
  for (const auto& q : m.questionnaire_files) add_path(q);
}

// ---------------------------------------------------------------------------
// Project lookups

const TrPhraseUnit* AssembledProject::find_unit(std::string_view category,
                                                std::string_view key) const {
  auto it = categories.find(std::string(category));
  if (it == categories.end()) return nullptr;
  for (const auto& e : it->second)
    if (e.kind == CategoryEntry::Kind::Unit && units[e.index].key == key)
      return &units[e.index];
  return nullptr;
}

const TrLexEntry* AssembledProject::find_lexeme(std::string_view category,
                                                std::string_view key) const {
  auto it = categories.find(std::string(category));
  if (it == categories.end()) return nullptr;
  for (const auto& e : it->second)
    if (e.kind == CategoryEntry::Kind::Lexeme && lexemes[e.index].key == key)
      return &lexemes[e.index];
  return nullptr;
}

std::vector<CanonicalKey> AssembledProject::top_keys() const {
  std::vector<CanonicalKey> out;
  for (const auto& u : units)
    if (u.category == kTop) out.push_back(u.key);
  return out;
}

bool AssembledProject::has_target_language(std::string_view lang) const {
  return std::find(target_languages.begin(), target_languages.end(), lang) !=
         target_languages.end();
}

std::map<std::pair<CanonicalKey, LanguageTag>, std::string>
AssembledProject::target_index() const {
  std::map<std::pair<CanonicalKey, LanguageTag>, std::string> out;
  for (const auto& u : units)
    for (const auto& [lang, t] : u.targets) out[{u.key, lang}] = to_string(t);
  for (const auto& l : lexemes)
    for (const auto& [lang, t] : l.targets) out[{l.key, lang}] = to_string(t);
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

class Assembler {
 public:
  explicit Assembler(const ProjectManifest& m) : m_(m) {
    out_.project.id = m.id;
    out_.project.source_language = m.source_language;
    out_.project.locale = m.locale;
    out_.project.target_languages = m.target_languages;
  }

  AssemblyResult run(const std::vector<RuleFile>& files) {
    for (const auto& f : files)
      if (f.role.kind != RuleRole::Target) add_source_file(f);
    index();
    for (const auto& f : files)
      if (f.role.kind == RuleRole::Target) add_target_file(f);
    check_graph();
    return std::move(out_);
  }

 private:
  AssembledProject& p() { return out_.project; }

  void diag(Severity s, std::string code, std::string msg, const std::string& path,
            std::size_t line) {
    out_.diagnostics.push_back({s, std::move(code), std::move(msg), {path, line}});
  }

  bool is_target(const std::string& lang) const {
    return std::find(m_.target_languages.begin(), m_.target_languages.end(),
                     lang) != m_.target_languages.end();
  }

  bool duplicate_key(const std::string& cat, const std::string& key,
                     const std::string& path, std::size_t line) {
    auto [it, inserted] = keys_.insert({cat, key});
    if (!inserted) {
      diag(Severity::Error, "DuplicateCanonical",
           fmt::format("canonical '{}' already defined in $${}", key, cat), path,
           line);
      return true;
    }
    return false;
  }

  void foreign_language(const std::string& lang, const std::string& path,
                        std::size_t line) {
    if (lang == m_.source_language || is_target(lang) || is_stream_name(lang))
      return;
    diag(Severity::Warning, "UnknownLanguage",
         fmt::format("'{}' is not a declared target language", lang), path, line);
  }

  void add_source_file(const RuleFile& f) {
    const std::string& canon = m_.source_language;
    for (const auto& item : f.items) {
      std::size_t decl = next_decl_++;
      if (auto* u = std::get_if<UnitFragment>(&item)) {
        TrPhraseUnit unit;
        unit.category = u->category;
        for (const auto& s : u->sources) unit.source_lines.push_back(s.pattern);
        unit.canonical = *u->targets.at(canon).tmpl;
        unit.key = canonical_key(unit.canonical);
        unit.origin = {f.path, u->line, u->end_line};
        unit.declaration_index = decl;
        if (duplicate_key(unit.category, unit.key, f.path, u->line)) continue;
        for (const auto& [lang, tl] : u->targets) {
          if (lang == canon) continue;
          foreign_language(lang, f.path, tl.line);
          if (is_target(lang) && tl.tmpl) unit.targets[lang] = *tl.tmpl;
        }
        p().units.push_back(std::move(unit));
      } else {
        const auto& lx = std::get<LexemeFragment>(item);
        TrLexEntry e;
        e.category = lx.category;
        e.source_pattern = *lx.source;
        e.canonical = *lx.values.at(canon);
        e.key = canonical_key(e.canonical);
        e.origin = {f.path, lx.line, lx.line};
        e.declaration_index = decl;
        if (duplicate_key(e.category, e.key, f.path, lx.line)) continue;
        for (const auto& [lang, v] : lx.values) {
          if (lang == canon) continue;
          foreign_language(lang, f.path, lx.line);
          if (is_target(lang) && v) e.targets[lang] = *v;
        }
        p().lexemes.push_back(std::move(e));
      }
    }
  }

  void index() {
    auto& cats = p().categories;
    for (std::size_t i = 0; i < p().units.size(); ++i) {
      const auto& u = p().units[i];
      cats[u.category].push_back({CategoryEntry::Kind::Unit, i});
      auto& edges = p().variable_graph[u.category];
      for (const auto& s : u.source_lines)
        for (const auto& v : variables_of(s.elements)) edges.insert(v);
    }
    for (std::size_t i = 0; i < p().lexemes.size(); ++i) {
      const auto& l = p().lexemes[i];
      cats[l.category].push_back({CategoryEntry::Kind::Lexeme, i});
      p().variable_graph[l.category];
    }
    for (auto& [_, entries] : cats) {
      std::sort(entries.begin(), entries.end(),
                [&](const CategoryEntry& a, const CategoryEntry& b) {
                  return decl(a) < decl(b);
                });
    }
  }

  std::size_t decl(const CategoryEntry& e) {
    return e.kind == CategoryEntry::Kind::Unit
               ? p().units[e.index].declaration_index
               : p().lexemes[e.index].declaration_index;
  }

  template <typename T>
  T* find_mut(std::vector<T>& v, const T* found) {
    return found ? &v[static_cast<std::size_t>(found - v.data())] : nullptr;
  }

  void add_target_file(const RuleFile& f) {
    const std::string& canon = m_.source_language;
    const std::string& lang = f.role.target_language;
    auto orphan = [&](const std::string& key, std::size_t line) {
      diag(Severity::Warning, "OrphanTarget",
           fmt::format("'{}' has no source-side rule", key), f.path, line);
    };
    for (const auto& item : f.items) {
      if (auto* u = std::get_if<UnitFragment>(&item)) {
        std::string key = canonical_key(*u->targets.at(canon).tmpl);
        auto* unit = find_mut(p().units, p().find_unit(u->category, key));
        if (!unit) {
          orphan(key, u->line);
          continue;
        }
        for (const auto& [tl_lang, tl] : u->targets) {
          if (tl_lang == canon) continue;
          if (tl_lang != lang) foreign_language(tl_lang, f.path, tl.line);
          if (!tl.tmpl || !is_target(tl_lang)) continue;
          auto it = unit->targets.find(tl_lang);
          if (it == unit->targets.end()) {
            unit->targets.emplace(tl_lang, *tl.tmpl);
          } else {
            report_duplicate(it->second == *tl.tmpl, tl_lang, key, f.path, tl.line);
          }
        }
      } else {
        const auto& lx = std::get<LexemeFragment>(item);
        std::string key = canonical_key(*lx.values.at(canon));
        auto* entry = find_mut(p().lexemes, p().find_lexeme(lx.category, key));
        if (!entry) {
          orphan(key, lx.line);
          continue;
        }
        for (const auto& [v_lang, v] : lx.values) {
          if (v_lang == canon) continue;
          if (v_lang != lang) foreign_language(v_lang, f.path, lx.line);
          if (!v || !is_target(v_lang)) continue;
          auto it = entry->targets.find(v_lang);
          if (it == entry->targets.end()) {
            entry->targets.emplace(v_lang, *v);
          } else {
            report_duplicate(it->second == *v, v_lang, key, f.path, lx.line);
          }
        }
      }
    }
  }

  void report_duplicate(bool same, const std::string& lang, const std::string& key,
                        const std::string& path, std::size_t line) {
    if (same)
      diag(Severity::Warning, "DuplicateTarget",
           fmt::format("{} translation of '{}' given twice", lang, key), path, line);
    else
      diag(Severity::Error, "ConflictingTarget",
           fmt::format("conflicting {} translations of '{}'", lang, key), path,
           line);
  }

  void check_graph() {
    const auto& cats = p().categories;
    if (!cats.count(std::string(kTop)))
      diag(Severity::Error, "MissingTop", "no $$top rules defined", "", 0);

    for (const auto& u : p().units) {
      for (const auto& s : u.source_lines)
        for (const auto& v : variables_of(s.elements))
          if (!cats.count(v))
            diag(Severity::Error, "UnknownVariable",
                 fmt::format("$${} has no rules", v), u.origin.path, u.origin.line);
    }

    // Iterative colouring DFS; reports each cycle once.
    enum Colour { White, Grey, Black };
    std::map<std::string, Colour> colour;
    std::vector<std::string> stack;
    std::function<void(const std::string&)> visit = [&](const std::string& c) {
      colour[c] = Grey;
      stack.push_back(c);
      auto it = p().variable_graph.find(c);
      if (it != p().variable_graph.end()) {
        for (const auto& next : it->second) {
          if (!cats.count(next)) continue;
          if (colour[next] == Grey) {
            auto from = std::find(stack.begin(), stack.end(), next);
            std::vector<std::string> cyc(from, stack.end());
            cyc.push_back(next);
            std::string path;
            for (std::size_t i = 0; i < cyc.size(); ++i)
              path += (i ? " -> $$" : "$$") + cyc[i];
            const auto& first = cats.at(next).front();
            const Origin& o = first.kind == CategoryEntry::Kind::Unit
                                  ? p().units[first.index].origin
                                  : p().lexemes[first.index].origin;
            diag(Severity::Error, "CyclicVariable", "cycle " + path, o.path, o.line);
          } else if (colour[next] == White) {
            visit(next);
          }
        }
      }
      stack.pop_back();
      colour[c] = Black;
    };
    for (const auto& [c, _] : cats) colour.emplace(c, White);
    for (const auto& [c, _] : cats)
      if (colour[c] == White) visit(c);
  }

  const ProjectManifest& m_;
  AssemblyResult out_;
  std::set<std::pair<std::string, std::string>> keys_;
  std::size_t next_decl_ = 0;
};

}  // namespace

AssemblyResult assemble(const ProjectManifest& manifest,
                        const std::vector<RuleFile>& files) {
  return Assembler(manifest).run(files);
}

// ---------------------------------------------------------------------------
// Validation

namespace {

// A variable may occur more than once in a source line only as top-level
// `?$$v` elements; matching binds it at most once.
bool repeated_variable_ok(const Sequence& s, const std::string& v) {
  std::size_t top_optional = 0;
  for (const auto& e : s)
    if (e.is_optional_var() && e.inner.front().variable == v) ++top_optional;
  std::size_t total = 0;
  std::function<void(const Sequence&)> count = [&](const Sequence& seq) {
    for (const auto& e : seq) {
      if (e.kind == PatternElement::Kind::Var && e.variable == v) ++total;
      if (e.kind == PatternElement::Kind::Optional) count(e.inner);
      if (e.kind == PatternElement::Kind::Group)
        for (const auto& a : e.alternatives) count(a);
    }
  };
  count(s);
  return total <= 1 || total == top_optional;
}

}  // namespace

Diagnostics validate(const AssembledProject& project) {
  Diagnostics out;
  auto diag = [&](Severity s, std::string code, std::string msg, const Origin& o) {
    out.push_back({s, std::move(code), std::move(msg), {o.path, o.line}});
  };

  for (const auto& u : project.units) {
    for (const auto& s : u.source_lines) {
      if (is_nullable(s))
        diag(Severity::Error, "NullablePattern",
             fmt::format("'{}' matches the empty utterance", to_string(s)), u.origin);
      for (const auto& v : variables_of(s.elements))
        if (!repeated_variable_ok(s.elements, v))
          diag(Severity::Error, "RepeatedVariable",
               fmt::format("$${} repeats in '{}'; repeats must all be ?$${}", v,
                           to_string(s), v),
               u.origin);
    }
    auto in_some_source = [&](const std::string& v) {
      return std::any_of(u.source_lines.begin(), u.source_lines.end(),
                         [&](const Pattern& p) {
                           auto vs = variables_of(p.elements);
                           return std::find(vs.begin(), vs.end(), v) != vs.end();
                         });
    };
    for (const auto& slot : u.canonical.slots) {
      if (slot.kind == TemplateSlot::Kind::Literal) continue;
      if (!in_some_source(slot.variable)) {
        diag(Severity::Error, "UncoveredVariable",
             fmt::format("$${} in canonical '{}' appears in no Source line",
                         slot.variable, u.key),
             u.origin);
        continue;
      }
      if (slot.kind == TemplateSlot::Kind::Var) {
        for (const auto& s : u.source_lines) {
          auto mand = mandatory_variables_of(s.elements);
          if (std::find(mand.begin(), mand.end(), slot.variable) == mand.end())
            diag(Severity::Error, "UncoveredVariable",
                 fmt::format("$${} is mandatory in canonical '{}' but optional or "
                             "absent in '{}'",
                             slot.variable, u.key, to_string(s)),
                 u.origin);
        }
      }
    }
    for (const auto& [lang, t] : u.targets) {
      for (const auto& slot : t.slots) {
        if (slot.kind == TemplateSlot::Kind::Literal) continue;
        if (!u.canonical.has_variable(slot.variable)) {
          diag(Severity::Error, "TargetVariableNotInCanonical",
               fmt::format("{} target of '{}' uses $${}", lang, u.key,
                           slot.variable),
               u.origin);
          continue;
        }
        bool canon_optional = std::any_of(
            u.canonical.slots.begin(), u.canonical.slots.end(),
            [&](const TemplateSlot& c) {
              return c.kind == TemplateSlot::Kind::OptionalVar &&
                     c.variable == slot.variable;
            });
        if (slot.kind == TemplateSlot::Kind::Var && canon_optional)
          diag(Severity::Warning, "UnboundTargetVariable",
               fmt::format("{} target of '{}' requires $${}, which is optional",
                           lang, u.key, slot.variable),
               u.origin);
      }
    }
    for (const auto& lang : project.target_languages)
      if (!u.targets.count(lang))
        diag(Severity::Warning, "MissingTarget",
             fmt::format("{}: \"{}\"", lang, u.key), u.origin);
  }

  for (const auto& l : project.lexemes) {
    if (is_nullable(l.source_pattern))
      diag(Severity::Error, "NullablePattern",
           fmt::format("'{}' matches the empty utterance",
                       to_string(l.source_pattern)),
           l.origin);
    for (const auto& lang : project.target_languages)
      if (!l.targets.count(lang))
        diag(Severity::Warning, "MissingTarget",
             fmt::format("{}: \"{}\"", lang, l.key), l.origin);
  }

  std::set<std::string> reachable;
  std::vector<std::string> work{std::string(kTop)};
  while (!work.empty()) {
    auto c = work.back();
    work.pop_back();
    if (!reachable.insert(c).second) continue;
    auto it = project.variable_graph.find(c);
    if (it != project.variable_graph.end())
      for (const auto& n : it->second) work.push_back(n);
  }
  for (const auto& [cat, entries] : project.categories) {
    if (reachable.count(cat)) continue;
    const auto& e = entries.front();
    const Origin& o = e.kind == CategoryEntry::Kind::Unit
                          ? project.units[e.index].origin
                          : project.lexemes[e.index].origin;
    diag(Severity::Warning, "UnreachableCategory",
         fmt::format("$${} is never referenced from $$top", cat), o);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Blank target files

namespace {

std::vector<std::pair<std::size_t, Fragment>> blank_fragments(
    const AssembledProject& project, const LanguageTag& lang) {
  std::vector<std::pair<std::size_t, Fragment>> out;
  for (const auto& u : project.units) {
    UnitFragment f;
    f.category = u.category;
    f.targets.emplace(project.source_language, TargetLine{u.canonical, 0});
    f.targets.emplace(lang, TargetLine{std::nullopt, 0});
    out.emplace_back(u.declaration_index, std::move(f));
  }
  for (const auto& l : project.lexemes) {
    LexemeFragment f;
    f.category = l.category;
    f.values.emplace(project.source_language, l.canonical);
    f.values.emplace(lang, std::nullopt);
    out.emplace_back(l.declaration_index, std::move(f));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::pair<std::string, std::string> fragment_key(const Fragment& f,
                                                 const std::string& canon) {
  if (auto* u = std::get_if<UnitFragment>(&f)) {
    auto it = u->targets.find(canon);
    if (it == u->targets.end() || !it->second.tmpl) return {u->category, ""};
    return {u->category, "phrase:" + canonical_key(*it->second.tmpl)};
  }
  const auto& l = std::get<LexemeFragment>(f);
  auto it = l.values.find(canon);
  if (it == l.values.end() || !it->second) return {l.category, ""};
  return {l.category, "lex:" + canonical_key(*it->second)};
}

std::vector<std::string>& comments_of(Fragment& f) {
  if (auto* u = std::get_if<UnitFragment>(&f)) return u->comments;
  return std::get<LexemeFragment>(f).comments;
}

inline const std::string kOrphanMarker = "# ORPHAN";

}  // namespace

std::string generate_blank_targets(const AssembledProject& project,
                                   const LanguageTag& lang) {
  RuleFile file;
  file.role = FileRole::target(lang, project.source_language);
  for (auto& [_, f] : blank_fragments(project, lang)) file.items.push_back(std::move(f));
  if (file.items.empty()) return "\n";
  return serialize_rule_file(file);
}

std::string refresh_blank_targets(const RuleFile& existing,
                                  const AssembledProject& project,
                                  const LanguageTag& lang) {
  const std::string& canon = project.source_language;
  RuleFile out = existing;
  out.role = FileRole::target(lang, canon);

  std::set<std::pair<std::string, std::string>> source_keys;
  auto blanks = blank_fragments(project, lang);
  for (const auto& [_, f] : blanks) source_keys.insert(fragment_key(f, canon));

  std::set<std::pair<std::string, std::string>> present;
  for (auto& f : out.items) {
    auto key = fragment_key(f, canon);
    present.insert(key);
    auto& comments = comments_of(f);
    auto marker = std::find(comments.begin(), comments.end(), kOrphanMarker);
    bool orphan = !source_keys.count(key);
    if (orphan && marker == comments.end()) comments.push_back(kOrphanMarker);
    if (!orphan && marker != comments.end()) comments.erase(marker);
  }
  for (auto& [_, f] : blanks)
    if (!present.count(fragment_key(f, canon))) out.items.push_back(std::move(f));
  return serialize_rule_file(out);
}

// ---------------------------------------------------------------------------
// Loading

LoadedProject load_project(const ProjectManifest& manifest) {
  LoadedProject lp;
  lp.manifest = manifest;
  auto resolve = [&](const std::string& p) {
    return (manifest.base_dir / p).lexically_normal();
  };
  auto load = [&](const std::string& p, const FileRole& role) {
    std::string text;
    try {
      text = read_file(resolve(p));
    } catch (const Error& e) {
      lp.diagnostics.push_back({Severity::Error, e.code(), e.what(), {p, 0}});
      return;
    }
    auto parsed = parse_rule_file(text, role, p);
    lp.diagnostics.insert(lp.diagnostics.end(), parsed.diagnostics.begin(),
                          parsed.diagnostics.end());
    lp.files.push_back(std::move(parsed.file));
  };
  for (const auto& p : manifest.source_files)
    load(p, FileRole::source(manifest.source_language));
  for (const auto& t : manifest.target_files)
    load(t.path, FileRole::target(t.lang, manifest.source_language));
  if (has_errors(lp.diagnostics)) return lp;

  auto assembled = assemble(manifest, lp.files);
  lp.diagnostics.insert(lp.diagnostics.end(), assembled.diagnostics.begin(),
                        assembled.diagnostics.end());
  lp.project = std::move(assembled.project);
  if (has_errors(lp.diagnostics)) return lp;
  auto v = validate(lp.project);
  lp.diagnostics.insert(lp.diagnostics.end(), v.begin(), v.end());
  return lp;
}

LoadedProject load_project(const std::filesystem::path& manifest_path) {
  return load_project(load_manifest(manifest_path));
}

}  // namespace lite
