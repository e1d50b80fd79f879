// lite: command-line front end for rule projects.

#include <csignal>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lite/grammar.hpp"
#include "lite/project.hpp"
#include "lite/questionnaire.hpp"
#include "lite/service.hpp"
#include "lite/sign.hpp"

namespace {

using namespace lite;

void print_diagnostics(const Diagnostics& ds) {
  for (const auto& d : ds) std::cerr << format_diagnostic(d) << "\n";
}

// Loads the manifest and reports diagnostics; returns nullopt on errors.
std::optional<LoadedProject> open_project(const std::string& manifest) {
  LoadedProject p;
  try {
    p = load_project(std::filesystem::path(manifest));
  } catch (const Error& e) {
    std::cerr << manifest << ":0: error " << e.code() << " " << e.what() << "\n";
    return std::nullopt;
  }
  print_diagnostics(p.diagnostics);
  if (!p.ok()) return std::nullopt;
  return p;
}

int cmd_check(const std::string& manifest) {
  auto p = open_project(manifest);
  if (!p) return 1;
  for (const auto& path : p->manifest.questionnaire_files) {
    auto q = load_questionnaire(read_file(p->manifest.base_dir / path), p->project, path);
    print_diagnostics(q.diagnostics);
    if (!q.ok()) return 1;
  }
  bool failed = false;
  for (const auto& cfg : p->manifest.sign_targets) {
    auto t = load_sign_target(p->manifest, cfg);
    print_diagnostics(t.diagnostics);
    failed |= has_errors(t.diagnostics);
  }
  return failed ? 1 : 0;
}

int cmd_blank(const std::string& manifest, const std::string& lang, bool refresh,
              std::string existing) {
  auto p = open_project(manifest);
  if (!p) return 1;
  if (!p->project.has_target_language(lang)) {
    std::cerr << manifest << ":0: error UnknownLanguage '" << lang << "' is not a target language\n";
    return 1;
  }
  if (refresh && existing.empty()) {
    for (const auto& t : p->manifest.target_files)
      if (t.lang == lang) existing = (p->manifest.base_dir / t.path).string();
  }
  if (existing.empty()) {
    std::cout << generate_blank_targets(p->project, lang);
    return 0;
  }
  auto parsed = parse_rule_file(read_file(existing),
                                FileRole::target(lang, p->project.source_language), existing);
  print_diagnostics(parsed.diagnostics);
  if (has_errors(parsed.diagnostics)) return 1;
  std::cout << refresh_blank_targets(parsed.file, p->project, lang);
  return 0;
}

int cmd_translate(const std::string& manifest, std::vector<std::string> langs) {
  auto p = open_project(manifest);
  if (!p) return 1;
  if (langs.empty()) langs = p->project.target_languages;
  int status = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto r = translate(p->project, tokenize(line), langs);
      std::string out = r.paraphrase;
      for (const auto& [lang, o] : r.outputs)
        out += "\t" + lang + "=" + (o.ok() ? o.text : "!" + o.error_code);
      std::cout << out << "\n";
    } catch (const Error& e) {
      std::cout << "!" << e.code() << "\n";
      status = 1;
    }
  }
  return status;
}

RecognitionGrammar compile_scoped(const LoadedProject& p, const std::vector<std::string>& keys) {
  if (keys.empty()) return compile_grammar(p.project);
  Scope scope;
  for (const auto& k : keys) scope.insert(canonical_key(parse_template(k, TemplateMode::Canonical)));
  return compile_grammar(p.project, &scope);
}

int cmd_compile(const std::string& manifest, const std::string& format,
                const std::vector<std::string>& scope, const std::string& out) {
  auto p = open_project(manifest);
  if (!p) return 1;
  auto g = compile_scoped(*p, scope);
  bool srgs = format == "srgs" || format == "srgs-xml";
  std::string text = emit_grammar(g, srgs ? GrammarFormat::SrgsXml : GrammarFormat::LiteBnf);
  if (out.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream f(out, std::ios::binary);
  f << text;
  if (!f) {
    std::cerr << out << ":0: error WriteFailed cannot write file\n";
    return 1;
  }
  return 0;
}

int cmd_count(const std::string& manifest, const std::vector<std::string>& scope) {
  auto p = open_project(manifest);
  if (!p) return 1;
  auto size = count_language(compile_scoped(*p, scope));
  std::cout << "derivations " << size.count << "\nvocabulary " << size.vocabulary << "\n";
  return 0;
}

int cmd_enumerate(const std::string& manifest, std::size_t limit,
                  const std::vector<std::string>& scope) {
  auto p = open_project(manifest);
  if (!p) return 1;
  for_each_sentence(compile_scoped(*p, scope), limit, [](const std::vector<std::string>& s) {
    std::string line;
    for (const auto& t : s) line += (line.empty() ? "" : " ") + t;
    std::cout << line << "\n";
    return true;
  });
  return 0;
}

int cmd_sign(const std::string& manifest, std::string lang, bool table) {
  auto p = open_project(manifest);
  if (!p) return 1;
  const auto& targets = p->manifest.sign_targets;
  if (lang.empty() && targets.size() == 1) lang = targets[0].lang;
  auto cfg = std::find_if(targets.begin(), targets.end(),
                          [&](const SignTargetConfig& c) { return c.lang == lang; });
  if (cfg == targets.end()) {
    std::cerr << manifest << ":0: error UnknownLanguage no sign target '" << lang << "'\n";
    return 1;
  }
  auto target = load_sign_target(p->manifest, *cfg);
  print_diagnostics(target.diagnostics);
  if (has_errors(target.diagnostics)) return 1;
  int status = 0;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      SignTable t = sign_translate(p->project, target.rules, tokenize(line));
      std::cout << (table ? format_table(t) : render_sigml(t, target.lexicon));
    } catch (const Error& e) {
      std::cerr << "error " << e.code() << " " << e.what() << "\n";
      status = 1;
    }
  }
  return status;
}

int cmd_sign_lexicon(const std::string& manifest, std::string lang, const std::string& kind) {
  auto p = open_project(manifest);
  if (!p) return 1;
  const auto& targets = p->manifest.sign_targets;
  if (lang.empty() && targets.size() == 1) lang = targets[0].lang;
  auto cfg = std::find_if(targets.begin(), targets.end(),
                          [&](const SignTargetConfig& c) { return c.lang == lang; });
  if (cfg == targets.end()) {
    std::cerr << manifest << ":0: error UnknownLanguage no sign target '" << lang << "'\n";
    return 1;
  }
  auto target = load_sign_target(p->manifest, *cfg);
  SignLexiconKind k = kind == "manual"      ? SignLexiconKind::Manual
                      : kind == "nonmanual" ? SignLexiconKind::Nonmanual
                                            : SignLexiconKind::Mouthing;
  const std::string& rel = k == SignLexiconKind::Manual      ? cfg->lexicon.manual
                           : k == SignLexiconKind::Nonmanual ? cfg->lexicon.nonmanual
                                                             : cfg->lexicon.mouthing;
  std::string existing;
  if (!rel.empty() && std::filesystem::exists(p->manifest.base_dir / rel))
    existing = read_file(p->manifest.base_dir / rel);
  std::cout << refresh_sign_lexicon(k, existing, target.rules);
  return 0;
}

Service* g_service = nullptr;

int cmd_serve(const std::string& manifest, const std::string& host, int port,
              const std::vector<std::string>& questionnaires, const std::string& journal,
              std::size_t max_sessions) {
  ServiceConfig cfg;
  cfg.manifest = manifest;
  cfg.host = host;
  cfg.port = port;
  for (const auto& q : questionnaires) cfg.questionnaires.emplace_back(q);
  cfg.journal = journal;
  cfg.max_sessions = max_sessions;
  try {
    Service service(std::move(cfg));
    g_service = &service;
    std::signal(SIGINT, [](int) { g_service->stop(); });
    std::signal(SIGTERM, [](int) { g_service->stop(); });
    std::cerr << fmt::format("serving '{}' on {}:{}\n", service.project_id(), host, port);
    bool ok = service.listen();
    g_service = nullptr;
    return ok ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << e.what();
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phrasal translation grammar toolkit"};
  app.require_subcommand(1);

  std::string manifest, lang, existing, format = "lite-bnf", host = "127.0.0.1", journal;
  std::string kind = "manual", out;
  std::vector<std::string> langs, scope, questionnaires;
  std::size_t limit = 1000, max_sessions = 1000;
  int port = 8080;
  bool table = false, show_canonical = false;

  auto add_manifest = [&](CLI::App* c) {
    c->add_option("manifest", manifest, "project manifest (JSON)")->required();
  };

  auto* check = app.add_subcommand("check", "parse, assemble and validate a project");
  add_manifest(check);

  auto* blank = app.add_subcommand("blank", "write a blank target file for a language");
  add_manifest(blank);
  blank->add_option("--lang", lang)->required();

  auto* refresh = app.add_subcommand("refresh", "update an existing target file with new blanks");
  add_manifest(refresh);
  refresh->add_option("--lang", lang)->required();
  refresh->add_option("--existing", existing, "current target file (default: from the manifest)");

  auto* translate = app.add_subcommand("translate", "translate utterances read from stdin");
  add_manifest(translate);
  translate->add_option("--lang", langs, "target language (repeatable)");
  translate->add_flag("--show-canonical", show_canonical,
                      "accepted for compatibility; the paraphrase is always the first column");

  auto* compile = app.add_subcommand("compile", "emit the recognition grammar");
  add_manifest(compile);
  compile->add_option("--format", format)
      ->check(CLI::IsMember({"lite-bnf", "srgs-xml", "bnf", "srgs"}));
  compile->add_option("--scope", scope, "canonical keys to keep")->delimiter(',');
  compile->add_option("--out", out, "output file (default: stdout)");

  auto* count = app.add_subcommand("count", "count grammar derivations");
  add_manifest(count);
  count->add_option("--scope", scope, "canonical keys to keep")->delimiter(',');

  auto* enumerate = app.add_subcommand("enumerate", "list sentences of the grammar");
  add_manifest(enumerate);
  enumerate->add_option("--limit", limit);
  enumerate->add_option("--scope", scope, "canonical keys to keep")->delimiter(',');

  auto* sign = app.add_subcommand("sign", "translate stdin utterances to SiGML");
  add_manifest(sign);
  sign->add_option("--lang", lang, "sign target language");
  sign->add_flag("--table", table, "print the sign table instead of SiGML");

  auto* lexicon = app.add_subcommand("sign-lexicon", "print a lexicon spreadsheet with blank rows added");
  add_manifest(lexicon);
  lexicon->add_option("--lang", lang, "sign target language");
  lexicon->add_option("--kind", kind)->check(CLI::IsMember({"manual", "nonmanual", "mouthing"}));

  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  add_manifest(serve);
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(1, 65535));
  serve->add_option("--questionnaire", questionnaires, "questionnaire file (repeatable)");
  serve->add_option("--journal", journal, "session journal file");
  serve->add_option("--max-sessions", max_sessions);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return cmd_check(manifest);
    if (*blank) return cmd_blank(manifest, lang, false, "");
    if (*refresh) return cmd_blank(manifest, lang, true, existing);
    if (*translate) return cmd_translate(manifest, langs);
    if (*compile) return cmd_compile(manifest, format, scope, out);
    if (*count) return cmd_count(manifest, scope);
    if (*enumerate) return cmd_enumerate(manifest, limit, scope);
    if (*sign) return cmd_sign(manifest, lang, table);
    if (*lexicon) return cmd_sign_lexicon(manifest, lang, kind);
    if (*serve) return cmd_serve(manifest, host, port, questionnaires, journal, max_sessions);
  } catch (const Error& e) {
    std::cerr << "error " << e.code() << " " << e.what() << "\n";
    return 1;
  }
  return 0;
}
