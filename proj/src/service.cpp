#include "lite/service.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <httplib.h>

namespace lite {

using nlohmann::json;

int http_status_for(std::string_view code) {
  static const std::map<std::string_view, int> kStatus = {
      {"BadRequest", 400},
      {"EmptyUtterance", 400},
      {"UnknownLanguage", 400},
      {"NotFound", 404},
      {"UnknownSession", 404},
      {"UnknownQuestionnaire", 404},
      {"MethodNotAllowed", 405},
      {"SessionEnded", 409},
      {"NothingToConfirm", 409},
      {"AnswerBeforeConfirm", 409},
      {"NoMatch", 422},
      {"UnknownAnswer", 422},
      {"MissingSignTarget", 422},
      {"MissingLexiconEntry", 422},
      {"ReloadFailed", 422},
      {"TooManySessions", 503},
  };
  auto it = kStatus.find(code);
  return it == kStatus.end() ? 500 : it->second;
}

struct Service::Snapshot {
  LoadedProject loaded;
  std::map<std::string, std::shared_ptr<const QuestionnaireDef>> questionnaires;
  std::map<std::string, LoadedSignTarget> signs;
};

struct Service::SessionSlot {
  std::mutex mutex;
  std::unique_ptr<Session> session;
  std::size_t journaled = 0;  // transcript events already written
};

struct Service::Transport {
  httplib::Server server;
};

namespace {

HttpResponse reply(int status, const json& body) { return {status, body.dump() + "\n"}; }

HttpResponse error_reply(std::string_view code, std::string_view message) {
  return reply(http_status_for(code), {{"code", code}, {"message", message}});
}

std::string random_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  return fmt::format("{:016x}", rng());
}

const json& require(const json& req, const char* key) {
  if (!req.is_object() || !req.contains(key))
    throw Error("BadRequest", fmt::format("missing '{}'", key));
  return req.at(key);
}

std::string require_string(const json& req, const char* key) {
  const json& v = require(req, key);
  if (!v.is_string()) throw Error("BadRequest", fmt::format("'{}' must be a string", key));
  return v.get<std::string>();
}

json field_json(const FieldDef& f) {
  return {{"id", f.id}, {"heading", f.heading}, {"question_keys", f.question_keys}};
}

json answers_json(const std::vector<AnswerOption>& answers, const LanguageTag& lang) {
  json out = json::array();
  for (const auto& a : answers) {
    auto label = a.labels.find(lang);
    json j = {{"id", a.id},
              {"label", label == a.labels.end() ? a.id : label->second},
              {"icon", a.icon}};
    if (!a.audio.empty()) j["audio"] = a.audio;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    std::size_t j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    if (j > i) parts.emplace_back(path.substr(i, j - i));
    i = j;
  }
  return parts;
}

std::string join_diagnostics(const Diagnostics& ds) {
  std::string out;
  for (const auto& d : ds)
    if (d.severity == Severity::Error) out += format_diagnostic(d) + "\n";
  return out;
}

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  if (!config_.new_session_id) config_.new_session_id = random_id;
  Diagnostics diags;
  snapshot_ = load_snapshot(diags);
  if (!snapshot_) throw Error("StartupFailed", join_diagnostics(diags));
  if (!config_.journal.empty()) replay_journal();
}

Service::~Service() = default;

std::shared_ptr<const Service::Snapshot> Service::load_snapshot(Diagnostics& diags) const {
  auto snap = std::make_shared<Snapshot>();
  try {
    snap->loaded = load_project(config_.manifest);
  } catch (const Error& e) {
    diags.push_back({Severity::Error, e.code(), e.what(), {config_.manifest.string(), 0}});
    return nullptr;
  }
  diags = snap->loaded.diagnostics;
  if (!snap->loaded.ok()) return nullptr;

  const auto& manifest = snap->loaded.manifest;
  for (const auto& cfg : manifest.sign_targets) {
    auto t = load_sign_target(manifest, cfg);
    diags.insert(diags.end(), t.diagnostics.begin(), t.diagnostics.end());
    snap->signs.emplace(cfg.lang, std::move(t));
  }
  std::vector<std::filesystem::path> qpaths;
  for (const auto& p : manifest.questionnaire_files) qpaths.push_back(manifest.base_dir / p);
  qpaths.insert(qpaths.end(), config_.questionnaires.begin(), config_.questionnaires.end());
  for (const auto& p : qpaths) {
    std::string text;
    try {
      text = read_file(p);
    } catch (const Error& e) {
      diags.push_back({Severity::Error, e.code(), e.what(), {p.string(), 0}});
      continue;
    }
    auto q = load_questionnaire(text, snap->loaded.project, p.string());
    diags.insert(diags.end(), q.diagnostics.begin(), q.diagnostics.end());
    if (!q.ok()) continue;
    if (snap->questionnaires.count(q.def.id)) {
      diags.push_back({Severity::Error, "DuplicateQuestionnaire",
                       fmt::format("questionnaire id '{}' loaded twice", q.def.id),
                       {p.string(), 0}});
      continue;
    }
    std::string id = q.def.id;
    snap->questionnaires.emplace(std::move(id),
                                 std::make_shared<const QuestionnaireDef>(std::move(q.def)));
  }
  if (has_errors(diags)) return nullptr;
  return snap;
}

std::shared_ptr<const Service::Snapshot> Service::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

std::string Service::project_id() const { return snapshot()->loaded.project.id; }

Diagnostics Service::reload() {
  Diagnostics diags;
  auto fresh = load_snapshot(diags);
  if (fresh) {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(fresh);
  }
  return diags;
}

std::shared_ptr<Service::SessionSlot> Service::find_session(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end())
    throw Error("UnknownSession", fmt::format("no session '{}'", id));
  return it->second;
}

// ---------------------------------------------------------------------------
// Journal: one JSON object per line, either a session creation or one
// transcript event.

void Service::journal(const json& entry) {
  if (config_.journal.empty() || replaying_) return;
  std::lock_guard lock(journal_mutex_);
  std::ofstream out(config_.journal, std::ios::app | std::ios::binary);
  out << entry.dump() << "\n";
}

void Service::journal_events(SessionSlot& slot) {
  const auto& t = slot.session->transcript();
  for (; slot.journaled < t.size(); ++slot.journaled)
    journal({{"op", "event"},
             {"session", slot.session->id()},
             {"event", to_json(t[slot.journaled])}});
}

void Service::replay_journal() {
  std::ifstream in(config_.journal, std::ios::binary);
  if (!in) return;
  struct Pending {
    std::string questionnaire, lang;
    std::vector<SessionEvent> events;
  };
  std::vector<std::string> order;
  std::map<std::string, Pending> pending;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;  // torn final write
    std::string op = j.value("op", "");
    std::string id = j.value("session", "");
    if (op == "create") {
      if (!pending.count(id)) order.push_back(id);
      pending[id] = {j.value("questionnaire", ""), j.value("lang", ""), {}};
    } else if (op == "event" && pending.count(id)) {
      pending[id].events.push_back(event_from_json(j.at("event")));
    }
  }
  auto snap = snapshot();
  replaying_ = true;
  for (const auto& id : order) {
    const Pending& p = pending[id];
    auto q = snap->questionnaires.find(p.questionnaire);
    if (q == snap->questionnaires.end()) continue;
    std::shared_ptr<const AssembledProject> project(snap, &snap->loaded.project);
    try {
      auto slot = std::make_shared<SessionSlot>();
      slot->session = std::make_unique<Session>(
          replay_session(q->second, project, p.lang, id, p.events));
      slot->journaled = slot->session->transcript().size();
      sessions_[id] = std::move(slot);
    } catch (const Error&) {
      // The definitions changed underneath the journal; drop the session.
    }
  }
  replaying_ = false;
}

// ---------------------------------------------------------------------------
// Routing

HttpResponse Service::handle(std::string_view method, std::string_view target,
                             std::string_view body) {
  std::string_view path = target.substr(0, target.find('?'));
  std::string_view query =
      target.find('?') == std::string_view::npos ? "" : target.substr(target.find('?') + 1);
  auto parts = split_path(path);
  bool get = method == "GET";
  bool post = method == "POST";
  try {
    json req;
    if (post) {
      req = body.empty() ? json::object() : json::parse(body, nullptr, false);
      if (req.is_discarded()) throw Error("BadRequest", "request body is not valid JSON");
    }
    auto allow = [&](bool ok) {
      if (!ok) throw Error("MethodNotAllowed", fmt::format("{} not allowed on {}", method, path));
    };
    if (parts.size() == 1 && parts[0] == "health") return allow(get), health();
    if (parts.size() == 1 && parts[0] == "reload") return allow(post), post_reload();
    if (parts.size() == 1 && parts[0] == "translate") return allow(post), translate(req);
    if (parts.size() == 1 && parts[0] == "questionnaires")
      return allow(get), list_questionnaires();
    if (parts.size() == 2 && parts[0] == "sign" && parts[1] == "translate")
      return allow(post), sign_translate(req);
    if (!parts.empty() && parts[0] == "sessions") {
      if (parts.size() == 1) return allow(post), create_session(req);
      const std::string& id = parts[1];
      if (parts.size() == 2) return allow(get), session_get(id);
      if (parts.size() == 3) {
        if (parts[2] == "utterance") return allow(post), session_utterance(id, req);
        if (parts[2] == "confirm") return allow(post), session_confirm(id, req);
        if (parts[2] == "answer") return allow(post), session_answer(id, req);
        if (parts[2] == "export")
          return allow(get), session_export(id, query == "format=lines");
      }
    }
    throw Error("NotFound", fmt::format("no endpoint {}", path));
  } catch (const Error& e) {
    return error_reply(e.code(), e.what());
  } catch (const std::exception& e) {
    return error_reply("InternalError", e.what());
  }
}

HttpResponse Service::health() {
  return reply(200, {{"status", "ok"}, {"project", project_id()}});
}

HttpResponse Service::list_questionnaires() {
  auto snap = snapshot();
  json out = json::array();
  for (const auto& [id, q] : snap->questionnaires) {
    json fields = json::array();
    for (const auto& f : q->fields) fields.push_back(field_json(f));
    out.push_back({{"id", id}, {"title", q->title}, {"start_field", q->start_field},
                   {"fields", std::move(fields)}});
  }
  return reply(200, out);
}

HttpResponse Service::post_reload() {
  Diagnostics diags = reload();
  if (has_errors(diags)) {
    json list = json::array();
    for (const auto& d : diags)
      if (d.severity == Severity::Error) list.push_back(format_diagnostic(d));
    return reply(http_status_for("ReloadFailed"),
                 {{"code", "ReloadFailed"},
                  {"message", "project not reloaded"},
                  {"diagnostics", std::move(list)}});
  }
  return reply(200, {{"status", "ok"},
                     {"project", project_id()},
                     {"warnings", diags.size()}});
}

HttpResponse Service::translate(const json& req) {
  auto snap = snapshot();
  const auto& project = snap->loaded.project;
  std::string text;
  if (req.is_object() && req.contains("text")) {
    text = require_string(req, "text");
  } else if (req.is_object() && req.contains("nbest") && req.at("nbest").is_array() &&
             !req.at("nbest").empty() && req.at("nbest")[0].is_string()) {
    text = req.at("nbest")[0].get<std::string>();
  } else {
    throw Error("BadRequest", "missing 'text'");
  }
  std::vector<LanguageTag> langs = project.target_languages;
  if (req.contains("langs")) {
    if (!req.at("langs").is_array()) throw Error("BadRequest", "'langs' must be an array");
    langs.clear();
    for (const auto& l : req.at("langs")) {
      if (!l.is_string()) throw Error("BadRequest", "'langs' must hold strings");
      std::string lang = l.get<std::string>();
      if (!project.has_target_language(lang) && lang != project.source_language)
        throw Error("UnknownLanguage", fmt::format("'{}' is not a project language", lang));
      langs.push_back(lang);
    }
  }
  auto result = lite::translate(project, tokenize(text), langs);
  json outputs = json::object();
  for (const auto& [lang, out] : result.outputs) {
    if (out.ok())
      outputs[lang] = out.text;
    else
      outputs[lang] = {{"error", out.error_code}, {"message", out.error_message}};
  }
  return reply(200, {{"paraphrase", result.paraphrase}, {"outputs", std::move(outputs)}});
}

HttpResponse Service::sign_translate(const json& req) {
  auto snap = snapshot();
  std::string text = require_string(req, "text");
  std::string lang;
  if (req.contains("lang"))
    lang = require_string(req, "lang");
  else if (snap->signs.size() == 1)
    lang = snap->signs.begin()->first;
  else
    throw Error("BadRequest", "missing 'lang'");
  auto it = snap->signs.find(lang);
  if (it == snap->signs.end())
    throw Error("UnknownLanguage", fmt::format("'{}' is not a sign target", lang));
  const auto& target = it->second;
  SignTable table = lite::sign_translate(snap->loaded.project, target.rules, tokenize(text));
  json streams = json::object();
  for (std::size_t i = 0; i < kStreamCount; ++i)
    streams[std::string(kStreams[i])] = table.streams[i];
  return reply(200, {{"table", std::move(streams)},
                     {"sigml", render_sigml(table, target.lexicon)}});
}

HttpResponse Service::create_session(const json& req) {
  auto snap = snapshot();
  std::string qid = require_string(req, "questionnaire");
  std::string lang = require_string(req, "respondent_lang");
  auto q = snap->questionnaires.find(qid);
  if (q == snap->questionnaires.end())
    throw Error("UnknownQuestionnaire", fmt::format("no questionnaire '{}'", qid));
  std::shared_ptr<const AssembledProject> project(snap, &snap->loaded.project);

  auto slot = std::make_shared<SessionSlot>();
  std::lock_guard slot_lock(slot->mutex);
  {
    std::lock_guard lock(sessions_mutex_);
    if (sessions_.size() >= config_.max_sessions)
      throw Error("TooManySessions",
                  fmt::format("session limit of {} reached", config_.max_sessions));
    std::string id;
    do id = config_.new_session_id();
    while (sessions_.count(id));
    slot->session = std::make_unique<Session>(q->second, project, lang, id, config_.clock);
    sessions_[id] = slot;
  }
  journal({{"op", "create"},
           {"session", slot->session->id()},
           {"questionnaire", qid},
           {"lang", lang}});
  journal_events(*slot);
  const FieldDef* f = q->second->find_field(slot->session->current_field());
  return reply(201, {{"session_id", slot->session->id()}, {"field", field_json(*f)}});
}

HttpResponse Service::session_get(const std::string& id) {
  auto slot = find_session(id);
  std::lock_guard lock(slot->mutex);
  return reply(200, slot->session->state_document());
}

HttpResponse Service::session_utterance(const std::string& id, const json& req) {
  auto slot = find_session(id);
  std::string text = require_string(req, "text");
  std::lock_guard lock(slot->mutex);
  Proposal p = slot->session->propose_utterance(text);
  journal_events(*slot);
  if (!p.matched())
    return reply(200, {{"nomatch", true},
                       {"prompt", "Not understood in this field. Please rephrase."}});
  json out = {{"paraphrase", *p.paraphrase}, {"translation", p.translation}};
  if (!p.translation_error.empty()) out["translation_error"] = p.translation_error;
  if (p.rephrase_requested) out["rephrase_requested"] = true;
  return reply(200, out);
}

HttpResponse Service::session_confirm(const std::string& id, const json& req) {
  auto slot = find_session(id);
  const json& accept = require(req, "accept");
  if (!accept.is_boolean()) throw Error("BadRequest", "'accept' must be a boolean");
  std::lock_guard lock(slot->mutex);
  Presented shown = slot->session->confirm(accept.get<bool>());
  journal_events(*slot);
  if (!accept.get<bool>()) return reply(200, {{"answers", json::array()}});
  return reply(200, {{"question", shown.question},
                     {"answers", answers_json(shown.answers,
                                              slot->session->respondent_language())}});
}

HttpResponse Service::session_answer(const std::string& id, const json& req) {
  auto slot = find_session(id);
  std::string answer = require_string(req, "answer_id");
  std::lock_guard lock(slot->mutex);
  Session& s = *slot->session;
  s.record_answer(answer);
  journal_events(*slot);
  if (s.ended()) return reply(200, {{"end", true}});
  return reply(200, {{"next_field", field_json(*s.definition().find_field(s.current_field()))}});
}

HttpResponse Service::session_export(const std::string& id, bool lines) {
  auto slot = find_session(id);
  std::lock_guard lock(slot->mutex);
  if (lines) return {200, slot->session->export_lines(), "application/x-ndjson"};
  return reply(200, slot->session->export_document());
}

// ---------------------------------------------------------------------------
// Transport

namespace {

void install_routes(httplib::Server& server, Service& service) {
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    std::string target = req.path;
    if (!req.params.empty()) {
      std::string query;
      for (const auto& [k, v] : req.params) {
        if (!query.empty()) query += '&';
        query += k + "=" + v;
      }
      target += "?" + query;
    }
    HttpResponse r = service.handle(req.method, target, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get(".*", forward);
  server.Post(".*", forward);
  server.Put(".*", forward);
  server.Delete(".*", forward);
}

}  // namespace

bool Service::listen() {
  if (!transport_) {
    transport_ = std::make_unique<Transport>();
    install_routes(transport_->server, *this);
  }
  return transport_->server.listen(config_.host, config_.port);
}

int Service::bind_ephemeral() {
  transport_ = std::make_unique<Transport>();
  install_routes(transport_->server, *this);
  return transport_->server.bind_to_any_port(config_.host);
}

bool Service::listen_after_bind() { return transport_->server.listen_after_bind(); }

void Service::stop() {
  if (transport_) transport_->server.stop();
}

}  // namespace lite
