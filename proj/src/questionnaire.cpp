#include "lite/questionnaire.hpp"

#include <chrono>
#include <deque>
#include <set>

#include <fmt/format.h>

namespace lite {

using nlohmann::json;

const AnswerOption* FieldDef::find_answer(std::string_view answer_id) const {
  for (const auto& a : answers)
    if (a.id == answer_id) return &a;
  return nullptr;
}

const FieldDef* QuestionnaireDef::find_field(std::string_view field_id) const {
  for (const auto& f : fields)
    if (f.id == field_id) return &f;
  return nullptr;
}

std::size_t QuestionnaireDef::key_count() const {
  std::size_t n = 0;
  for (const auto& f : fields) n += f.question_keys.size();
  return n;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

class QuestionnaireLoader {
 public:
  QuestionnaireLoader(const AssembledProject& project, std::string path)
      : project_(project), path_(std::move(path)) {
    for (auto& k : project.top_keys()) top_keys_.insert(k);
  }

  LoadedQuestionnaire load(std::string_view text) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      error("BadQuestionnaire", e.what());
      return std::move(out_);
    }
    if (!doc.is_object()) {
      error("BadQuestionnaire", "top level must be an object");
      return std::move(out_);
    }
    try {
      read(doc);
    } catch (const json::exception& e) {
      error("BadQuestionnaire", e.what());
      return std::move(out_);
    }
    if (!has_errors(out_.diagnostics)) check();
    return std::move(out_);
  }

 private:
  void error(std::string code, std::string msg) {
    out_.diagnostics.push_back({Severity::Error, std::move(code), std::move(msg), {path_, 0}});
  }
  void warning(std::string code, std::string msg) {
    out_.diagnostics.push_back(
        {Severity::Warning, std::move(code), std::move(msg), {path_, 0}});
  }

  void read(const json& doc) {
    auto& def = out_.def;
    def.id = doc.at("id").get<std::string>();
    if (doc.contains("title"))
      def.title = doc.at("title").get<std::map<std::string, std::string>>();
    for (const auto& jf : doc.at("fields")) {
      FieldDef f;
      f.id = jf.at("id").get<std::string>();
      f.heading = jf.value("heading", f.id);
      for (const auto& k : jf.value("question_keys", json::array())) {
        std::string raw = k.get<std::string>();
        try {
          f.question_keys.push_back(
              canonical_key(parse_template(raw, TemplateMode::Canonical)));
        } catch (const Error& e) {
          error("UnknownQuestionKey",
                fmt::format("field '{}': '{}': {}", f.id, raw, e.what()));
        }
      }
      for (const auto& ja : jf.value("answers", json::array())) {
        AnswerOption a;
        a.id = ja.at("id").get<std::string>();
        if (ja.contains("labels"))
          a.labels = ja.at("labels").get<std::map<std::string, std::string>>();
        a.icon = ja.value("icon", "");
        a.audio = ja.value("audio", "");
        f.answers.push_back(std::move(a));
      }
      if (jf.contains("routing"))
        f.routing = jf.at("routing").get<std::map<std::string, std::string>>();
      f.require_rephrase_once = jf.value("require_rephrase_once", false);
      def.fields.push_back(std::move(f));
    }
    def.start_field = doc.value("start_field", def.fields.empty() ? "" : def.fields[0].id);
  }

  void check() {
    const auto& def = out_.def;
    if (def.fields.empty()) {
      error("EmptyField", "questionnaire has no fields");
      return;
    }
    std::set<std::string> ids;
    for (const auto& f : def.fields)
      if (!ids.insert(f.id).second)
        error("DuplicateField", fmt::format("field '{}' defined twice", f.id));
    if (!ids.count(def.start_field))
      error("UnknownStartField", fmt::format("start field '{}' does not exist", def.start_field));

    for (const auto& f : def.fields) {
      if (f.question_keys.empty())
        error("EmptyField", fmt::format("field '{}' has no question keys", f.id));
      if (f.answers.empty())
        error("EmptyField", fmt::format("field '{}' has no answers", f.id));
      std::set<std::string> seen_keys;
      for (const auto& k : f.question_keys) {
        if (!top_keys_.count(k))
          error("UnknownQuestionKey",
                fmt::format("field '{}': no $$top unit with canonical '{}'", f.id, k));
        if (!seen_keys.insert(k).second)
          warning("DuplicateQuestionKey",
                  fmt::format("field '{}' lists '{}' twice", f.id, k));
      }
      std::set<std::string> answer_ids;
      for (const auto& a : f.answers) {
        if (!answer_ids.insert(a.id).second)
          error("DuplicateAnswer", fmt::format("field '{}': answer '{}' defined twice", f.id, a.id));
        auto r = f.routing.find(a.id);
        if (r == f.routing.end())
          error("RoutingGap", fmt::format("field '{}': answer '{}' has no route", f.id, a.id));
        for (const auto& lang : project_.target_languages)
          if (!a.labels.count(lang))
            warning("MissingAnswerLabel",
                    fmt::format("field '{}': answer '{}' has no {} label", f.id, a.id, lang));
      }
      for (const auto& [answer, target] : f.routing) {
        if (!answer_ids.count(answer))
          error("RoutingGap",
                fmt::format("field '{}': route for unknown answer '{}'", f.id, answer));
        if (target != kEnd && !ids.count(target))
          error("RoutingGap", fmt::format("field '{}': answer '{}' routes to unknown field '{}'",
                                          f.id, answer, target));
      }
    }

    std::set<std::string> reached;
    std::deque<std::string> queue{def.start_field};
    while (!queue.empty()) {
      std::string id = queue.front();
      queue.pop_front();
      if (id == kEnd || !reached.insert(id).second) continue;
      if (const FieldDef* f = def.find_field(id))
        for (const auto& [_, target] : f->routing) queue.push_back(target);
    }
    for (const auto& f : def.fields)
      if (!reached.count(f.id))
        error("UnreachableField",
              fmt::format("field '{}' cannot be reached from '{}'", f.id, def.start_field));
  }

  const AssembledProject& project_;
  std::string path_;
  std::set<std::string> top_keys_;
  LoadedQuestionnaire out_;
};

}  // namespace

LoadedQuestionnaire load_questionnaire(std::string_view json_text,
                                       const AssembledProject& project, std::string path) {
  return QuestionnaireLoader(project, std::move(path)).load(json_text);
}

RecognitionGrammar active_slice(const QuestionnaireDef& def, std::string_view field_id,
                                const AssembledProject& project) {
  const FieldDef* f = def.find_field(field_id);
  if (!f) throw Error("UnknownField", fmt::format("no field '{}'", field_id));
  Scope scope = f->scope();
  return compile_grammar(project, &scope);
}

// ---------------------------------------------------------------------------
// Sessions

std::string_view event_name(EventKind k) {
  switch (k) {
    case EventKind::FieldEntered: return "FieldEntered";
    case EventKind::UtteranceProposed: return "UtteranceProposed";
    case EventKind::Confirmed: return "Confirmed";
    case EventKind::Rejected: return "Rejected";
    case EventKind::Answered: return "Answered";
  }
  return "";
}

namespace {

SessionEvent event(EventKind kind, std::string field) {
  SessionEvent e;
  e.kind = kind;
  e.field = std::move(field);
  return e;
}

}  // namespace

Clock system_clock() {
  return [] {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  };
}

Session::Session(std::shared_ptr<const QuestionnaireDef> def,
                 std::shared_ptr<const AssembledProject> project, LanguageTag respondent,
                 std::string id, Clock clock)
    : def_(std::move(def)),
      project_(std::move(project)),
      respondent_(std::move(respondent)),
      id_(std::move(id)),
      clock_(std::move(clock)) {
  if (!project_->has_target_language(respondent_))
    throw Error("UnknownLanguage",
                fmt::format("'{}' is not a target language of '{}'", respondent_, project_->id));
  current_ = def_->start_field;
  append(event(EventKind::FieldEntered, current_));
}

void Session::append(SessionEvent e) {
  e.at = clock_();
  // Keep the transcript monotone even if the clock steps backwards.
  if (!transcript_.empty() && e.at < transcript_.back().at) e.at = transcript_.back().at;
  transcript_.push_back(std::move(e));
}

const FieldDef& Session::field() const { return *def_->find_field(current_); }

std::size_t Session::visited_fields() const {
  std::set<std::string> seen;
  for (const auto& e : transcript_)
    if (e.kind == EventKind::FieldEntered) seen.insert(e.field);
  return seen.size();
}

const SessionEvent* Session::pending() const {
  if (transcript_.empty()) return nullptr;
  const auto& last = transcript_.back();
  if (last.kind == EventKind::UtteranceProposed && last.paraphrase) return &last;
  return nullptr;
}

Proposal Session::propose_utterance(std::string_view raw) {
  if (ended()) throw Error("SessionEnded", "the interview has ended");
  Utterance utt = tokenize(raw);
  const FieldDef& f = field();
  Scope scope = f.scope();
  Proposal p;
  SessionEvent e = event(EventKind::UtteranceProposed, current_);
  e.raw = std::string(raw);
  auto matches = find_source_matches(*project_, utt, &scope);
  if (!matches.empty()) {
    p.paraphrase = realize_canonical(*project_, matches.front());
    try {
      p.translation = translate_canonical(*project_, *p.paraphrase, respondent_);
    } catch (const Error& err) {
      p.translation_error = err.code();
    }
    if (f.require_rephrase_once) {
      bool rejected = false;
      for (auto it = transcript_.rbegin(); it != transcript_.rend(); ++it) {
        if (it->kind == EventKind::FieldEntered) break;
        if (it->kind == EventKind::Rejected) rejected = true;
      }
      p.rephrase_requested = !rejected;
    }
    e.paraphrase = p.paraphrase;
    e.translation = p.translation;
  }
  append(std::move(e));
  return p;
}

Presented Session::confirm(bool accept) {
  if (ended()) throw Error("SessionEnded", "the interview has ended");
  const SessionEvent* p = pending();
  if (!p) throw Error("NothingToConfirm", "no paraphrase is awaiting confirmation");
  Presented out;
  if (accept) {
    out.question = p->translation;
    out.answers = field().answers;
  }
  append(event(accept ? EventKind::Confirmed : EventKind::Rejected, current_));
  return out;
}

void Session::record_answer(std::string_view answer_id) {
  if (ended()) throw Error("SessionEnded", "the interview has ended");
  if (transcript_.back().kind != EventKind::Confirmed)
    throw Error("AnswerBeforeConfirm", "confirm a question before recording an answer");
  const FieldDef& f = field();
  if (!f.find_answer(answer_id))
    throw Error("UnknownAnswer",
                fmt::format("field '{}' has no answer '{}'", f.id, answer_id));
  SessionEvent e = event(EventKind::Answered, current_);
  e.answer = std::string(answer_id);
  append(std::move(e));
  if (!responses_.count(current_)) answer_order_.push_back(current_);
  responses_[current_] = std::string(answer_id);
  current_ = f.routing.at(std::string(answer_id));
  if (!ended()) append(event(EventKind::FieldEntered, current_));
}

json to_json(const SessionEvent& e) {
  json j = {{"type", event_name(e.kind)}, {"field", e.field}, {"at", e.at}};
  if (e.kind == EventKind::UtteranceProposed) {
    j["raw"] = e.raw;
    if (e.paraphrase) {
      j["paraphrase"] = *e.paraphrase;
      j["translation"] = e.translation;
    } else {
      j["nomatch"] = true;
    }
  }
  if (e.kind == EventKind::Answered) j["answer"] = e.answer;
  return j;
}

SessionEvent event_from_json(const json& j) {
  static const std::map<std::string, EventKind, std::less<>> kinds = {
      {"FieldEntered", EventKind::FieldEntered},
      {"UtteranceProposed", EventKind::UtteranceProposed},
      {"Confirmed", EventKind::Confirmed},
      {"Rejected", EventKind::Rejected},
      {"Answered", EventKind::Answered}};
  SessionEvent e;
  auto it = kinds.find(j.at("type").get<std::string>());
  if (it == kinds.end()) throw Error("BadTranscript", "unknown event type");
  e.kind = it->second;
  e.field = j.at("field").get<std::string>();
  e.at = j.at("at").get<std::int64_t>();
  e.raw = j.value("raw", "");
  if (j.contains("paraphrase")) e.paraphrase = j.at("paraphrase").get<std::string>();
  e.translation = j.value("translation", "");
  e.answer = j.value("answer", "");
  return e;
}

namespace {

json field_summary(const FieldDef& f) {
  return {{"id", f.id}, {"heading", f.heading}, {"question_keys", f.question_keys}};
}

json answer_json(const AnswerOption& a, const LanguageTag& lang) {
  auto label = a.labels.find(lang);
  json j = {{"id", a.id},
            {"label", label == a.labels.end() ? a.id : label->second},
            {"icon", a.icon}};
  if (!a.audio.empty()) j["audio"] = a.audio;
  return j;
}

}  // namespace

json Session::export_document() const {
  struct Record {
    std::string answer, paraphrase, question;
    std::vector<std::string> utterances;
    std::int64_t entered_at = 0, answered_at = 0, visit_start = 0;
    const SessionEvent* last_proposal = nullptr;
    const SessionEvent* confirmed = nullptr;
  };
  std::map<std::string, Record> records;
  for (const auto& e : transcript_) {
    Record& r = records[e.field];
    switch (e.kind) {
      case EventKind::FieldEntered: r.visit_start = e.at; break;
      case EventKind::UtteranceProposed:
        r.utterances.push_back(e.raw);
        r.last_proposal = &e;
        break;
      case EventKind::Confirmed: r.confirmed = r.last_proposal; break;
      case EventKind::Rejected: break;
      case EventKind::Answered:
        r.answer = e.answer;
        r.answered_at = e.at;
        r.entered_at = r.visit_start;
        if (r.confirmed) {
          r.paraphrase = r.confirmed->paraphrase.value_or("");
          r.question = r.confirmed->translation;
        }
        break;
    }
  }
  json recs = json::array();
  for (const auto& fid : answer_order_) {
    const Record& r = records.at(fid);
    const FieldDef* f = def_->find_field(fid);
    json j = {{"field", fid},
              {"heading", f ? f->heading : ""},
              {"answer", r.answer},
              {"paraphrase", r.paraphrase},
              {"question", r.question},
              {"utterances", r.utterances},
              {"entered_at", r.entered_at},
              {"answered_at", r.answered_at}};
    if (f)
      if (const AnswerOption* a = f->find_answer(r.answer))
        j["answer_label"] = answer_json(*a, respondent_).at("label");
    recs.push_back(std::move(j));
  }
  json events = json::array();
  for (const auto& e : transcript_) events.push_back(to_json(e));
  return {{"session_id", id_},
          {"questionnaire", def_->id},
          {"respondent_language", respondent_},
          {"status", ended() ? "ended" : "active"},
          {"records", std::move(recs)},
          {"transcript", std::move(events)}};
}

std::string Session::export_lines() const {
  json doc = export_document();
  std::string out;
  for (auto& r : doc.at("records")) {
    json line = {{"session_id", id_}, {"questionnaire", def_->id},
                 {"respondent_language", respondent_}};
    line.update(r);
    out += line.dump() + "\n";
  }
  return out;
}

json Session::state_document() const {
  json j = {{"session_id", id_},
            {"questionnaire", def_->id},
            {"respondent_language", respondent_},
            {"status", ended() ? "ended" : "active"}};
  j["current_field"] = ended() ? json(nullptr) : field_summary(field());
  if (const SessionEvent* p = pending())
    j["pending"] = {{"raw", p->raw},
                    {"paraphrase", *p->paraphrase},
                    {"translation", p->translation}};
  else
    j["pending"] = nullptr;
  bool awaiting = !ended() && transcript_.back().kind == EventKind::Confirmed;
  j["awaiting_answer"] = awaiting;
  json answers = json::array();
  if (awaiting)
    for (const auto& a : field().answers) answers.push_back(answer_json(a, respondent_));
  j["answers"] = std::move(answers);
  j["responses"] = responses_;
  j["progress"] = {{"visited", visited_fields()}, {"total", def_->fields.size()}};
  json events = json::array();
  for (const auto& e : transcript_) events.push_back(to_json(e));
  j["transcript"] = std::move(events);
  return j;
}

Session replay_session(std::shared_ptr<const QuestionnaireDef> def,
                       std::shared_ptr<const AssembledProject> project,
                       LanguageTag respondent, std::string id,
                       const std::vector<SessionEvent>& transcript) {
  auto next = std::make_shared<std::size_t>(0);
  std::vector<std::int64_t> stamps;
  for (const auto& e : transcript) stamps.push_back(e.at);
  Clock clock = [next, stamps] {
    if (stamps.empty()) return std::int64_t{0};
    std::size_t i = std::min(*next, stamps.size() - 1);
    ++*next;
    return stamps[i];
  };
  Session s(std::move(def), std::move(project), std::move(respondent), std::move(id), clock);
  for (const auto& e : transcript) {
    switch (e.kind) {
      case EventKind::FieldEntered: break;
      case EventKind::UtteranceProposed: s.propose_utterance(e.raw); break;
      case EventKind::Confirmed: s.confirm(true); break;
      case EventKind::Rejected: s.confirm(false); break;
      case EventKind::Answered: s.record_answer(e.answer); break;
    }
  }
  return s;
}

}  // namespace lite
