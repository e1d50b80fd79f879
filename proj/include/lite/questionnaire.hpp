#pragma once

// Branching interview runtime: field-restricted coverage, paraphrase
// confirmation, answer recording and export.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "lite/engine.hpp"
#include "lite/grammar.hpp"
#include "lite/project.hpp"

namespace lite {

inline constexpr std::string_view kEnd = "END";

struct AnswerOption {
  std::string id;
  std::map<LanguageTag, std::string> labels;
  std::string icon;
  std::string audio;  // may be empty
};

struct FieldDef {
  std::string id;
  std::string heading;
  std::vector<CanonicalKey> question_keys;
  std::vector<AnswerOption> answers;
  std::map<std::string, std::string> routing;  // answer id -> field id or END
  bool require_rephrase_once = false;

  const AnswerOption* find_answer(std::string_view answer_id) const;
  Scope scope() const { return {question_keys.begin(), question_keys.end()}; }
};

struct QuestionnaireDef {
  std::string id;
  std::map<LanguageTag, std::string> title;
  std::string start_field;
  std::vector<FieldDef> fields;

  const FieldDef* find_field(std::string_view field_id) const;
  std::size_t key_count() const;
};

struct LoadedQuestionnaire {
  QuestionnaireDef def;
  Diagnostics diagnostics;
  bool ok() const { return !has_errors(diagnostics); }
};

/// JSON schema:
///   {
///     "id": "malaria", "title": {"english": "..."}, "start_field": "f1",
///     "fields": [
///       {"id": "f1", "heading": "Cooking location",
///        "question_keys": ["is cooking done in the house"],
///        "answers": [{"id": "yes", "labels": {"french": "oui"},
///                     "icon": "icons/yes.png", "audio": "audio/yes.wav"}],
///        "routing": {"yes": "f2", "no": "END"},
///        "require_rephrase_once": false}
///     ]
///   }
/// Question keys are canonical $$top sentences; they are normalized the same
/// way as canonical templates.
///
/// Errors: BadQuestionnaire, DuplicateField, UnknownStartField,
/// UnknownQuestionKey, RoutingGap, UnreachableField, EmptyField.
/// Warning: MissingAnswerLabel.
LoadedQuestionnaire load_questionnaire(std::string_view json_text,
                                       const AssembledProject& project,
                                       std::string path = "<questionnaire>");

/// compile_grammar restricted to the field's question keys.
RecognitionGrammar active_slice(const QuestionnaireDef& def, std::string_view field_id,
                                const AssembledProject& project);

enum class EventKind { FieldEntered, UtteranceProposed, Confirmed, Rejected, Answered };

std::string_view event_name(EventKind k);

struct SessionEvent {
  EventKind kind = EventKind::FieldEntered;
  std::string field;
  std::int64_t at = 0;  // clock value
  // UtteranceProposed
  std::string raw;
  std::optional<std::string> paraphrase;  // nullopt: NoMatch
  std::string translation;
  // Answered
  std::string answer;

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

using Clock = std::function<std::int64_t()>;

// Milliseconds since the epoch.
Clock system_clock();

struct Proposal {
  std::optional<std::string> paraphrase;  // nullopt: NoMatch
  std::string translation;                // respondent language
  std::string translation_error;          // set when the preview failed
  bool rephrase_requested = false;        // field asks for one rejection first
  bool matched() const { return paraphrase.has_value(); }
};

struct Presented {
  std::string question;  // respondent-language translation
  std::vector<AnswerOption> answers;
};

/// One interview. Not thread-safe; callers serialize access per session.
class Session {
 public:
  /// Throws Error("UnknownLanguage").
  Session(std::shared_ptr<const QuestionnaireDef> def,
          std::shared_ptr<const AssembledProject> project, LanguageTag respondent,
          std::string id, Clock clock = system_clock());

  const std::string& id() const { return id_; }
  const QuestionnaireDef& definition() const { return *def_; }
  const LanguageTag& respondent_language() const { return respondent_; }
  const std::string& current_field() const { return current_; }
  bool ended() const { return current_ == kEnd; }
  const std::vector<SessionEvent>& transcript() const { return transcript_; }
  const std::map<std::string, std::string>& responses() const { return responses_; }
  std::size_t visited_fields() const;
  // Last proposal awaiting confirmation, if any.
  const SessionEvent* pending() const;

  /// Matches against the current field's slice only.
  /// Throws Error("SessionEnded"), Error("EmptyUtterance").
  Proposal propose_utterance(std::string_view raw);

  /// accept=false returns an empty Presented.
  /// Throws Error("SessionEnded"), Error("NothingToConfirm").
  Presented confirm(bool accept);

  /// Throws Error("SessionEnded"), Error("AnswerBeforeConfirm"),
  /// Error("UnknownAnswer").
  void record_answer(std::string_view answer_id);

  nlohmann::json export_document() const;
  // One JSON record per line.
  std::string export_lines() const;
  nlohmann::json state_document() const;

 private:
  void append(SessionEvent e);
  const FieldDef& field() const;

  std::shared_ptr<const QuestionnaireDef> def_;
  std::shared_ptr<const AssembledProject> project_;
  LanguageTag respondent_;
  std::string id_;
  Clock clock_;
  std::string current_;
  std::vector<SessionEvent> transcript_;
  std::map<std::string, std::string> responses_;
  std::vector<std::string> answer_order_;  // first-answer order
};

nlohmann::json to_json(const SessionEvent& e);
SessionEvent event_from_json(const nlohmann::json& j);

/// Feeds the inputs recorded in `transcript` to a fresh session, reusing the
/// recorded timestamps. The result carries the same transcript when the
/// definition and project are unchanged.
Session replay_session(std::shared_ptr<const QuestionnaireDef> def,
                       std::shared_ptr<const AssembledProject> project,
                       LanguageTag respondent, std::string id,
                       const std::vector<SessionEvent>& transcript);

}  // namespace lite
