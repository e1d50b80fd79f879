#pragma once

// HTTP+JSON front end over a loaded project, its sign targets and its
// questionnaires. `Service::handle` is the transport-independent core;
// `Service::listen` binds it to a socket.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "lite/project.hpp"
#include "lite/questionnaire.hpp"
#include "lite/sign.hpp"

namespace lite {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> questionnaires;  // besides the manifest's
  std::filesystem::path journal;                      // empty: no journal
  std::size_t max_sessions = 1000;
  Clock clock = system_clock();
  std::function<std::string()> new_session_id;  // default: random hex
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// Engine error code -> HTTP status; unknown codes map to 500.
int http_status_for(std::string_view code);

class Service {
 public:
  /// Loads the manifest, sign targets and questionnaires, then replays the
  /// journal if one is configured. Throws Error("StartupFailed") with the
  /// formatted diagnostics in the message.
  explicit Service(ServiceConfig config);
  ~Service();

  HttpResponse handle(std::string_view method, std::string_view path,
                      std::string_view body);

  /// Revalidates everything from disk and swaps it in; on failure the
  /// current snapshot stays. Returns the diagnostics of the attempt.
  Diagnostics reload();

  std::string project_id() const;

  /// Blocks serving HTTP until stop() is called.
  bool listen();
  /// Binds to an ephemeral port and returns it; serve with listen_after_bind().
  int bind_ephemeral();
  bool listen_after_bind();
  void stop();

 private:
  struct Snapshot;
  struct SessionSlot;

  std::shared_ptr<const Snapshot> snapshot() const;
  std::shared_ptr<const Snapshot> load_snapshot(Diagnostics& diags) const;
  std::shared_ptr<SessionSlot> find_session(const std::string& id) const;
  void journal(const nlohmann::json& entry);
  void replay_journal();
  void journal_events(SessionSlot& slot);

  HttpResponse health();
  HttpResponse list_questionnaires();
  HttpResponse post_reload();
  HttpResponse translate(const nlohmann::json& req);
  HttpResponse sign_translate(const nlohmann::json& req);
  HttpResponse create_session(const nlohmann::json& req);
  HttpResponse session_get(const std::string& id);
  HttpResponse session_utterance(const std::string& id, const nlohmann::json& req);
  HttpResponse session_confirm(const std::string& id, const nlohmann::json& req);
  HttpResponse session_answer(const std::string& id, const nlohmann::json& req);
  HttpResponse session_export(const std::string& id, bool lines);

  ServiceConfig config_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
  std::mutex journal_mutex_;
  bool replaying_ = false;

  struct Transport;
  std::unique_ptr<Transport> transport_;
};

}  // namespace lite
