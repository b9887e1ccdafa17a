#pragma once

#include <chrono>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "misp/agent.hpp"
#include "misp/db.hpp"

namespace httplib {
class Server;
}

namespace misp::service {

/// Error surfaced to API clients as {"error": {"code", "message"}} with `status`.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }

 private:
  int status_;
  std::string code_;
};

/// Applies {"detector", "p_star", "s_star", "k", "seed", "mode"} overrides.
agent::AgentConfig apply_overrides(agent::AgentConfig config, const nlohmann::json& overrides);

/// Open sessions, keyed by an opaque id. Requests on one session are serialized;
/// different sessions proceed concurrently.
class SessionManager {
 public:
  SessionManager(const db::TableStore& tables, const parser::Parser& parser, agent::AgentConfig defaults,
                 const nlg::Grammar& grammar = nlg::Grammar::builtin());

  /// Finished transcripts are appended here, one JSON object per line.
  void set_transcript_log(const std::string& path);
  void set_preview_rows(int rows) { preview_rows_ = rows; }

  nlohmann::json create(const nlohmann::json& request);
  nlohmann::json answer(const std::string& session_id, const nlohmann::json& request);
  nlohmann::json get(const std::string& session_id) const;
  nlohmann::json tables() const;

  std::size_t size() const;

 private:
  struct Entry {
    mutable std::mutex mu;
    std::unique_ptr<agent::Session> session;
    agent::AgentConfig config;
    std::string created_at;
    std::string updated_at;
  };

  std::shared_ptr<Entry> find(const std::string& session_id) const;
  nlohmann::json view(const std::string& id, const Entry& entry, bool with_events) const;
  void log(const agent::Transcript& transcript);
  std::string new_id();

  const db::TableStore& tables_;
  const parser::Parser& parser_;
  const nlg::Grammar& grammar_;
  agent::AgentConfig defaults_;
  int preview_rows_ = 3;

  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t counter_ = 0;

  std::mutex log_mu_;
  std::ofstream log_;
};

/// Registers the /api routes on `server`.
void install_routes(httplib::Server& server, SessionManager& manager);

/// Blocks serving HTTP on host:port.
void serve(SessionManager& manager, const std::string& host, int port);

}  // namespace misp::service
