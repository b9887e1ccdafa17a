#include "misp/service.hpp"

#include <httplib.h>

#include <cstdio>
#include <random>

namespace misp::service {

namespace {

double number(const nlohmann::json& v, const char* key) {
  if (!v.is_number()) throw ApiError(400, "invalid_config", std::string(key) + " must be a number");
  return v.get<double>();
}

nlohmann::json final_result(const sql::SqlQuery& query, const db::TableStore& tables) {
  nlohmann::json out = {{"sql", sql::render_sql(query)}, {"query", sql::to_json(query)}};
  try {
    const db::ResultSet rs = db::execute(query, tables);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : rs.rows) {
      nlohmann::json r = nlohmann::json::array();
      for (const auto& cell : row) r.push_back(db::cell_to_json(cell));
      rows.push_back(std::move(r));
    }
    out["columns"] = rs.columns;
    out["rows"] = std::move(rows);
  } catch (const db::ExecutionError& e) {
    out["execution_error"] = e.what();
  }
  return out;
}

}  // namespace

agent::AgentConfig apply_overrides(agent::AgentConfig config, const nlohmann::json& o) {
  if (o.is_null()) return config;
  if (!o.is_object()) throw ApiError(400, "invalid_config", "config must be an object");
  for (const auto& [key, v] : o.items()) {
    if (key == "detector") {
      const auto kind = v.is_string() ? detect::parse_kind(v.get<std::string>()) : std::nullopt;
      if (!kind) throw ApiError(400, "invalid_config", "unknown detector " + v.dump());
      config.detector.kind = *kind;
    } else if (key == "p_star") {
      config.detector.p_star = number(v, "p_star");
    } else if (key == "s_star") {
      config.detector.s_star = number(v, "s_star");
    } else if (key == "k") {
      if (!v.is_number_integer()) throw ApiError(400, "invalid_config", "k must be an integer");
      config.k = v.get<int>();
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw ApiError(400, "invalid_config", "seed must be a non-negative integer");
      config.seed = v.get<std::uint64_t>();
    } else if (key == "mode") {
      const auto mode = v.is_string() ? sql::parse_mode(v.get<std::string>()) : std::nullopt;
      if (!mode) throw ApiError(400, "invalid_config", "unknown mode " + v.dump());
      config.mode = *mode;
    } else {
      throw ApiError(400, "invalid_config", "unknown config key " + key);
    }
  }
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ApiError(400, "invalid_config", e.what());
  }
  return config;
}

SessionManager::SessionManager(const db::TableStore& tables, const parser::Parser& parser,
                               agent::AgentConfig defaults, const nlg::Grammar& grammar)
    : tables_(tables), parser_(parser), grammar_(grammar), defaults_(std::move(defaults)) {
  defaults_.validate();
}

void SessionManager::set_transcript_log(const std::string& path) {
  std::lock_guard lock(log_mu_);
  log_.close();
  log_.open(path, std::ios::app);
  if (!log_) throw std::runtime_error("cannot open transcript log " + path);
}

void SessionManager::log(const agent::Transcript& transcript) {
  std::lock_guard lock(log_mu_);
  if (!log_.is_open()) return;
  log_ << agent::to_json(transcript).dump() << '\n';
  log_.flush();
}

std::string SessionManager::new_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[48];
  std::snprintf(buf, sizeof buf, "s%016llx%04llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(++counter_ & 0xffff));
  return buf;
}

std::size_t SessionManager::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ApiError(404, "session_not_found", "no session " + session_id);
  return it->second;
}

nlohmann::json SessionManager::view(const std::string& id, const Entry& entry, bool with_events) const {
  const agent::Session& s = *entry.session;
  nlohmann::json out = {{"session_id", id},
                        {"status", s.done() ? "done" : "asking"},
                        {"partial_sql", sql::render_sql(s.query())},
                        {"created_at", entry.created_at},
                        {"updated_at", entry.updated_at},
                        {"config",
                         {{"detector", detect::to_string(entry.config.detector.kind)},
                          {"p_star", entry.config.detector.p_star},
                          {"s_star", entry.config.detector.s_star},
                          {"k", entry.config.k},
                          {"seed", entry.config.seed},
                          {"mode", sql::to_string(entry.config.mode)}}}};
  if (const auto& p = s.pending()) {
    out["question"] = {{"text", p->text},
                       {"slot", sql::to_string(p->slot)},
                       {"rule", p->rule_id},
                       {"value", sql::render_slot_value(p->value)}};
  } else {
    out["final"] = final_result(s.query(), tables_);
  }
  if (with_events) out["transcript"] = agent::to_json(s.transcript());
  out["questions_asked"] = s.transcript().events.size();
  return out;
}

nlohmann::json SessionManager::create(const nlohmann::json& request) {
  if (!request.is_object()) throw ApiError(400, "invalid_request", "request body must be a JSON object");
  const auto question = request.value("question", std::string{});
  const auto table_id = request.value("table_id", std::string{});
  if (question.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ApiError(400, "invalid_request", "question must be non-empty");
  }
  const db::Table* table = tables_.find(table_id);
  if (table == nullptr) throw ApiError(404, "table_not_found", "no table " + table_id);
  const agent::AgentConfig config = apply_overrides(defaults_, request.contains("config") ? request["config"] : nullptr);

  auto entry = std::make_shared<Entry>();
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = new_id();
  }
  entry->config = config;
  entry->created_at = entry->updated_at = agent::now_iso8601();
  try {
    entry->session = std::make_unique<agent::Session>(parser_, grammar_, *table, id, question, config);
  } catch (const agent::SessionError& e) {
    throw ApiError(500, "session_failed", e.what());
  }
  if (entry->session->done()) log(entry->session->transcript());
  {
    std::lock_guard lock(mu_);
    sessions_[id] = entry;
  }
  std::lock_guard lock(entry->mu);
  return view(id, *entry, false);
}

nlohmann::json SessionManager::answer(const std::string& session_id, const nlohmann::json& request) {
  const auto entry = find(session_id);
  const auto token = request.is_object() ? request.value("answer", std::string{}) : std::string{};
  const auto answer = agent::parse_answer(token);
  if (!answer || *answer == agent::Answer::Left) {
    throw ApiError(400, "invalid_answer", "answer must be \"yes\" or \"no\"");
  }
  std::lock_guard lock(entry->mu);
  if (entry->session->done()) throw ApiError(409, "session_closed", "session " + session_id + " is finished");
  try {
    entry->session->answer(*answer);
  } catch (const agent::SessionError& e) {
    throw ApiError(500, "session_failed", e.what());
  }
  entry->updated_at = agent::now_iso8601();
  if (entry->session->done()) log(entry->session->transcript());
  return view(session_id, *entry, false);
}

nlohmann::json SessionManager::get(const std::string& session_id) const {
  const auto entry = find(session_id);
  std::lock_guard lock(entry->mu);
  return view(session_id, *entry, true);
}

nlohmann::json SessionManager::tables() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [id, t] : tables_.tables()) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : t.columns) {
      cols.push_back({{"name", c.name}, {"type", c.type == db::ColumnType::Number ? "number" : "text"}});
    }
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < t.rows.size() && r < static_cast<std::size_t>(std::max(0, preview_rows_)); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (const auto& cell : t.rows[r]) row.push_back(db::cell_to_json(cell));
      rows.push_back(std::move(row));
    }
    out.push_back({{"id", id}, {"name", t.name}, {"columns", std::move(cols)}, {"rows", std::move(rows)},
                   {"row_count", t.rows.size()}});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void send(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
void handle(httplib::Response& res, F&& f) {
  try {
    send(res, 200, f());
  } catch (const ApiError& e) {
    send(res, e.status(), {{"error", {{"code", e.code()}, {"message", e.what()}}}});
  } catch (const std::exception& e) {
    send(res, 500, {{"error", {{"code", "internal"}, {"message", e.what()}}}});
  }
}

nlohmann::json body_of(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ApiError(400, "invalid_json", e.what());
  }
}

}  // namespace

void install_routes(httplib::Server& server, SessionManager& manager) {
  server.Post("/api/sessions", [&manager](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return manager.create(body_of(req)); });
  });
  server.Post(R"(/api/sessions/([A-Za-z0-9]+)/answer)", [&manager](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return manager.answer(req.matches[1], body_of(req)); });
  });
  server.Get(R"(/api/sessions/([A-Za-z0-9]+))", [&manager](const httplib::Request& req, httplib::Response& res) {
    handle(res, [&] { return manager.get(req.matches[1]); });
  });
  server.Get("/api/tables", [&manager](const httplib::Request&, httplib::Response& res) {
    handle(res, [&] { return manager.tables(); });
  });
  // The browser console is served from another origin during development.
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

void serve(SessionManager& manager, const std::string& host, int port) {
  httplib::Server server;
  install_routes(server, manager);
  if (!server.listen(host, port)) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace misp::service
