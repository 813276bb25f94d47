#pragma once

// REST binding for Gateway.
//
//   POST /v1/completions   Bearer <api-key>; ChatRequest JSON -> ChatResponse JSON
//   GET  /v1/audit         Bearer <admin-key>; ?principal=<id>&since=<iso8601>
//   PUT  /admin/policy     Bearer <admin-key>; policy text body
//   GET  /healthz

#include <optional>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "trustgate/gateway.hpp"

namespace trustgate {

inline std::optional<std::string> bearer_token(const httplib::Request& req) {
  auto h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (h.size() <= prefix.size() || h.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
  return h.substr(prefix.size());
}

// Thrown for client-side body errors; mapped to 400.
class BadRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Body: {"prompt", "purpose", "principal_id"?, "context": {"network_zone",
// "device_posture", "auth_strength"}}. Missing context fields take their
// least-trusted value.
inline ChatRequest parse_chat_request(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw BadRequest("body is not valid JSON");
  }
  if (!j.is_object()) throw BadRequest("body must be a JSON object");
  ChatRequest r;
  try {
    r.prompt = j.at("prompt").get<std::string>();
    r.purpose = j.value("purpose", std::string());
    r.principal_id = j.value("principal_id", std::string());
    if (auto c = j.find("context"); c != j.end()) {
      if (!c->is_object()) throw BadRequest("context must be an object");
      if (auto v = c->find("network_zone"); v != c->end()) {
        auto z = network_zone_from_string(v->get<std::string>());
        if (!z) throw BadRequest("invalid context.network_zone");
        r.network_zone = *z;
      }
      if (auto v = c->find("device_posture"); v != c->end()) {
        auto d = device_posture_from_string(v->get<std::string>());
        if (!d) throw BadRequest("invalid context.device_posture");
        r.device_posture = *d;
      }
      if (auto v = c->find("auth_strength"); v != c->end()) {
        auto a = auth_strength_from_string(v->get<std::string>());
        if (!a) throw BadRequest("invalid context.auth_strength");
        r.auth_strength = *a;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw BadRequest(std::string("malformed request: ") + e.what());
  }
  if (r.prompt.empty()) throw BadRequest("prompt must be nonempty");
  return r;
}

class HttpServer {
 public:
  explicit HttpServer(Gateway& gw) : gw_(gw) { routes(); }

  // Returns the bound port, or -1 on failure. Port 0 picks a free port.
  int bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    return server_.bind_to_port(host, port) ? port : -1;
  }

  bool listen() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }
  bool running() const { return server_.is_running(); }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& msg,
                         const std::string& request_id = "") {
    nlohmann::json j{{"error", msg}};
    if (!request_id.empty()) j["request_id"] = request_id;
    send_json(res, status, j);
  }

  bool require_admin(const httplib::Request& req, httplib::Response& res) {
    auto tok = bearer_token(req);
    if (!tok) {
      send_error(res, 401, "missing bearer credential");
      return false;
    }
    if (!gw_.is_admin_key(*tok)) {
      send_error(res, 403, "admin credential required");
      return false;
    }
    return true;
  }

  void routes() {
    server_.Post("/v1/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ChatRequest chat;
      try {
        chat = parse_chat_request(req.body);
      } catch (const BadRequest& e) {
        send_error(res, 400, e.what());
        return;
      }
      auto tok = bearer_token(req);
      auto principal = tok ? gw_.principal_for_key(*tok) : std::nullopt;
      if (!principal || (!chat.principal_id.empty() && chat.principal_id != *principal)) {
        auto result = gw_.refuse_unauthenticated(chat.principal_id);
        send_error(res, 401, result.error, result.request_id);
        return;
      }
      chat.principal_id = *principal;
      auto result = gw_.handle_completion(chat);
      if (result.status != 200 || !result.response) {
        send_error(res, result.status, result.error, result.request_id);
        return;
      }
      send_json(res, 200, to_json(*result.response));
    });

    server_.Get("/v1/audit", [this](const httplib::Request& req, httplib::Response& res) {
      if (!require_admin(req, res)) return;
      AuditFilter f;
      if (req.has_param("principal")) f.principal = req.get_param_value("principal");
      if (req.has_param("since")) {
        f.since = parse_iso8601(req.get_param_value("since"));
        if (!f.since) {
          send_error(res, 400, "since must be an ISO-8601 UTC timestamp");
          return;
        }
      }
      nlohmann::json out = nlohmann::json::array();
      for (const auto& r : gw_.audit().query(f)) out.push_back(to_json(r));
      send_json(res, 200, out);
    });

    server_.Put("/admin/policy", [this](const httplib::Request& req, httplib::Response& res) {
      if (!require_admin(req, res)) return;
      try {
        auto diags = gw_.swap_policy(req.body);
        nlohmann::json d = nlohmann::json::array();
        for (const auto& x : diags)
          d.push_back({{"kind", std::string(policy::to_string(x.kind))},
                       {"rule", x.rule_id},
                       {"line", x.line},
                       {"message", x.message}});
        send_json(res, 200,
                  {{"status", "swapped"},
                   {"rules", gw_.current_policy()->rules.size()},
                   {"diagnostics", d}});
      } catch (const policy::PolicyError& e) {
        send_json(res, 400,
                  {{"error", e.what()}, {"line", e.line()}, {"column", e.column()}});
      }
    });

    server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      auto h = gw_.health();
      send_json(res, 200,
                {{"status", h.degraded ? "degraded" : "ok"},
                 {"requests", h.requests},
                 {"audit_errors", h.audit_errors},
                 {"state_errors", h.state_errors},
                 {"warnings", h.warnings}});
    });
  }

  Gateway& gw_;
  httplib::Server server_;
};

}  // namespace trustgate
