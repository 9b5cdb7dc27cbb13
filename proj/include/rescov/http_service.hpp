#pragma once

// HTTP/JSON routes over a SessionManager.
//
//   POST /sessions                        body: scenario config overrides (may be {})
//   GET  /sessions/{id}/state
//   POST /sessions/{id}/failure           body: {"robot_id": n} | {"sample": true}, optional "time"
//   GET  /sessions/{id}/preview?L=&gamma=
//   POST /sessions/{id}/commit            body: {"L": x, "gamma": y}
//   GET  /sessions/{id}/events?from=&follow=   text/event-stream
//   POST /sessions/{id}/finish

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rescov/error.hpp"
#include "rescov/service.hpp"

namespace rescov {

inline int http_status(Errc code) {
  switch (code) {
    case Errc::kNotFound: return 404;
    case Errc::kConflict:
    case Errc::kNoPendingFailure: return 409;
    case Errc::kSelectionInfeasible: return 422;
    default: return 400;
  }
}

namespace detail {

inline void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, Errc code, const std::string& message) {
  send_json(res, {{"error", std::string(to_string(code))}, {"message", message}}, http_status(code));
}

template <class F>
httplib::Server::Handler guarded(F&& f) {
  return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, Errc::kInvalidArgument, e.what());
    } catch (const std::invalid_argument& e) {
      send_error(res, Errc::kInvalidArgument, e.what());
    } catch (const std::out_of_range& e) {
      send_error(res, Errc::kInvalidArgument, e.what());
    }
  };
}

inline nlohmann::json body_json(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  return nlohmann::json::parse(req.body);
}

inline double required_double(const httplib::Request& req, const std::string& key) {
  if (!req.has_param(key)) throw Error(Errc::kInvalidArgument, "missing query parameter " + key);
  return std::stod(req.get_param_value(key));
}

inline std::string sse_frame(const LogEvent& e) { return "data: " + e.to_json().dump() + "\n\n"; }

}  // namespace detail

/// `defaults` fills any config key a POST /sessions body leaves out.
inline void mount_routes(httplib::Server& server, SessionManager& sessions, const ScenarioConfig& defaults = {}) {
  using detail::guarded;
  using detail::send_json;

  server.Post("/sessions", guarded([&sessions, defaults](const httplib::Request& req, httplib::Response& res) {
                nlohmann::json merged = defaults;
                merged.update(detail::body_json(req));
                ScenarioConfig config = merged.get<ScenarioConfig>();
                std::string id = sessions.create_session(config);
                send_json(res, {{"session_id", id}, {"state", sessions.get(id)->snapshot()}}, 201);
              }));

  server.Get(R"(/sessions/([^/]+)/state)", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
               send_json(res, sessions.get(req.matches[1])->snapshot());
             }));

  server.Post(R"(/sessions/([^/]+)/failure)", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
                auto session = sessions.get(req.matches[1]);
                nlohmann::json body = detail::body_json(req);
                std::optional<RobotId> robot;
                std::optional<double> time;
                if (body.contains("robot_id") && !body.at("robot_id").is_null()) {
                  robot = body.at("robot_id").get<RobotId>();
                } else if (!body.value("sample", false)) {
                  throw Error(Errc::kInvalidArgument, "give robot_id or sample=true");
                }
                if (body.contains("time") && !body.at("time").is_null()) time = body.at("time").get<double>();
                FailureEvent ev = session->inject_failure(robot, time);
                send_json(res, {{"failure", ev}, {"state", to_string(session->state())}});
              }));

  server.Get(R"(/sessions/([^/]+)/preview)", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
               auto session = sessions.get(req.matches[1]);
               send_json(res, session->preview(detail::required_double(req, "L"),
                                               detail::required_double(req, "gamma")));
             }));

  server.Post(R"(/sessions/([^/]+)/commit)", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
                auto session = sessions.get(req.matches[1]);
                nlohmann::json body = detail::body_json(req);
                CoordinationResult r = session->commit(body.at("L").get<double>(), body.at("gamma").get<double>());
                send_json(res, {{"result", r}, {"state", to_string(session->state())}});
              }));

  server.Post(R"(/sessions/([^/]+)/finish)", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
                auto session = sessions.get(req.matches[1]);
                session->finish();
                send_json(res, {{"state", to_string(session->state())}});
              }));

  // Without follow=1 the stream holds the events recorded so far and closes;
  // with it the connection stays open until the session finishes.
  server.Get(R"(/sessions/([^/]+)/events)", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
               auto session = sessions.get(req.matches[1]);
               std::size_t from = req.has_param("from") ? std::stoul(req.get_param_value("from")) : 0;
               bool follow = req.has_param("follow") && req.get_param_value("follow") == "1";
               if (!follow) {
                 std::string body;
                 auto events = session->events();
                 for (std::size_t k = from; k < events.size(); ++k) body += detail::sse_frame(events[k]);
                 res.set_content(body, "text/event-stream");
                 return;
               }
               auto cursor = std::make_shared<std::size_t>(from);
               res.set_chunked_content_provider(
                   "text/event-stream", [session, cursor](std::size_t, httplib::DataSink& sink) {
                     EventBatch batch = session->wait_events(*cursor, std::chrono::milliseconds(200));
                     for (const LogEvent& e : batch.events) {
                       std::string frame = detail::sse_frame(e);
                       if (!sink.write(frame.data(), frame.size())) return false;
                       ++*cursor;
                     }
                     if (batch.state == SessionState::kFinished && batch.events.empty()) {
                       sink.done();
                       return true;
                     }
                     return sink.is_writable();
                   });
             }));
}

}  // namespace rescov
