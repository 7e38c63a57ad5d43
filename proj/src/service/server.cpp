#include "tabletop/service/server.hpp"

#include "httplib.h"

namespace tabletop::service {

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, json{{"schema", "error"}, {"v", 1}, {"error", code}, {"message", message}});
}

// Maps the library's exception types onto HTTP statuses in one place.
template <class F>
void guarded(httplib::Response& res, F&& body) {
    try {
        body();
    } catch (const BusyError& e) {
        send_error(res, 409, "busy", e.what());
    } catch (const ClosedError& e) {
        send_error(res, 410, "closed", e.what());
    } catch (const CapacityError& e) {
        res.set_header("Retry-After", "5");
        send_error(res, 503, "capacity", e.what());
    } catch (const NotFoundError& e) {
        send_error(res, 404, "not_found", e.what());
    } catch (const speech::EmptyTranscriptError& e) {
        send_error(res, 422, "empty_transcript", e.what());
    } catch (const PreconditionError& e) {
        send_error(res, 400, "bad_request", e.what());
    } catch (const ConfigError& e) {
        send_error(res, 400, "bad_config", e.what());
    } catch (const TransportError& e) {
        if (e.retry_after() >= 0) res.set_header("Retry-After", std::to_string(e.retry_after()));
        send_error(res, 502, "upstream", e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, "bad_json", e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

uint64_t from_param(const httplib::Request& req) {
    auto number = [](const std::string& s, const char* what) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw PreconditionError(std::string(what) + " must be a sequence number");
        }
    };
    if (req.has_param("from")) return number(req.get_param_value("from"), "'from'");
    // Browsers reconnecting an EventSource send the last id they saw.
    if (req.has_header("Last-Event-ID")) return number(req.get_header_value("Last-Event-ID"), "Last-Event-ID") + 1;
    return 1;
}

}  // namespace

std::string sse_frame(const agent::SessionEvent& e) {
    return "id: " + std::to_string(e.seq) + "\nevent: " + std::string(agent::to_string(e.kind)) + "\ndata: " + agent::to_jsonl(e) + "\n\n";
}

HttpServer::HttpServer(SessionManager& manager) : manager_(manager), server_(std::make_unique<httplib::Server>()) { routes(); }

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() {
    if (server_->is_running()) server_->stop();
}

bool HttpServer::running() const { return server_->is_running(); }

void HttpServer::routes() {
    auto& s = *server_;
    // The operator console is served from another origin.
    s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Content-Type, Last-Event-ID"},
                           {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
    s.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    s.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

    s.Get("/v1/tasks", [this](const httplib::Request&, httplib::Response& res) {
        json tasks = json::array();
        for (const auto& t : manager_.registry().tasks()) {
            tasks.push_back({{"id", t.id},
                             {"scene", t.scene},
                             {"instruction", t.instruction},
                             {"category", sim::to_string(t.category)},
                             {"prompted", t.prompted},
                             {"simulation", t.simulation},
                             {"comparable", t.comparable},
                             {"goal_state", t.goal_state}});
        }
        send_json(res, 200, {{"schema", "task_list"}, {"v", 1}, {"tasks", tasks}});
    });

    s.Get("/v1/scenarios", [this](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& [key, spec] : manager_.registry().scenarios()) {
            json roster = json::array();
            for (const auto& r : spec.roster) roster.push_back({{"id", r.id}, {"label", r.label}, {"category", sim::to_string(r.category)}});
            list.push_back({{"key", key}, {"title", spec.title}, {"roster", roster}});
        }
        send_json(res, 200, {{"schema", "scenario_list"}, {"v", 1}, {"scenarios", list}});
    });

    s.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = req.body.empty() ? json::object() : json::parse(req.body);
            auto session = manager_.create(create_request_from_json(body));
            send_json(res, 201, session->descriptor());
        });
    });

    s.Get("/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& session : manager_.list()) list.push_back(session->descriptor());
        send_json(res, 200, {{"schema", "session_list"}, {"v", 1}, {"sessions", list}});
    });

    s.Get(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, manager_.get(req.matches[1])->descriptor()); });
    });

    s.Delete(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto session = manager_.get(req.matches[1]);
            session->close();
            send_json(res, 200, session->descriptor());
        });
    });

    s.Get(R"(/v1/sessions/([^/]+)/scene)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, manager_.get(req.matches[1])->scene_snapshot()); });
    });

    s.Post(R"(/v1/sessions/([^/]+)/instructions)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto session = manager_.get(req.matches[1]);
            const std::string type = req.get_header_value("Content-Type");
            uint64_t seq = 0;
            std::string source = "text";
            if (type.rfind("audio/", 0) == 0) {
                seq = session->submit_audio(req.body);
                source = "audio";
            } else {
                const json body = json::parse(req.body);
                if (!body.contains("text") || !body.at("text").is_string()) throw PreconditionError("instruction body needs a \"text\" string");
                seq = session->submit(body.at("text").get<std::string>());
            }
            send_json(res, 202, {{"schema", "instruction_accepted"}, {"v", 1}, {"session", session->id()}, {"seq", seq}, {"source", source}});
        });
    });

    s.Get(R"(/v1/sessions/([^/]+)/log)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto session = manager_.get(req.matches[1]);
            std::string body;
            for (const auto& e : read_jsonl(session->log().path())) body += agent::to_jsonl(e) + "\n";
            res.set_content(body, "application/x-ndjson");
        });
    });

    s.Get(R"(/v1/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto session = manager_.get(req.matches[1]);
            const uint64_t from = std::max<uint64_t>(1, from_param(req));
            const bool follow = req.get_param_value("follow") != "0";
            auto next = std::make_shared<uint64_t>(from);
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider("text/event-stream", [session, next, follow](size_t, httplib::DataSink& sink) {
                auto& log = session->log();
                for (const auto& e : log.since(*next)) {
                    const auto frame = sse_frame(e);
                    if (!sink.write(frame.data(), frame.size())) return false;
                    *next = e.seq + 1;
                }
                if (!follow || (log.sealed() && log.last_seq() < *next)) {
                    sink.done();
                    return true;
                }
                if (!log.wait(*next, std::chrono::milliseconds(1000))) {
                    static const std::string keepalive = ": keepalive\n\n";
                    if (!sink.write(keepalive.data(), keepalive.size())) return false;
                }
                return true;
            });
        });
    });
}

}  // namespace tabletop::service
