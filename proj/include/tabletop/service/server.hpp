#pragma once

#include <memory>
#include <string>

#include "tabletop/service/session.hpp"

namespace httplib {
class Server;
}

namespace tabletop::service {

/// HTTP front end. Routes:
///   GET    /v1/health
///   GET    /v1/tasks, /v1/scenarios
///   POST   /v1/sessions                      {"scenario","seed","task_id","config"}
///   GET    /v1/sessions, /v1/sessions/{id}
///   POST   /v1/sessions/{id}/instructions    {"text"} or an audio/wav body
///   GET    /v1/sessions/{id}/events?from=N&follow=0|1   (text/event-stream)
///   GET    /v1/sessions/{id}/log             (application/x-ndjson)
///   GET    /v1/sessions/{id}/scene
///   DELETE /v1/sessions/{id}
class HttpServer {
public:
    explicit HttpServer(SessionManager& manager);
    ~HttpServer();

    /// Bind to a port (0 picks a free one); returns the bound port.
    int bind(const std::string& host, int port);
    /// Serve until stop(); blocks.
    void listen();
    void stop();
    bool running() const;

private:
    void routes();

    SessionManager& manager_;
    std::unique_ptr<httplib::Server> server_;
};

/// Server-sent event frame for one session event.
std::string sse_frame(const agent::SessionEvent& e);

}  // namespace tabletop::service
