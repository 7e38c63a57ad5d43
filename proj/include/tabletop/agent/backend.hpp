#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "tabletop/common/json_util.hpp"
#include "tabletop/sim/registry.hpp"

namespace tabletop::agent {

enum class Stage { planner, converter, evaluator };
std::string_view to_string(Stage s);

/// Mime type of the scene-snapshot attachment that stands in for a camera frame.
inline constexpr const char* kSceneMime = "application/vnd.tabletop.scene+json";

struct Attachment {
    std::string mime;
    std::string data;  // raw bytes (images) or UTF-8 text (scene snapshots)

    bool is_visual() const;
};

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string text;
    std::vector<Attachment> attachments;
};

struct ChatRequest {
    Stage stage = Stage::planner;
    std::vector<ChatMessage> messages;
    /// Template fields the prompt was rendered from (instruction, step,
    /// goal_state). Remote backends ignore it; the rule-based mock reads it.
    json metadata = json::object();

    bool needs_vision() const;
};

struct Capabilities {
    bool text = true;
    bool vision = false;
};

/// Chat-completion style model. complete() enforces the capability contract
/// and keeps a per-stage call log before delegating to do_complete().
class ModelBackend {
public:
    ModelBackend(std::string name, Capabilities caps) : name_(std::move(name)), caps_(caps) {}
    virtual ~ModelBackend() = default;
    ModelBackend(const ModelBackend&) = delete;
    ModelBackend& operator=(const ModelBackend&) = delete;

    /// Throws PreconditionError, without any I/O, when the request carries
    /// visual attachments and the backend is text-only.
    std::string complete(const ChatRequest& request);

    const std::string& name() const { return name_; }
    const Capabilities& capabilities() const { return caps_; }
    std::vector<Stage> call_log() const;
    size_t calls(Stage stage) const;

protected:
    virtual std::string do_complete(const ChatRequest& request) = 0;

private:
    std::string name_;
    Capabilities caps_;
    mutable std::mutex mu_;
    std::vector<Stage> log_;
};

/// Replies from a queue (per stage, falling back to a shared queue), or from a
/// function. Used by tests to script pathological models.
class ScriptedBackend final : public ModelBackend {
public:
    using Responder = std::function<std::string(const ChatRequest&)>;

    explicit ScriptedBackend(Capabilities caps = {true, true}) : ModelBackend("scripted", caps) {}
    explicit ScriptedBackend(Responder fn, Capabilities caps = {true, true}) : ModelBackend("scripted", caps), fn_(std::move(fn)) {}

    void push(std::string reply) { shared_.push_back(std::move(reply)); }
    void push(Stage stage, std::string reply) { per_stage_[static_cast<int>(stage)].push_back(std::move(reply)); }
    std::vector<ChatRequest> requests() const;

protected:
    std::string do_complete(const ChatRequest& request) override;

private:
    Responder fn_;
    std::deque<std::string> shared_;
    std::deque<std::string> per_stage_[3];
    mutable std::mutex req_mu_;
    std::vector<ChatRequest> requests_;
};

/// OpenAI-compatible chat-completions client. Images travel as data URLs,
/// scene snapshots as an extra text part.
class HttpChatBackend final : public ModelBackend {
public:
    struct Options {
        std::string url;  // full endpoint, e.g. http://host:8000/v1/chat/completions
        std::string model = "default";
        std::string api_key;
        double timeout_s = 60.0;
        bool vision = true;
    };

    explicit HttpChatBackend(Options options);

    /// Request body as sent on the wire; exposed for tests.
    json request_body(const ChatRequest& request) const;

protected:
    std::string do_complete(const ChatRequest& request) override;

private:
    Options opt_;
};

/// Backend from a URI:
///   mock://rules[?vision=0]  rule-based planner/converter/evaluator over the registry
///   mock://garbage           replies with text no stage can parse
///   mock://ambiguous         evaluator answers with both verdict tokens
///   http(s)://host/path[?model=m&vision=0&timeout=s]  HttpChatBackend; the API key comes
///                            from $TABLETOP_API_KEY
/// Throws ConfigError for anything else.
std::shared_ptr<ModelBackend> make_backend(const std::string& uri, const sim::Registry& registry);

}  // namespace tabletop::agent
