#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "tabletop/agent/episode.hpp"
#include "tabletop/perception/detection.hpp"
#include "tabletop/speech/clients.hpp"
#include "tabletop/speech/vad.hpp"

namespace tabletop::service {

/// Another instruction is still running in this session.
class BusyError : public Error {
public:
    using Error::Error;
};

/// The session was deleted.
class ClosedError : public Error {
public:
    using Error::Error;
};

/// Too many live sessions.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Append-only event log of one session. Each event is written and flushed to
/// the JSONL file before any reader can see it. Single writer, many readers.
class EventLog {
public:
    EventLog(std::filesystem::path path, std::shared_ptr<agent::Clock> clock);

    const agent::SessionEvent& append(agent::EventKind kind, json payload);
    /// Events with seq >= from, in order.
    std::vector<agent::SessionEvent> since(uint64_t from) const;
    /// Block until an event with seq >= from exists, the log is sealed, or the
    /// timeout passes. True when new events are available.
    bool wait(uint64_t from, std::chrono::milliseconds timeout) const;
    void seal();
    bool sealed() const;
    uint64_t last_seq() const;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::shared_ptr<agent::Clock> clock_;
    std::ofstream file_;
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::vector<agent::SessionEvent> events_;
    bool sealed_ = false;
};

/// Read a persisted JSONL log back.
std::vector<agent::SessionEvent> read_jsonl(const std::filesystem::path& path);

enum class SessionState { idle, planning, executing, evaluating, awaiting_instruction, closed };
std::string_view to_string(SessionState s);

struct SessionConfig {
    agent::LoopConfig loop;
    std::string planner = "mock://rules";
    std::string converter = "mock://rules";
    std::string evaluator = "mock://rules";
    std::string profile = "prompted";
    double fail_prob = 0.0;
    perception::DetectorDegradation degradation;
};

json to_json(const SessionConfig& c);
/// Fields missing from `j` keep the values in `defaults`.
SessionConfig session_config_from_json(const json& j, const SessionConfig& defaults);

struct ServiceOptions {
    SessionConfig defaults;
    std::filesystem::path log_dir = "sessions";
    size_t max_sessions = 16;
    std::string asr;          ///< empty: no recognizer bound
    std::string tts = "text";
    bool logical_clock = false;
    speech::VadConfig vad;
};

class Session {
public:
    Session(std::string id, std::string scenario, uint64_t seed, std::string task_id, SessionConfig config, const sim::Registry& registry,
            std::shared_ptr<agent::Clock> clock, const std::filesystem::path& log_path, std::shared_ptr<speech::AsrClient> asr,
            std::shared_ptr<speech::TtsClient> tts, speech::VadConfig vad);
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const std::string& id() const { return id_; }
    SessionState state() const;
    json descriptor() const;
    json scene_snapshot() const;
    EventLog& log() { return log_; }

    /// Start one episode on a worker thread. Throws BusyError or ClosedError.
    /// Returns the seq the instruction event will carry.
    uint64_t submit(const std::string& text);
    /// Transcribe a WAV upload and submit the first captured utterance.
    uint64_t submit_audio(const std::string& wav_bytes);
    /// Block until the running episode (if any) has finished.
    void wait_idle();
    void close();

private:
    void run(std::string text);
    void on_event(agent::EventKind kind, const json& payload);
    json speak(const std::string& text);

    const std::string id_;
    const std::string scenario_;
    const uint64_t seed_;
    const std::string task_id_;
    const SessionConfig config_;
    const sim::Registry& registry_;
    std::shared_ptr<speech::AsrClient> asr_;
    std::shared_ptr<speech::TtsClient> tts_;
    speech::VadConfig vad_;

    EventLog log_;
    sim::Scene scene_;  // touched only by the worker while an episode runs
    std::unique_ptr<skills::SkillExecutor> exec_;
    agent::Backends backends_;

    mutable std::mutex mu_;
    std::condition_variable idle_cv_;
    SessionState state_ = SessionState::idle;
    bool running_ = false;
    json latest_scene_;
    int episodes_ = 0;
    std::thread worker_;
};

struct CreateRequest {
    std::string scenario;  ///< registry scenario key; empty when task_id is given
    uint64_t seed = 0;
    std::string task_id;   ///< optional: scene with the task's label overrides
    json config = json::object();
};

CreateRequest create_request_from_json(const json& j);

class SessionManager {
public:
    SessionManager(const sim::Registry& registry, ServiceOptions options);
    ~SessionManager();

    std::shared_ptr<Session> create(const CreateRequest& request);
    /// Throws NotFoundError.
    std::shared_ptr<Session> get(const std::string& id) const;
    void close(const std::string& id);
    std::vector<std::shared_ptr<Session>> list() const;
    const sim::Registry& registry() const { return registry_; }
    const ServiceOptions& options() const { return options_; }

private:
    const sim::Registry& registry_;
    ServiceOptions options_;
    std::shared_ptr<speech::AsrClient> asr_;
    std::shared_ptr<speech::TtsClient> tts_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    uint64_t counter_ = 0;
};

}  // namespace tabletop::service
