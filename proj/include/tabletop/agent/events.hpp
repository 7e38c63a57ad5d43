#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>

#include "tabletop/common/json_util.hpp"

namespace tabletop::agent {

enum class EventKind { instruction, plan, step_started, skill_call, sim_event, step_result, verdict, speech_out, error, scene_snapshot };
std::string_view to_string(EventKind k);
EventKind event_kind_from_string(std::string_view s);

/// Payload schema version, bumped per kind when a payload changes shape.
inline constexpr int kEventSchemaVersion = 1;

struct SessionEvent {
    uint64_t seq = 0;
    std::string timestamp;  // ISO-8601 UTC, millisecond precision
    EventKind kind = EventKind::instruction;
    json payload = json::object();

    bool operator==(const SessionEvent&) const = default;
};

/// {"seq":..,"ts":..,"kind":..,"v":1,"payload":{..}}
json to_json(const SessionEvent& e);
SessionEvent session_event_from_json(const json& j);
/// One canonical JSON line, no trailing newline.
std::string to_jsonl(const SessionEvent& e);

/// Source of event timestamps.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::string now() = 0;
};

class SystemClock final : public Clock {
public:
    std::string now() override;
};

/// Deterministic clock: every call advances one millisecond from `start_ms`
/// after the epoch, so replays are byte-identical.
class LogicalClock final : public Clock {
public:
    explicit LogicalClock(int64_t start_ms = 0) : next_(start_ms) {}
    std::string now() override;

private:
    std::atomic<int64_t> next_;
};

std::string iso8601_ms(int64_t epoch_ms);

/// Receives (kind, payload) from the episode; the owner assigns seq and time.
using EventSink = std::function<void(EventKind, json)>;

}  // namespace tabletop::agent
