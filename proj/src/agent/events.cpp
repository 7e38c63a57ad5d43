#include "tabletop/agent/events.hpp"

#include <chrono>
#include <ctime>

#include "tabletop/common/error.hpp"

namespace tabletop::agent {

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::instruction: return "instruction";
        case EventKind::plan: return "plan";
        case EventKind::step_started: return "step_started";
        case EventKind::skill_call: return "skill_call";
        case EventKind::sim_event: return "sim_event";
        case EventKind::step_result: return "step_result";
        case EventKind::verdict: return "verdict";
        case EventKind::speech_out: return "speech_out";
        case EventKind::error: return "error";
        case EventKind::scene_snapshot: return "scene_snapshot";
    }
    return "?";
}

EventKind event_kind_from_string(std::string_view s) {
    for (auto k : {EventKind::instruction, EventKind::plan, EventKind::step_started, EventKind::skill_call, EventKind::sim_event,
                   EventKind::step_result, EventKind::verdict, EventKind::speech_out, EventKind::error, EventKind::scene_snapshot}) {
        if (to_string(k) == s) return k;
    }
    throw ConfigError("unknown event kind '" + std::string(s) + "'");
}

json to_json(const SessionEvent& e) {
    return json{{"seq", e.seq}, {"ts", e.timestamp}, {"kind", to_string(e.kind)}, {"v", kEventSchemaVersion}, {"payload", e.payload}};
}

SessionEvent session_event_from_json(const json& j) {
    try {
        if (j.at("v").get<int>() != kEventSchemaVersion) throw ConfigError("unsupported event schema version");
        return SessionEvent{j.at("seq").get<uint64_t>(), j.at("ts").get<std::string>(), event_kind_from_string(j.at("kind").get<std::string>()),
                            j.at("payload")};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed session event: ") + e.what());
    }
}

std::string to_jsonl(const SessionEvent& e) { return canonical_dump(to_json(e)); }

std::string iso8601_ms(int64_t epoch_ms) {
    const std::time_t secs = static_cast<std::time_t>(epoch_ms / 1000);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min,
                  tm.tm_sec, static_cast<int>(epoch_ms % 1000));
    return buf;
}

std::string SystemClock::now() {
    using namespace std::chrono;
    return iso8601_ms(duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
}

std::string LogicalClock::now() { return iso8601_ms(next_.fetch_add(1)); }

}  // namespace tabletop::agent
