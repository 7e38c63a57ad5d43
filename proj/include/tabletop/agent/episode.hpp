#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tabletop/agent/events.hpp"
#include "tabletop/agent/stages.hpp"
#include "tabletop/sim/registry.hpp"
#include "tabletop/skills/vlamove.hpp"

namespace tabletop::agent {

struct LoopConfig {
    int max_attempts = 3;
    int parse_retries = 2;
    bool evaluator_enabled = true;
    bool planner_vision = true;
    bool planner_enabled = true;

    /// Throws ConfigError unless max_attempts >= 1 and parse_retries >= 0.
    void validate() const;
    bool operator==(const LoopConfig&) const = default;
};

json to_json(const LoopConfig& c);
LoopConfig loop_config_from_json(const json& j);

struct Backends {
    std::shared_ptr<ModelBackend> planner;
    std::shared_ptr<ModelBackend> converter;
    std::shared_ptr<ModelBackend> evaluator;

    /// The same backend for every stage.
    static Backends shared(std::shared_ptr<ModelBackend> b) { return {b, b, b}; }
};

struct EpisodeHooks {
    EventSink emit;
    /// Turns feedback text into the speech_out payload (e.g. by calling TTS).
    /// Without it the payload is text-only.
    std::function<json(const std::string&)> speak;
};

struct EpisodeResult {
    int attempts = 0;
    int plan_calls = 0;
    std::vector<Plan> plans;
    std::vector<skills::SkillOutcome> outcomes;  // every executed skill, all attempts
    std::optional<Verdict> verdict;              // last evaluator verdict, if any ran
    bool success = false;                        // what the loop believes
    bool evaluated = false;                      // false when the evaluator is off
    bool ground_truth_known = false;
    bool ground_truth = false;
    std::vector<std::string> unmet;
    bool discrepancy = false;  // belief and ground truth disagree
    std::string failure_reason;
};

/// The closed loop: plan, convert and execute every step, evaluate, and
/// re-plan with a failure context until success or max_attempts. `task` may be
/// null for free-form instructions; then the instruction doubles as the goal
/// description and no ground truth is recorded. Transport errors propagate.
EpisodeResult run_episode(const Backends& backends, skills::SkillExecutor& executor, const std::string& instruction, const sim::TaskSpec* task,
                          const LoopConfig& config, const PromptProfile& profile, const sim::Registry& registry, const EpisodeHooks& hooks = {});

/// Context block appended to the planner prompt after a failed attempt.
std::string failure_context_block(int attempt, const std::string& reason, const std::vector<std::string>& recent_events);

/// Number of recent event summaries carried into the failure context.
inline constexpr size_t kFailureContextEvents = 10;

}  // namespace tabletop::agent
