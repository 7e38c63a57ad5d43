#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabletop/agent/backend.hpp"
#include "tabletop/agent/skill_call.hpp"
#include "tabletop/sim/registry.hpp"
#include "tabletop/sim/scene.hpp"

namespace tabletop::agent {

/// The mock converter's template rule: "put|place|move|... X on|onto|in|into Y"
/// becomes vlamove(pick=X, place=Y); "task complete"/"done" becomes done().
/// Leading numbering and articles are stripped. nullopt when nothing matches.
std::optional<SkillCall> rule_convert(const std::string& step);

/// Naive instruction splitter used when the planner has no scene to look at:
/// one step per clause, split on commas, semicolons, "and" and "then".
std::vector<std::string> split_clauses(const std::string& instruction);

/// Rule-based stand-in for a vision-language model, deterministic and
/// hermetic. The planner reads the attached scene snapshot and derives moves
/// from the registry goal of the task whose instruction it was given; without
/// a snapshot it falls back to split_clauses. The evaluator runs check_goal on
/// the attached snapshot for the task whose goal-state text it was given.
class MockRulesBackend final : public ModelBackend {
public:
    explicit MockRulesBackend(const sim::Registry& registry, bool vision = true)
        : ModelBackend(vision ? "mock://rules" : "mock://rules?vision=0", {true, vision}), registry_(registry) {}

    std::string plan_reply(const std::string& instruction, const sim::Scene* scene) const;
    std::string convert_reply(const std::string& step) const;
    std::string evaluate_reply(const std::string& goal_state, const sim::Scene* scene) const;

protected:
    std::string do_complete(const ChatRequest& request) override;

private:
    const sim::Registry& registry_;
};

/// Every reply is unparseable prose.
class GarbageBackend final : public ModelBackend {
public:
    GarbageBackend() : ModelBackend("mock://garbage", {true, true}) {}

protected:
    std::string do_complete(const ChatRequest& request) override;
};

/// Plans and converts like the rule mock but never gives a clean verdict.
class AmbiguousBackend final : public ModelBackend {
public:
    explicit AmbiguousBackend(const sim::Registry& registry) : ModelBackend("mock://ambiguous", {true, true}), rules_(registry) {}

protected:
    std::string do_complete(const ChatRequest& request) override;

private:
    MockRulesBackend rules_;
};

/// Scene snapshot carried by the request's attachments, if any.
std::optional<sim::Scene> attached_scene(const ChatRequest& request);

}  // namespace tabletop::agent
