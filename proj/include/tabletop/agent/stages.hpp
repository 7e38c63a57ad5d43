#pragma once

#include <string>
#include <vector>

#include "tabletop/agent/backend.hpp"
#include "tabletop/agent/prompts.hpp"
#include "tabletop/agent/skill_call.hpp"
#include "tabletop/common/error.hpp"
#include "tabletop/perception/detection.hpp"
#include "tabletop/sim/scene.hpp"

namespace tabletop::agent {

struct Plan {
    std::string instruction;
    std::vector<std::string> steps;
    std::string raw;
    std::string snapshot_id;  // FNV-1a of the snapshot the planner saw, empty without vision
};

struct Verdict {
    enum class Outcome { success, failure };
    Outcome outcome = Outcome::failure;
    std::string reason;
    std::string raw;

    bool success() const { return outcome == Outcome::success; }
};

/// A model stage that produced nothing usable after its retries.
class StageError : public Error {
public:
    StageError(Stage stage, const std::string& what, std::string raw) : Error(what), stage_(stage), raw_(std::move(raw)) {}
    Stage stage() const noexcept { return stage_; }
    const std::string& raw() const noexcept { return raw_; }

private:
    Stage stage_;
    std::string raw_;
};

/// Lines of the form "<n>. step" or "<n>) step", in order; everything else is ignored.
std::vector<std::string> extract_steps(const std::string& text);

/// Body of the first fenced code block, or the whole reply when unfenced.
std::string extract_code(const std::string& text);

/// Exactly one of SUCCESS / FAILURE must appear. Throws StageError otherwise.
Verdict extract_verdict(const std::string& text);

/// What the planner is shown of the scene.
struct SceneEvidence {
    std::string text;                // rendered into {scene_evidence}
    std::string snapshot;            // attached as the visual observation; empty for none
};

SceneEvidence describe_scene(const sim::Scene& scene, const std::vector<perception::Detection>& detections);

/// Render, call and extract numbered steps, retrying `retries` extra times on
/// an empty plan. Throws PreconditionError for an empty instruction.
Plan plan(ModelBackend& backend, const std::string& instruction, const SceneEvidence* evidence, const PromptProfile& profile,
          const std::string& failure_context = {}, int retries = 2);

/// One skill call for one step, retrying on syntax errors.
SkillCall convert(ModelBackend& backend, const std::string& step, const PromptProfile& profile, int retries = 2);

/// Judge the post-execution scene against a goal-state description. Throws
/// PreconditionError when the backend has no vision.
Verdict evaluate(ModelBackend& backend, const std::string& goal_state, const sim::Scene& scene, const PromptProfile& profile, int retries = 2);

}  // namespace tabletop::agent
