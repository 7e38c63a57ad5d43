#include "tabletop/agent/episode.hpp"

#include <set>

#include "tabletop/perception/grounding.hpp"
#include "tabletop/sim/goals.hpp"
#include "tabletop/sim/snapshot.hpp"

namespace tabletop::agent {
namespace {

std::string summarize(const sim::Scene& scene, const sim::SimEvent& e) {
    auto label = [&](const std::string& id) { return scene.has_object(id) ? scene.object(id).label : id; };
    std::string s = std::string(sim::to_string(e.kind)) + " " + label(e.subject);
    if (!e.target.empty()) s += " -> " + label(e.target);
    if (!e.detail.empty()) s += " (" + e.detail + ")";
    return s;
}

class Episode {
public:
    Episode(const Backends& b, skills::SkillExecutor& exec, const std::string& instruction, const sim::TaskSpec* task, const LoopConfig& cfg,
            const PromptProfile& profile, const sim::Registry& registry, const EpisodeHooks& hooks)
        : b_(b), exec_(exec), instruction_(instruction), task_(task), cfg_(cfg), profile_(profile), registry_(registry), hooks_(hooks) {}

    EpisodeResult run() {
        emit(EventKind::instruction, {{"text", instruction_}, {"task_id", task_ ? task_->id : ""}, {"config", to_json(cfg_)}});
        std::string failure_context;
        while (r_.attempts < cfg_.max_attempts) {
            ++r_.attempts;
            const bool executed = execute_attempt(failure_context);
            emit(EventKind::scene_snapshot, {{"attempt", r_.attempts}, {"scene", sim::to_json(exec_.scene(), false)}});
            if (!executed) {
                // Without an evaluator there is no feedback loop at all.
                if (!cfg_.evaluator_enabled) break;
                failure_context = failure_context_block(r_.attempts, r_.failure_reason, recent());
                continue;
            }
            if (judge()) break;
            if (!cfg_.evaluator_enabled) break;
            failure_context = failure_context_block(r_.attempts, r_.failure_reason, recent());
        }
        record_ground_truth();
        if (!cfg_.evaluator_enabled && r_.ground_truth_known) r_.discrepancy = r_.success != r_.ground_truth;
        speak(r_.success ? "Task complete." : "I could not complete the task: " + r_.failure_reason);
        return r_;
    }

private:
    void emit(EventKind k, json payload) {
        if (hooks_.emit) hooks_.emit(k, std::move(payload));
    }

    void speak(const std::string& text) {
        json payload = hooks_.speak ? hooks_.speak(text) : json{{"text", text}, {"mode", "text"}};
        emit(EventKind::speech_out, std::move(payload));
    }

    void note(std::string summary) { summaries_.push_back(std::move(summary)); }

    std::vector<std::string> recent() const {
        const size_t n = std::min(summaries_.size(), kFailureContextEvents);
        return {summaries_.end() - static_cast<long>(n), summaries_.end()};
    }

    void stage_error(const StageError& e) {
        r_.failure_reason = e.what();
        note(std::string(to_string(e.stage())) + " error: " + e.what());
        emit(EventKind::error, {{"attempt", r_.attempts}, {"stage", to_string(e.stage())}, {"message", e.what()}, {"raw", e.raw()}});
    }

    /// Plan (or not) and run every step. False when a stage gave up.
    bool execute_attempt(const std::string& failure_context) {
        std::vector<std::string> steps;
        if (cfg_.planner_enabled) {
            std::optional<SceneEvidence> evidence;
            if (cfg_.planner_vision) evidence = describe_scene(exec_.scene(), exec_.detect());
            ++r_.plan_calls;
            try {
                auto p = plan(*b_.planner, instruction_, evidence ? &*evidence : nullptr, profile_, failure_context, cfg_.parse_retries);
                emit(EventKind::plan, {{"attempt", r_.attempts}, {"steps", p.steps}, {"raw", p.raw}, {"snapshot_id", p.snapshot_id}});
                steps = p.steps;
                r_.plans.push_back(std::move(p));
            } catch (const StageError& e) {
                stage_error(e);
                return false;
            }
        } else {
            steps = {instruction_};
            emit(EventKind::plan, {{"attempt", r_.attempts}, {"steps", steps}, {"raw", ""}, {"snapshot_id", ""}, {"planner", false}});
        }

        for (size_t i = 0; i < steps.size(); ++i) {
            emit(EventKind::step_started, {{"attempt", r_.attempts}, {"index", i}, {"step", steps[i]}});
            SkillCall call;
            try {
                call = convert(*b_.converter, steps[i], profile_, cfg_.parse_retries);
            } catch (const StageError& e) {
                stage_error(e);
                return false;
            }
            for (const auto& c : expand(call)) run_call(i, c);
        }
        return true;
    }

    /// Without a sighted planner a step may name a whole class ("all the
    /// fruits"); it becomes one vlamove per matching detection.
    std::vector<SkillCall> expand(const SkillCall& call) {
        if ((cfg_.planner_enabled && cfg_.planner_vision) || call.skill != Skill::vlamove) return {call};
        std::vector<SkillCall> out;
        std::set<std::string> labels;
        try {
            for (const auto& d : perception::resolve_all(exec_.detect(), call.pick, exec_.synonyms())) {
                if (perception::match_score(call.place, d.label, exec_.synonyms()) > perception::kMatchThreshold) continue;
                if (labels.insert(d.label).second) out.push_back(SkillCall::vlamove(d.label, call.place));
            }
        } catch (const Error&) {
        }
        if (out.empty()) out.push_back(call);
        return out;
    }

    void run_call(size_t index, const SkillCall& call) {
        emit(EventKind::skill_call, {{"attempt", r_.attempts}, {"index", index}, {"call", to_json(call)}, {"text", format(call)}});
        auto outcome = exec_.execute(call);
        for (const auto& e : outcome.events) {
            emit(EventKind::sim_event, {{"attempt", r_.attempts}, {"index", index}, {"event", sim::to_json(e)}});
            note(summarize(exec_.scene(), e));
        }
        auto payload = skills::to_json(outcome);
        payload["attempt"] = r_.attempts;
        payload["index"] = index;
        emit(EventKind::step_result, payload);
        note("step " + std::to_string(index + 1) + " " + std::string(skills::to_string(outcome.status)) + ": " + outcome.message);
        if (call.skill == Skill::vlamove) {
            speak(outcome.status == skills::SkillStatus::ok ? "I put the " + call.pick + " on the " + call.place + "."
                                                             : "I could not move the " + call.pick + ": " + outcome.message + ".");
        }
        r_.outcomes.push_back(std::move(outcome));
    }

    /// Evaluate the attempt; true when the loop should stop with success.
    bool judge() {
        const std::string goal = task_ ? task_->goal_state : "The instruction \"" + instruction_ + "\" has been carried out.";
        json payload{{"attempt", r_.attempts}};
        if (!cfg_.evaluator_enabled) {
            r_.success = true;
            r_.evaluated = false;
            payload["outcome"] = "success";
            payload["reason"] = "evaluator disabled; success assumed";
            payload["evaluated"] = false;
        } else {
            try {
                auto v = evaluate(*b_.evaluator, goal, exec_.scene(), profile_, cfg_.parse_retries);
                r_.evaluated = true;
                r_.success = v.success();
                r_.failure_reason = v.success() ? "" : (v.reason.empty() ? "evaluator reported failure" : v.reason);
                payload["outcome"] = v.success() ? "success" : "failure";
                payload["reason"] = v.reason;
                payload["raw"] = v.raw;
                payload["evaluated"] = true;
                r_.verdict = std::move(v);
            } catch (const StageError& e) {
                stage_error(e);
                r_.success = false;
                payload["outcome"] = "failure";
                payload["reason"] = e.what();
                payload["evaluated"] = true;
            }
        }
        if (task_) {
            auto gt = sim::check_goal(registry_, exec_.scene(), *task_);
            payload["ground_truth"] = gt.satisfied;
            payload["unmet"] = gt.unmet;
            if (!cfg_.evaluator_enabled && !gt.satisfied) payload["discrepancy"] = true;
        }
        note("verdict " + payload["outcome"].get<std::string>() + (r_.failure_reason.empty() ? "" : ": " + r_.failure_reason));
        emit(EventKind::verdict, payload);
        return r_.success;
    }

    void record_ground_truth() {
        if (!task_) return;
        auto gt = sim::check_goal(registry_, exec_.scene(), *task_);
        r_.ground_truth_known = true;
        r_.ground_truth = gt.satisfied;
        r_.unmet = gt.unmet;
    }

    const Backends& b_;
    skills::SkillExecutor& exec_;
    const std::string& instruction_;
    const sim::TaskSpec* task_;
    const LoopConfig& cfg_;
    const PromptProfile& profile_;
    const sim::Registry& registry_;
    const EpisodeHooks& hooks_;
    EpisodeResult r_;
    std::vector<std::string> summaries_;
};

}  // namespace

void LoopConfig::validate() const {
    if (max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    if (parse_retries < 0) throw ConfigError("parse_retries must be non-negative");
}

json to_json(const LoopConfig& c) {
    return json{{"max_attempts", c.max_attempts},
                {"parse_retries", c.parse_retries},
                {"evaluator_enabled", c.evaluator_enabled},
                {"planner_vision", c.planner_vision},
                {"planner_enabled", c.planner_enabled}};
}

LoopConfig loop_config_from_json(const json& j) {
    LoopConfig c;
    try {
        c.max_attempts = j.value("max_attempts", c.max_attempts);
        c.parse_retries = j.value("parse_retries", c.parse_retries);
        c.evaluator_enabled = j.value("evaluator_enabled", c.evaluator_enabled);
        c.planner_vision = j.value("planner_vision", c.planner_vision);
        c.planner_enabled = j.value("planner_enabled", c.planner_enabled);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("loop config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string failure_context_block(int attempt, const std::string& reason, const std::vector<std::string>& recent_events) {
    std::string out = "Previous attempt " + std::to_string(attempt) + " failed.\nEvaluator reason: " + (reason.empty() ? "unknown" : reason) +
                      "\nRecent events:\n";
    for (const auto& e : recent_events) out += "- " + e + "\n";
    if (recent_events.empty()) out += "- none\n";
    out += "Plan again from the current state of the scene.";
    return out;
}

EpisodeResult run_episode(const Backends& backends, skills::SkillExecutor& executor, const std::string& instruction, const sim::TaskSpec* task,
                          const LoopConfig& config, const PromptProfile& profile, const sim::Registry& registry, const EpisodeHooks& hooks) {
    config.validate();
    if (instruction.find_first_not_of(" \t\r\n") == std::string::npos) throw PreconditionError("instruction is empty");
    if (!backends.planner || !backends.converter || !backends.evaluator) throw ConfigError("episode needs planner, converter and evaluator backends");
    return Episode(backends, executor, instruction, task, config, profile, registry, hooks).run();
}

}  // namespace tabletop::agent
