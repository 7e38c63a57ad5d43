#include "tabletop/agent/mock_backend.hpp"

#include <algorithm>
#include <regex>

#include "tabletop/common/error.hpp"
#include "tabletop/sim/goals.hpp"
#include "tabletop/sim/snapshot.hpp"

namespace tabletop::agent {
namespace {

std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    s.erase(0, s.find_first_not_of(ws));
    auto end = s.find_last_not_of(ws);
    s.erase(end == std::string::npos ? 0 : end + 1);
    return s;
}

std::string strip_article(std::string s) {
    static const std::regex article(R"(^(the|an|a)\s+(?=\S))", std::regex::icase);
    s = std::regex_replace(s, article, "", std::regex_constants::format_first_only);
    s.erase(std::remove(s.begin(), s.end(), '"'), s.end());
    return trim(s);
}

std::string target_label(const sim::Scene& scene, const std::string& target) {
    if (target == "table") return "table";
    return scene.object(target).label;
}

}  // namespace

std::optional<SkillCall> rule_convert(const std::string& step) {
    static const std::regex done(R"(^\s*(?:\d+[.)]\s*)?(?:task\s+complete(?:d)?|done|finished|nothing\s+(?:left\s+)?to\s+do)\s*[.!]?\s*$)",
                                 std::regex::icase);
    static const std::regex move(
        R"(^\s*(?:\d+[.)]\s*)?(?:please\s+)?(?:put|place|move|store|stack|organi[sz]e|set|drop|transfer|pack)\s+(.+?)\s+(?:on\s+top\s+of|onto|into|inside|in|on|to)\s+(.+?)\s*[.!]?\s*$)",
        std::regex::icase);
    std::smatch m;
    if (std::regex_match(step, done)) return SkillCall::done();
    if (std::regex_match(step, m, move)) {
        auto pick = strip_article(m[1].str());
        auto place = strip_article(m[2].str());
        if (!pick.empty() && !place.empty()) return SkillCall::vlamove(pick, place);
    }
    return std::nullopt;
}

std::vector<std::string> split_clauses(const std::string& instruction) {
    static const std::regex sep(R"(\s*(?:[,;]\s*(?:and\s+)?(?:then\s+)?|\s+and\s+then\s+|\s+then\s+|\s+and\s+(?=(?:put|place|move|store|stack|organi[sz]e|set|drop|transfer|pack)\b)))",
                                std::regex::icase);
    std::vector<std::string> out;
    std::sregex_token_iterator it(instruction.begin(), instruction.end(), sep, -1), end;
    for (; it != end; ++it) {
        std::string c = trim(it->str());
        while (!c.empty() && (c.back() == '.' || c.back() == '!')) c.pop_back();
        if (!c.empty()) out.push_back(c);
    }
    return out;
}

std::optional<sim::Scene> attached_scene(const ChatRequest& request) {
    for (auto m = request.messages.rbegin(); m != request.messages.rend(); ++m) {
        for (const auto& a : m->attachments) {
            if (a.mime != kSceneMime) continue;
            try {
                return sim::scene_from_json(json::parse(a.data));
            } catch (const std::exception&) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

std::string MockRulesBackend::plan_reply(const std::string& instruction, const sim::Scene* scene) const {
    std::vector<std::string> steps;
    const sim::TaskSpec* task = registry_.find_by_instruction(instruction);
    if (scene && task) {
        for (const auto& mv : sim::plan_moves(registry_, *scene, *task)) {
            steps.push_back("put the " + scene->object(mv.object).label + " on the " + target_label(*scene, mv.target));
        }
        if (steps.empty()) steps.push_back("task complete");
    } else {
        steps = split_clauses(instruction);
    }
    std::string out = "Plan:\n";
    for (size_t i = 0; i < steps.size(); ++i) out += std::to_string(i + 1) + ". " + steps[i] + "\n";
    return out;
}

std::string MockRulesBackend::convert_reply(const std::string& step) const {
    if (auto call = rule_convert(step)) return "```\n" + format(*call) + "\n```";
    return "I cannot map this step to a skill.";
}

std::string MockRulesBackend::evaluate_reply(const std::string& goal_state, const sim::Scene* scene) const {
    const sim::TaskSpec* task = registry_.find_by_goal_state(goal_state);
    if (!task) return "SUCCESS";
    if (!scene) return "FAILURE: no observation of the scene";
    auto verdict = sim::check_goal(registry_, *scene, *task);
    if (verdict.satisfied) return "SUCCESS";
    std::string reasons;
    for (const auto& u : verdict.unmet) reasons += (reasons.empty() ? "" : "; ") + u;
    return "FAILURE: " + reasons;
}

std::string MockRulesBackend::do_complete(const ChatRequest& request) {
    const auto scene = attached_scene(request);
    const sim::Scene* s = scene ? &*scene : nullptr;
    switch (request.stage) {
        case Stage::planner: return plan_reply(request.metadata.value("instruction", ""), s);
        case Stage::converter: return convert_reply(request.metadata.value("step", ""));
        case Stage::evaluator: return evaluate_reply(request.metadata.value("goal_state", ""), s);
    }
    throw PreconditionError("unknown stage");
}

std::string GarbageBackend::do_complete(const ChatRequest&) { return "As an assistant I would rather talk about the weather today."; }

std::string AmbiguousBackend::do_complete(const ChatRequest& request) {
    if (request.stage == Stage::evaluator) return "SUCCESS... but FAILURE possible";
    return rules_.complete(request);
}

}  // namespace tabletop::agent
