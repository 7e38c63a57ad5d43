#include "tabletop/agent/stages.hpp"

#include <cctype>
#include <cstdio>
#include <regex>
#include <sstream>

#include "tabletop/common/rng.hpp"
#include "tabletop/sim/snapshot.hpp"

namespace tabletop::agent {
namespace {

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

ChatRequest user_request(Stage stage, std::string text, json metadata) {
    ChatRequest r;
    r.stage = stage;
    r.messages.push_back(ChatMessage{"user", std::move(text), {}});
    r.metadata = std::move(metadata);
    return r;
}

}  // namespace

std::vector<std::string> extract_steps(const std::string& text) {
    static const std::regex numbered(R"(^\s*\d+\s*[.)]\s+(.*\S)\s*$)");
    std::vector<std::string> steps;
    std::istringstream in(text);
    std::string line;
    std::smatch m;
    while (std::getline(in, line)) {
        if (std::regex_match(line, m, numbered)) steps.push_back(m[1].str());
    }
    return steps;
}

std::string extract_code(const std::string& text) {
    auto open = text.find("```");
    if (open == std::string::npos) return text;
    auto body = text.find('\n', open);
    if (body == std::string::npos) return text;
    auto close = text.find("```", body + 1);
    return text.substr(body + 1, close == std::string::npos ? std::string::npos : close - body - 1);
}

Verdict extract_verdict(const std::string& text) {
    const bool s = text.find("SUCCESS") != std::string::npos;
    const bool f = text.find("FAILURE") != std::string::npos;
    if (s == f) {
        throw StageError(Stage::evaluator, s ? "ambiguous verdict: both SUCCESS and FAILURE present" : "no verdict token in evaluator reply", text);
    }
    Verdict v;
    v.raw = text;
    v.outcome = s ? Verdict::Outcome::success : Verdict::Outcome::failure;
    auto pos = text.find(s ? "SUCCESS" : "FAILURE") + 7;
    std::string reason = text.substr(pos);
    reason.erase(0, reason.find_first_not_of(" :\t\r\n-"));
    while (!reason.empty() && std::isspace(static_cast<unsigned char>(reason.back()))) reason.pop_back();
    v.reason = reason;
    return v;
}

SceneEvidence describe_scene(const sim::Scene& scene, const std::vector<perception::Detection>& detections) {
    SceneEvidence ev;
    std::string text = "Detected objects (label, pixel centre, depth):\n";
    for (const auto& d : detections) {
        char buf[96];
        std::snprintf(buf, sizeof buf, " at (%.0f, %.0f), %.2f m\n", d.box.center_u(), d.box.center_v(), d.depth);
        text += "- " + d.label + buf;
    }
    if (detections.empty()) text += "- nothing\n";
    ev.text = text;
    ev.snapshot = sim::snapshot_string(scene, false);
    return ev;
}

Plan plan(ModelBackend& backend, const std::string& instruction, const SceneEvidence* evidence, const PromptProfile& profile,
          const std::string& failure_context, int retries) {
    if (instruction.find_first_not_of(" \t\r\n") == std::string::npos) throw PreconditionError("instruction is empty");
    std::string fc = failure_context.empty() ? "" : "\n" + failure_context + "\n";
    auto text = render(profile.planner, {{"instruction", instruction},
                                         {"examples", profile.examples},
                                         {"scene_evidence", evidence ? evidence->text : "(no scene observation available)\n"},
                                         {"failure_context", fc}});
    auto request = user_request(Stage::planner, text, json{{"instruction", instruction}, {"failure_context", failure_context}});
    Plan p;
    p.instruction = instruction;
    if (evidence && !evidence->snapshot.empty()) {
        request.messages.back().attachments.push_back(Attachment{kSceneMime, evidence->snapshot});
        p.snapshot_id = hex64(fnv1a(evidence->snapshot));
    }
    for (int attempt = 0; attempt <= retries; ++attempt) {
        p.raw = backend.complete(request);
        p.steps = extract_steps(p.raw);
        if (!p.steps.empty()) return p;
    }
    throw StageError(Stage::planner, "planning failed: no numbered steps in the planner reply", p.raw);
}

SkillCall convert(ModelBackend& backend, const std::string& step, const PromptProfile& profile, int retries) {
    if (step.find_first_not_of(" \t\r\n") == std::string::npos) throw PreconditionError("step is empty");
    auto request = user_request(Stage::converter, render(profile.converter, {{"instruction", step}}), json{{"step", step}});
    std::string raw;
    std::string last_error;
    for (int attempt = 0; attempt <= retries; ++attempt) {
        raw = backend.complete(request);
        try {
            return parse_skill_call(extract_code(raw));
        } catch (const SyntaxError& e) {
            last_error = e.what();
        }
    }
    throw StageError(Stage::converter, "conversion failed: " + last_error, raw);
}

Verdict evaluate(ModelBackend& backend, const std::string& goal_state, const sim::Scene& scene, const PromptProfile& profile, int retries) {
    if (!backend.capabilities().vision) throw PreconditionError("evaluator backend " + backend.name() + " has no vision");
    auto request = user_request(Stage::evaluator, render(profile.evaluator, {{"goal_state", goal_state}}), json{{"goal_state", goal_state}});
    request.messages.back().attachments.push_back(Attachment{kSceneMime, sim::snapshot_string(scene, false)});
    std::string raw;
    std::string last_error;
    for (int attempt = 0; attempt <= retries; ++attempt) {
        raw = backend.complete(request);
        try {
            return extract_verdict(raw);
        } catch (const StageError& e) {
            last_error = e.what();
        }
    }
    throw StageError(Stage::evaluator, last_error, raw);
}

}  // namespace tabletop::agent
