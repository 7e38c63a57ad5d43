#include <memory>

#include "doctest.h"
#include "tabletop/agent/episode.hpp"
#include "tabletop/agent/mock_backend.hpp"
#include "tabletop/sim/goals.hpp"
#include "tabletop/sim/scenarios.hpp"

using namespace tabletop;
using namespace tabletop::agent;

namespace {

const sim::Registry& reg() { return sim::default_registry(); }

struct Rig {
    sim::Scene scene;
    skills::SkillExecutor exec;
    std::vector<SessionEvent> events;

    Rig(const sim::TaskSpec& task, uint64_t seed, double fail_prob = 0.0)
        : scene(sim::make_task_scene(reg(), task, seed)),
          exec(scene, std::make_shared<perception::OracleDetector>(), perception::overhead_camera(), kinematics::default_arm(), reg().synonyms(),
               fail_prob) {}

    EpisodeHooks hooks() {
        return EpisodeHooks{[this](EventKind k, json p) { events.push_back(SessionEvent{events.size() + 1, "", k, std::move(p)}); }, {}};
    }

    std::vector<EventKind> kinds() const {
        std::vector<EventKind> out;
        for (const auto& e : events) out.push_back(e.kind);
        return out;
    }
};

EpisodeResult run(Rig& rig, const sim::TaskSpec& task, const LoopConfig& cfg, const Backends& b) {
    return run_episode(b, rig.exec, task.instruction, &task, cfg, default_profile("prompted"), reg(), rig.hooks());
}

Backends mock() { return Backends::shared(make_backend("mock://rules", reg())); }

}  // namespace

TEST_CASE("backend capability gate fires before any I/O") {
    auto text_only = std::make_shared<ScriptedBackend>(Capabilities{true, false});
    ChatRequest req;
    req.stage = Stage::evaluator;
    req.messages.push_back(ChatMessage{"user", "look", {Attachment{"image/png", "\x89PNG"}}});
    CHECK_THROWS_AS(text_only->complete(req), PreconditionError);
    CHECK(text_only->call_log().empty());
    CHECK(text_only->requests().empty());

    req.messages.back().attachments.clear();
    text_only->push("ok");
    CHECK(text_only->complete(req) == "ok");
    CHECK(text_only->calls(Stage::evaluator) == 1);

    // An HTTP backend configured without vision refuses without touching the network.
    HttpChatBackend http({"http://127.0.0.1:9/v1/chat/completions", "m", "", 1.0, false});
    req.messages.back().attachments.push_back(Attachment{kSceneMime, "{}"});
    CHECK_THROWS_AS(http.complete(req), PreconditionError);
}

TEST_CASE("make_backend URIs") {
    CHECK(make_backend("mock://rules", reg())->capabilities().vision);
    CHECK_FALSE(make_backend("mock://rules?vision=0", reg())->capabilities().vision);
    CHECK(make_backend("mock://garbage", reg())->name() == "mock://garbage");
    CHECK(make_backend("http://localhost:8000/v1/chat/completions?model=glm&vision=0", reg())->name() ==
          "http://localhost:8000/v1/chat/completions");
    CHECK_THROWS_AS(make_backend("mock://nope", reg()), ConfigError);
    CHECK_THROWS_AS(make_backend("ftp://x", reg()), ConfigError);
    CHECK_THROWS_AS(make_backend("rules", reg()), ConfigError);
}

TEST_CASE("http backend request body follows the chat-completions shape") {
    HttpChatBackend http({"http://127.0.0.1:9/v1/chat/completions", "glm", "", 1.0, true});
    ChatRequest req;
    req.messages.push_back(ChatMessage{"user", "hello", {Attachment{"image/png", "abc"}, Attachment{kSceneMime, "{}"}}});
    auto body = http.request_body(req);
    CHECK(body["model"] == "glm");
    const auto& parts = body["messages"][0]["content"];
    REQUIRE(parts.size() == 3);
    CHECK(parts[0]["text"] == "hello");
    CHECK(parts[1]["image_url"]["url"] == "data:image/png;base64,YWJj");
    CHECK(parts[2]["type"] == "text");
}

TEST_CASE("step, code and verdict extraction rules") {
    CHECK(extract_steps("Sure! Here is the plan.\n1. put the apple on the plate\nthen some prose\n2) put the pear on the plate\n") ==
          std::vector<std::string>{"put the apple on the plate", "put the pear on the plate"});
    CHECK(extract_steps("no numbers here").empty());
    CHECK(extract_code("text\n```python\ndone()\n```\nmore") == "done()\n");
    CHECK(extract_code("done()") == "done()");
    CHECK(extract_verdict("SUCCESS").success());
    auto f = extract_verdict("FAILURE: the apple is on the table");
    CHECK_FALSE(f.success());
    CHECK(f.reason == "the apple is on the table");
    CHECK_THROWS_AS(extract_verdict("SUCCESS... but FAILURE possible"), StageError);
    CHECK_THROWS_AS(extract_verdict("looks fine"), StageError);
}

TEST_CASE("mock converter rule") {
    CHECK(rule_convert("put the apple on the red plate") == SkillCall::vlamove("apple", "red plate"));
    CHECK(rule_convert("3. Place the letter B onto the letter A.") == SkillCall::vlamove("letter B", "letter A"));
    CHECK(rule_convert("store the blocks in the box") == SkillCall::vlamove("blocks", "box"));
    CHECK(rule_convert("task complete") == SkillCall::done());
    CHECK_FALSE(rule_convert("think about the meaning of life").has_value());
    CHECK(split_clauses("Place the fruits onto the plate and store the blocks in the box") ==
          std::vector<std::string>{"Place the fruits onto the plate", "store the blocks in the box"});
}

TEST_CASE("plan: rule mock on scene 5 enumerates the fruits") {
    const auto& task = reg().task("sim-p05");
    auto scene = sim::make_task_scene(reg(), task, 4);
    auto backend = make_backend("mock://rules", reg());
    perception::OracleDetector det;
    auto evidence = describe_scene(scene, det.detect(scene, perception::overhead_camera()));
    auto p = plan(*backend, task.instruction, &evidence, default_profile("prompted"));
    // Oracle: one step per fruit in the scene roster, each onto the red plate.
    std::vector<std::string> want;
    for (const auto& [id, o] : scene.objects)
        if (o.category == sim::Category::fruit) want.push_back("put the " + o.label + " on the red plate");
    std::sort(p.steps.begin(), p.steps.end());
    CHECK(p.steps == want);
    CHECK_FALSE(p.snapshot_id.empty());
    CHECK_THROWS_AS(plan(*backend, "   ", &evidence, default_profile("prompted")), PreconditionError);
}

TEST_CASE("plan, convert and evaluate retries and failures") {
    auto garbage = make_backend("mock://garbage", reg());
    CHECK_THROWS_AS(plan(*garbage, "do it", nullptr, default_profile("prompted"), "", 2), StageError);
    CHECK(garbage->calls(Stage::planner) == 3);
    try {
        convert(*garbage, "put the apple on the plate", default_profile("prompted"), 1);
        FAIL("expected conversion failure");
    } catch (const StageError& e) {
        CHECK(e.stage() == Stage::converter);
        CHECK(e.raw().find("weather") != std::string::npos);
    }
    CHECK(garbage->calls(Stage::converter) == 2);

    auto scripted = std::make_shared<ScriptedBackend>();
    scripted->push(Stage::converter, "vlamove(pick=apple)");
    scripted->push(Stage::converter, "```\nvlamove(pick=\"apple\", place=\"plate\")\n```");
    CHECK(convert(*scripted, "put the apple on the plate", default_profile("prompted")) == SkillCall::vlamove("apple", "plate"));

    auto ambiguous = make_backend("mock://ambiguous", reg());
    auto scene = sim::make_scenario(reg(), 5, 1);
    CHECK_THROWS_AS(evaluate(*ambiguous, "anything", scene, default_profile("prompted")), StageError);

    auto blind = make_backend("mock://rules?vision=0", reg());
    CHECK_THROWS_AS(evaluate(*blind, "anything", scene, default_profile("prompted")), PreconditionError);
    CHECK(blind->call_log().empty());
}

TEST_CASE("evaluate: rule mock agrees with check_goal") {
    const auto& task = reg().task("sim-p05");
    auto scene = sim::make_task_scene(reg(), task, 4);
    auto backend = make_backend("mock://rules", reg());
    CHECK_FALSE(evaluate(*backend, task.goal_state, scene, default_profile("prompted")).success());
    sim::apply_moves(scene, sim::plan_moves(reg(), scene, task));
    REQUIRE(sim::check_goal(reg(), scene, task).satisfied);
    CHECK(evaluate(*backend, task.goal_state, scene, default_profile("prompted")).success());
}

TEST_CASE("prompt rendering and profiles") {
    CHECK(render("a {x} b {y} {z}", {{"x", "1"}, {"y", "2"}}) == "a 1 b 2 {z}");
    const auto& p = default_profile("prompted");
    const auto& u = default_profile("unprompted");
    CHECK(p.planner == u.planner);
    CHECK(p.converter == u.converter);
    CHECK(p.evaluator == u.evaluator);
    CHECK(p.examples != u.examples);
    for (const char* key : {"{instruction}", "{scene_evidence}", "{examples}", "{failure_context}"}) CHECK(p.planner.find(key) != std::string::npos);
    CHECK(p.evaluator.find("{goal_state}") != std::string::npos);
    CHECK_THROWS_AS(load_profile(default_prompt_dir(), "missing"), ConfigError);
}

TEST_CASE("run_episode: hermetic success on every simulation task") {
    for (const auto& task : reg().tasks()) {
        if (!task.simulation) continue;
        Rig rig(task, 7);
        auto r = run(rig, task, LoopConfig{}, mock());
        INFO(task.id, " unmet: ", r.unmet.size() ? r.unmet.front() : "");
        CHECK(r.success);
        CHECK(r.ground_truth);
        CHECK(r.attempts == 1);
        const auto k = rig.kinds();
        REQUIRE(k.size() >= 4);
        CHECK(k.front() == EventKind::instruction);
        CHECK(k[1] == EventKind::plan);
        CHECK(k.back() == EventKind::speech_out);
        CHECK(k[k.size() - 2] == EventKind::verdict);
    }
}

TEST_CASE("run_episode: forced grasp failure exhausts the budget") {
    const auto& task = reg().task("sim-p05");
    Rig rig(task, 7, 1.0);
    auto b = mock();
    auto r = run(rig, task, LoopConfig{}, b);
    CHECK_FALSE(r.success);
    CHECK_FALSE(r.ground_truth);
    CHECK(r.attempts == 3);
    CHECK(r.plan_calls == 3);
    CHECK(b.planner->calls(Stage::planner) == 3);
    // Every re-plan carries the failure context.
    CHECK(r.plans[1].raw.size() > 0);
}

TEST_CASE("run_episode: evaluator off with an injected grasp failure flags the discrepancy") {
    const auto& task = reg().task("sim-p05");
    Rig rig(task, 7, 0.0);
    auto b = mock();
    // Fail exactly the first pick: one draw from the scene rng decides.
    rig.exec.set_fail_prob(1.0);
    auto call_count = std::make_shared<int>(0);
    auto wrapped = std::make_shared<ScriptedBackend>([&, call_count](const ChatRequest& req) {
        if (req.stage == Stage::converter && (*call_count)++ == 1) rig.exec.set_fail_prob(0.0);
        auto rules = std::static_pointer_cast<MockRulesBackend>(b.planner);
        if (req.stage == Stage::planner) {
            auto snap = attached_scene(req);
            return rules->plan_reply(req.metadata.value("instruction", ""), snap ? &*snap : nullptr);
        }
        return rules->convert_reply(req.metadata.value("step", ""));
    });
    LoopConfig cfg;
    cfg.evaluator_enabled = false;
    auto r = run(rig, task, cfg, Backends{wrapped, wrapped, b.evaluator});
    CHECK(r.success);
    CHECK_FALSE(r.evaluated);
    CHECK_FALSE(r.ground_truth);
    CHECK(r.discrepancy);
    CHECK(r.attempts == 1);
    CHECK(b.evaluator->calls(Stage::evaluator) == 0);
    bool flagged = false;
    for (const auto& e : rig.events)
        if (e.kind == EventKind::verdict) flagged = e.payload.value("discrepancy", false);
    CHECK(flagged);
}

TEST_CASE("run_episode: pathological backends stay bounded") {
    const auto& task = reg().task("sim-p03");
    for (const char* uri : {"mock://garbage", "mock://ambiguous"}) {
        Rig rig(task, 2);
        auto b = Backends::shared(make_backend(uri, reg()));
        auto r = run(rig, task, LoopConfig{}, b);
        CHECK_FALSE(r.success);
        CHECK(r.attempts == 3);
        CHECK(b.planner->calls(Stage::planner) <= 3 * 3);
        CHECK(r.plan_calls <= 3);
    }
    Rig rig(task, 2);
    CHECK_THROWS_AS(run_episode(mock(), rig.exec, "", &task, LoopConfig{}, default_profile("prompted"), reg()), PreconditionError);
    LoopConfig bad;
    bad.max_attempts = 0;
    CHECK_THROWS_AS(run(rig, task, bad, mock()), ConfigError);
}

TEST_CASE("run_episode: transport errors propagate") {
    const auto& task = reg().task("sim-p03");
    Rig rig(task, 2);
    auto dead = std::make_shared<ScriptedBackend>([](const ChatRequest&) -> std::string { throw TransportError("down", 503, 5); });
    CHECK_THROWS_AS(run(rig, task, LoopConfig{}, Backends::shared(dead)), TransportError);
}

TEST_CASE("property: execution reaches the executor in plan order") {
    for (const auto& id : {"sim-p01", "sim-p10", "sim-u10"}) {
        const auto& task = reg().task(id);
        Rig rig(task, 3);
        auto r = run(rig, task, LoopConfig{}, mock());
        REQUIRE(r.plans.size() == 1);
        const auto& steps = r.plans[0].steps;
        REQUIRE(r.outcomes.size() == steps.size());
        for (size_t i = 0; i < steps.size(); ++i) CHECK(*rule_convert(steps[i]) == r.outcomes[i].call);
        size_t expect = 0;
        for (const auto& e : rig.events) {
            if (e.kind == EventKind::step_started) CHECK(e.payload["index"] == expect++);
        }
        CHECK(expect == steps.size());
    }
}

TEST_CASE("property: hermetic episodes are deterministic") {
    for (const auto& id : {"sim-p02", "sim-u04"}) {
        const auto& task = reg().task(id);
        Rig a(task, 11, 0.3), b(task, 11, 0.3);
        run(a, task, LoopConfig{}, mock());
        run(b, task, LoopConfig{}, mock());
        REQUIRE(a.events.size() == b.events.size());
        for (size_t i = 0; i < a.events.size(); ++i) CHECK(to_jsonl(a.events[i]) == to_jsonl(b.events[i]));
        CHECK(a.scene == b.scene);
    }
}

TEST_CASE("property: the evaluator loop recovers from grasp failures") {
    int with = 0, without = 0;
    const auto tasks = reg().tasks();
    for (int i = 0; i < 200; ++i) {
        const auto& task = tasks[static_cast<size_t>(i) % 20];
        LoopConfig off;
        off.evaluator_enabled = false;
        Rig on_rig(task, 1000 + static_cast<uint64_t>(i), 0.3), off_rig(task, 1000 + static_cast<uint64_t>(i), 0.3);
        with += run(on_rig, task, LoopConfig{}, mock()).ground_truth;
        without += run(off_rig, task, off, mock()).ground_truth;
    }
    INFO("evaluator on: ", with, " off: ", without);
    CHECK(with > without);
}
