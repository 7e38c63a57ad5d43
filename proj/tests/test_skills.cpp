#include <random>

#include "doctest.h"
#include "tabletop/agent/skill_call.hpp"
#include "tabletop/common/error.hpp"
#include "tabletop/sim/actions.hpp"
#include "tabletop/sim/goals.hpp"
#include "tabletop/sim/scenarios.hpp"
#include "tabletop/skills/vlamove.hpp"

using namespace tabletop;
using namespace tabletop::skills;
using agent::SkillCall;

namespace {

const sim::Registry& reg() { return sim::default_registry(); }

SkillExecutor bind(sim::Scene& scene, double fail_prob = 0.0, perception::DetectorDegradation deg = {}) {
    return SkillExecutor(scene, std::make_shared<perception::OracleDetector>(deg), perception::overhead_camera(), kinematics::default_arm(),
                         reg().synonyms(), fail_prob);
}

// A detector that forgets source ids, forcing location-based lookup.
class AnonymousDetector : public perception::Detector {
public:
    std::vector<perception::Detection> detect(const sim::Scene& scene, const perception::CameraModel& camera) override {
        auto dets = perception::oracle_detect(scene, camera, {});
        for (auto& d : dets) d.source_id.clear();
        return dets;
    }
};

}  // namespace

TEST_CASE("vlamove apple onto the red plate") {
    auto scene = sim::make_scenario(reg(), 5, 3);
    auto exec = bind(scene);
    auto out = exec.execute(SkillCall::vlamove("apple", "red plate"));
    CHECK(out.status == SkillStatus::ok);
    CHECK(out.pick_id == "apple");
    CHECK(out.place_target == "red_plate");
    CHECK(scene.object("apple").contained_in == std::optional<std::string>("red_plate"));
    REQUIRE(out.events.size() >= 2);
    CHECK(out.events[0].kind == sim::SimEventKind::picked);
    CHECK(out.events[1].kind == sim::SimEventKind::placed);
    CHECK_FALSE(out.pick_trajectory.empty());
    CHECK_FALSE(out.place_trajectory.empty());
    CHECK(exec.arm().angles == kinematics::default_arm().angles);
}

TEST_CASE("grounding failure leaves the scene untouched") {
    auto scene = sim::make_scenario(reg(), 3, 3);
    const auto before = scene;
    auto exec = bind(scene);
    auto out = exec.execute(SkillCall::vlamove("banana", "red bowl"));
    CHECK(out.status == SkillStatus::grounding_failed);
    CHECK(out.events.empty());
    CHECK(scene == before);

    out = exec.execute(SkillCall::vlamove("red block", "purple bowl"));
    CHECK(out.status == SkillStatus::grounding_failed);
    CHECK(scene == before);
}

TEST_CASE("forced grasp failure") {
    auto scene = sim::make_scenario(reg(), 5, 3);
    auto exec = bind(scene, 1.0);
    auto out = exec.execute(SkillCall::vlamove("apple", "red plate"));
    CHECK(out.status == SkillStatus::grasp_failed);
    REQUIRE(out.events.size() == 1);
    CHECK(out.events[0].kind == sim::SimEventKind::grasp_failed);
    CHECK_FALSE(scene.held.has_value());
    CHECK(scene.event_log.back() == out.events[0]);
}

TEST_CASE("place resolution: containers, then objects, then the table") {
    auto scene = sim::make_scenario(reg(), 3, 1);
    auto exec = bind(scene);
    CHECK(exec.execute(SkillCall::vlamove("red block", "blue block")).place_target == "blue_block");
    CHECK(scene.object("red_block").supported_by == std::optional<std::string>("blue_block"));
    auto out = exec.execute(SkillCall::vlamove("red block", "the table"));
    CHECK(out.status == SkillStatus::ok);
    CHECK(out.place_target == "table");
    CHECK_FALSE(scene.object("red_block").supported_by.has_value());
    CHECK(sim::validate(scene).empty());
    // "bowl" is ambiguous; the tie-break picks the smallest label.
    CHECK(exec.execute(SkillCall::vlamove("green block", "bowl")).place_target == "blue_bowl");
}

TEST_CASE("picking a covered object is rejected with the rejection recorded") {
    auto scene = sim::make_scenario(reg(), 3, 1);
    auto exec = bind(scene);
    REQUIRE(exec.execute(SkillCall::vlamove("red block", "green block")).status == SkillStatus::ok);
    auto out = exec.execute(SkillCall::vlamove("green block", "blue bowl"));
    CHECK(out.status == SkillStatus::action_rejected);
    REQUIRE(out.events.size() == 1);
    CHECK(out.events[0].kind == sim::SimEventKind::rejected);
}

TEST_CASE("location-based lookup without oracle ids") {
    auto scene = sim::make_scenario(reg(), 5, 9);
    SkillExecutor exec(scene, std::make_shared<AnonymousDetector>(), perception::overhead_camera(), kinematics::default_arm(), reg().synonyms());
    auto out = exec.execute(SkillCall::vlamove("banana", "white plate"));
    CHECK(out.status == SkillStatus::ok);
    CHECK(out.pick_id == "banana");
    CHECK(scene.object("banana").contained_in == std::optional<std::string>("white_plate"));
}

TEST_CASE("done() is a no-op unless something is held") {
    auto scene = sim::make_scenario(reg(), 1, 0);
    auto exec = bind(scene);
    const auto before = scene;
    auto a = exec.execute(SkillCall::done());
    auto b = exec.execute(SkillCall::done());
    CHECK(a.status == SkillStatus::ok);
    CHECK(a.events.empty());
    CHECK(b.events.empty());
    CHECK(scene == before);

    REQUIRE(sim::step_pick(scene, "letter_a", 0.0).status == sim::PickStatus::picked);
    const auto log_size = scene.event_log.size();
    auto c = exec.execute(SkillCall::done());
    CHECK(c.status == SkillStatus::ok);
    REQUIRE(c.events.size() == 1);
    CHECK(c.events[0].kind == sim::SimEventKind::warning);
    CHECK(c.events[0].subject == "letter_a");
    CHECK(scene.event_log.size() == log_size);
}

TEST_CASE("bad bindings are configuration errors") {
    auto scene = sim::make_scenario(reg(), 1, 0);
    CHECK_THROWS_AS(SkillExecutor(scene, nullptr, perception::overhead_camera(), kinematics::default_arm(), reg().synonyms()), ConfigError);
    auto blind = perception::overhead_camera();
    blind.translation.z() = 0.1;
    CHECK_THROWS_AS(SkillExecutor(scene, std::make_shared<perception::OracleDetector>(), blind, kinematics::default_arm(), reg().synonyms()),
                    ConfigError);
    auto arm = kinematics::default_arm();
    arm.lengths.pop_back();
    CHECK_THROWS_AS(SkillExecutor(scene, std::make_shared<perception::OracleDetector>(), perception::overhead_camera(), arm, reg().synonyms()),
                    ConfigError);
    auto exec = bind(scene);
    CHECK_THROWS_AS(exec.execute_done(SkillCall::vlamove("a", "b")), PreconditionError);
    CHECK_THROWS_AS(exec.execute_vlamove(SkillCall::done()), PreconditionError);
}

TEST_CASE("property: skills never mutate silently, ground before motion, and reach inside the workspace") {
    std::mt19937_64 gen(12);
    for (int trial = 0; trial < 60; ++trial) {
        auto scene = sim::make_scenario(reg(), 1 + static_cast<int>(gen() % 10), gen());
        std::vector<std::string> labels{"table", "nothing here"};
        for (const auto& [id, o] : scene.objects) labels.push_back(o.label);
        auto exec = bind(scene, (gen() % 3) * 0.3, perception::DetectorDegradation{0.5, 0.5, 2.0, gen()});
        for (int k = 0; k < 8; ++k) {
            const auto before_log = scene.event_log.size();
            const auto before = scene;
            auto call = SkillCall::vlamove(labels[gen() % labels.size()], labels[gen() % labels.size()]);
            auto out = exec.execute(call);
            const std::vector<sim::SimEvent> appended(scene.event_log.begin() + static_cast<long>(before_log), scene.event_log.end());
            CHECK(appended == out.events);
            if (out.status == SkillStatus::grounding_failed) CHECK(scene == before);
            if (out.status == SkillStatus::ok) {
                REQUIRE(out.events.size() >= 2);
                CHECK(out.events[0].kind == sim::SimEventKind::picked);
                CHECK(out.events[0].subject == out.pick_id);
                CHECK(out.events[1].kind == sim::SimEventKind::placed);
            }
            for (const auto* traj : {&out.pick_trajectory, &out.place_trajectory}) {
                if (traj->empty()) continue;
                kinematics::ArmModel arm = kinematics::default_arm();
                arm.angles = traj->back();
                auto p = kinematics::forward_kinematics(arm);
                CHECK(scene.workspace.contains(p.x() + 1e-4 * (p.x() < 0.3 ? 1 : -1), p.y() + 1e-4 * (p.y() < 0 ? 1 : -1)));
            }
            CHECK(sim::validate(scene).empty());
            CHECK_FALSE(scene.held.has_value());
        }
    }
}
