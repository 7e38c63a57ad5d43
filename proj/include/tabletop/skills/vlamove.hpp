#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tabletop/agent/skill_call.hpp"
#include "tabletop/common/json_util.hpp"
#include "tabletop/kinematics/arm.hpp"
#include "tabletop/perception/camera.hpp"
#include "tabletop/perception/detection.hpp"
#include "tabletop/sim/registry.hpp"
#include "tabletop/sim/scene.hpp"

namespace tabletop::skills {

enum class SkillStatus { ok, grounding_failed, action_rejected, grasp_failed };
std::string_view to_string(SkillStatus s);

struct SkillOutcome {
    agent::SkillCall call;
    std::string pick_id;       // grounded object id, empty when grounding failed
    std::string place_target;  // container/object id or "table"
    SkillStatus status = SkillStatus::ok;
    std::vector<sim::SimEvent> events;
    std::string message;
    std::vector<std::vector<double>> pick_trajectory;
    std::vector<std::vector<double>> place_trajectory;
};

json to_json(const SkillOutcome& outcome);

/// Place queries that mean "somewhere free on the table".
bool is_table_keyword(const std::string& query);

/// Everything a skill needs, bound to one scene. Not thread-safe: one executor
/// per session.
class SkillExecutor {
public:
    /// The arm's angles at construction are its home pose; every reach starts
    /// there and the arm returns there after placing. Throws ConfigError when the detector is missing, the camera is invalid
    /// or does not see the workspace, or the arm is malformed.
    SkillExecutor(sim::Scene& scene, std::shared_ptr<perception::Detector> detector, perception::CameraModel camera,
                  kinematics::ArmModel arm, sim::SynonymTable synonyms, double fail_prob = 0.0);

    /// Dispatch on call.skill.
    SkillOutcome execute(const agent::SkillCall& call);
    SkillOutcome execute_vlamove(const agent::SkillCall& call);
    SkillOutcome execute_done(const agent::SkillCall& call) const;

    /// Fresh detections of the bound scene.
    std::vector<perception::Detection> detect() const;

    sim::Scene& scene() { return scene_; }
    const sim::Scene& scene() const { return scene_; }
    const perception::CameraModel& camera() const { return camera_; }
    const kinematics::ArmModel& arm() const { return arm_; }
    const sim::SynonymTable& synonyms() const { return synonyms_; }
    double fail_prob() const { return fail_prob_; }
    void set_fail_prob(double p);

private:
    struct Grounded {
        std::string id;
        double x = 0.0;
        double y = 0.0;
    };

    std::optional<std::string> locate(const perception::Detection& d, double x, double y) const;
    Grounded ground(const perception::Detection& d) const;

    sim::Scene& scene_;
    std::shared_ptr<perception::Detector> detector_;
    perception::CameraModel camera_;
    kinematics::ArmModel arm_;
    std::vector<double> home_;
    sim::SynonymTable synonyms_;
    double fail_prob_;
};

}  // namespace tabletop::skills
