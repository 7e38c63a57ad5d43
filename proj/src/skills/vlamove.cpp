#include "tabletop/skills/vlamove.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tabletop/common/error.hpp"
#include "tabletop/perception/grounding.hpp"
#include "tabletop/sim/actions.hpp"
#include "tabletop/sim/snapshot.hpp"

namespace tabletop::skills {
namespace {

using perception::Detection;

json trajectory_json(const std::vector<std::vector<double>>& traj) {
    json out = json::array();
    for (const auto& q : traj) {
        json row = json::array();
        for (double a : q) row.push_back(round_micro(a));
        out.push_back(std::move(row));
    }
    return out;
}

SkillOutcome failed(const agent::SkillCall& call, SkillStatus status, std::string message) {
    SkillOutcome o;
    o.call = call;
    o.status = status;
    o.message = std::move(message);
    return o;
}

}  // namespace

std::string_view to_string(SkillStatus s) {
    switch (s) {
        case SkillStatus::ok: return "ok";
        case SkillStatus::grounding_failed: return "grounding_failed";
        case SkillStatus::action_rejected: return "action_rejected";
        case SkillStatus::grasp_failed: return "grasp_failed";
    }
    return "?";
}

json to_json(const SkillOutcome& o) {
    json events = json::array();
    for (const auto& e : o.events) events.push_back(sim::to_json(e));
    return json{{"call", agent::to_json(o.call)},
                {"pick_id", o.pick_id},
                {"place_target", o.place_target},
                {"status", to_string(o.status)},
                {"events", events},
                {"message", o.message},
                {"pick_trajectory", trajectory_json(o.pick_trajectory)},
                {"place_trajectory", trajectory_json(o.place_trajectory)}};
}

bool is_table_keyword(const std::string& query) {
    const auto tokens = perception::normalize_tokens(query);
    static const std::vector<std::vector<std::string>> phrases{
        {"table"}, {"desk"}, {"free"}, {"free", "pose"}, {"free", "space"}, {"free", "spot"}, {"tabletop"}, {"anywhere"}};
    return std::find(phrases.begin(), phrases.end(), tokens) != phrases.end();
}

SkillExecutor::SkillExecutor(sim::Scene& scene, std::shared_ptr<perception::Detector> detector, perception::CameraModel camera,
                             kinematics::ArmModel arm, sim::SynonymTable synonyms, double fail_prob)
    : scene_(scene), detector_(std::move(detector)), camera_(std::move(camera)), arm_(std::move(arm)), synonyms_(std::move(synonyms)) {
    if (!detector_) throw ConfigError("skill executor has no detector bound");
    try {
        perception::validate(camera_);
        kinematics::validate(arm_);
    } catch (const PreconditionError& e) {
        throw ConfigError(std::string("skill executor binding: ") + e.what());
    }
    if (!perception::covers_workspace(camera_, scene_.workspace)) throw ConfigError("camera does not cover the workspace");
    home_ = arm_.angles;
    set_fail_prob(fail_prob);
}

void SkillExecutor::set_fail_prob(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("fail_prob must lie in [0,1]");
    fail_prob_ = p;
}

std::vector<Detection> SkillExecutor::detect() const { return detector_->detect(scene_, camera_); }

std::optional<std::string> SkillExecutor::locate(const Detection& d, double x, double y) const {
    // Oracle detections name their object; anything else is looked up at the
    // back-projected point: the top-most object whose footprint contains it.
    if (!d.source_id.empty() && scene_.has_object(d.source_id)) return d.source_id;
    std::optional<std::string> best;
    int best_z = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, o] : scene_.objects) {
        if (scene_.held && *scene_.held == id) continue;
        const double dist = std::hypot(o.pose.x - x, o.pose.y - y);
        if (dist > o.footprint_radius) continue;
        const int z = o.is_container() ? -1 : o.pose.z;
        if (z > best_z || (z == best_z && dist < best_d)) {
            best = id;
            best_z = z;
            best_d = dist;
        }
    }
    return best;
}

SkillExecutor::Grounded SkillExecutor::ground(const Detection& d) const {
    const auto w = perception::pixel_to_world(camera_, d.box.center_u(), d.box.center_v(), d.depth);
    // Reach targets stay inside the workspace by construction.
    Grounded g{{}, scene_.workspace.clamp_x(w.x()), scene_.workspace.clamp_y(w.y())};
    if (auto id = locate(d, w.x(), w.y())) g.id = *id;
    return g;
}

SkillOutcome SkillExecutor::execute(const agent::SkillCall& call) {
    return call.skill == agent::Skill::done ? execute_done(call) : execute_vlamove(call);
}

SkillOutcome SkillExecutor::execute_done(const agent::SkillCall& call) const {
    if (call.skill != agent::Skill::done) throw PreconditionError("execute_done needs a done() call");
    SkillOutcome o;
    o.call = call;
    if (scene_.held) {
        sim::SimEvent w;
        w.kind = sim::SimEventKind::warning;
        w.subject = *scene_.held;
        w.tick = scene_.tick;
        w.detail = "done() called while " + scene_.object(*scene_.held).label + " is still held";
        o.events.push_back(std::move(w));
        o.message = o.events.back().detail;
    }
    return o;
}

SkillOutcome SkillExecutor::execute_vlamove(const agent::SkillCall& call) {
    if (call.skill != agent::Skill::vlamove) throw PreconditionError("execute_vlamove needs a vlamove() call");

    // 1. Ground both ends before anything moves.
    std::vector<Detection> dets;
    try {
        dets = detect();
    } catch (const PreconditionError& e) {
        return failed(call, SkillStatus::grounding_failed, e.what());
    }
    Detection pick_det;
    try {
        pick_det = perception::resolve_label(dets, call.pick, synonyms_);
    } catch (const Error& e) {
        return failed(call, SkillStatus::grounding_failed, "pick: " + std::string(e.what()));
    }
    const Grounded pick = ground(pick_det);
    if (pick.id.empty()) return failed(call, SkillStatus::grounding_failed, "pick: nothing at the detected location of '" + call.pick + "'");

    std::vector<Detection> containers, objects;
    for (const auto& d : dets) {
        if (d == pick_det) continue;
        const Grounded g = ground(d);
        if (g.id.empty() || g.id == pick.id) continue;
        (scene_.is_container(g.id) ? containers : objects).push_back(d);
    }
    std::string place_id;
    double place_x = 0.0, place_y = 0.0;
    auto try_resolve = [&](const std::vector<Detection>& pool) {
        if (pool.empty()) return false;
        try {
            const Grounded g = ground(perception::resolve_label(pool, call.place, synonyms_));
            place_id = g.id;
            place_x = g.x;
            place_y = g.y;
            return true;
        } catch (const NotFoundError&) {
            return false;
        }
    };
    try {
        if (!try_resolve(containers) && !try_resolve(objects)) {
            if (!is_table_keyword(call.place)) {
                return failed(call, SkillStatus::grounding_failed, "place: no detection matches '" + call.place + "'");
            }
            const auto& o = scene_.object(pick.id);
            const auto p = sim::find_free_pose(scene_, o.pose.x, o.pose.y, o.footprint_radius, pick.id);
            place_id = "table";
            place_x = p.x;
            place_y = p.y;
        }
    } catch (const PreconditionError& e) {
        return failed(call, SkillStatus::grounding_failed, "place: " + std::string(e.what()));
    }

    // 2. Both reaches must be kinematically feasible before acting.
    kinematics::ArmModel reach = arm_;
    reach.angles = home_;
    const auto to_pick = kinematics::solve_ik(reach, {pick.x, pick.y});
    if (!to_pick.converged) {
        auto o = failed(call, SkillStatus::action_rejected, "no arm solution for the pick point: " + to_pick.diagnostic);
        o.pick_id = pick.id;
        return o;
    }
    reach.angles = to_pick.theta;
    const auto to_place = kinematics::solve_ik(reach, {place_x, place_y});
    if (!to_place.converged) {
        auto o = failed(call, SkillStatus::action_rejected, "no arm solution for the place point: " + to_place.diagnostic);
        o.pick_id = pick.id;
        o.place_target = place_id;
        return o;
    }

    SkillOutcome out;
    out.call = call;
    out.pick_id = pick.id;
    out.place_target = place_id;
    out.pick_trajectory = to_pick.trajectory;

    // 3. Open, grasp, lift.
    arm_.angles = to_pick.theta;
    auto picked = sim::step_pick(scene_, pick.id, fail_prob_);
    out.events = picked.events;
    if (picked.status != sim::PickStatus::picked) arm_.angles = home_;
    if (picked.status == sim::PickStatus::rejected) {
        out.status = SkillStatus::action_rejected;
        out.message = scene_.object(pick.id).label + " cannot be grasped";
        return out;
    }
    if (picked.status == sim::PickStatus::grasp_failed) {
        out.status = SkillStatus::grasp_failed;
        out.message = "grasp of " + scene_.object(pick.id).label + " failed";
        return out;
    }

    // 4. Move, release, go home.
    out.place_trajectory = to_place.trajectory;
    const auto target = place_id == "table" ? sim::PlaceTarget::at(place_x, place_y)
                        : scene_.is_container(place_id) ? sim::PlaceTarget::into(place_id)
                                                        : sim::PlaceTarget::onto(place_id);
    arm_.angles = to_place.theta;
    auto placed = sim::step_place(scene_, target);
    out.events.insert(out.events.end(), placed.events.begin(), placed.events.end());
    out.message = "placed " + scene_.object(pick.id).label + " (" + std::string(sim::to_string(placed.outcome)) + ")";
    arm_.angles = home_;
    return out;
}

}  // namespace tabletop::skills
