#include "tabletop/sim/actions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tabletop/common/error.hpp"
#include "tabletop/common/rng.hpp"

namespace tabletop::sim {
namespace {

constexpr double kGoldenAngle = 2.399963229728653;

void detach(Scene& scene, ObjectInstance& o) {
    o.supported_by.reset();
    if (o.contained_in) {
        auto& contents = scene.containers.at(*o.contained_in).contents;
        contents.erase(std::remove(contents.begin(), contents.end(), o.id), contents.end());
        o.contained_in.reset();
    }
}

void layout_in_container(Scene& scene, const std::string& container_id) {
    const auto& box = scene.object(container_id);
    const auto& contents = scene.containers.at(container_id).contents;
    for (size_t k = 0; k < contents.size(); ++k) {
        auto& m = scene.object(contents[k]);
        double off = std::max(0.0, box.footprint_radius - m.footprint_radius) * 0.5;
        double a = kGoldenAngle * static_cast<double>(k);
        double ring = contents.size() == 1 ? 0.0 : off;
        m.pose.x = scene.workspace.clamp_x(box.pose.x + ring * std::cos(a));
        m.pose.y = scene.workspace.clamp_y(box.pose.y + ring * std::sin(a));
        // Anything stacked on a member follows it.
        std::string cur = m.id;
        for (size_t steps = 0; steps < scene.objects.size(); ++steps) {
            auto above = scene.supported_on(cur);
            if (above.empty()) break;
            auto& up = scene.object(above.front());
            up.pose.x = m.pose.x;
            up.pose.y = m.pose.y;
            cur = up.id;
        }
    }
}

SimEvent place_on_table(Scene& scene, ObjectInstance& held, const Pose& p, SimEventKind kind, const std::string& detail) {
    held.pose = Pose{p.x, p.y, 0};
    return scene.record(kind, held.id, "table", held.pose, detail);
}

}  // namespace

std::string_view to_string(PickStatus s) {
    switch (s) {
        case PickStatus::picked: return "picked";
        case PickStatus::rejected: return "rejected";
        case PickStatus::grasp_failed: return "grasp_failed";
    }
    return "?";
}

std::string_view to_string(PlaceOutcome o) {
    switch (o) {
        case PlaceOutcome::in_container: return "in_container";
        case PlaceOutcome::stacked: return "stacked";
        case PlaceOutcome::on_table: return "on_table";
        case PlaceOutcome::slid: return "slid";
    }
    return "?";
}

Pose find_free_pose(const Scene& scene, double near_x, double near_y, double radius, const std::string& ignore_id) {
    const Workspace& ws = scene.workspace;
    const double step = scene.constants.free_pose_step > 0 ? scene.constants.free_pose_step : 0.01;
    const double gap = scene.constants.clearance;

    struct Obstacle {
        double x, y, r;
    };
    std::vector<Obstacle> obstacles;
    for (const auto& [id, o] : scene.objects) {
        if (id == ignore_id || (scene.held && *scene.held == id)) continue;
        if (o.supported_by || o.contained_in) continue;  // covered by their chain root / container
        obstacles.push_back({o.pose.x, o.pose.y, o.footprint_radius});
    }

    Pose best{ws.clamp_x(near_x), ws.clamp_y(near_y), 0};
    double best_d = std::numeric_limits<double>::infinity();
    const int nx = static_cast<int>(std::floor((ws.x_max - ws.x_min) / step + 1e-9));
    const int ny = static_cast<int>(std::floor((ws.y_max - ws.y_min) / step + 1e-9));
    for (int i = 0; i <= nx; ++i) {
        double x = ws.x_min + i * step;
        for (int j = 0; j <= ny; ++j) {
            double y = ws.y_min + j * step;
            bool free = true;
            for (const auto& ob : obstacles) {
                if (std::hypot(x - ob.x, y - ob.y) < radius + ob.r + gap) {
                    free = false;
                    break;
                }
            }
            if (!free) continue;
            double d = std::hypot(x - near_x, y - near_y);
            if (d < best_d - 1e-12) {
                best_d = d;
                best = Pose{x, y, 0};
            }
        }
    }
    return best;
}

PickResult step_pick(Scene& scene, const std::string& object_id, double fail_prob) {
    if (!(fail_prob >= 0.0 && fail_prob <= 1.0)) throw PreconditionError("fail_prob must lie in [0, 1]");
    auto& o = scene.object(object_id);
    if (scene.held) throw PreconditionError("object '" + *scene.held + "' is already held");

    PickResult result;
    if (!o.graspable) {
        std::string why = o.is_container() ? "containers cannot be grasped" : "object has something stacked on it";
        result.status = PickStatus::rejected;
        result.events.push_back(scene.record(SimEventKind::rejected, object_id, {}, std::nullopt, why));
        return result;
    }

    SplitMix64 rng(scene.rng_state);
    const double draw = rng.uniform();
    if (draw < fail_prob) {
        double r = scene.constants.grasp_jitter * std::sqrt(rng.uniform());
        double phi = 2.0 * std::numbers::pi * rng.uniform();
        scene.rng_state = rng.state();
        o.pose.x = scene.workspace.clamp_x(o.pose.x + r * std::cos(phi));
        o.pose.y = scene.workspace.clamp_y(o.pose.y + r * std::sin(phi));
        result.status = PickStatus::grasp_failed;
        result.events.push_back(scene.record(SimEventKind::grasp_failed, object_id, {}, o.pose, "gripper closed on nothing"));
        return result;
    }
    scene.rng_state = rng.state();

    detach(scene, o);
    scene.held = object_id;
    scene.refresh_derived();
    result.status = PickStatus::picked;
    result.events.push_back(scene.record(SimEventKind::picked, object_id));
    return result;
}

PlaceResult step_place(Scene& scene, const PlaceTarget& target) {
    if (!scene.held) throw PreconditionError("no object is held");
    const std::string held_id = *scene.held;
    auto& held = scene.object(held_id);
    if (target.kind != PlaceTarget::Kind::pose) {
        if (!scene.has_object(target.id)) throw NotFoundError("unknown place target '" + target.id + "'");
        if (target.id == held_id) throw PreconditionError("cannot place an object onto itself");
        if (target.kind == PlaceTarget::Kind::container && !scene.is_container(target.id)) {
            throw PreconditionError("'" + target.id + "' is not a container");
        }
        if (target.kind == PlaceTarget::Kind::object && scene.is_container(target.id)) {
            return step_place(scene, PlaceTarget::into(target.id));
        }
    }

    PlaceResult result;
    result.object = held_id;
    scene.held.reset();

    switch (target.kind) {
        case PlaceTarget::Kind::container: {
            auto& box = scene.containers.at(target.id);
            const auto& box_obj = scene.object(target.id);
            const double need = held.footprint_area();
            if (need > box.capacity) {
                auto p = find_free_pose(scene, box_obj.pose.x, box_obj.pose.y, held.footprint_radius, held_id);
                result.events.push_back(place_on_table(scene, held, p, SimEventKind::placed, "too large for " + target.id));
                result.outcome = PlaceOutcome::slid;
                break;
            }
            while (scene.used_capacity(target.id) + need > box.capacity + 1e-12) {
                // Eject the smallest occupant with nothing on top of it; ties by id.
                const ObjectInstance* victim = nullptr;
                for (const auto& mid : box.contents) {
                    const auto& m = scene.object(mid);
                    if (!scene.supported_on(mid).empty()) continue;
                    if (!victim || m.footprint_area() < victim->footprint_area() ||
                        (m.footprint_area() == victim->footprint_area() && m.id < victim->id)) {
                        victim = &m;
                    }
                }
                if (!victim) break;
                auto& v = scene.object(victim->id);
                detach(scene, v);
                auto p = find_free_pose(scene, box_obj.pose.x, box_obj.pose.y, v.footprint_radius, v.id);
                v.pose = Pose{p.x, p.y, 0};
                result.events.push_back(scene.record(SimEventKind::displaced, v.id, "table", v.pose, "pushed out of " + target.id));
            }
            if (scene.used_capacity(target.id) + need > box.capacity + 1e-12) {
                auto p = find_free_pose(scene, box_obj.pose.x, box_obj.pose.y, held.footprint_radius, held_id);
                result.events.push_back(place_on_table(scene, held, p, SimEventKind::placed, "no room in " + target.id));
                result.outcome = PlaceOutcome::slid;
                break;
            }
            held.contained_in = target.id;
            box.contents.push_back(held_id);
            layout_in_container(scene, target.id);
            result.events.push_back(scene.record(SimEventKind::placed, held_id, target.id, held.pose));
            result.outcome = PlaceOutcome::in_container;
            break;
        }
        case PlaceTarget::Kind::object: {
            const auto& base = scene.object(target.id);
            const bool occupied = !scene.supported_on(target.id).empty();
            const bool wide_enough = base.footprint_radius >= scene.constants.support_ratio * held.footprint_radius;
            if (occupied || !wide_enough) {
                auto p = find_free_pose(scene, base.pose.x, base.pose.y, held.footprint_radius, held_id);
                std::string why = occupied ? target.id + " already supports an object" : target.id + " is too small to support it";
                result.events.push_back(place_on_table(scene, held, p, SimEventKind::placed, why));
                result.outcome = PlaceOutcome::slid;
                break;
            }
            held.supported_by = target.id;
            held.pose.x = base.pose.x;
            held.pose.y = base.pose.y;
            scene.refresh_derived();
            result.events.push_back(scene.record(SimEventKind::placed, held_id, target.id, held.pose));
            result.outcome = PlaceOutcome::stacked;
            break;
        }
        case PlaceTarget::Kind::pose: {
            Pose p{scene.workspace.clamp_x(target.x), scene.workspace.clamp_y(target.y), 0};
            result.events.push_back(place_on_table(scene, held, p, SimEventKind::placed, {}));
            result.outcome = PlaceOutcome::on_table;
            break;
        }
    }
    scene.refresh_derived();
    return result;
}

PlaceResult step_place(Scene& scene, const std::string& target_id) {
    if (!scene.held) throw PreconditionError("no object is held");
    if (!scene.has_object(target_id)) throw NotFoundError("unknown place target '" + target_id + "'");
    return step_place(scene, scene.is_container(target_id) ? PlaceTarget::into(target_id) : PlaceTarget::onto(target_id));
}

}  // namespace tabletop::sim
