#pragma once

#include <string>
#include <vector>

#include "tabletop/sim/scene.hpp"

namespace tabletop::sim {

enum class PickStatus { picked, rejected, grasp_failed };

struct PickResult {
    PickStatus status = PickStatus::rejected;
    std::vector<SimEvent> events;
};

/// Where a held object is released.
struct PlaceTarget {
    enum class Kind { container, object, pose };
    Kind kind = Kind::pose;
    std::string id;
    double x = 0.0;
    double y = 0.0;

    static PlaceTarget into(std::string container_id) { return {Kind::container, std::move(container_id), 0, 0}; }
    static PlaceTarget onto(std::string object_id) { return {Kind::object, std::move(object_id), 0, 0}; }
    static PlaceTarget at(double x, double y) { return {Kind::pose, {}, x, y}; }
};

enum class PlaceOutcome { in_container, stacked, on_table, slid };

struct PlaceResult {
    PlaceOutcome outcome = PlaceOutcome::on_table;
    std::string object;
    std::vector<SimEvent> events;
};

/// Try to grasp `object_id`. Ungraspable objects are rejected; otherwise the
/// grasp fails with probability `fail_prob` (drawn from the scene rng) and the
/// object is nudged by at most constants.grasp_jitter.
PickResult step_pick(Scene& scene, const std::string& object_id, double fail_prob);

/// Release the held object. Container placement displaces the smallest
/// occupants until the new object fits; stacking needs the supporter radius to
/// be at least support_ratio times the held radius, else the object slides to
/// the table beside it.
PlaceResult step_place(Scene& scene, const PlaceTarget& target);

/// Convenience overload resolving `target_id` to a container or an object.
PlaceResult step_place(Scene& scene, const std::string& target_id);

/// Nearest collision-free table pose to (near_x, near_y) for a footprint of
/// `radius`, ignoring object `ignore_id`. Deterministic grid search.
Pose find_free_pose(const Scene& scene, double near_x, double near_y, double radius, const std::string& ignore_id = {});

std::string_view to_string(PickStatus s);
std::string_view to_string(PlaceOutcome o);

}  // namespace tabletop::sim
