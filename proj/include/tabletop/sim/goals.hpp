#pragma once

#include <string>
#include <vector>

#include "tabletop/sim/registry.hpp"
#include "tabletop/sim/scene.hpp"

namespace tabletop::sim {

struct GoalVerdict {
    bool satisfied = false;
    std::vector<std::string> unmet;
};

/// Evaluate a task's goal predicates against ground truth. Pure function of the scene.
GoalVerdict check_goal(const Registry& registry, const Scene& scene, const TaskSpec& task);
GoalVerdict check_goal(const Registry& registry, const Scene& scene, const std::string& task_id);

/// Ids matched by a selector, in id order.
std::vector<std::string> select_objects(const Registry& registry, const Scene& scene, const Selector& selector);

/// Container id whose label is `label`, or empty when absent.
std::string container_by_label(const Scene& scene, const std::string& label);

/// Container the object ultimately rests in (through its support chain), or empty.
std::string resting_container(const Scene& scene, const std::string& object_id);

/// One pick-and-place. `target` is a container id, an object id, or "table".
struct Move {
    std::string object;
    std::string target;

    bool operator==(const Move&) const = default;
};

/// Moves that take `scene` to a state satisfying the task, in dependency order
/// (things on top are cleared first). Derived from the goal predicates and the
/// current state, so it also serves re-planning after partial failures.
std::vector<Move> plan_moves(const Registry& registry, const Scene& scene, const TaskSpec& task);

/// Apply moves with perfect actuation (fail_prob 0). Returns false if any pick
/// is rejected.
bool apply_moves(Scene& scene, const std::vector<Move>& moves);

}  // namespace tabletop::sim
