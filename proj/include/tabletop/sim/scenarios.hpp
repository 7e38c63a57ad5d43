#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "tabletop/sim/registry.hpp"
#include "tabletop/sim/scene.hpp"

namespace tabletop::sim {

/// Build one of the ten scripted tabletop scenarios. Poses are jittered
/// deterministically from `seed`; equal (scenario_id, seed) give equal scenes.
/// Throws PreconditionError for ids outside 1..10.
Scene make_scenario(const Registry& registry, int scenario_id, uint64_t seed);

/// Same as make_scenario but addressed by registry key ("1".."10", "real", ...).
Scene make_scene(const Registry& registry, const std::string& key, uint64_t seed);

/// Initial scene for a task: its scenario plus the task's label overrides.
Scene make_task_scene(const Registry& registry, const TaskSpec& task, uint64_t seed);

/// Rename roster objects by label (e.g. "hammer" -> "claw hammer").
void apply_label_overrides(Scene& scene, const std::map<std::string, std::string>& overrides);

}  // namespace tabletop::sim
