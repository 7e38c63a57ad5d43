#pragma once

#include <string>

#include "tabletop/common/json_util.hpp"
#include "tabletop/sim/scene.hpp"

namespace tabletop::sim {

inline constexpr int kSnapshotSchemaVersion = 1;

/// Canonical snapshot: sorted keys, lengths rounded to 1e-6 m.
json to_json(const Scene& scene, bool include_event_log = true);
Scene scene_from_json(const json& j);

json to_json(const SimEvent& e);
SimEvent sim_event_from_json(const json& j);

/// canonical_dump(to_json(scene)).
std::string snapshot_string(const Scene& scene, bool include_event_log = true);

}  // namespace tabletop::sim
