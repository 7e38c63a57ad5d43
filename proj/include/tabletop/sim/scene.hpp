#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tabletop/sim/types.hpp"

namespace tabletop::sim {

/// Ground-truth tabletop state. A plain value: copy it to branch a simulation.
struct Scene {
    std::string scenario;  // registry scenario key, e.g. "5" or "real"
    std::map<std::string, ObjectInstance> objects;
    std::map<std::string, Container> containers;
    Workspace workspace;
    SimConstants constants;
    uint64_t rng_seed = 0;
    uint64_t rng_state = 0;
    uint64_t tick = 0;
    std::optional<std::string> held;
    std::vector<SimEvent> event_log;

    const ObjectInstance& object(const std::string& id) const;
    ObjectInstance& object(const std::string& id);
    bool has_object(const std::string& id) const { return objects.count(id) != 0; }
    bool is_container(const std::string& id) const { return containers.count(id) != 0; }

    /// Ids of objects whose supported_by is `id`.
    std::vector<std::string> supported_on(const std::string& id) const;

    /// Bottom-most object of the support chain containing `id`.
    std::string chain_root(const std::string& id) const;

    /// Summed footprint area of a container's direct contents.
    double used_capacity(const std::string& container_id) const;

    /// Recompute graspable flags and z levels from the relation graph.
    void refresh_derived();

    /// Append an event with the next tick.
    SimEvent& record(SimEventKind kind, std::string subject, std::string target = {},
                     std::optional<Pose> target_pose = std::nullopt, std::string detail = {});

    bool operator==(const Scene&) const = default;
};

/// Violations of the scene invariants; empty when the scene is consistent.
std::vector<std::string> validate(const Scene& scene);

}  // namespace tabletop::sim
