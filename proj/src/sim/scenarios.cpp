#include "tabletop/sim/scenarios.hpp"

#include "tabletop/common/error.hpp"
#include "tabletop/common/rng.hpp"

namespace tabletop::sim {

Scene make_scene(const Registry& registry, const std::string& key, uint64_t seed) {
    const ScenarioSpec& spec = registry.scenario(key);
    Scene scene;
    scene.scenario = key;
    scene.workspace = registry.workspace();
    scene.constants = registry.constants();
    scene.rng_seed = seed;
    scene.rng_state = mix_seed(seed, fnv1a("scene/" + key));

    const double jitter = registry.pose_jitter();
    for (const RosterEntry& e : spec.roster) {
        ObjectInstance o;
        o.id = e.id;
        o.label = e.label;
        o.category = e.category;
        o.color = e.color;
        o.shape = e.shape;
        o.letter = e.letter;
        o.footprint_radius = e.radius;
        o.height = e.height;

        int count = 0;
        if (auto n = polygon_count(e.shape); n && e.shape != Shape::cube) {
            count = *n;
        } else if (e.letter) {
            auto it = registry.letters().find(*e.letter);
            if (it == registry.letters().end()) throw ConfigError("letter " + std::string(1, *e.letter) + " missing from letter table");
            count = it->second.corners;
        } else if (e.shape == Shape::cube) {
            count = 4;
        }
        o.corner_count = e.corners.value_or(count);
        o.side_count = e.sides.value_or(count);

        SplitMix64 g(mix_seed(seed, fnv1a(key + "/" + e.id)));
        double dx = g.uniform(-jitter, jitter);
        double dy = g.uniform(-jitter, jitter);
        o.pose = Pose{scene.workspace.clamp_x(e.x + dx), scene.workspace.clamp_y(e.y + dy), 0};

        if (e.category == Category::container) {
            scene.containers.emplace(e.id, Container{e.id, e.label, e.color, e.capacity, {}});
        }
        scene.objects.emplace(e.id, std::move(o));
    }
    scene.refresh_derived();
    return scene;
}

Scene make_scenario(const Registry& registry, int scenario_id, uint64_t seed) {
    if (scenario_id < 1 || scenario_id > 10) {
        throw PreconditionError("scenario id must be in 1..10, got " + std::to_string(scenario_id));
    }
    return make_scene(registry, std::to_string(scenario_id), seed);
}

void apply_label_overrides(Scene& scene, const std::map<std::string, std::string>& overrides) {
    for (auto& [id, o] : scene.objects) {
        auto it = overrides.find(o.label);
        if (it == overrides.end()) continue;
        o.label = it->second;
        if (auto c = scene.containers.find(id); c != scene.containers.end()) c->second.label = it->second;
    }
}

Scene make_task_scene(const Registry& registry, const TaskSpec& task, uint64_t seed) {
    Scene scene = make_scene(registry, task.scene, seed);
    apply_label_overrides(scene, task.label_overrides);
    return scene;
}

}  // namespace tabletop::sim
