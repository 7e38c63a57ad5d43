#include "tabletop/sim/snapshot.hpp"

#include "tabletop/common/error.hpp"

namespace tabletop::sim {
namespace {

json pose_json(const Pose& p) { return json{{"x", round_micro(p.x)}, {"y", round_micro(p.y)}, {"z", p.z}}; }

Pose pose_from(const json& j) { return Pose{j.at("x").get<double>(), j.at("y").get<double>(), j.at("z").get<int>()}; }

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

json to_json(const SimEvent& e) {
    json j{{"kind", std::string(to_string(e.kind))}, {"subject", e.subject}, {"target", e.target}, {"tick", e.tick}};
    j["target_pose"] = e.target_pose ? pose_json(*e.target_pose) : json(nullptr);
    if (!e.detail.empty()) j["detail"] = e.detail;
    return j;
}

SimEvent sim_event_from_json(const json& j) {
    SimEvent e;
    e.kind = sim_event_kind_from_string(j.at("kind").get<std::string>());
    e.subject = j.at("subject").get<std::string>();
    e.target = j.value("target", "");
    e.tick = j.at("tick").get<uint64_t>();
    if (j.contains("target_pose") && !j.at("target_pose").is_null()) e.target_pose = pose_from(j.at("target_pose"));
    e.detail = j.value("detail", "");
    return e;
}

json to_json(const Scene& scene, bool include_event_log) {
    json objects = json::object();
    for (const auto& [id, o] : scene.objects) {
        json oj{
            {"id", o.id},
            {"label", o.label},
            {"category", std::string(to_string(o.category))},
            {"color", std::string(to_string(o.color))},
            {"shape", std::string(to_string(o.shape))},
            {"corner_count", o.corner_count},
            {"side_count", o.side_count},
            {"footprint_radius", round_micro(o.footprint_radius)},
            {"height", round_micro(o.height)},
            {"pose", pose_json(o.pose)},
            {"graspable", o.graspable},
        };
        oj["letter"] = o.letter ? json(std::string(1, *o.letter)) : json(nullptr);
        oj["supported_by"] = opt(o.supported_by);
        oj["contained_in"] = opt(o.contained_in);
        objects[id] = std::move(oj);
    }
    json containers = json::object();
    for (const auto& [id, c] : scene.containers) {
        containers[id] = json{{"id", c.id},
                              {"label", c.label},
                              {"color", std::string(to_string(c.color))},
                              {"capacity", round_micro(c.capacity)},
                              {"contents", c.contents}};
    }
    json j{
        {"schema", "scene"},
        {"version", kSnapshotSchemaVersion},
        {"scenario", scene.scenario},
        {"objects", std::move(objects)},
        {"containers", std::move(containers)},
        {"workspace",
         {{"x_min", round_micro(scene.workspace.x_min)},
          {"x_max", round_micro(scene.workspace.x_max)},
          {"y_min", round_micro(scene.workspace.y_min)},
          {"y_max", round_micro(scene.workspace.y_max)}}},
        {"constants",
         {{"support_ratio", round_micro(scene.constants.support_ratio)},
          {"grasp_jitter", round_micro(scene.constants.grasp_jitter)},
          {"clearance", round_micro(scene.constants.clearance)},
          {"free_pose_step", round_micro(scene.constants.free_pose_step)}}},
        {"rng_seed", scene.rng_seed},
        {"rng_state", scene.rng_state},
        {"tick", scene.tick},
    };
    j["held"] = opt(scene.held);
    if (include_event_log) {
        json log = json::array();
        for (const auto& e : scene.event_log) log.push_back(to_json(e));
        j["event_log"] = std::move(log);
    }
    return j;
}

Scene scene_from_json(const json& j) {
    try {
        if (j.value("schema", "") != "scene") throw ConfigError("not a scene snapshot");
        if (j.at("version").get<int>() != kSnapshotSchemaVersion) throw ConfigError("unsupported scene snapshot version");
        Scene s;
        s.scenario = j.value("scenario", "");
        for (const auto& [id, oj] : j.at("objects").items()) {
            ObjectInstance o;
            o.id = oj.at("id").get<std::string>();
            o.label = oj.at("label").get<std::string>();
            o.category = category_from_string(oj.at("category").get<std::string>());
            o.color = color_from_string(oj.at("color").get<std::string>());
            o.shape = shape_from_string(oj.at("shape").get<std::string>());
            o.corner_count = oj.at("corner_count").get<int>();
            o.side_count = oj.at("side_count").get<int>();
            if (!oj.at("letter").is_null()) o.letter = oj.at("letter").get<std::string>().at(0);
            o.footprint_radius = oj.at("footprint_radius").get<double>();
            o.height = oj.at("height").get<double>();
            o.pose = pose_from(oj.at("pose"));
            if (!oj.at("supported_by").is_null()) o.supported_by = oj.at("supported_by").get<std::string>();
            if (!oj.at("contained_in").is_null()) o.contained_in = oj.at("contained_in").get<std::string>();
            o.graspable = oj.at("graspable").get<bool>();
            s.objects.emplace(id, std::move(o));
        }
        for (const auto& [id, cj] : j.at("containers").items()) {
            s.containers.emplace(id, Container{cj.at("id").get<std::string>(), cj.at("label").get<std::string>(),
                                               color_from_string(cj.at("color").get<std::string>()), cj.at("capacity").get<double>(),
                                               cj.at("contents").get<std::vector<std::string>>()});
        }
        const auto& w = j.at("workspace");
        s.workspace = Workspace{w.at("x_min").get<double>(), w.at("x_max").get<double>(), w.at("y_min").get<double>(),
                                w.at("y_max").get<double>()};
        if (j.contains("constants")) {
            const auto& c = j.at("constants");
            s.constants = SimConstants{c.at("support_ratio").get<double>(), c.at("grasp_jitter").get<double>(),
                                       c.at("clearance").get<double>(), c.at("free_pose_step").get<double>()};
        }
        s.rng_seed = j.at("rng_seed").get<uint64_t>();
        s.rng_state = j.at("rng_state").get<uint64_t>();
        s.tick = j.at("tick").get<uint64_t>();
        if (!j.at("held").is_null()) s.held = j.at("held").get<std::string>();
        for (const auto& ej : j.value("event_log", json::array())) s.event_log.push_back(sim_event_from_json(ej));
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scene snapshot: ") + e.what());
    }
}

std::string snapshot_string(const Scene& scene, bool include_event_log) {
    return canonical_dump(to_json(scene, include_event_log));
}

}  // namespace tabletop::sim
