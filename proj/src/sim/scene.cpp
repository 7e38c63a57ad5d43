#include "tabletop/sim/scene.hpp"

#include <set>

#include "tabletop/common/error.hpp"

namespace tabletop::sim {

const ObjectInstance& Scene::object(const std::string& id) const {
    auto it = objects.find(id);
    if (it == objects.end()) throw NotFoundError("unknown object id '" + id + "'");
    return it->second;
}

ObjectInstance& Scene::object(const std::string& id) {
    auto it = objects.find(id);
    if (it == objects.end()) throw NotFoundError("unknown object id '" + id + "'");
    return it->second;
}

std::vector<std::string> Scene::supported_on(const std::string& id) const {
    std::vector<std::string> out;
    for (const auto& [oid, o] : objects) {
        if (o.supported_by && *o.supported_by == id) out.push_back(oid);
    }
    return out;
}

std::string Scene::chain_root(const std::string& id) const {
    std::string cur = id;
    // Bounded walk: a cyclic graph is an invariant violation, not a hang.
    for (size_t steps = 0; steps <= objects.size(); ++steps) {
        const auto& o = object(cur);
        if (!o.supported_by) return cur;
        cur = *o.supported_by;
    }
    throw Error("support cycle through '" + id + "'");
}

double Scene::used_capacity(const std::string& container_id) const {
    double used = 0.0;
    auto it = containers.find(container_id);
    if (it == containers.end()) throw NotFoundError("unknown container id '" + container_id + "'");
    for (const auto& cid : it->second.contents) used += object(cid).footprint_area();
    return used;
}

void Scene::refresh_derived() {
    std::set<std::string> supporters;
    for (const auto& [id, o] : objects) {
        if (o.supported_by) supporters.insert(*o.supported_by);
    }
    for (auto& [id, o] : objects) {
        o.graspable = !o.is_container() && supporters.count(id) == 0 && held != id;
        if (held == id) o.graspable = false;
    }
    // z levels: walk each chain from its root.
    for (auto& [id, o] : objects) {
        int level = 0;
        std::string cur = id;
        for (size_t steps = 0; steps <= objects.size(); ++steps) {
            const auto& c = objects.at(cur);
            if (!c.supported_by) break;
            ++level;
            cur = *c.supported_by;
        }
        o.pose.z = level;
    }
}

SimEvent& Scene::record(SimEventKind kind, std::string subject, std::string target,
                        std::optional<Pose> target_pose, std::string detail) {
    ++tick;
    event_log.push_back(SimEvent{kind, std::move(subject), std::move(target), target_pose, tick, std::move(detail)});
    return event_log.back();
}

std::vector<std::string> validate(const Scene& scene) {
    std::vector<std::string> issues;
    std::set<std::string> supporters;
    for (const auto& [id, o] : scene.objects) {
        if (o.id != id) issues.push_back("object key/id mismatch: " + id);
        if (o.supported_by && o.contained_in) issues.push_back(id + ": both supported_by and contained_in set");
        if (o.supported_by) {
            if (!scene.has_object(*o.supported_by)) {
                issues.push_back(id + ": dangling supported_by " + *o.supported_by);
                continue;
            }
            supporters.insert(*o.supported_by);
        }
        if (o.contained_in && !scene.is_container(*o.contained_in))
            issues.push_back(id + ": contained_in is not a container");
        if (!scene.held || *scene.held != id) {
            if (!scene.workspace.contains(o.pose.x, o.pose.y)) issues.push_back(id + ": pose outside workspace");
        }
        if (auto n = polygon_count(o.shape); n && o.shape != Shape::cube) {
            if (o.corner_count != *n || o.side_count != *n) issues.push_back(id + ": corner/side count inconsistent with shape");
        }
    }
    for (const auto& [id, o] : scene.objects) {
        // Acyclicity + z level.
        int level = 0;
        std::string cur = id;
        bool cyclic = false;
        for (size_t steps = 0;; ++steps) {
            if (steps > scene.objects.size()) {
                cyclic = true;
                break;
            }
            auto it = scene.objects.find(cur);
            if (it == scene.objects.end() || !it->second.supported_by) break;
            ++level;
            cur = *it->second.supported_by;
        }
        if (cyclic) {
            issues.push_back(id + ": support cycle");
            continue;
        }
        if (o.pose.z != level) issues.push_back(id + ": z level " + std::to_string(o.pose.z) + " != chain depth " + std::to_string(level));
        bool expect_graspable = !o.is_container() && supporters.count(id) == 0 && scene.held != id;
        if (o.graspable != expect_graspable) issues.push_back(id + ": graspable flag stale");
    }
    for (const auto& [cid, c] : scene.containers) {
        if (!scene.has_object(cid) || !scene.object(cid).is_container()) issues.push_back(cid + ": container without container object");
        double used = 0.0;
        for (const auto& member : c.contents) {
            if (!scene.has_object(member)) {
                issues.push_back(cid + ": unknown member " + member);
                continue;
            }
            const auto& m = scene.object(member);
            if (!m.contained_in || *m.contained_in != cid) issues.push_back(cid + ": member " + member + " does not point back");
            used += m.footprint_area();
        }
        if (used > c.capacity + 1e-12) issues.push_back(cid + ": over capacity");
    }
    if (scene.held) {
        if (!scene.has_object(*scene.held)) {
            issues.push_back("held object unknown");
        } else {
            const auto& h = scene.object(*scene.held);
            if (h.supported_by || h.contained_in) issues.push_back("held object still has relations");
        }
    }
    for (size_t i = 1; i < scene.event_log.size(); ++i) {
        if (scene.event_log[i].tick <= scene.event_log[i - 1].tick) issues.push_back("event log not strictly ordered");
    }
    return issues;
}

}  // namespace tabletop::sim
