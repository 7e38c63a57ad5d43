#include "tabletop/sim/goals.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "tabletop/common/error.hpp"
#include "tabletop/sim/actions.hpp"

namespace tabletop::sim {
namespace {

int sort_key(const Registry& registry, const ObjectInstance& o, const std::string& order_by) {
    if (order_by == "letter") return o.letter ? static_cast<int>(*o.letter) : 0;
    if (order_by == "corners") return o.corner_count;
    (void)registry;
    return o.side_count;
}

bool in_order(int a, int b, bool ascending) { return ascending ? a <= b : a >= b; }

/// Desired bottom-to-top order for a stack predicate.
std::vector<std::string> stack_order(const Registry& registry, const Scene& scene, const GoalPredicate& p,
                                     std::vector<std::string> members) {
    std::stable_sort(members.begin(), members.end(), [&](const std::string& a, const std::string& b) {
        const auto& oa = scene.object(a);
        const auto& ob = scene.object(b);
        if (p.order_by) {
            int ka = sort_key(registry, oa, *p.order_by);
            int kb = sort_key(registry, ob, *p.order_by);
            if (ka != kb) return p.ascending ? ka < kb : ka > kb;
        }
        return oa.label < ob.label;
    });
    return members;
}

void check_stack(const Registry& registry, const Scene& scene, const GoalPredicate& p, const std::vector<std::string>& members,
                 std::vector<std::string>& unmet) {
    std::set<std::string> set(members.begin(), members.end());
    std::vector<std::string> roots;
    for (const auto& m : members) {
        const auto& o = scene.object(m);
        if (!o.supported_by || !set.count(*o.supported_by)) roots.push_back(m);
    }
    if (roots.size() != 1) {
        unmet.push_back("stack incomplete: objects form " + std::to_string(roots.size()) + " separate piles");
        return;
    }
    const auto& root = scene.object(roots.front());
    if (root.supported_by) {
        unmet.push_back("stack base " + root.label + " rests on a non-member object");
        return;
    }
    if (p.base) {
        std::string base_id = container_by_label(scene, *p.base);
        if (base_id.empty() || root.contained_in != base_id) {
            unmet.push_back("stack is not standing on the " + *p.base);
        }
    }
    std::vector<std::string> chain{root.id};
    while (chain.size() < members.size()) {
        std::string next;
        for (const auto& above : scene.supported_on(chain.back())) {
            if (set.count(above)) next = above;
        }
        if (next.empty()) break;
        chain.push_back(next);
    }
    if (chain.size() != members.size()) {
        unmet.push_back("stack incomplete: chain of " + std::to_string(chain.size()) + " of " + std::to_string(members.size()) + " objects");
        return;
    }
    if (p.order_by) {
        for (size_t i = 1; i < chain.size(); ++i) {
            const auto& lower = scene.object(chain[i - 1]);
            const auto& upper = scene.object(chain[i]);
            if (!in_order(sort_key(registry, lower, *p.order_by), sort_key(registry, upper, *p.order_by), p.ascending)) {
                unmet.push_back("stack order violated: " + upper.label + " is above " + lower.label + " (by " + *p.order_by + ", " +
                                (p.ascending ? "ascending" : "descending") + ")");
            }
        }
    }
}

void evaluate(const Registry& registry, const Scene& scene, const GoalPredicate& p, std::vector<std::string>& unmet) {
    const auto members = select_objects(registry, scene, p.select);
    if (members.empty()) {
        if (p.type != PredicateType::none_in) unmet.push_back("no object matches the predicate selector");
        return;
    }
    switch (p.type) {
        case PredicateType::all_in:
        case PredicateType::on_container: {
            std::string cid = container_by_label(scene, p.container);
            if (cid.empty()) {
                unmet.push_back("no container labeled " + p.container);
                return;
            }
            for (const auto& m : members) {
                if (resting_container(scene, m) != cid) unmet.push_back(scene.object(m).label + " is not in the " + p.container);
            }
            break;
        }
        case PredicateType::none_in: {
            std::string cid = container_by_label(scene, p.container);
            for (const auto& m : members) {
                if (!cid.empty() && resting_container(scene, m) == cid)
                    unmet.push_back("exclusion violated: " + scene.object(m).label + " is in the " + p.container);
            }
            break;
        }
        case PredicateType::stack: check_stack(registry, scene, p, members, unmet); break;
        case PredicateType::color_match: {
            std::set<std::string> allowed;
            for (const auto& l : p.containers) allowed.insert(container_by_label(scene, l));
            for (const auto& m : members) {
                const auto& o = scene.object(m);
                std::string rc = resting_container(scene, m);
                if (rc.empty() || !allowed.count(rc)) {
                    unmet.push_back(o.label + " is not in any of the listed containers");
                    continue;
                }
                bool same = scene.object(rc).color == o.color;
                if (same != p.match) {
                    unmet.push_back(o.label + " is in the " + scene.object(rc).label + (p.match ? " (color mismatch)" : " (colors match)"));
                }
            }
            break;
        }
        case PredicateType::split: {
            std::map<std::string, int> load;
            std::vector<std::string> ids;
            for (const auto& l : p.containers) {
                ids.push_back(container_by_label(scene, l));
                load[ids.back()] = 0;
            }
            for (const auto& m : members) {
                std::string rc = resting_container(scene, m);
                if (rc.empty() || !load.count(rc)) {
                    unmet.push_back(scene.object(m).label + " is not in any of the listed containers");
                } else {
                    ++load[rc];
                }
            }
            for (size_t i = 0; i < ids.size(); ++i) {
                if (ids[i].empty() || load[ids[i]] == 0) unmet.push_back("the " + p.containers[i] + " is empty");
            }
            break;
        }
    }
}

// ---- move planning -------------------------------------------------------

class MovePlanner {
public:
    MovePlanner(const Registry& registry, Scene scratch) : registry_(registry), scene_(std::move(scratch)) {}

    void run(const TaskSpec& task) {
        if (scene_.held) {
            put(*scene_.held, "table");
        }
        for (int pass = 0; pass < 3; ++pass) {
            for (const auto& p : task.goal) achieve(p);
            if (check_goal(registry_, scene_, task).satisfied) break;
        }
    }

    std::vector<Move> moves;

private:
    void put(const std::string& object, const std::string& target) {
        Move m{object, target};
        moves.push_back(m);
        std::vector<Move> one{m};
        apply_moves(scene_, one);
    }

    /// Move everything stacked above `id` to the table, top first.
    void clear_above(const std::string& id) {
        std::vector<std::string> above;
        std::string cur = id;
        for (size_t steps = 0; steps < scene_.objects.size(); ++steps) {
            auto on = scene_.supported_on(cur);
            if (on.empty()) break;
            above.push_back(on.front());
            cur = on.front();
        }
        for (auto it = above.rbegin(); it != above.rend(); ++it) put(*it, "table");
    }

    void move_into(const std::string& id, const std::string& container_id) {
        if (resting_container(scene_, id) == container_id) return;
        clear_above(id);
        put(id, container_id);
    }

    void achieve(const GoalPredicate& p) {
        const auto members = select_objects(registry_, scene_, p.select);
        switch (p.type) {
            case PredicateType::all_in:
            case PredicateType::on_container: {
                std::string cid = container_by_label(scene_, p.container);
                if (cid.empty()) return;
                for (const auto& m : members) move_into(m, cid);
                break;
            }
            case PredicateType::none_in: {
                std::string cid = container_by_label(scene_, p.container);
                if (cid.empty()) return;
                for (const auto& m : members) {
                    if (resting_container(scene_, m) != cid) continue;
                    clear_above(m);
                    put(m, "table");
                }
                break;
            }
            case PredicateType::color_match: achieve_color(p, members); break;
            case PredicateType::split: achieve_split(p, members); break;
            case PredicateType::stack: achieve_stack(p, members); break;
        }
    }

    void achieve_color(const GoalPredicate& p, std::vector<std::string> members) {
        std::vector<std::string> boxes;
        for (const auto& l : p.containers) {
            auto id = container_by_label(scene_, l);
            if (!id.empty()) boxes.push_back(id);
        }
        std::sort(members.begin(), members.end(), [&](const auto& a, const auto& b) { return scene_.object(a).label < scene_.object(b).label; });
        std::sort(boxes.begin(), boxes.end(), [&](const auto& a, const auto& b) { return scene_.object(a).label < scene_.object(b).label; });
        std::map<std::string, int> load;
        for (const auto& m : members) {
            auto rc = resting_container(scene_, m);
            if (!rc.empty()) ++load[rc];
        }
        for (const auto& m : members) {
            const auto& o = scene_.object(m);
            auto rc = resting_container(scene_, m);
            auto ok = [&](const std::string& box) { return (scene_.object(box).color == o.color) == p.match; };
            if (!rc.empty() && std::find(boxes.begin(), boxes.end(), rc) != boxes.end() && ok(rc)) continue;
            std::string best;
            for (const auto& box : boxes) {
                if (!ok(box)) continue;
                if (best.empty() || load[box] < load[best]) best = box;
            }
            if (best.empty()) continue;
            if (!rc.empty()) --load[rc];
            ++load[best];
            move_into(m, best);
        }
    }

    void achieve_split(const GoalPredicate& p, const std::vector<std::string>& members) {
        std::vector<std::string> boxes;
        for (const auto& l : p.containers) boxes.push_back(container_by_label(scene_, l));
        if (std::find(boxes.begin(), boxes.end(), std::string{}) != boxes.end()) return;
        std::map<std::string, int> load;
        for (const auto& b : boxes) load[b] = 0;
        std::vector<std::string> loose;
        for (const auto& m : members) {
            auto rc = resting_container(scene_, m);
            if (load.count(rc)) {
                ++load[rc];
            } else {
                loose.push_back(m);
            }
        }
        for (const auto& m : loose) {
            std::string best = boxes.front();
            for (const auto& b : boxes) {
                if (load[b] < load[best]) best = b;
            }
            ++load[best];
            move_into(m, best);
        }
        for (const auto& b : boxes) {
            if (load[b] != 0) continue;
            std::string donor = boxes.front();
            for (const auto& d : boxes) {
                if (load[d] > load[donor]) donor = d;
            }
            if (load[donor] < 2) continue;
            for (const auto& m : members) {
                if (resting_container(scene_, m) == donor) {
                    --load[donor];
                    ++load[b];
                    move_into(m, b);
                    break;
                }
            }
        }
    }

    void achieve_stack(const GoalPredicate& p, const std::vector<std::string>& members) {
        if (members.empty()) return;
        const auto order = stack_order(registry_, scene_, p, members);
        std::string base_id;
        if (p.base) {
            base_id = container_by_label(scene_, *p.base);
            if (base_id.empty()) return;
        }
        auto bottom_ok = [&](const ObjectInstance& o) {
            if (o.supported_by) return false;
            return p.base ? o.contained_in == base_id : !o.contained_in.has_value();
        };
        // Longest correct prefix already in place.
        size_t k = 0;
        if (bottom_ok(scene_.object(order[0]))) {
            k = 1;
            while (k < order.size() && scene_.object(order[k]).supported_by == order[k - 1]) ++k;
        }
        if (k > 0) clear_above(order[k - 1]);
        for (size_t i = k; i < order.size(); ++i) {
            clear_above(order[i]);
            if (i == 0) {
                put(order[0], p.base ? base_id : "table");
            } else {
                put(order[i], order[i - 1]);
            }
        }
    }

    const Registry& registry_;
    Scene scene_;
};

}  // namespace

std::string container_by_label(const Scene& scene, const std::string& label) {
    for (const auto& [id, c] : scene.containers) {
        if (c.label == label) return id;
    }
    return {};
}

std::string resting_container(const Scene& scene, const std::string& object_id) {
    if (scene.held && *scene.held == object_id) return {};
    const auto& root = scene.object(scene.chain_root(object_id));
    return root.contained_in.value_or(std::string{});
}

std::vector<std::string> select_objects(const Registry& registry, const Scene& scene, const Selector& sel) {
    std::vector<std::string> out;
    for (const auto& [id, o] : scene.objects) {
        if (o.is_container()) continue;
        if (sel.category && o.category != *sel.category) continue;
        if (!sel.labels.empty() && std::find(sel.labels.begin(), sel.labels.end(), o.label) == sel.labels.end()) continue;
        if (std::find(sel.exclude.begin(), sel.exclude.end(), o.label) != sel.exclude.end()) continue;
        if (sel.symmetric) {
            if (!o.letter) continue;
            auto it = registry.letters().find(*o.letter);
            bool sym = it != registry.letters().end() && it->second.symmetric;
            if (sym != *sel.symmetric) continue;
        }
        out.push_back(id);
    }
    if (sel.argmax && !out.empty()) {
        auto key = [&](const std::string& id) {
            const auto& o = scene.object(id);
            return *sel.argmax == "sides" ? o.side_count : o.corner_count;
        };
        int best = key(out.front());
        for (const auto& id : out) best = std::max(best, key(id));
        std::erase_if(out, [&](const std::string& id) { return key(id) != best; });
    }
    return out;
}

GoalVerdict check_goal(const Registry& registry, const Scene& scene, const TaskSpec& task) {
    GoalVerdict v;
    if (scene.held) v.unmet.push_back(scene.object(*scene.held).label + " is still held by the gripper");
    for (const auto& p : task.goal) evaluate(registry, scene, p, v.unmet);
    v.satisfied = v.unmet.empty();
    return v;
}

GoalVerdict check_goal(const Registry& registry, const Scene& scene, const std::string& task_id) {
    return check_goal(registry, scene, registry.task(task_id));
}

bool apply_moves(Scene& scene, const std::vector<Move>& moves) {
    for (const auto& m : moves) {
        if (scene.held && *scene.held != m.object) return false;
        if (!scene.held) {
            auto r = step_pick(scene, m.object, 0.0);
            if (r.status != PickStatus::picked) return false;
        }
        if (m.target == "table") {
            const auto& o = scene.object(m.object);
            auto p = find_free_pose(scene, o.pose.x, o.pose.y, o.footprint_radius, m.object);
            step_place(scene, PlaceTarget::at(p.x, p.y));
        } else {
            step_place(scene, m.target);
        }
    }
    return true;
}

}  // namespace tabletop::sim

namespace tabletop::sim {

std::vector<Move> plan_moves(const Registry& registry, const Scene& scene, const TaskSpec& task) {
    MovePlanner planner(registry, scene);
    planner.run(task);
    return planner.moves;
}

}  // namespace tabletop::sim
