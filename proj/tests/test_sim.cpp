#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "tabletop/common/error.hpp"
#include "tabletop/sim/actions.hpp"
#include "tabletop/sim/goals.hpp"
#include "tabletop/sim/scenarios.hpp"
#include "tabletop/sim/snapshot.hpp"

using namespace tabletop;
using namespace tabletop::sim;

namespace {

const Registry& reg() { return default_registry(); }

// Brute-force graspable predicate, recomputed from scratch over the relation graph.
bool oracle_graspable(const Scene& s, const std::string& id) {
    if (s.object(id).category == Category::container) return false;
    if (s.held && *s.held == id) return false;
    for (const auto& [oid, o] : s.objects) {
        if (o.supported_by && *o.supported_by == id) return false;
    }
    return true;
}

void stack(Scene& s, const std::string& top, const std::string& bottom) {
    REQUIRE(step_pick(s, top, 0.0).status == PickStatus::picked);
    step_place(s, PlaceTarget::onto(bottom));
}

void put_in(Scene& s, const std::string& obj, const std::string& box) {
    REQUIRE(step_pick(s, obj, 0.0).status == PickStatus::picked);
    step_place(s, PlaceTarget::into(box));
}

}  // namespace

TEST_CASE("registry ships ten scenarios and 24 tasks split 10/10 prompted") {
    CHECK(reg().tasks().size() == 24);
    int sim_prompted = 0, sim_unprompted = 0;
    for (const auto& t : reg().tasks()) {
        if (!t.simulation) continue;
        (t.prompted ? sim_prompted : sim_unprompted)++;
    }
    CHECK(sim_prompted == 10);
    CHECK(sim_unprompted == 10);
    for (int i = 1; i <= 10; ++i) CHECK(reg().has_scenario(std::to_string(i)));
}

TEST_CASE("make_scenario") {
    SUBCASE("scene 3 pairs every block color with a same-color bowl") {
        for (uint64_t seed : {0ULL, 1ULL, 99ULL}) {
            Scene s = make_scenario(reg(), 3, seed);
            std::multiset<Color> blocks, bowls;
            for (const auto& [id, o] : s.objects) {
                if (o.category == Category::block) blocks.insert(o.color);
                if (o.category == Category::container) bowls.insert(o.color);
            }
            CHECK(blocks.size() == 3);
            CHECK(blocks == bowls);
        }
    }
    SUBCASE("same (scenario, seed) gives a bit-identical scene") {
        CHECK(snapshot_string(make_scenario(reg(), 5, 42)) == snapshot_string(make_scenario(reg(), 5, 42)));
        CHECK(make_scenario(reg(), 5, 42) == make_scenario(reg(), 5, 42));
        CHECK(snapshot_string(make_scenario(reg(), 5, 42)) != snapshot_string(make_scenario(reg(), 5, 43)));
    }
    SUBCASE("out-of-range ids are rejected") {
        CHECK_THROWS_AS(make_scenario(reg(), 11, 0), PreconditionError);
        CHECK_THROWS_AS(make_scenario(reg(), 0, 0), PreconditionError);
    }
    SUBCASE("every scenario satisfies the scene invariants") {
        for (int i = 1; i <= 10; ++i) {
            for (uint64_t seed = 0; seed < 5; ++seed) {
                Scene s = make_scenario(reg(), i, seed);
                auto issues = validate(s);
                CHECK_MESSAGE(issues.empty(), "scenario " << i << ": " << (issues.empty() ? "" : issues.front()));
            }
        }
    }
    SUBCASE("geometric shapes carry their corner and side counts") {
        Scene s = make_scenario(reg(), 2, 0);
        CHECK(s.object("triangle_block").corner_count == 3);
        CHECK(s.object("hexagon_block").side_count == 6);
        Scene letters = make_scenario(reg(), 1, 0);
        CHECK(letters.object("letter_l").corner_count == 6);
        CHECK(letters.object("letter_t").corner_count == 8);
    }
}

TEST_CASE("step_pick") {
    Scene s = make_scenario(reg(), 3, 7);
    stack(s, "red_block", "green_block");
    REQUIRE(s.object("red_block").supported_by == "green_block");

    SUBCASE("top of a two-block stack is picked and the supporter becomes graspable") {
        CHECK_FALSE(s.object("green_block").graspable);
        auto r = step_pick(s, "red_block", 0.0);
        CHECK(r.status == PickStatus::picked);
        CHECK(s.held == "red_block");
        CHECK_FALSE(s.object("red_block").supported_by);
        CHECK(s.object("green_block").graspable);
        CHECK(oracle_graspable(s, "green_block"));
    }
    SUBCASE("bottom of a stack is rejected and the world is unchanged") {
        CHECK_FALSE(oracle_graspable(s, "green_block"));
        Scene before = s;
        auto r = step_pick(s, "green_block", 0.0);
        CHECK(r.status == PickStatus::rejected);
        REQUIRE(r.events.size() == 1);
        CHECK(r.events[0].kind == SimEventKind::rejected);
        CHECK(s.objects == before.objects);
        CHECK(s.containers == before.containers);
        CHECK(s.held == before.held);
        CHECK(s.rng_state == before.rng_state);
    }
    SUBCASE("fail_prob = 1 always fails and nudges the object by at most 2 cm") {
        for (int i = 0; i < 50; ++i) {
            Pose before = s.object("blue_block").pose;
            auto r = step_pick(s, "blue_block", 1.0);
            CHECK(r.status == PickStatus::grasp_failed);
            CHECK(r.events.back().kind == SimEventKind::grasp_failed);
            CHECK_FALSE(s.held);
            Pose after = s.object("blue_block").pose;
            CHECK(std::hypot(after.x - before.x, after.y - before.y) <= 0.02 + 1e-12);
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(step_pick(s, "nope", 0.0), NotFoundError);
        CHECK_THROWS_AS(step_pick(s, "blue_block", 1.5), PreconditionError);
        REQUIRE(step_pick(s, "blue_block", 0.0).status == PickStatus::picked);
        CHECK_THROWS_AS(step_pick(s, "red_block", 0.0), PreconditionError);
    }
    SUBCASE("containers are never graspable") {
        auto r = step_pick(s, "red_bowl", 0.0);
        CHECK(r.status == PickStatus::rejected);
    }
}

TEST_CASE("step_place") {
    SUBCASE("small block onto a larger block stacks it one level up") {
        Scene s = make_scenario(reg(), 3, 1);
        stack(s, "red_block", "blue_block");
        CHECK(s.object("red_block").supported_by == "blue_block");
        CHECK(s.object("red_block").pose.z == s.object("blue_block").pose.z + 1);
        CHECK_FALSE(s.held);
    }
    SUBCASE("large apple into a full bowl displaces exactly one occupant") {
        // Hand-built: a bowl that holds the banana and the peach exactly.
        Scene s = make_scenario(reg(), 4, 3);
        auto& plate = s.containers.at("plate");
        const double banana = s.object("banana").footprint_area();
        const double peach = s.object("peach").footprint_area();
        const double apple = s.object("apple").footprint_area();
        plate.capacity = banana + peach;
        put_in(s, "banana", "plate");
        put_in(s, "peach", "plate");
        // Capacity arithmetic: removing the smaller occupant (peach) frees
        // peach area; banana + apple must then fit while all three do not.
        REQUIRE(banana + peach + apple > plate.capacity);
        REQUIRE(peach < banana);
        plate.capacity = banana + apple;  // room after one ejection
        REQUIRE(banana + peach + apple > plate.capacity);

        REQUIRE(step_pick(s, "apple", 0.0).status == PickStatus::picked);
        auto r = step_place(s, PlaceTarget::into("plate"));
        CHECK(r.outcome == PlaceOutcome::in_container);
        auto displaced = std::count_if(r.events.begin(), r.events.end(), [](const SimEvent& e) { return e.kind == SimEventKind::displaced; });
        CHECK(displaced == 1);
        CHECK(r.events.front().subject == "peach");
        CHECK(s.object("apple").contained_in == "plate");
        CHECK_FALSE(s.object("peach").contained_in);
        CHECK(validate(s).empty());
    }
    SUBCASE("placing onto a much smaller object slides it to the table beside") {
        Scene s = make_scenario(reg(), 5, 2);
        // apple r=0.04 onto a shrunken peach: ratio below 0.8.
        s.object("peach").footprint_radius = 0.02;
        REQUIRE(0.02 < 0.8 * s.object("apple").footprint_radius);
        REQUIRE(step_pick(s, "apple", 0.0).status == PickStatus::picked);
        auto r = step_place(s, PlaceTarget::onto("peach"));
        CHECK(r.outcome == PlaceOutcome::slid);
        const auto& a = s.object("apple");
        CHECK_FALSE(a.supported_by);
        CHECK_FALSE(a.contained_in);
        CHECK(a.pose.z == 0);
        const auto& p = s.object("peach");
        CHECK(std::hypot(a.pose.x - p.pose.x, a.pose.y - p.pose.y) >= a.footprint_radius + p.footprint_radius);
    }
    SUBCASE("the ratio rule accepts exactly 0.8") {
        Scene s = make_scenario(reg(), 5, 2);
        s.object("peach").footprint_radius = 0.8 * s.object("apple").footprint_radius;
        REQUIRE(step_pick(s, "apple", 0.0).status == PickStatus::picked);
        CHECK(step_place(s, PlaceTarget::onto("peach")).outcome == PlaceOutcome::stacked);
    }
    SUBCASE("placing at a pose clamps it into the workspace") {
        Scene s = make_scenario(reg(), 5, 2);
        REQUIRE(step_pick(s, "apple", 0.0).status == PickStatus::picked);
        step_place(s, PlaceTarget::at(5.0, -5.0));
        CHECK(s.object("apple").pose.x == doctest::Approx(s.workspace.x_max));
        CHECK(s.object("apple").pose.y == doctest::Approx(s.workspace.y_min));
    }
    SUBCASE("errors") {
        Scene s = make_scenario(reg(), 5, 2);
        CHECK_THROWS_AS(step_place(s, PlaceTarget::into("red_plate")), PreconditionError);
        REQUIRE(step_pick(s, "apple", 0.0).status == PickStatus::picked);
        CHECK_THROWS_AS(step_place(s, PlaceTarget::onto("ghost")), NotFoundError);
        CHECK(s.held == "apple");
    }
}

TEST_CASE("check_goal") {
    SUBCASE("scene 5 with every fruit on the red plate") {
        Scene s = make_scenario(reg(), 5, 0);
        CHECK_FALSE(check_goal(reg(), s, "sim-p05").satisfied);
        for (auto f : {"apple", "banana", "orange", "peach"}) put_in(s, f, "red_plate");
        auto v = check_goal(reg(), s, "sim-p05");
        CHECK(v.satisfied);
        CHECK(v.unmet.empty());
    }
    SUBCASE("scene 1 stacked in reverse alphabetical order reports order violations") {
        Scene s = make_scenario(reg(), 1, 0);
        // bottom-up T, L, B, A
        stack(s, "letter_l", "letter_t");
        stack(s, "letter_b", "letter_l");
        stack(s, "letter_a", "letter_b");
        // Oracle: walk the chain and compare with sorted letters.
        std::vector<char> chain;
        std::string cur = "letter_t";
        while (true) {
            chain.push_back(*s.object(cur).letter);
            auto up = s.supported_on(cur);
            if (up.empty()) break;
            cur = up.front();
        }
        auto sorted = chain;
        std::sort(sorted.begin(), sorted.end());
        REQUIRE(chain != sorted);
        auto v = check_goal(reg(), s, "sim-p01");
        CHECK_FALSE(v.satisfied);
        bool order = std::any_of(v.unmet.begin(), v.unmet.end(), [](const std::string& m) { return m.find("order violated") != std::string::npos; });
        CHECK(order);
    }
    SUBCASE("scene 1 stacked alphabetically is satisfied") {
        Scene s = make_scenario(reg(), 1, 0);
        stack(s, "letter_b", "letter_a");
        stack(s, "letter_l", "letter_b");
        stack(s, "letter_t", "letter_l");
        CHECK(check_goal(reg(), s, "sim-p01").satisfied);
    }
    SUBCASE("scene 6 with the chewing gum in the box reports the exclusion") {
        Scene s = make_scenario(reg(), 6, 0);
        for (auto f : {"potato_chips", "cookie", "chocolate_bar", "candy", "chewing_gum"}) put_in(s, f, "box");
        auto v = check_goal(reg(), s, "sim-p06");
        CHECK_FALSE(v.satisfied);
        bool excl = std::any_of(v.unmet.begin(), v.unmet.end(), [](const std::string& m) { return m.find("exclusion violated") != std::string::npos; });
        CHECK(excl);
    }
    SUBCASE("held objects never satisfy a goal") {
        Scene s = make_scenario(reg(), 7, 0);
        for (auto f : {"screwdriver", "wrench"}) put_in(s, f, "box");
        REQUIRE(step_pick(s, "pliers", 0.0).status == PickStatus::picked);
        CHECK_FALSE(check_goal(reg(), s, "sim-p07").satisfied);
    }
    SUBCASE("unknown task id") { CHECK_THROWS_AS(check_goal(reg(), make_scenario(reg(), 1, 0), "sim-x99"), NotFoundError); }
}

TEST_CASE("property: goal monotonicity under perfect execution") {
    for (const auto& task : reg().tasks()) {
        for (uint64_t seed = 0; seed < 8; ++seed) {
            Scene s = make_task_scene(reg(), task, seed);
            auto moves = plan_moves(reg(), s, task);
            CHECK_FALSE(moves.empty());
            for (const auto& m : moves) {
                REQUIRE(step_pick(s, m.object, 0.0).status == PickStatus::picked);
                if (m.target == "table") {
                    auto p = find_free_pose(s, s.object(m.object).pose.x, s.object(m.object).pose.y, s.object(m.object).footprint_radius, m.object);
                    step_place(s, PlaceTarget::at(p.x, p.y));
                } else {
                    step_place(s, m.target);
                }
            }
            auto v = check_goal(reg(), s, task);
            CHECK_MESSAGE(v.satisfied, task.id << " seed " << seed << ": " << (v.unmet.empty() ? "" : v.unmet.front()));
            CHECK(validate(s).empty());
        }
    }
}

namespace {

// Random but seeded action sequence; returns the final snapshot.
std::string random_episode(int scenario, uint64_t seed, uint64_t action_seed, std::set<std::string>* ids_seen = nullptr) {
    Scene s = make_scenario(reg(), scenario, seed);
    std::mt19937_64 gen(action_seed);
    std::vector<std::string> ids;
    for (const auto& [id, o] : s.objects) ids.push_back(id);
    const std::set<std::string> initial(ids.begin(), ids.end());
    for (int step = 0; step < 60; ++step) {
        const auto& id = ids[gen() % ids.size()];
        if (!s.held) {
            step_pick(s, id, 0.3);
        } else if (id != *s.held) {
            if (gen() % 4 == 0) {
                step_place(s, PlaceTarget::at(0.15 + 0.3 * (gen() % 100) / 100.0, -0.3 + 0.6 * (gen() % 100) / 100.0));
            } else {
                step_place(s, id);
            }
        }
        // Relation soundness after every operation.
        auto issues = validate(s);
        REQUIRE_MESSAGE(issues.empty(), issues.front());
        for (const auto& [oid, o] : s.objects) REQUIRE(o.graspable == oracle_graspable(s, oid));
        std::set<std::string> now;
        for (const auto& [oid, o] : s.objects) now.insert(oid);
        REQUIRE(now == initial);
    }
    if (ids_seen) {
        for (const auto& [oid, o] : s.objects) ids_seen->insert(oid);
    }
    return snapshot_string(s);
}

}  // namespace

TEST_CASE("property: determinism, conservation and relation soundness over random action sequences") {
    for (int scenario = 1; scenario <= 10; ++scenario) {
        for (uint64_t k = 0; k < 4; ++k) {
            auto a = random_episode(scenario, k, 1000 + k);
            auto b = random_episode(scenario, k, 1000 + k);
            CHECK(a == b);
        }
    }
}

TEST_CASE("snapshot round-trips through canonical JSON") {
    Scene s = make_scenario(reg(), 10, 5);
    put_in(s, "apple", "plate");
    stack(s, "red_triangle_block", "green_square_block");
    step_pick(s, "banana", 1.0);
    auto text = snapshot_string(s);
    Scene back = scene_from_json(json::parse(text));
    CHECK(snapshot_string(back) == text);
    CHECK(text.find("\n") == std::string::npos);
}
