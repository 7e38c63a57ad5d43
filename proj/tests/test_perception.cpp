#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "tabletop/common/error.hpp"
#include "tabletop/perception/camera.hpp"
#include "tabletop/perception/detection.hpp"
#include "tabletop/perception/grounding.hpp"
#include "tabletop/sim/actions.hpp"
#include "tabletop/sim/scenarios.hpp"

using namespace tabletop;
using namespace tabletop::perception;

namespace {

const sim::Registry& reg() { return sim::default_registry(); }

CameraModel identity_camera() {
    CameraModel c;
    c.rotation = Eigen::Matrix3d::Identity();
    c.translation = Eigen::Vector3d::Zero();
    return c;
}

Detection det(std::string label, double confidence = 1.0, double u = 100) {
    Detection d;
    d.label = std::move(label);
    d.box = Box{u, 100, u + 20, 120};
    d.depth = 0.9;
    d.confidence = confidence;
    return d;
}

// Independent oracle for the occlusion flag: scan the support graph directly.
std::set<std::string> occluded_set(const sim::Scene& s) {
    std::set<std::string> out;
    for (const auto& [id, o] : s.objects) {
        if (o.supported_by) out.insert(*o.supported_by);
    }
    return out;
}

}  // namespace

TEST_CASE("pixel_to_world worked examples") {
    auto cam = identity_camera();
    auto p = pixel_to_world(cam, 320, 240, 0.5);
    CHECK(p.x() == 0.0);
    CHECK(p.y() == 0.0);
    CHECK(p.z() == 0.5);

    // Oracle: forward projection of (0.15, 0, 0.6) by hand is u = 320 + 600*0.15/0.6 = 470.
    auto q = pixel_to_world(cam, 470, 240, 0.6);
    CHECK(std::abs(q.x() - 0.15) < 1e-12);
    CHECK(q.y() == 0.0);
    CHECK(q.z() == 0.6);
    auto fwd = world_to_pixel(cam, Eigen::Vector3d(0.15, 0, 0.6));
    CHECK(fwd.u == doctest::Approx(470));
    CHECK(fwd.v == doctest::Approx(240));

    CHECK_THROWS_AS(pixel_to_world(cam, 320, 240, 0.0), PreconditionError);
    CHECK_THROWS_AS(pixel_to_world(cam, 320, 240, -1.0), PreconditionError);
    CHECK_THROWS_AS(pixel_to_world(cam, 700, 240, 0.5), PreconditionError);
    CHECK_THROWS_AS(world_to_pixel(cam, Eigen::Vector3d(0, 0, -1)), PreconditionError);
}

TEST_CASE("camera validation and serialization") {
    auto cam = overhead_camera();
    CHECK_NOTHROW(validate(cam));
    CHECK(covers_workspace(cam, sim::Workspace{}));
    auto back = camera_from_json(to_json(cam));
    CHECK(back.rotation.isApprox(cam.rotation));
    CHECK(back.translation.isApprox(cam.translation));

    auto skew = cam;
    skew.rotation(0, 0) = 0.1;
    CHECK_THROWS_AS(validate(skew), PreconditionError);
    auto flat = cam;
    flat.fx = 0;
    CHECK_THROWS_AS(validate(flat), PreconditionError);
}

TEST_CASE("property: pixel/world round trip over random in-frustum points") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> uu(0, 640), vv(0, 480), dd(0.2, 3.0), ang(-3.14159, 3.14159);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        CameraModel cam = overhead_camera();
        if (i % 2) {
            cam.rotation = (Eigen::AngleAxisd(ang(gen), Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(ang(gen) / 4, Eigen::Vector3d::UnitX()))
                               .toRotationMatrix();
            cam.translation = Eigen::Vector3d(ang(gen), ang(gen), ang(gen));
        }
        // Build the world point from a camera-frame point so it is in the frustum by construction.
        const double d = dd(gen);
        Eigen::Vector3d pc((uu(gen) - cam.cx) * d / cam.fx, (vv(gen) - cam.cy) * d / cam.fy, d);
        Eigen::Vector3d world = cam.rotation * pc + cam.translation;
        auto px = world_to_pixel(cam, world);
        worst = std::max(worst, (pixel_to_world(cam, px.u, px.v, px.depth) - world).norm());
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("oracle_detect with zero degradation bijects with unheld objects") {
    auto cam = overhead_camera();
    for (int sid = 1; sid <= 10; ++sid) {
        auto scene = sim::make_scenario(reg(), sid, 17);
        auto dets = oracle_detect(scene, cam, {});
        REQUIRE(dets.size() == scene.objects.size());
        std::set<std::string> ids;
        for (const auto& d : dets) {
            ids.insert(d.source_id);
            CHECK(d.label == scene.object(d.source_id).label);
            CHECK(d.depth > 0);
            CHECK(d.confidence == 1.0);
            CHECK(d.box.u_min >= 0);
            CHECK(d.box.u_max <= cam.width);
            CHECK(d.box.v_min >= 0);
            CHECK(d.box.v_max <= cam.height);
            // Back-projecting the box centre lands on the object.
            auto w = pixel_to_world(cam, d.box.center_u(), d.box.center_v(), d.depth);
            CHECK(std::abs(w.x() - scene.object(d.source_id).pose.x) < 1e-9);
            CHECK(std::abs(w.y() - scene.object(d.source_id).pose.y) < 1e-9);
        }
        CHECK(ids.size() == scene.objects.size());
    }

    auto scene = sim::make_scenario(reg(), 4, 1);
    REQUIRE(sim::step_pick(scene, "apple", 0.0).status == sim::PickStatus::picked);
    auto dets = oracle_detect(scene, cam, {});
    CHECK(dets.size() == scene.objects.size() - 1);
    for (const auto& d : dets) CHECK(d.source_id != "apple");
}

TEST_CASE("occlusion degradation") {
    auto cam = overhead_camera();
    auto scene = sim::make_scenario(reg(), 3, 2);
    REQUIRE(sim::step_pick(scene, "red_block", 0.0).status == sim::PickStatus::picked);
    sim::step_place(scene, sim::PlaceTarget::onto("green_block"));
    REQUIRE(scene.object("red_block").supported_by == std::optional<std::string>("green_block"));

    SUBCASE("mislabel_prob=1 swaps the bottom block within its category") {
        auto occ = occluded_set(scene);
        REQUIRE(occ == std::set<std::string>{"green_block"});
        auto dets = oracle_detect(scene, cam, DetectorDegradation{0.0, 1.0, 0.0, 9});
        for (const auto& d : dets) {
            const auto& truth = scene.object(d.source_id);
            if (occ.count(d.source_id)) {
                CHECK(d.label != truth.label);
                bool same_category = false;
                for (const auto& [id, o] : scene.objects) same_category |= (o.label == d.label && o.category == truth.category);
                CHECK(same_category);
                CHECK(d.confidence < 1.0);
            } else {
                CHECK(d.label == truth.label);
            }
        }
    }
    SUBCASE("miss_prob=1 drops exactly the occluded objects") {
        auto dets = oracle_detect(scene, cam, DetectorDegradation{1.0, 0.0, 0.0, 9});
        CHECK(dets.size() == scene.objects.size() - 1);
        for (const auto& d : dets) CHECK(d.source_id != "green_block");
    }
}

TEST_CASE("miss_prob=1 without stacks still detects everything") {
    auto cam = overhead_camera();
    for (int sid = 1; sid <= 10; ++sid) {
        auto scene = sim::make_scenario(reg(), sid, 4);
        REQUIRE(occluded_set(scene).empty());
        CHECK(oracle_detect(scene, cam, DetectorDegradation{1.0, 1.0, 0.0, 1}).size() == scene.objects.size());
    }
}

TEST_CASE("property: degradation locality and determinism over random stacks") {
    auto cam = overhead_camera();
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> prob(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        auto scene = sim::make_scenario(reg(), 1 + static_cast<int>(gen() % 10), gen());
        std::vector<std::string> ids;
        for (const auto& [id, o] : scene.objects)
            if (!o.is_container()) ids.push_back(id);
        for (int k = 0; k < 4; ++k) {
            const auto& a = ids[gen() % ids.size()];
            const auto& b = ids[gen() % ids.size()];
            if (a == b || !scene.object(a).graspable) continue;
            if (sim::step_pick(scene, a, 0.0).status == sim::PickStatus::picked) sim::step_place(scene, sim::PlaceTarget::onto(b));
        }
        DetectorDegradation deg{prob(gen), prob(gen), 3.0 * prob(gen), gen()};
        auto dets = oracle_detect(scene, cam, deg);
        CHECK(dets == oracle_detect(scene, cam, deg));
        auto occ = occluded_set(scene);
        std::set<std::string> seen;
        for (const auto& d : dets) {
            seen.insert(d.source_id);
            if (!occ.count(d.source_id)) CHECK(d.label == scene.object(d.source_id).label);
        }
        for (const auto& [id, o] : scene.objects) {
            if (!occ.count(id)) CHECK(seen.count(id) == 1);
        }
    }
}

TEST_CASE("oracle_detect refuses a camera that misses the workspace") {
    auto cam = overhead_camera();
    cam.translation.z() = 0.2;
    auto scene = sim::make_scenario(reg(), 1, 0);
    CHECK_THROWS_AS(oracle_detect(scene, cam, {}), PreconditionError);
    CHECK_THROWS_AS(oracle_detect(scene, overhead_camera(), DetectorDegradation{1.5, 0, 0, 0}), PreconditionError);
}

TEST_CASE("detection JSON hides the source id unless asked") {
    auto d = det("apple");
    d.source_id = "apple";
    CHECK_FALSE(to_json(d).contains("source_id"));
    CHECK(detection_from_json(to_json(d, true)) == d);
}

TEST_CASE("normalize_tokens and overlap_score") {
    CHECK(normalize_tokens("Put ALL the Fruits") == std::vector<std::string>{"put", "fruit"});
    CHECK(normalize_tokens("letter A") == std::vector<std::string>{"letter", "a"});
    CHECK(normalize_tokens("glass") == std::vector<std::string>{"glass"});
    CHECK(overlap_score("red block", "red block") == 1.0);
    CHECK(overlap_score("red block", "blue block") == 0.5);
    CHECK(overlap_score("the red plate", "red plate") == 1.0);
    CHECK(overlap_score("", "apple") == 0.0);
}

TEST_CASE("resolve_label worked examples") {
    const auto& syn = reg().synonyms();
    CHECK(resolve_label({det("red block"), det("blue block")}, "red block", syn).label == "red block");
    CHECK(resolve_label({det("stapler"), det("metal clip"), det("box")}, "iron clip", syn).label == "metal clip");
    CHECK_THROWS_AS(resolve_label({det("red block"), det("box")}, "banana", syn), NotFoundError);
    CHECK_THROWS_AS(resolve_label({}, "banana", syn), NotFoundError);
    CHECK_THROWS_AS(resolve_label({det("apple")}, "  the ", syn), PreconditionError);
    // The threshold is strict: a half overlap is not a match.
    CHECK_THROWS_AS(resolve_label({det("blue block")}, "red block", syn), NotFoundError);
    CHECK(resolve_label({det("claw hammer"), det("wrench")}, "hammer", syn).label == "claw hammer");
    CHECK(resolve_label({det("plate"), det("apple")}, "dish", syn).label == "plate");
}

TEST_CASE("resolve_label tie-breaks") {
    const auto& syn = reg().synonyms();
    // Hypernym query: every fruit scores 1, the smallest label wins at equal confidence.
    CHECK(resolve_label({det("orange"), det("banana"), det("apple")}, "fruit", syn).label == "apple");
    CHECK(resolve_label({det("orange", 1.0), det("apple", 0.6)}, "fruit", syn).label == "orange");
    // Identical labels fall back to box position.
    auto left = det("red block", 1.0, 50);
    auto right = det("red block", 1.0, 300);
    CHECK(resolve_label({right, left}, "red block", syn) == left);
    CHECK(resolve_label({left, right}, "red block", syn) == left);

    auto all = resolve_all({det("orange"), det("box"), det("banana")}, "fruits", syn);
    REQUIRE(all.size() == 2);
    CHECK(all[0].label == "banana");
    CHECK(all[1].label == "orange");
}

TEST_CASE("property: resolve_label is deterministic and order independent") {
    const auto& syn = reg().synonyms();
    const std::vector<std::string> labels{"red block", "blue block", "apple", "plate", "letter A", "letter B", "box", "red bowl"};
    const std::vector<std::string> queries{"red block", "letter a", "fruit", "bowl", "red", "dish", "block", "letter block"};
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Detection> dets;
        for (int k = 0; k < 5; ++k) dets.push_back(det(labels[gen() % labels.size()], (gen() % 2) ? 1.0 : 0.6, static_cast<double>(gen() % 4) * 10));
        const auto& q = queries[gen() % queries.size()];
        auto shuffled = dets;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        try {
            auto a = resolve_label(dets, q, syn);
            CHECK(a == resolve_label(shuffled, q, syn));
        } catch (const NotFoundError&) {
            CHECK_THROWS_AS(resolve_label(shuffled, q, syn), NotFoundError);
        }
    }
}
